"""Bose-Einstein and Fermi-Dirac occupation spectra and their solvers.

The mean occupation of a mode of energy eps at chemical potential mu is

    n(eps) = 1 / (exp((eps - mu)/kT) -+ 1)        (-1 bose, +1 fermi)

with the relativistic dispersion eps = sqrt((p c)^2 + (m c^2)^2) and the
momentum-shell mode count g_p = 4 pi V p^2 dp / h^3.

Two independent numerical routes are provided on top of the closed form:
a chemical-potential solver inverting the total-number sum, and a
maximum-entropy solver that optimizes the continuous (Stirling) entropy
of the exact quantum counts under particle-number and energy constraints
via Newton iterations on the two Lagrange multipliers.  The stationarity
condition of that optimization reproduces the closed form, so agreement
of the two routes is a nontrivial consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BosePole,
    Infeasible,
    NoBracket,
    NoConvergence,
    SaturationExceeded,
)

__all__ = [
    "GasSpec",
    "MomentumGrid",
    "dispersion",
    "mode_count",
    "occupancy",
    "grid_energies",
    "grid_mode_counts",
    "solve_mu",
    "solve_mu_on_levels",
    "saturation_count",
    "MaxEntResult",
    "max_entropy_occupancies",
    "max_entropy_on_levels",
]

# Bose chemical potentials are kept this many thermal units below the
# lowest level when bracketing.
BOSE_MU_MARGIN = 1e-12


@dataclass(frozen=True)
class GasSpec:
    """Ideal-gas parameters in configurable units (natural by default)."""

    volume: float
    temperature: float
    mass: float
    statistics: str
    c: float = 1.0
    h: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if self.statistics not in ("bose", "fermi"):
            raise ValueError(f"statistics must be 'bose' or 'fermi', got {self.statistics!r}")
        for name in ("volume", "temperature", "mass", "c", "h", "k"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def kT(self) -> float:
        return self.k * self.temperature


@dataclass(frozen=True)
class MomentumGrid:
    """Uniform momentum bins on [p_min, p_max]; energies at bin centers."""

    p_min: float
    p_max: float
    bins: int

    def __post_init__(self):
        if not (0 <= self.p_min < self.p_max):
            raise ValueError("MomentumGrid requires 0 <= p_min < p_max")
        if self.bins < 8:
            raise ValueError("MomentumGrid requires at least 8 bins")

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.bins

    def centers(self) -> np.ndarray:
        return self.p_min + (np.arange(self.bins) + 0.5) * self.dp


def dispersion(p, spec: GasSpec):
    """Total energy sqrt((p c)^2 + (m c^2)^2), rest energy included."""
    p = np.asarray(p, dtype=float)
    out = np.sqrt((p * spec.c) ** 2 + (spec.mass * spec.c**2) ** 2)
    return float(out) if out.ndim == 0 else out


def mode_count(p, dp: float, spec: GasSpec):
    """Number of quantum cells in a momentum shell: 4 pi V p^2 dp / h^3."""
    p = np.asarray(p, dtype=float)
    out = 4.0 * np.pi * spec.volume * p * p * dp / spec.h**3
    return float(out) if out.ndim == 0 else out


def occupancy(eps, mu: float, spec: GasSpec, g_p=None):
    """Mean occupation per mode, times g_p if a mode count is supplied.

    Bose occupancies require eps > mu strictly; violating energies raise
    :class:`BosePole`.
    """
    eps = np.asarray(eps, dtype=float)
    x = (eps - mu) / spec.kT
    if spec.statistics == "bose":
        if np.any(eps <= mu):
            raise BosePole(f"bose occupancy needs eps > mu, got eps <= {mu}")
        out = 1.0 / np.expm1(x)
    else:
        out = 1.0 / (np.exp(np.minimum(x, 700.0)) + 1.0)
    if g_p is not None:
        out = out * np.asarray(g_p, dtype=float)
    return float(out) if out.ndim == 0 else out


def grid_energies(spec: GasSpec, grid: MomentumGrid) -> np.ndarray:
    return dispersion(grid.centers(), spec)


def grid_mode_counts(spec: GasSpec, grid: MomentumGrid) -> np.ndarray:
    return mode_count(grid.centers(), grid.dp, spec)


def _total_number(mu: float, eps: np.ndarray, g: np.ndarray, kT: float,
                  statistics: str) -> float:
    x = (eps - mu) / kT
    if statistics == "bose":
        return float(np.sum(g / np.expm1(x)))
    return float(np.sum(g / (np.exp(np.minimum(x, 700.0)) + 1.0)))


def saturation_count(spec: GasSpec, grid: MomentumGrid) -> float:
    """Largest particle number reachable for bosons on this grid."""
    eps = grid_energies(spec, grid)
    g = grid_mode_counts(spec, grid)
    mu_max = float(eps.min()) - BOSE_MU_MARGIN * spec.kT
    return _total_number(mu_max, eps, g, spec.kT, "bose")


def solve_mu_on_levels(n_target: float, eps, g, kT: float,
                       statistics: str) -> float:
    """Chemical potential fixing sum_i g_i n(eps_i, mu) = n_target.

    Bracketing bisection followed by a secant polish, to a relative
    number error of 1e-10.  For bosons the bracket is capped just below
    the lowest level; targets beyond the cap raise
    :class:`SaturationExceeded`.
    """
    eps = np.asarray(eps, dtype=float)
    g = np.asarray(g, dtype=float)
    if n_target <= 0:
        raise ValueError(f"n_target must be positive, got {n_target}")
    count = lambda mu: _total_number(mu, eps, g, kT, statistics)

    eps_min = float(eps.min())
    if statistics == "bose":
        hi = eps_min - BOSE_MU_MARGIN * kT
        if count(hi) < n_target:
            raise SaturationExceeded(
                f"N={n_target} exceeds the grid saturation count {count(hi):.6g}"
            )
    else:
        total_modes = float(g.sum())
        if n_target >= total_modes:
            raise NoBracket(
                f"fermi N={n_target} not below the total mode count {total_modes:.6g}"
            )
        hi = float(eps.max()) + kT
        for _ in range(200):
            if count(hi) > n_target:
                break
            hi = eps_min + 2.0 * (hi - eps_min)
        else:
            raise NoBracket("could not bracket mu from above")

    lo = eps_min - kT
    for _ in range(200):
        if count(lo) < n_target:
            break
        lo = hi - 2.0 * (hi - lo)
    else:
        raise NoBracket("could not bracket mu from below")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if count(mid) < n_target:
            lo = mid
        else:
            hi = mid
        if abs(count(mid) - n_target) <= 1e-12 * n_target:
            break
    mu = 0.5 * (lo + hi)

    # secant polish on log-count, which is near-linear in mu
    f_lo, f_hi = count(lo) - n_target, count(hi) - n_target
    if f_lo != f_hi:
        candidate = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if statistics == "bose":
            candidate = min(candidate, eps_min - BOSE_MU_MARGIN * kT)
        if abs(count(candidate) - n_target) < abs(count(mu) - n_target):
            mu = candidate
    if abs(count(mu) - n_target) > 1e-10 * n_target:
        raise NoConvergence(
            f"mu solve stalled at relative error "
            f"{abs(count(mu) - n_target) / n_target:.3e}"
        )
    return float(mu)


def solve_mu(n_target: float, spec: GasSpec, grid: MomentumGrid) -> float:
    """Solve for mu on the physical momentum grid of the gas."""
    return solve_mu_on_levels(
        n_target, grid_energies(spec, grid), grid_mode_counts(spec, grid),
        spec.kT, spec.statistics,
    )


# -- maximum-entropy route -------------------------------------------------
#
# Continuous relaxation of ln w_i by Stirling's x ln x - x:
#   bose:  s(n) = (n+g) ln(n+g) - n ln n - g ln g,   s'(n) = ln(1 + g/n)
#   fermi: s(n) = g ln g - n ln n - (g-n) ln(g-n),   s'(n) = ln((g-n)/n)
# Maximizing sum_i s(n_i) under sum n_i = N and sum n_i eps_i = E gives
# s'(n_i) = a + b*eps_i, whose solution is the closed-form distribution
# with b = 1/kT and a = -mu/kT.


def _stationary_n(c: float, g: float, statistics: str) -> float:
    """Solve s'(n) = c for one bin by bracketed root finding."""
    if statistics == "fermi":
        # s'(n) runs from +inf at n=0+ to -inf at n=g-
        f = lambda n: math.log((g - n) / n) - c
        lo, hi = g * 1e-15, g * (1.0 - 1e-15)
    else:
        if c <= 0:
            raise Infeasible("bose multipliers must keep a + b*eps positive")
        f = lambda n: math.log1p(g / n) - c
        lo = g * 1e-18
        hi = g
        for _ in range(2000):
            if f(hi) < 0:
                break
            hi *= 2.0
        for _ in range(2000):
            if f(lo) > 0:
                break
            lo *= 0.5
    return brentq(f, lo, hi, xtol=1e-300, rtol=8.881784197001252e-16)


def _d_stationary(n: float, g: float, statistics: str) -> float:
    """1 / s''(n), the sensitivity of the bin solution to its multiplier."""
    if statistics == "fermi":
        s2 = -1.0 / n - 1.0 / (g - n)
    else:
        s2 = 1.0 / (n + g) - 1.0 / n
    return 1.0 / s2


class MaxEntResult(NamedTuple):
    occupancies: np.ndarray
    temperature: float
    mu: float
    multiplier_number: float
    multiplier_energy: float
    iterations: int


def _boltzmann_multipliers(eps: np.ndarray, g: np.ndarray, n_target: float,
                           e_target: float) -> tuple[float, float]:
    """Classical-limit starting point for the Newton iteration."""
    mean = e_target / n_target
    h = lambda b: float(np.sum(g * eps * np.exp(-b * (eps - eps.min())))
                        / np.sum(g * np.exp(-b * (eps - eps.min())))) - mean
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        if h(hi) < 0:
            break
        hi *= 2.0
    for _ in range(200):
        if h(lo) > 0:
            break
        lo *= 0.5
    if h(lo) <= 0 or h(hi) >= 0:
        b = 1.0
    else:
        b = brentq(h, lo, hi, rtol=1e-12)
    shifted = -b * (eps - eps.min())
    a = math.log(float(np.sum(g * np.exp(shifted)))) - math.log(n_target) - b * eps.min()
    return a, b


def max_entropy_on_levels(eps, g, n_target: float, e_target: float,
                          statistics: str, k: float = 1.0,
                          max_iter: int = 200) -> MaxEntResult:
    """Maximize the Stirling entropy of the counts under (N, E) constraints.

    Newton iterations on the two Lagrange multipliers (a, b); each inner
    step solves the per-bin stationarity equation numerically.  Returns
    the occupancies together with the implied temperature and chemical
    potential.  Raises :class:`Infeasible` for unattainable (N, E) pairs
    and :class:`NoConvergence` past max_iter iterations.
    """
    eps = np.asarray(eps, dtype=float)
    g = np.asarray(g, dtype=float)
    if n_target <= 0:
        raise Infeasible(f"N must be positive, got {n_target}")
    if statistics == "fermi" and n_target >= float(g.sum()):
        raise Infeasible(
            f"fermi N={n_target} needs more than the {g.sum():.6g} available modes"
        )
    mean = e_target / n_target
    if len(eps) > 1 and not (float(eps.min()) < mean < float(eps.max())):
        raise Infeasible(
            f"mean energy {mean:.6g} outside the level range "
            f"[{eps.min():.6g}, {eps.max():.6g}]"
        )

    if len(eps) == 1:
        # degenerate pair of constraints: N alone determines the bin, the
        # energy multiplier is undetermined; pick b = 1 and make a
        # consistent with stationarity
        if abs(e_target - eps[0] * n_target) > 1e-9 * max(abs(e_target), 1.0):
            raise Infeasible("single-level E must equal eps * N")
        b = 1.0
        prime = (math.log1p(g[0] / n_target) if statistics == "bose"
                 else math.log((g[0] - n_target) / n_target))
        a = prime - b * eps[0]
        return MaxEntResult(
            occupancies=np.array([n_target]),
            temperature=1.0 / (k * b), mu=-a / b,
            multiplier_number=a, multiplier_energy=b, iterations=0,
        )

    a, b = _boltzmann_multipliers(eps, g, n_target, e_target)
    eps_min = float(eps.min())
    if statistics == "bose" and a + b * eps_min <= 0:
        a = -b * eps_min + 1e-6

    def solve_bins(a_, b_):
        return np.array(
            [_stationary_n(a_ + b_ * e, gi, statistics) for e, gi in zip(eps, g)]
        )

    n = solve_bins(a, b)
    for iteration in range(1, max_iter + 1):
        f_n = float(n.sum()) - n_target
        f_e = float((n * eps).sum()) - e_target
        if (abs(f_n) <= 1e-12 * n_target
                and abs(f_e) <= 1e-12 * max(abs(e_target), 1e-300)):
            temperature = 1.0 / (k * b)
            return MaxEntResult(
                occupancies=n, temperature=temperature, mu=-a / b,
                multiplier_number=a, multiplier_energy=b, iterations=iteration,
            )
        dn = np.array([_d_stationary(ni, gi, statistics) for ni, gi in zip(n, g)])
        j = np.array(
            [[float(dn.sum()), float((dn * eps).sum())],
             [float((dn * eps).sum()), float((dn * eps * eps).sum())]]
        )
        try:
            step = np.linalg.solve(j, -np.array([f_n, f_e]))
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular multiplier Jacobian: {exc}") from exc
        scale_factor = 1.0
        best = None
        for _ in range(60):
            a_try = a + scale_factor * step[0]
            b_try = b + scale_factor * step[1]
            feasible = b_try > 0 and (
                statistics == "fermi" or a_try + b_try * eps_min > 0
            )
            if feasible:
                n_try = solve_bins(a_try, b_try)
                r_try = (abs(float(n_try.sum()) - n_target) / n_target
                         + abs(float((n_try * eps).sum()) - e_target)
                         / max(abs(e_target), 1e-300))
                r_now = (abs(f_n) / n_target
                         + abs(f_e) / max(abs(e_target), 1e-300))
                if r_try < r_now:
                    best = (a_try, b_try, n_try)
                    break
            scale_factor *= 0.5
        if best is None:
            raise NoConvergence("multiplier line search stalled")
        a, b, n = best
    raise NoConvergence(f"no convergence after {max_iter} Newton iterations")


def max_entropy_occupancies(spec: GasSpec, grid: MomentumGrid,
                            n_target: float, e_target: float,
                            max_iter: int = 200) -> MaxEntResult:
    """Maximum-entropy occupancies on the physical momentum grid."""
    return max_entropy_on_levels(
        grid_energies(spec, grid), grid_mode_counts(spec, grid),
        n_target, e_target, spec.statistics, spec.k, max_iter,
    )
