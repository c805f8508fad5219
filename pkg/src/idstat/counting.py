"""Exact state counting for Bose, Fermi, and Boltzmann statistics.

A region of phase space holds n particles distributed over g quantum
cells.  The number of distinct microstates is

    bose:      (n + g - 1)! / (n! (g - 1)!)     multisets of cells
    fermi:     g! / (n! (g - n)!)               subsets of cells, n <= g
    boltzmann: g^n / n!                         classical limit, a rational

All counts are exact (Python integers / fractions).  Independent oracles
count the same objects by direct recursion with no factorials, and
generators list the actual configurations for small cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple

from .errors import DomainError, PauliViolation, TooLarge

__all__ = [
    "OccupancyRegion",
    "RegionSet",
    "bose_w",
    "fermi_w",
    "boltzmann_w",
    "limit_correction",
    "oracle_count",
    "bose_configurations",
    "fermi_configurations",
    "multi_index_fraction",
    "entropy",
    "gibbs_correction",
]

STATISTICS = ("bose", "fermi", "boltzmann")

# Above this bound on the factorial arguments, entropy switches from exact
# big-integer logs to log-gamma (the exact count of 20! still fits a float
# without precision loss).
EXACT_LOG_LIMIT = 20

# Guard for the enumeration oracle; the recursion is exponential-ish in n+g.
ORACLE_GUARD = 24


def _check_statistics(statistics: str, allowed=STATISTICS) -> str:
    if statistics not in allowed:
        raise ValueError(f"statistics must be one of {allowed}, got {statistics!r}")
    return statistics


@dataclass(frozen=True)
class OccupancyRegion:
    """n particles in a phase-space region of g quantum cells."""

    n: int
    g: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        if self.g < 1:
            raise ValueError(f"g must be at least 1, got {self.g}")


@dataclass(frozen=True)
class RegionSet:
    """Nonempty collection of regions plus the Boltzmann constant."""

    regions: tuple[OccupancyRegion, ...]
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise ValueError("RegionSet requires at least one region")
        if self.k <= 0:
            raise ValueError("Boltzmann constant k must be positive")

    @property
    def total_n(self) -> int:
        return sum(r.n for r in self.regions)


def bose_w(r: OccupancyRegion) -> int:
    """Multiset count (n+g-1 choose n), exact."""
    return math.comb(r.n + r.g - 1, r.n)


def fermi_w(r: OccupancyRegion) -> int:
    """Subset count (g choose n), exact; n > g is excluded."""
    if r.n > r.g:
        raise PauliViolation(f"n={r.n} exceeds g={r.g} quantum cells")
    return math.comb(r.g, r.n)


def boltzmann_w(r: OccupancyRegion) -> Fraction:
    """Classical count g^n / n! as an exact rational."""
    return Fraction(r.g**r.n, math.factorial(r.n))


class LimitCorrection(NamedTuple):
    bose: float
    fermi: float


def limit_correction(r: OccupancyRegion) -> LimitCorrection:
    """First-order corrections to the classical count for n << g.

    The quantum counts approach g^n/n! * (1 +- n(n-1)/2g), the plus sign
    for bosons and the minus sign for fermions; the remainder is O((n/g)^2).
    """
    eps = r.n * (r.n - 1) / (2.0 * r.g)
    return LimitCorrection(bose=1.0 + eps, fermi=1.0 - eps)


@lru_cache(maxsize=None)
def _bose_oracle(n: int, g: int) -> int:
    # number of ways to write n as an ordered sum of g nonnegative integers,
    # counted by recursion on the occupancy of the first cell
    if g == 1:
        return 1
    return sum(_bose_oracle(n - k, g - 1) for k in range(n + 1))


@lru_cache(maxsize=None)
def _fermi_oracle(n: int, g: int) -> int:
    # number of n-subsets of g cells, counted by first-cell recursion
    if n == 0:
        return 1
    if n > g:
        return 0
    return _fermi_oracle(n - 1, g - 1) + _fermi_oracle(n, g - 1)


def oracle_count(r: OccupancyRegion, statistics: str) -> int:
    """Count microstates by direct recursion, with no factorial formula.

    Serves as the independent check on :func:`bose_w` / :func:`fermi_w`;
    guarded to n + g <= 24.
    """
    _check_statistics(statistics, ("bose", "fermi"))
    if r.n + r.g > ORACLE_GUARD:
        raise TooLarge(f"oracle enumeration guarded to n+g <= {ORACLE_GUARD}")
    if statistics == "bose":
        return _bose_oracle(r.n, r.g)
    if r.n > r.g:
        raise PauliViolation(f"n={r.n} exceeds g={r.g} quantum cells")
    return _fermi_oracle(r.n, r.g)


def bose_configurations(n: int, g: int) -> Iterator[tuple[int, ...]]:
    """Yield every decomposition of n into g ordered nonnegative parts."""
    if g == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in bose_configurations(n - k, g - 1):
            yield (k,) + rest


def fermi_configurations(n: int, g: int) -> Iterator[tuple[int, ...]]:
    """Yield every 0/1 occupation of g cells with exactly n ones."""
    if n == 0:
        yield (0,) * g
        return
    if n > g:
        return
    for rest in fermi_configurations(n - 1, g - 1):
        yield (1,) + rest
    for rest in fermi_configurations(n, g - 1):
        yield (0,) + rest


class MultiIndexFraction(NamedTuple):
    exact: float
    asymptote: float


def multi_index_fraction(n: int, g: int) -> MultiIndexFraction:
    """Fraction of index tuples (r_1..r_n), r_i in 1..g, with a repeat.

    The exact value 1 - g!/((g-n)! g^n) is evaluated in product form
    prod_j (1 - j/g) with exact rationals, never as a factorial ratio;
    the asymptote n(n-1)/2g is the leading term for n << g.
    """
    if not 1 <= n <= g:
        raise DomainError(f"multi_index_fraction requires 1 <= n <= g, got n={n}, g={g}")
    all_distinct = Fraction(1)
    for j in range(n):
        all_distinct *= Fraction(g - j, g)
    return MultiIndexFraction(
        exact=float(1 - all_distinct),
        asymptote=n * (n - 1) / (2.0 * g),
    )


def _log_w(r: OccupancyRegion, statistics: str) -> float:
    n, g = r.n, r.g
    if statistics == "fermi" and n > g:
        raise PauliViolation(f"n={n} exceeds g={g} quantum cells")
    if max(n, g, n + g - 1) <= EXACT_LOG_LIMIT:
        w = {"bose": bose_w, "fermi": fermi_w, "boltzmann": boltzmann_w}[statistics](r)
        return math.log(w)
    if statistics == "bose":
        return math.lgamma(n + g) - math.lgamma(n + 1) - math.lgamma(g)
    if statistics == "fermi":
        return math.lgamma(g + 1) - math.lgamma(n + 1) - math.lgamma(g - n + 1)
    return n * math.log(g) - math.lgamma(n + 1)


def entropy(rs: RegionSet, statistics: str) -> float:
    """k * sum_i ln w_i over the regions.

    Exact big-integer logs for small regions, log-gamma beyond 20!.
    """
    _check_statistics(statistics)
    return rs.k * sum(_log_w(r, statistics) for r in rs.regions)


def gibbs_correction(N: int, k: float = 1.0) -> float:
    """The -k ln N! subtraction that removes the classical overcount."""
    if N < 0:
        raise DomainError(f"N must be nonnegative, got {N}")
    return -k * math.lgamma(N + 1)
