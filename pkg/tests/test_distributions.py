import math

import numpy as np
import pytest

from idstat import distributions as dist
from idstat.errors import (
    BosePole,
    Infeasible,
    NoBracket,
    NoConvergence,
    SaturationExceeded,
)

RNG = np.random.default_rng(7)


def fermi_spec(**kw):
    base = dict(volume=500.0, temperature=1.0, mass=1.0, statistics="fermi")
    base.update(kw)
    return dist.GasSpec(**base)


def bose_spec(**kw):
    base = dict(volume=500.0, temperature=1.0, mass=1.0, statistics="bose")
    base.update(kw)
    return dist.GasSpec(**base)


def test_dispersion():
    spec = fermi_spec()
    assert dist.dispersion(0.0, spec) == pytest.approx(spec.mass * spec.c**2)
    light = dist.GasSpec(volume=1.0, temperature=1.0, mass=1e-300,
                         statistics="bose")
    assert dist.dispersion(2.5, light) == pytest.approx(2.5 * light.c)
    triple = dist.GasSpec(volume=1.0, temperature=1.0, mass=4.0, statistics="fermi")
    assert dist.dispersion(3.0, triple) == pytest.approx(5.0)


def test_mode_count():
    spec = fermi_spec(volume=1.0)
    assert dist.mode_count(0.0, 0.1, spec) == 0.0
    single = dist.mode_count(1.0, 0.1, spec)
    assert single == pytest.approx(4 * math.pi * 0.1)
    doubled = dist.mode_count(1.0, 0.1, fermi_spec(volume=2.0))
    assert doubled == pytest.approx(2 * single)


def test_occupancy_fermi_examples():
    spec = fermi_spec()
    assert dist.occupancy(1.7, 1.7, spec) == pytest.approx(0.5)
    cold = fermi_spec(temperature=1e-6)
    assert dist.occupancy(1.0, 2.0, cold) == pytest.approx(1.0, abs=1e-9)
    assert dist.occupancy(3.0, 2.0, cold) == pytest.approx(0.0, abs=1e-9)


def test_occupancy_bose_examples():
    spec = bose_spec()
    assert dist.occupancy(spec.kT * math.log(2.0), 0.0, spec) == pytest.approx(1.0)
    with pytest.raises(BosePole):
        dist.occupancy(1.0, 1.0, spec)
    with pytest.raises(BosePole):
        dist.occupancy(0.5, 1.0, spec)


def test_occupancy_monotonicity_and_bounds():
    eps = np.linspace(1.0, 5.0, 40)
    f = dist.occupancy(eps, 2.0, fermi_spec())
    assert np.all(np.diff(f) < 0)
    assert np.all((f > 0) & (f < 1))
    b = dist.occupancy(eps, 0.5, bose_spec())
    assert np.all(np.diff(b) < 0)
    assert np.all(b > 0)
    # increasing in mu
    assert np.all(dist.occupancy(eps, 2.1, fermi_spec())
                  > dist.occupancy(eps, 2.0, fermi_spec()))


def test_occupancy_scaled_by_mode_count():
    spec = fermi_spec()
    assert dist.occupancy(2.0, 1.0, spec, g_p=7.0) == pytest.approx(
        7.0 * dist.occupancy(2.0, 1.0, spec))


def test_solve_mu_two_level_toy():
    # symmetric levels, half filling: mu = 0 by particle-hole symmetry
    mu = dist.solve_mu_on_levels(10.0, [-1.0, 1.0], [10.0, 10.0], 1.0, "fermi")
    assert mu == pytest.approx(0.0, abs=1e-10)


def test_solve_mu_classical_regime():
    spec = fermi_spec()
    grid = dist.MomentumGrid(0.0, 6.0, 64)
    eps = dist.grid_energies(spec, grid)
    g = dist.grid_mode_counts(spec, grid)
    n_target = 1e-4 * g.sum()  # occupancy << 1 everywhere
    mu = dist.solve_mu(n_target, spec, grid)
    boltzmann_mu = spec.kT * math.log(
        n_target / float(np.sum(g * np.exp(-eps / spec.kT))))
    assert mu == pytest.approx(boltzmann_mu, rel=1e-3)


def test_solve_mu_round_trip():
    for statistics in ("fermi", "bose"):
        spec = fermi_spec() if statistics == "fermi" else bose_spec()
        grid = dist.MomentumGrid(0.0, 4.0, 48)
        eps = dist.grid_energies(spec, grid)
        g = dist.grid_mode_counts(spec, grid)
        eps_min = float(eps.min())
        mu_star = eps_min - 0.7 if statistics == "bose" else eps_min + 1.3
        n_from_mu = float(np.sum(dist.occupancy(eps, mu_star, spec, g_p=g)))
        mu_back = dist.solve_mu(n_from_mu, spec, grid)
        assert mu_back == pytest.approx(mu_star, abs=1e-9)


def test_solve_mu_saturation():
    spec = bose_spec()
    grid = dist.MomentumGrid(0.0, 4.0, 32)
    cap = dist.saturation_count(spec, grid)
    with pytest.raises(SaturationExceeded):
        dist.solve_mu(cap * 1.01, spec, grid)


def test_solve_mu_fermi_overfull():
    spec = fermi_spec()
    grid = dist.MomentumGrid(0.0, 4.0, 32)
    g = dist.grid_mode_counts(spec, grid)
    with pytest.raises(NoBracket):
        dist.solve_mu(float(g.sum()) * 1.5, spec, grid)


def test_max_entropy_matches_closed_form():
    for statistics in ("fermi", "bose"):
        spec = fermi_spec() if statistics == "fermi" else bose_spec()
        grid = dist.MomentumGrid(0.0, 4.0, 64)
        eps = dist.grid_energies(spec, grid)
        g = dist.grid_mode_counts(spec, grid)
        mu = float(eps.min()) + (1.5 if statistics == "fermi" else -0.5)
        closed = dist.occupancy(eps, mu, spec, g_p=g)
        n_t, e_t = float(closed.sum()), float((closed * eps).sum())
        result = dist.max_entropy_occupancies(spec, grid, n_t, e_t)
        rel = np.max(np.abs(result.occupancies - closed) / closed)
        assert rel <= 1e-6
        assert result.temperature == pytest.approx(spec.temperature, rel=1e-9)
        assert result.mu == pytest.approx(mu, abs=1e-9)


def test_max_entropy_two_bin_symmetry():
    # equal mode counts, energy fixed at the midpoint: equal occupancies
    result = dist.max_entropy_on_levels(
        [1.0, 2.0], [30.0, 30.0], 30.0, 45.0, "fermi")
    n1, n2 = result.occupancies
    assert n1 == pytest.approx(n2, rel=1e-10)
    assert n1 + n2 == pytest.approx(30.0, rel=1e-12)


def test_max_entropy_single_bin():
    result = dist.max_entropy_on_levels([2.0], [40.0], 10.0, 20.0, "bose")
    assert result.occupancies[0] == pytest.approx(10.0, rel=1e-12)
    # multiplier consistency: s'(n) = a + b*eps at the returned multipliers
    prime = math.log1p(40.0 / 10.0)
    assert result.multiplier_number + result.multiplier_energy * 2.0 == pytest.approx(
        prime, rel=1e-9)
    with pytest.raises(Infeasible):
        dist.max_entropy_on_levels([2.0], [40.0], 10.0, 25.0, "bose")


def test_max_entropy_infeasible():
    with pytest.raises(Infeasible):
        dist.max_entropy_on_levels([1.0, 2.0], [5.0, 5.0], 20.0, 30.0, "fermi")
    with pytest.raises(Infeasible):
        # mean energy outside the level range
        dist.max_entropy_on_levels([1.0, 2.0], [5.0, 5.0], 2.0, 10.0, "bose")
    with pytest.raises(Infeasible):
        dist.max_entropy_on_levels([1.0, 2.0], [5.0, 5.0], -1.0, 1.0, "bose")


def test_max_entropy_iteration_cap():
    spec = fermi_spec()
    grid = dist.MomentumGrid(0.0, 4.0, 16)
    eps = dist.grid_energies(spec, grid)
    g = dist.grid_mode_counts(spec, grid)
    closed = dist.occupancy(eps, float(eps.min()) + 1.0, spec, g_p=g)
    with pytest.raises(NoConvergence):
        dist.max_entropy_occupancies(
            spec, grid, float(closed.sum()), float((closed * eps).sum()),
            max_iter=1)


def test_spec_validation():
    with pytest.raises(ValueError):
        dist.GasSpec(volume=1.0, temperature=1.0, mass=1.0, statistics="maxwell")
    with pytest.raises(ValueError):
        dist.GasSpec(volume=-1.0, temperature=1.0, mass=1.0, statistics="bose")
    with pytest.raises(ValueError):
        dist.MomentumGrid(2.0, 1.0, 32)
    with pytest.raises(ValueError):
        dist.MomentumGrid(0.0, 1.0, 4)
