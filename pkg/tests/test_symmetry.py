import itertools
import math

import numpy as np
import pytest

from idstat import symmetry as sym
from idstat import wavepacket as wp
from idstat.errors import (
    BadPermutation,
    NotNormalized,
    NotSquare,
    SizeMismatch,
    TooLarge,
)

from conftest import gaussian_overlap_closed_form

RNG = np.random.default_rng(20100701)


def random_unit_overlap(n_modes: int, rng=RNG) -> sym.MatrixOverlap:
    """Random Gram matrix of unit vectors: a valid overlap provider."""
    vectors = rng.normal(size=(n_modes, 2 * n_modes)) + 1j * rng.normal(
        size=(n_modes, 2 * n_modes))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return sym.MatrixOverlap(vectors @ vectors.conj().T)


def random_state(n: int, n_modes: int, n_terms: int, rng=RNG) -> sym.NParticleState:
    terms = []
    for _ in range(n_terms):
        coeff = complex(rng.normal(), rng.normal())
        modes = tuple(int(m) for m in rng.integers(0, n_modes, size=n))
        terms.append((coeff, modes))
    return sym._canonical(n, terms)


def naive_permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        total += math.prod(m[i, perm[i]] for i in range(n))
    return total


def naive_determinant(m: np.ndarray) -> complex:
    n = m.shape[0]
    total = 0j
    for perm in itertools.permutations(range(n)):
        total += sym.permutation_parity(perm) * math.prod(
            m[i, perm[i]] for i in range(n))
    return total


# -- permutations ------------------------------------------------------------


def test_permute_labels_identity():
    s = sym.product_state((0, 1, 2))
    assert sym.permute_labels(s, (0, 1, 2)) == s


def test_permute_labels_swap():
    phi, eta = 0, 1
    s = sym.product_state((phi, eta))
    swapped = sym.permute_labels(s, (1, 0))
    assert swapped.terms[0].modes == (eta, phi)


def test_three_cycle_three_times_is_identity():
    s = random_state(3, 4, 3)
    cycle = (1, 2, 0)
    out = s
    for _ in range(3):
        out = sym.permute_labels(out, cycle)
    assert sym.states_close(out, s)


def test_bad_permutation():
    s = sym.product_state((0, 1))
    with pytest.raises(BadPermutation):
        sym.permute_labels(s, (0, 0))
    with pytest.raises(BadPermutation):
        sym.permute_parameters(s, (0, 1, 2))


def test_permute_parameters_identity():
    s = random_state(3, 4, 2)
    assert sym.states_close(sym.permute_parameters(s, (0, 1, 2)), s)


def test_parameter_exchange_equals_inverse_label_exchange_on_products():
    for n in (2, 3, 4):
        modes = tuple(int(m) for m in RNG.integers(0, 5, size=n))
        s = sym.product_state(modes, coeff=0.3 + 0.4j)
        for perm in itertools.permutations(range(n)):
            inv = tuple(np.argsort(perm))
            assert sym.states_close(
                sym.permute_parameters(s, perm), sym.permute_labels(s, inv))


def test_label_parameter_duality_symmetric_coefficients():
    # c_{r1 r2} symmetric: parameter exchange equals label exchange
    s = sym._canonical(2, [(0.6, (0, 1)), (0.6, (1, 0)), (0.8, (2, 2))])
    swap = (1, 0)
    assert sym.states_close(
        sym.permute_parameters(s, swap), sym.permute_labels(s, swap))

    # and for n=3 under a 3-cycle with fully symmetric coefficients
    coeffs = {}
    for modes in itertools.product(range(3), repeat=3):
        coeffs[modes] = float(sum(modes)) + 1.0  # symmetric in the indices
    s3 = sym._canonical(3, [(c, m) for m, c in coeffs.items()])
    cycle = (1, 2, 0)
    assert sym.states_close(
        sym.permute_parameters(s3, cycle), sym.permute_labels(s3, cycle))


def test_label_parameter_duality_fails_for_asymmetric_coefficients():
    # generic coefficients, non-involutive permutation: the two differ
    s = sym._canonical(3, [(1.0, (0, 1, 2)), (2.0, (1, 2, 0))])
    cycle = (1, 2, 0)
    assert not sym.states_close(
        sym.permute_parameters(s, cycle), sym.permute_labels(s, cycle))


# -- projectors ----------------------------------------------------------------


def test_symmetrize_two_modes():
    s = sym.product_state((0, 1))
    expected = sym._canonical(2, [(0.5, (0, 1)), (0.5, (1, 0))])
    assert sym.states_close(sym.symmetrize(s), expected)


def test_symmetrizer_idempotent_term_for_term():
    for n in (2, 3, 4):
        s = random_state(n, 3, 3)
        once = sym.symmetrize(s)
        twice = sym.symmetrize(once)
        assert sym.states_close(twice, once, tol=1e-12)
        anti_once = sym.antisymmetrize(s)
        anti_twice = sym.antisymmetrize(anti_once)
        assert sym.states_close(anti_twice, anti_once, tol=1e-12)


def test_sym_of_anti_is_zero():
    for n in (2, 3, 4):
        s = random_state(n, n, 3)
        assert sym.symmetrize(sym.antisymmetrize(s)).is_zero
        assert sym.antisymmetrize(sym.symmetrize(s)).is_zero


def test_antisymmetrize_equal_modes_is_zero():
    s = sym.product_state((0, 0))
    assert sym.antisymmetrize(s).is_zero


def test_pauli_exclusion_all_repetition_patterns():
    # any assignment with a repeated mode antisymmetrizes to exactly zero
    for n in range(2, 6):
        for assignment in itertools.product(range(n - 1), repeat=n):
            # n slots over n-1 mode values: some mode always repeats
            state = sym.product_state(assignment)
            assert sym.antisymmetrize(state).is_zero


def test_antisymmetrize_distinct_modes_not_zero():
    s = sym.product_state((0, 1, 2))
    assert not sym.antisymmetrize(s).is_zero


# -- scalar products -----------------------------------------------------------


def test_scalar_product_orthonormal_product():
    ov = sym.KroneckerOverlap()
    s = sym.product_state((0, 1))
    assert sym.scalar_product(s, s, ov) == pytest.approx(1.0)


def test_scalar_product_size_mismatch():
    with pytest.raises(SizeMismatch):
        sym.scalar_product(sym.product_state((0,)), sym.product_state((0, 1)),
                           sym.KroneckerOverlap())


def test_permutation_unitarity():
    ov = random_unit_overlap(4)
    for n in (2, 3):
        a = random_state(n, 4, 3)
        b = random_state(n, 4, 3)
        base = sym.scalar_product(a, b, ov)
        for perm in itertools.permutations(range(n)):
            moved = sym.scalar_product(
                sym.permute_labels(a, perm), sym.permute_labels(b, perm), ov)
            assert moved == pytest.approx(base, abs=1e-12)


def test_projector_moves_across_scalar_product():
    ov = random_unit_overlap(4)
    a = random_state(3, 4, 2)
    b = random_state(3, 4, 2)
    sa = sym.symmetrize(a)
    assert sym.scalar_product(sa, sym.symmetrize(b), ov) == pytest.approx(
        sym.scalar_product(sa, b, ov), abs=1e-12)
    aa = sym.antisymmetrize(a)
    assert sym.scalar_product(aa, sym.antisymmetrize(b), ov) == pytest.approx(
        sym.scalar_product(aa, b, ov), abs=1e-12)


# -- exchange superpositions -----------------------------------------------------


def test_exchange_superposition_plain_product():
    s = sym.exchange_superposition(0, 1, 1.0, 0.0)
    assert sym.states_close(s, sym.product_state((0, 1)))


def test_exchange_superposition_symmetric_antisymmetric():
    inv = 1.0 / math.sqrt(2.0)
    s_plus = sym.exchange_superposition(0, 1, inv, inv)
    assert sym.states_close(s_plus, sym.scale(sym.symmetrize(sym.product_state((0, 1))),
                                              math.sqrt(2.0)))
    s_minus = sym.exchange_superposition(0, 1, inv, -inv)
    assert sym.states_close(
        s_minus,
        sym.scale(sym.antisymmetrize(sym.product_state((0, 1))), math.sqrt(2.0)))


def test_exchange_superposition_not_normalized():
    with pytest.raises(NotNormalized):
        sym.exchange_superposition(0, 1, 1.0, 1.0)


def test_interference_value_examples():
    inv = 1.0 / math.sqrt(2.0)
    # orthonormal modes, identity kernel: any admissible pair gives 1
    for alpha, beta in ((1.0, 0.0), (inv, inv), (inv, -inv), (inv, 1j * inv)):
        assert sym.interference_value(alpha, beta, 1.0, 0.0) == pytest.approx(1.0)
    e = 0.37 - 0.11j
    assert sym.interference_value(inv, inv, 1.0, e) == pytest.approx(1.0 + e)
    assert sym.interference_value(inv, 1j * inv, 1.0, e) == pytest.approx(1.0)
    with pytest.raises(NotNormalized):
        sym.interference_value(1.0, 1.0, 1.0, 0.0)


def test_interference_value_matches_scalar_products():
    # the expansion must reproduce the directly computed scalar product
    ov = random_unit_overlap(2)
    phi, eta = 0, 1
    alpha, beta = 0.6, complex(0.0, 0.8)
    state = sym.exchange_superposition(phi, eta, alpha, beta)
    direct_term = sym.scalar_product(
        sym.product_state((phi, eta)), sym.product_state((phi, eta)), ov)
    exchange_term = sym.scalar_product(
        sym.product_state((phi, eta)), sym.product_state((eta, phi)), ov)
    assert sym.scalar_product(state, state, ov) == pytest.approx(
        sym.interference_value(alpha, beta, direct_term, exchange_term), abs=1e-12)


# -- overlap matrices, permanent, determinant ------------------------------------


def test_overlap_matrix_orthonormal_identity():
    ov = sym.KroneckerOverlap()
    m = sym.overlap_matrix([0, 1, 2], [0, 1, 2], ov)
    assert np.allclose(m, np.eye(3))


def test_overlap_matrix_single_entry():
    ov = random_unit_overlap(3)
    m = sym.overlap_matrix([2], [1], ov)
    assert m.shape == (1, 1)
    assert m[0, 0] == ov(2, 1)


def test_overlap_matrix_wavepacket_quadrature():
    packets = [
        wp.WavePacket(m0=1.0, sigma=1.0, x0=-1.0, k0=0.4),
        wp.WavePacket(m0=1.0, sigma=1.3, x0=1.0, k0=-0.2),
    ]
    grid = wp.Grid(-40.0, 40.0, 2049)
    t = 0.2
    reg = sym.ModeRegistry()
    ids = [reg.register(p) for p in packets]
    quad_ov = lambda i, j: wp.overlap(reg[i], reg[j], t, grid)
    m = sym.overlap_matrix(ids, ids, quad_ov)
    for i in (0, 1):
        for j in (0, 1):
            exact = gaussian_overlap_closed_form(packets[i], packets[j], t)
            assert m[i, j] == pytest.approx(exact, abs=1e-9)


def test_permanent_and_determinant_2x2():
    m = np.array([[1.0 + 1j, 2.0], [3.0, 4.0 - 2j]])
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    assert sym.permanent(m) == pytest.approx(a * d + b * c)
    assert sym.determinant(m) == pytest.approx(a * d - b * c)


def test_permanent_and_determinant_identity():
    for n in (1, 3, 6):
        eye = np.eye(n)
        assert sym.permanent(eye) == pytest.approx(1.0)
        assert sym.determinant(eye) == pytest.approx(1.0)


def test_permanent_matches_naive_7x7():
    m = RNG.normal(size=(7, 7)) + 1j * RNG.normal(size=(7, 7))
    expected = naive_permanent(m)
    assert abs(sym.permanent(m) - expected) <= 1e-10 * abs(expected)


def test_determinant_matches_naive():
    for n in range(1, 7):
        m = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
        expected = naive_determinant(m)
        assert sym.determinant(m) == pytest.approx(expected, abs=1e-10 * max(1.0, abs(expected)))


def test_permanent_guards():
    with pytest.raises(NotSquare):
        sym.permanent(np.ones((2, 3)))
    with pytest.raises(NotSquare):
        sym.determinant(np.ones((2, 3)))
    with pytest.raises(TooLarge):
        sym.permanent(np.ones((21, 21)))


def test_antisymmetrized_overlap_is_determinant():
    ov = random_unit_overlap(5)
    for n in (2, 3, 4):
        a_modes = list(range(n))
        b_modes = list(RNG.permutation(5)[:n])
        a = sym.antisymmetrize(sym.product_state(a_modes))
        b = sym.antisymmetrize(sym.product_state(b_modes))
        m = sym.overlap_matrix(a_modes, b_modes, ov)
        lhs = sym.scalar_product(a, b, ov) * math.factorial(n)
        assert lhs == pytest.approx(sym.determinant(m), abs=1e-10)

        s_a = sym.symmetrize(sym.product_state(a_modes))
        s_b = sym.symmetrize(sym.product_state(b_modes))
        lhs_sym = sym.scalar_product(s_a, s_b, ov) * math.factorial(n)
        assert lhs_sym == pytest.approx(sym.permanent(m), abs=1e-10)


# -- Feynman amplitudes -----------------------------------------------------------


def both_sides_amplitude(b, a, sign, ov):
    inv = 1.0 / math.sqrt(2.0)
    swap = (1, 0)
    b_sym = sym.add(sym.scale(b, inv), sym.scale(sym.permute_labels(b, swap), sign * inv))
    a_sym = sym.add(sym.scale(a, inv), sym.scale(sym.permute_labels(a, swap), sign * inv))
    return sym.scalar_product(b_sym, a_sym, ov)


def test_feynman_equivalence_random():
    for trial in range(50):
        ov = random_unit_overlap(4)
        a = sym.product_state(tuple(RNG.integers(0, 4, size=2)),
                              coeff=complex(RNG.normal(), RNG.normal()))
        b = sym.product_state(tuple(RNG.integers(0, 4, size=2)),
                              coeff=complex(RNG.normal(), RNG.normal()))
        for sign in (1, -1):
            f = sym.feynman_amplitude(b, a, sign, ov)
            f_prime = both_sides_amplitude(b, a, sign, ov)
            assert abs(f - f_prime) <= 1e-12


def test_feynman_orthonormal_product():
    ov = sym.KroneckerOverlap()
    a = sym.product_state((0, 1))
    assert sym.feynman_amplitude(a, a, 1, ov) == pytest.approx(1.0)


def test_feynman_equal_modes_antisymmetric_vanishes():
    ov = sym.KroneckerOverlap()
    a = sym.product_state((0, 0))
    assert sym.feynman_amplitude(a, a, -1, ov) == pytest.approx(0.0, abs=1e-15)


def test_feynman_requires_two_particles():
    ov = sym.KroneckerOverlap()
    with pytest.raises(SizeMismatch):
        sym.feynman_amplitude(sym.product_state((0, 1, 2)),
                              sym.product_state((0, 1, 2)), 1, ov)


# -- registry and provider validation ---------------------------------------------


def test_mode_registry_dedupes():
    reg = sym.ModeRegistry()
    a = sym.OrthonormalMode("a")
    i = reg.register(a)
    j = reg.register(sym.OrthonormalMode("a"))
    k = reg.register(sym.OrthonormalMode("b"))
    assert i == j != k
    assert reg[i] == a
    assert len(reg) == 2


def test_check_overlap_provider():
    sym.check_overlap_provider(sym.KroneckerOverlap(), [0, 1, 2])
    bad = sym.MatrixOverlap.__new__(sym.MatrixOverlap)
    bad.matrix = np.array([[1.0, 0.5], [0.2, 1.0]])
    with pytest.raises(ValueError):
        sym.check_overlap_provider(bad, [0, 1])


def test_zero_state_algebra():
    z = sym.zero_state(2)
    s = sym.product_state((0, 1))
    assert sym.states_close(sym.add(z, s), s)
    assert sym.scale(s, 0.0).is_zero
    assert sym.scalar_product(z, s, sym.KroneckerOverlap()) == 0j
