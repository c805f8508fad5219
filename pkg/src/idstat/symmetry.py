"""Finite N-particle states as sums of labeled mode products.

A state of n particles is a finite sum of product terms; each term
assigns one single-particle mode to each Hilbert-space slot and carries a
complex coefficient.  On this representation the module provides slot
(label) and parameter permutations, the (anti)symmetrizer projectors
S = (1/n!) sum_a (eps_a) P_a, scalar products through a pluggable
single-particle overlap, exchange-degeneracy superpositions and their
interference values, and permanent/determinant overlaps of (anti)
symmetrized products.

Modes are registered once in an append-only :class:`ModeRegistry` and
referenced by integer id; anything hashable can be a mode (a WavePacket,
a SpinorMode, an abstract orthonormal label).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Hashable, Sequence

import numpy as np

from .errors import (
    BadPermutation,
    NotNormalized,
    NotSquare,
    SizeMismatch,
    TooLarge,
)

__all__ = [
    "ModeRegistry",
    "OrthonormalMode",
    "ProductTerm",
    "NParticleState",
    "product_state",
    "zero_state",
    "add",
    "scale",
    "states_close",
    "permute_labels",
    "permute_parameters",
    "permutation_parity",
    "symmetrize",
    "antisymmetrize",
    "scalar_product",
    "exchange_superposition",
    "interference_value",
    "overlap_matrix",
    "permanent",
    "determinant",
    "feynman_amplitude",
    "KroneckerOverlap",
    "MatrixOverlap",
    "check_overlap_provider",
]

# Coefficients at or below this magnitude are dropped in canonical form.
COEFF_DROP_TOL = 1e-14

# Ryser's permanent is O(2^n * n); beyond this the call is a misuse.
PERMANENT_MAX_N = 20

OverlapProvider = Callable[[int, int], complex]


@dataclass(frozen=True)
class OrthonormalMode:
    """Abstract member of an orthonormal family, identified by label."""

    label: Hashable


class ModeRegistry:
    """Append-only table of single-particle modes.

    Registering the same (equal) mode twice returns the original id, so
    mode identity is value identity.  Registration is atomic; reads are
    lock-free and safe from any thread.
    """

    def __init__(self):
        self._modes: list = []
        self._ids: dict = {}
        self._lock = threading.Lock()

    def register(self, mode) -> int:
        with self._lock:
            mode_id = self._ids.get(mode)
            if mode_id is None:
                mode_id = len(self._modes)
                self._modes.append(mode)
                self._ids[mode] = mode_id
            return mode_id

    def __getitem__(self, mode_id: int):
        return self._modes[mode_id]

    def __len__(self) -> int:
        return len(self._modes)


@dataclass(frozen=True)
class ProductTerm:
    """coeff * (mode assigned to slot 0) x (mode assigned to slot 1) x ..."""

    coeff: complex
    modes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeff", complex(self.coeff))
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        c = self.coeff
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError("term coefficient must be finite")


@dataclass(frozen=True)
class NParticleState:
    """Finite sum of same-length product terms; empty sum is the zero state.

    States are kept in canonical form: terms sorted by mode assignment,
    equal assignments merged, and coefficients below 1e-14 dropped, so
    that projector identities can be checked term for term.
    """

    n: int
    terms: tuple[ProductTerm, ...]

    def __post_init__(self):
        for t in self.terms:
            if len(t.modes) != self.n:
                raise SizeMismatch(
                    f"term of length {len(t.modes)} in a {self.n}-particle state"
                )

    @property
    def is_zero(self) -> bool:
        return not self.terms


def _canonical(n: int, raw_terms) -> NParticleState:
    merged: dict[tuple[int, ...], complex] = {}
    for coeff, modes in raw_terms:
        merged[modes] = merged.get(modes, 0j) + coeff
    terms = tuple(
        ProductTerm(c, m)
        for m, c in sorted(merged.items())
        if abs(c) > COEFF_DROP_TOL
    )
    return NParticleState(n, terms)


def product_state(modes: Sequence[int], coeff: complex = 1.0) -> NParticleState:
    """Single product term assigning modes[j] to slot j."""
    modes = tuple(int(m) for m in modes)
    return _canonical(len(modes), [(complex(coeff), modes)])


def zero_state(n: int) -> NParticleState:
    return NParticleState(n, ())


def add(a: NParticleState, b: NParticleState) -> NParticleState:
    if a.n != b.n:
        raise SizeMismatch(f"cannot add {a.n}- and {b.n}-particle states")
    return _canonical(a.n, [(t.coeff, t.modes) for t in a.terms + b.terms])


def scale(s: NParticleState, c: complex) -> NParticleState:
    return _canonical(s.n, [(t.coeff * c, t.modes) for t in s.terms])


def states_close(a: NParticleState, b: NParticleState, tol: float = 1e-12) -> bool:
    """Term-for-term comparison of two canonical states."""
    if a.n != b.n:
        return False
    ca = {t.modes: t.coeff for t in a.terms}
    cb = {t.modes: t.coeff for t in b.terms}
    keys = set(ca) | set(cb)
    return all(abs(ca.get(k, 0j) - cb.get(k, 0j)) <= tol for k in keys)


def _check_permutation(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(int(j) for j in perm)
    if len(perm) != n or sorted(perm) != list(range(n)):
        raise BadPermutation(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def _invert(perm: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for j, pj in enumerate(perm):
        inv[pj] = j
    return tuple(inv)


def permutation_parity(perm: Sequence[int]) -> int:
    """+1 for even, -1 for odd, by cycle decomposition."""
    perm = tuple(perm)
    seen = [False] * len(perm)
    parity = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def permute_labels(s: NParticleState, perm: Sequence[int]) -> NParticleState:
    """Move the mode occupying slot j to slot perm[j], in every term.

    This is the Hilbert-space relabeling P_perm; coefficients are
    untouched.
    """
    perm = _check_permutation(perm, s.n)
    inv = _invert(perm)
    return _canonical(
        s.n,
        [(t.coeff, tuple(t.modes[inv[k]] for k in range(s.n))) for t in s.terms],
    )


def permute_parameters(s: NParticleState, perm: Sequence[int]) -> NParticleState:
    """Exchange the mode parameters between slots, the opposite sense.

    Slot j receives the mode that occupied slot perm[j], so on a single
    product term this equals permute_labels with the inverse permutation.
    On multi-term states the two agree for every permutation exactly when
    the coefficients are permutation-symmetric.
    """
    perm = _check_permutation(perm, s.n)
    return _canonical(
        s.n,
        [(t.coeff, tuple(t.modes[perm[k]] for k in range(s.n))) for t in s.terms],
    )


def _projector(s: NParticleState, signed: bool) -> NParticleState:
    raw = []
    for perm in permutations(range(s.n)):
        sign = permutation_parity(perm) if signed else 1
        inv = _invert(perm)
        for t in s.terms:
            raw.append(
                (sign * t.coeff, tuple(t.modes[inv[k]] for k in range(s.n)))
            )
    return _canonical(s.n, [(c / math.factorial(s.n), m) for c, m in raw])


def symmetrize(s: NParticleState) -> NParticleState:
    """Projector (1/n!) sum_a P_a; idempotent in canonical form."""
    return _projector(s, signed=False)


def antisymmetrize(s: NParticleState) -> NParticleState:
    """Signed projector (1/n!) sum_a eps_a P_a; kills repeated modes."""
    return _projector(s, signed=True)


def scalar_product(a: NParticleState, b: NParticleState,
                   ov: OverlapProvider) -> complex:
    """<a, b> = sum over term pairs of conj(ca) cb prod_j ov(ma_j, mb_j)."""
    if a.n != b.n:
        raise SizeMismatch(f"scalar product of {a.n}- and {b.n}-particle states")
    total = 0j
    for ta in a.terms:
        for tb in b.terms:
            prod = ta.coeff.conjugate() * tb.coeff
            for ma, mb in zip(ta.modes, tb.modes):
                prod *= ov(ma, mb)
                if prod == 0:
                    break
            total += prod
    return total


def _check_normalized(alpha: complex, beta: complex) -> None:
    size = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(size - 1.0) > 1e-9:
        raise NotNormalized(f"|alpha|^2 + |beta|^2 = {size}, expected 1")


def exchange_superposition(phi: int, eta: int, alpha: complex,
                           beta: complex) -> NParticleState:
    """Two-particle state alpha * phi(x)eta(y) + beta * phi(y)eta(x).

    alpha = beta = 1/sqrt(2) gives the symmetric combination,
    alpha = -beta the antisymmetric one; the coefficients must satisfy
    |alpha|^2 + |beta|^2 = 1.
    """
    _check_normalized(alpha, beta)
    return _canonical(
        2,
        [(complex(alpha), (int(phi), int(eta))),
         (complex(beta), (int(eta), int(phi)))],
    )


def interference_value(alpha: complex, beta: complex, direct: complex,
                       exchange: complex) -> complex:
    """(|a|^2+|b|^2) * direct + 2 Re(conj(a) b) * exchange.

    direct and exchange are the two matrix elements of a permutation-
    symmetric kernel between the plain product and its exchanged partner;
    the second coefficient is the exchange-interference weight.
    """
    _check_normalized(alpha, beta)
    weight = abs(alpha) ** 2 + abs(beta) ** 2
    cross = 2.0 * (complex(alpha).conjugate() * beta).real
    return weight * direct + cross * exchange


def overlap_matrix(a_modes: Sequence[int], b_modes: Sequence[int],
                   ov: OverlapProvider) -> np.ndarray:
    """Matrix M[i, j] = ov(a_modes[i], b_modes[j])."""
    if len(a_modes) != len(b_modes):
        raise SizeMismatch(
            f"mode lists of length {len(a_modes)} and {len(b_modes)}"
        )
    n = len(a_modes)
    m = np.empty((n, n), dtype=complex)
    for i, ma in enumerate(a_modes):
        for j, mb in enumerate(b_modes):
            m[i, j] = ov(ma, mb)
    return m


def _check_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"matrix of shape {m.shape} is not square")
    return m


def permanent(m) -> complex:
    """Permanent by Ryser's inclusion-exclusion with Gray-code updates.

    perm(M) = (-1)^n sum over nonempty column subsets S of
    (-1)^|S| prod_i sum_{j in S} M[i, j]; the Gray-code walk changes one
    column per step so each subset costs O(n).  Guarded to n <= 20.
    """
    m = _check_square(m)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > PERMANENT_MAX_N:
        raise TooLarge(f"permanent guarded to n <= {PERMANENT_MAX_N}, got {n}")
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    size = 0
    for k in range(1, 1 << n):
        new_gray = k ^ (k >> 1)
        j = (gray ^ new_gray).bit_length() - 1
        if new_gray & (1 << j):
            row_sums += m[:, j]
            size += 1
        else:
            row_sums -= m[:, j]
            size -= 1
        gray = new_gray
        total += (-1) ** size * np.prod(row_sums)
    return complex((-1) ** n * total)


def determinant(m) -> complex:
    """Determinant via LAPACK's partial-pivot LU factorization."""
    m = _check_square(m)
    if m.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(m))


def feynman_amplitude(b: NParticleState, a: NParticleState, sign: int,
                      ov: OverlapProvider) -> complex:
    """Two-particle transition amplitude <b(1,2) + sign*b(2,1), a(1,2)>.

    Only the final state is (anti)symmetrized and no normalization factors
    appear; the value equals the both-sides-symmetrized amplitude with
    1/sqrt(2) factors.
    """
    if a.n != 2 or b.n != 2:
        raise SizeMismatch("feynman_amplitude is defined for two-particle states")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    b_combined = add(b, scale(permute_labels(b, (1, 0)), sign))
    return scalar_product(b_combined, a, ov)


class KroneckerOverlap:
    """Overlap of an orthonormal family: 1 for equal ids, else 0."""

    def __call__(self, i: int, j: int) -> complex:
        return 1.0 + 0j if i == j else 0j


class MatrixOverlap:
    """Overlap read from an explicit Hermitian matrix with unit diagonal."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("overlap matrix must be conjugate-symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-9):
            raise ValueError("overlap matrix must have unit diagonal")
        self.matrix = m

    def __call__(self, i: int, j: int) -> complex:
        return complex(self.matrix[i, j])


def check_overlap_provider(ov: OverlapProvider, mode_ids: Sequence[int],
                           tol: float = 1e-9) -> None:
    """Assert conjugate symmetry and unit self-overlap on the given ids."""
    for i in mode_ids:
        if abs(ov(i, i) - 1.0) > tol:
            raise ValueError(f"self-overlap of mode {i} is {ov(i, i)}, not 1")
        for j in mode_ids:
            if abs(ov(i, j) - np.conj(ov(j, i))) > tol:
                raise ValueError(f"overlap not conjugate-symmetric at ({i}, {j})")
