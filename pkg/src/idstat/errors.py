"""Exception hierarchy shared by all idstat modules.

Two branches matter for the CLI exit-code contract: ``DomainError``
(physically or mathematically invalid input, exit code 3) and
``ConvergenceError`` (an iteration ran out of budget, exit code 4).
``ParseError`` covers malformed config / input files (usage, exit code 2).
"""


class IdstatError(Exception):
    """Base class for all idstat errors."""


class DomainError(IdstatError):
    """Input outside the operation's mathematical or physical domain."""


class ConvergenceError(IdstatError):
    """An iterative solver exhausted its iteration budget."""


class ParseError(IdstatError):
    """Malformed configuration or input file."""


# -- geometry / quadrature ------------------------------------------------

class GridTooNarrow(DomainError):
    """Grid boundaries clip a wavepacket (boundary density too large)."""


# -- permutations and many-particle states --------------------------------

class BadPermutation(DomainError):
    """Sequence passed as a permutation is not a bijection of 0..n-1."""


class SizeMismatch(DomainError):
    """Operands have incompatible particle numbers or dimensions."""


class NotNormalized(DomainError):
    """Superposition coefficients do not satisfy |a|^2 + |b|^2 = 1."""


class NotSquare(DomainError):
    """Matrix operation requires a square matrix."""


class TooLarge(DomainError):
    """Problem size exceeds the guard for an exponential-cost routine."""


# -- spinor exchange -------------------------------------------------------

class SpinMismatch(DomainError):
    """Paired spinor modes must share total spin and spin component."""


class DegenerateAngles(DomainError):
    """Exchange-rotation construction is ill-posed for equal azimuths."""


# -- counting --------------------------------------------------------------

class PauliViolation(DomainError):
    """Fermi occupation exceeds the number of available quantum cells."""


# -- distributions ---------------------------------------------------------

class BosePole(DomainError):
    """Bose occupancy evaluated at energy at or below the chemical potential."""


class SaturationExceeded(DomainError):
    """Requested particle number unreachable on this grid (condensation)."""


class NoBracket(DomainError):
    """Root finder could not bracket a solution."""


class Infeasible(DomainError):
    """Constraint pair (N, E) not attainable on the given grid."""


class NoConvergence(ConvergenceError):
    """Multiplier iteration did not converge within the iteration cap."""


# -- kinetic balance -------------------------------------------------------

class OffGrid(DomainError):
    """Collision channel references an energy not on the population grid."""


class OrderOverflow(DomainError):
    """Collision channel would move occupation outside 0..s_max."""


class DivergentSeries(DomainError):
    """Geometric population sum diverges (or its tail mass is not negligible)."""


class InvariantViolation(DomainError):
    """A conserved per-bin total has drifted beyond tolerance."""


class NonConvergence(ConvergenceError):
    """Relaxation residual still above tolerance after the sweep budget."""
