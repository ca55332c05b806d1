"""
Exception hierarchy for triple_lab.

Every failure the library can signal derives from :class:`TripleLabError`, so
the command line can map any of them to exit code 1 with a readable message.
Validation problems are also ``ValueError`` subclasses and numerical
breakdowns are ``ArithmeticError`` subclasses, which keeps plain ``except
ValueError`` call sites working.
"""


class TripleLabError(Exception):
    """Base class for all triple_lab errors."""

    exit_code = 1


# ---------------------------------------------------------------------------
# Input and validation
# ---------------------------------------------------------------------------

class MeasureError(TripleLabError, ValueError):
    """A measure (or a piece of one) violates its structural invariants."""


class NonFiniteWeightedMass(MeasureError):
    """The (1+λ²)⁻¹-weighted mass of a measure is infinite or not positive."""


class AtomAtPole(MeasureError):
    """Inversion λ ↦ −1/λ met an atom at 0."""


class PointNotQuasiRegular(TripleLabError, ValueError):
    """A construction needs a quasi-regular point but got a core-spectrum point."""


class NodeAtZero(TripleLabError, ValueError):
    """A discrete model has a node at 0 where an inverse is required."""


class NotDissipative(TripleLabError, ValueError):
    """A matrix has an imaginary part that is not positive semidefinite of rank one."""


class SpecFormatError(TripleLabError, ValueError):
    """A measure, triple or map specification could not be parsed."""


# ---------------------------------------------------------------------------
# Numerical breakdowns
# ---------------------------------------------------------------------------

class NumericalError(TripleLabError, ArithmeticError):
    """Base class for numerical failures."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature could not reach its tolerance within the budget."""


class Indeterminate(NumericalError):
    """Refinement neither converged nor certified divergence."""


class ExtrapolationDivergence(NumericalError):
    """The ε-ladder for a boundary value did not settle."""


class InconclusiveThreshold(NumericalError):
    """Threshold samples were not monotone."""


class PoleAtEvaluation(NumericalError):
    """M(z) = −i was hit when forming the Livšic function."""


class DegenerateValue(NumericalError):
    """The Livšic value 1 has no Weyl preimage."""


class DecompositionFailure(NumericalError):
    """h = f∘g⁻¹∘ι⁻¹ came out non-affine."""


class ResonancePoint(NumericalError):
    """The denominator of the resolvent coefficient p(z) vanished."""


class SingularResolvent(NumericalError):
    """A resolvent matrix is numerically singular."""


class EigenvalueHit(NumericalError):
    """The evaluation point is an eigenvalue of T*."""


class CrossCheckMismatch(NumericalError):
    """Two independent computations of the same quantity disagree."""
