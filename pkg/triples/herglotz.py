"""
Weyl-Titchmarsh function evaluators.

A :class:`WeylEvaluator` wraps one of four backings:

  MeasureBacked  M(z) = ∫(1/(λ−z) − λ/(1+λ²)) dμ(λ) for a normalized μ
  Composed       pullback of an inner evaluator through a Möbius map
  ClosedForm     the homogeneous family M_ν / N_ν
  Reflected      M_R(z) = −conj M(−conj z), the pair (−Ȧ, −A)

Composed evaluators return (M(f⁻¹ζ) − Re M(f⁻¹i))/Im M(f⁻¹i). The real-affine
correction restores M'(i) = i; it is the identity whenever f fixes i (the
inversion ι among them), where the evaluator is the plain pullback M(f⁻¹ζ).
"""

import cmath
import functools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Union

from triples.errors import ExtrapolationDivergence, InconclusiveThreshold
from triples.log import logger
from triples.measure import RealMeasure, cauchy_integral, gap_cauchy_integral
from triples.mobius import MobiusMap, apply, invert, is_infinite


# Boundary values by ε-extrapolation
EPSILON0 = 1e-2
EXTRAPOLATION_LEVELS = 20
EXTRAPOLATION_TOL = 1e-8

# Threshold ladders
THRESHOLD_EXPONENTS = range(1, 7)
THRESHOLD_BLOWUP = 1e3
THRESHOLD_STEP_RATIO = 0.999

# |f⁻¹(i) − i| below which a Composed evaluator skips renormalization
FIXES_I_TOL = 1e-15


class CachePolicy(Enum):
    DISABLED = "disabled"
    MEMO = "memo"


@dataclass(frozen=True)
class MeasureBacked:
    measure: RealMeasure


@dataclass(frozen=True)
class Composed:
    inner: "WeylEvaluator"
    map: MobiusMap

    @cached_property
    def _preimage_of_i(self):
        return complex(apply(invert(self.map), 1j))

    @property
    def fixes_i(self):
        return abs(self._preimage_of_i - 1j) <= FIXES_I_TOL

    @cached_property
    def reference(self):
        """M_inner(f⁻¹(i)); the affine renormalization sends it to i."""
        if self.fixes_i:
            return 1j
        return weyl_m(self.inner, self._preimage_of_i)

    def renormalize(self, value):
        if self.fixes_i:
            return value
        ref = self.reference
        return (value - ref.real) / ref.imag


@dataclass(frozen=True)
class ClosedForm:
    nu: float
    side: str = "positive"


@dataclass(frozen=True)
class Reflected:
    inner: "WeylEvaluator"


Backing = Union[MeasureBacked, Composed, ClosedForm, Reflected]


@dataclass(frozen=True)
class WeylEvaluator:
    backing: Backing
    cache: CachePolicy = CachePolicy.DISABLED


@dataclass(frozen=True)
class DirectQuadrature:
    pass


@dataclass(frozen=True)
class EpsilonExtrapolation:
    levels: int


@dataclass(frozen=True)
class ClosedFormLimit:
    pass


BoundaryMethod = Union[DirectQuadrature, EpsilonExtrapolation, ClosedFormLimit]


@dataclass(frozen=True)
class BoundaryValue:
    value: complex
    error_estimate: float
    method: BoundaryMethod


@dataclass(frozen=True)
class ThresholdSignature:
    friedrichs_at_reference: bool
    krein_at_reference: bool
    far_samples: tuple = ()
    near_samples: tuple = ()


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def measure_evaluator(m, cache=CachePolicy.DISABLED):
    return WeylEvaluator(MeasureBacked(m), cache)


def closed_form_evaluator(nu, side="positive"):
    return WeylEvaluator(ClosedForm(float(nu), side))


def compose_evaluator(e, f):
    """Evaluator of the pair transformed by f (pullback through f⁻¹)."""
    return WeylEvaluator(Composed(e, f), e.cache)


def reflect_evaluator(e):
    return WeylEvaluator(Reflected(e), e.cache)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def weyl_m(e, z):
    """M(z) for z in the upper half-plane."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"weyl_m needs Im z > 0, got z = {z}")
    if e.cache is CachePolicy.MEMO:
        return _memo_weyl(e, z)
    return _weyl(e, z)


@functools.lru_cache(maxsize=4096)
def _memo_weyl(e, z):
    # lru_cache keeps its bookkeeping consistent under concurrent callers
    return _weyl(e, z)


def clear_cache():
    _memo_weyl.cache_clear()


def _weyl(e, z):
    backing = e.backing
    if isinstance(backing, MeasureBacked):
        return cauchy_integral(backing.measure, z).value
    if isinstance(backing, Composed):
        w = complex(apply(invert(backing.map), z))
        return backing.renormalize(weyl_m(backing.inner, w))
    if isinstance(backing, ClosedForm):
        from triples.homogeneous import closed_form_value

        return closed_form_value(backing.nu, backing.side, z)
    if isinstance(backing, Reflected):
        return -weyl_m(backing.inner, -z.conjugate()).conjugate()
    raise TypeError(f"unknown Weyl backing {type(backing).__name__}")


def weyl_m_reflected(e, z):
    """Schwarz reflection: M(z) = conj M(conj z) for z in the lower half-plane."""
    z = complex(z)
    if not z.imag < 0:
        raise ValueError(f"weyl_m_reflected needs Im z < 0, got z = {z}")
    return weyl_m(e, z.conjugate()).conjugate()


def evaluate(e, z):
    """M(z) on either half-plane."""
    z = complex(z)
    if z.imag > 0:
        return weyl_m(e, z)
    if z.imag < 0:
        return weyl_m_reflected(e, z)
    raise ValueError(f"M is evaluated off the real axis; use boundary_value for z = {z}")


# ---------------------------------------------------------------------------
# Boundary values
# ---------------------------------------------------------------------------

def boundary_value(e, omega, method=None):
    """
    M(ω + i0) at a real ω that is quasi-regular for the backing measure.

    ``method`` may force "direct" or "extrapolate" for measure-backed
    evaluators; by default the gap structure of the measure decides.
    """
    omega = float(omega)
    backing = e.backing
    if isinstance(backing, MeasureBacked):
        m = backing.measure
        if method is None:
            method = "direct" if m.in_gap(omega) else "extrapolate"
        if method == "direct":
            result = gap_cauchy_integral(m, omega)
            return BoundaryValue(result.value, result.error, DirectQuadrature())
        if method == "extrapolate":
            return _extrapolate(e, omega)
        raise ValueError(f"unknown boundary-value method {method!r}")

    if isinstance(backing, ClosedForm):
        from triples.homogeneous import closed_form_value

        value = closed_form_value(backing.nu, backing.side, complex(omega, 0.0))
        if not cmath.isfinite(value):
            raise ExtrapolationDivergence(f"closed form has no finite boundary value at ω = {omega}")
        return BoundaryValue(value, 0.0, ClosedFormLimit())

    if isinstance(backing, Composed):
        if method == "extrapolate":
            return _extrapolate(e, omega)
        w = apply(invert(backing.map), omega)
        if is_infinite(w):
            raise ExtrapolationDivergence(f"ω = {omega} pulls back to ∞; no boundary value available")
        inner = boundary_value(backing.inner, float(w), method)
        if backing.fixes_i:
            return inner
        scale = backing.reference.imag
        return BoundaryValue(backing.renormalize(inner.value), inner.error_estimate / scale, inner.method)

    if isinstance(backing, Reflected):
        inner = boundary_value(backing.inner, -omega, method)
        return BoundaryValue(-inner.value.conjugate(), inner.error_estimate, inner.method)

    raise TypeError(f"unknown Weyl backing {type(backing).__name__}")


def _extrapolate(e, omega):
    """Richardson-accelerated limit of M(ω + iε_k), ε_k = ε₀·2^−k."""
    table = []
    previous = None
    for k in range(EXTRAPOLATION_LEVELS):
        eps = EPSILON0 * 2.0 ** (-k)
        row = [weyl_m(e, complex(omega, eps))]
        for j in range(1, k + 1):
            row.append(row[j - 1] + (row[j - 1] - table[k - 1][j - 1]) / (2.0 ** j - 1.0))
        table.append(row)
        best = row[-1]
        if not cmath.isfinite(best):
            break
        if previous is not None and abs(best - previous) < EXTRAPOLATION_TOL:
            logger.debug("Boundary value at ω=%g settled after %d levels", omega, k + 1)
            return BoundaryValue(best, abs(best - previous), EpsilonExtrapolation(k + 1))
        previous = best
    raise ExtrapolationDivergence(
        f"M(ω + iε) did not settle at ω = {omega} after {EXTRAPOLATION_LEVELS} levels; "
        "the point is probably not quasi-regular"
    )


# ---------------------------------------------------------------------------
# Threshold behaviour
# ---------------------------------------------------------------------------

def threshold_classify(e, spectral_bottom):
    """
    Friedrichs/Krein signature of the pair from real boundary values.

    friedrichs_at_reference: M(λ) → −∞ as λ → −∞ (ladder λ = min(bottom, 0) − 10^k)
    krein_at_reference:      M(λ) → +∞ as λ ↑ bottom (ladder λ = bottom − 10^−k)
    """
    bottom = float(spectral_bottom)
    far_points = [min(bottom, 0.0) - 10.0 ** k for k in THRESHOLD_EXPONENTS]
    near_points = [bottom - 10.0 ** (-k) for k in THRESHOLD_EXPONENTS]
    far = tuple(boundary_value(e, x).value.real for x in far_points)
    near = tuple(boundary_value(e, x).value.real for x in near_points)
    logger.debug("Threshold ladder towards −∞: %s", far)
    logger.debug("Threshold ladder towards %g: %s", bottom, near)
    return ThresholdSignature(
        friedrichs_at_reference=_diverges(far, direction=-1, label="towards −∞"),
        krein_at_reference=_diverges(near, direction=1, label=f"towards {bottom:g}"),
        far_samples=far,
        near_samples=near,
    )


def _diverges(samples, direction, label):
    steps = [direction * (b - a) for a, b in zip(samples, samples[1:])]
    if any(not step > 0 for step in steps):
        raise InconclusiveThreshold(f"non-monotone threshold samples {label}: {samples}")
    if direction * samples[-1] > THRESHOLD_BLOWUP:
        return True
    ratios = [b / a for a, b in zip(steps, steps[1:])]
    # Steps that stop shrinking mean at least logarithmic growth
    return all(r >= THRESHOLD_STEP_RATIO for r in ratios[-2:])
