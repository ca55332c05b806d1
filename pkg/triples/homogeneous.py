"""
The homogeneous family: multiplication by λ in L²((0, ∞); λ^ν dλ) and its
mirror image on (−∞, 0), ν ∈ (−1, 1).

Closed forms, with P = (z/i)^ν = exp(ν(log z − iπ/2)) on the principal branch
and c = cot(πν/2):

    positive side   M_ν(z) = (i − c)·P + c          (ν ≠ 0),  (2/π)·log(−1/z)  (ν = 0)
    negative side   N_ν(z) = (i + c)·P − c          (ν ≠ 0),  (2/π)·log z      (ν = 0)

On the positive side M_ν is the Friedrichs extension's Weyl function for
ν ∈ [0, 1) and the Krein-von Neumann one for ν ∈ (−1, 0]; ν = 0 is both.

Usage:
    from triples.homogeneous import HomogeneousModel, closed_form_M

    h = HomogeneousModel(0.5)
    closed_form_M(h, 4j)   # -> (-1+2j)
"""

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from triples.charfn import livsic_from_weyl_value
from triples.errors import CrossCheckMismatch
from triples.grid import standard_grid
from triples.herglotz import (
    ThresholdSignature,
    closed_form_evaluator,
    compose_evaluator,
    reflect_evaluator,
    threshold_classify,
    weyl_m,
)
from triples.log import logger
from triples.measure import cauchy_integral, power_measure, weighted_total
from triples.mobius import inversion


SIDES = ("positive", "negative")
DUALITY_TOL = 1e-10


@dataclass(frozen=True)
class HomogeneousModel:
    nu: float
    side: str = "positive"

    def __post_init__(self):
        object.__setattr__(self, "nu", float(self.nu))
        if not -1.0 < self.nu < 1.0:
            raise ValueError(f"homogeneous models need ν ∈ (−1, 1), got ν = {self.nu}")
        if self.side not in SIDES:
            raise ValueError(f"side must be 'positive' or 'negative', got {self.side!r}")

    @property
    def normalization_constant(self):
        """‖g₊‖² = ∫λ^ν dλ/(1+λ²) = (π/2)/cos(πν/2)."""
        return (math.pi / 2) / math.cos(math.pi * self.nu / 2)

    def measure(self):
        """The raw weight |λ|^ν dλ, not normalized."""
        return power_measure(self.nu, self.side)

    def normalized_measure(self):
        return self.measure().scaled(1.0 / self.normalization_constant)

    def weyl(self):
        return closed_form_evaluator(self.nu, self.side)

    def triple(self, kappa=0.0, closed_form=True):
        """Model triple on the normalized measure; M is exact when ``closed_form``."""
        from triples.transform import ModelTriple

        return ModelTriple(self.normalized_measure(), kappa, self.weyl() if closed_form else None)


@dataclass(frozen=True)
class ExtensionType:
    friedrichs: bool
    krein: bool
    signature: Optional[ThresholdSignature] = None


@dataclass(frozen=True)
class InverseDualityReport:
    nu: float
    mn_residual: float
    pullback_residual: float
    friedrichs_at_nu: bool
    krein_at_minus_nu: bool
    inverted_signature: ThresholdSignature
    dual_signature: ThresholdSignature
    passed: bool

    def as_dict(self):
        return {
            "nu": self.nu,
            "mn_residual": self.mn_residual,
            "pullback_residual": self.pullback_residual,
            "friedrichs_at_nu": self.friedrichs_at_nu,
            "krein_at_minus_nu": self.krein_at_minus_nu,
            "inverted": {
                "friedrichs": self.inverted_signature.friedrichs_at_reference,
                "krein": self.inverted_signature.krein_at_reference,
            },
            "dual": {
                "friedrichs": self.dual_signature.friedrichs_at_reference,
                "krein": self.dual_signature.krein_at_reference,
            },
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def _principal(z):
    # Real z is read as z + i0: log(−x) = log x + iπ
    z = complex(z)
    return complex(z.real, z.imag + 0.0)


def closed_form_value(nu, side, z):
    """M_ν (positive side) or N_ν (negative side) at z ∈ ℂ₊ ∪ ℝ."""
    z = _principal(z)
    if z == 0:
        if nu > 0:
            cot = 1.0 / math.tan(math.pi * nu / 2)
            return complex(cot if side == "positive" else -cot)
        return complex(math.inf, 0.0)
    if nu == 0:
        if side == "positive":
            return (2 / math.pi) * cmath.log(-1.0 / z if z.imag > 0 else _principal(-1.0 / z.real))
        return (2 / math.pi) * cmath.log(z)
    cot = 1.0 / math.tan(math.pi * nu / 2)
    power = cmath.exp(nu * (cmath.log(z) - 0.5j * math.pi))
    if side == "positive":
        return (1j - cot) * power + cot
    return (1j + cot) * power - cot


def closed_form_M(h, z):
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"closed_form_M needs Im z > 0, got z = {z}")
    return closed_form_value(h.nu, h.side, z)


def closed_form_s(nu, z):
    """Livšic function of the positive-side model: (P − 1)/(P − e^{iπν})."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"closed_form_s needs Im z > 0, got z = {z}")
    if nu == 0:
        return livsic_from_weyl_value(closed_form_value(0.0, "positive", z))
    power = cmath.exp(nu * (cmath.log(z) - 0.5j * math.pi))
    return (power - 1) / (power - cmath.exp(1j * math.pi * nu))


def ratio_of_integrals_M(h, z):
    """((zA + 1)(A − z)⁻¹g₊, g₊)/‖g₊‖², both integrals by quadrature."""
    raw = h.measure()
    return cauchy_integral(raw, z).value / weighted_total(raw)


def quadrature_agreement(h, grid=None):
    """max |closed form − ratio of integrals| over a grid."""
    grid = standard_grid() if grid is None else grid
    return max(abs(closed_form_M(h, z) - ratio_of_integrals_M(h, z)) for z in grid)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------

def cayley_relation_check(nu, grid=None):
    """
    max |s_{−ν}(z) − e^{iπν}·s_ν(z)|, the Livšic functions taken from the
    closed-form Weyl functions through s = (M − i)/(M + i).

    Equivalently s_ν = e^{−iπν}·s_{−ν}; the unimodular factor multiplies s_ν.
    """
    grid = standard_grid() if grid is None else grid
    factor = cmath.exp(1j * math.pi * nu)
    residual = 0.0
    for z in grid:
        s_plus = livsic_from_weyl_value(closed_form_value(nu, "positive", z))
        s_minus = livsic_from_weyl_value(closed_form_value(-nu, "positive", z))
        residual = max(residual, abs(s_minus - factor * s_plus))
    return residual


def mn_inversion_check(nu, grid=None):
    """max |M_ν(−1/z) − N_{−ν}(z)|."""
    grid = standard_grid() if grid is None else grid
    return max(
        abs(closed_form_value(nu, "positive", -1.0 / complex(z)) - closed_form_value(-nu, "negative", z))
        for z in grid
    )


def extension_type(h):
    """
    Friedrichs for ν ∈ [0, 1), Krein-von Neumann for ν ∈ (−1, 0], checked
    against the threshold signature of the closed form at spectral bottom 0.
    """
    if h.side != "positive":
        raise ValueError("extension types are defined for the positive side")
    signature = threshold_classify(h.weyl(), 0.0)
    friedrichs, krein = h.nu >= 0, h.nu <= 0
    if (signature.friedrichs_at_reference, signature.krein_at_reference) != (friedrichs, krein):
        raise CrossCheckMismatch(
            f"threshold signature ({signature.friedrichs_at_reference}, {signature.krein_at_reference}) "
            f"disagrees with the analytic extension type ({friedrichs}, {krein}) at ν = {h.nu}"
        )
    return ExtensionType(friedrichs, krein, signature)


def inverted_evaluator(nu):
    """Weyl function of (Ȧ(ν)⁻¹, A(ν)⁻¹) reflected by −1: z ↦ −conj M_ν(−1/(−z̄))."""
    return reflect_evaluator(compose_evaluator(closed_form_evaluator(nu), inversion()))


def verify_inverse_duality(nu, grid=None, tol=DUALITY_TOL):
    """
    The inverse of the Friedrichs extension of Ȧ(ν) is, after reflection,
    the Krein-von Neumann extension of Ȧ(−ν), and vice versa.

    Checks M_ν(−1/z) = N_{−ν}(z), that the reflected ι-pullback of M_ν is
    M_{−ν} on the grid, the extension types at ±ν, and the threshold
    signatures of the reflected pullbacks of M_ν and M_{−ν}.
    """
    if not 0.0 <= nu < 1.0:
        raise ValueError(f"verify_inverse_duality needs ν ∈ [0, 1), got ν = {nu}")
    grid = standard_grid() if grid is None else grid
    mn_residual = mn_inversion_check(nu, grid)

    inverted = inverted_evaluator(nu)
    dual = inverted_evaluator(-nu)
    pullback_residual = max(abs(weyl_m(inverted, z) - closed_form_value(-nu, "positive", z)) for z in grid)

    friedrichs_at_nu = extension_type(HomogeneousModel(nu)).friedrichs
    krein_at_minus_nu = extension_type(HomogeneousModel(-nu)).krein
    inverted_signature = threshold_classify(inverted, 0.0)
    dual_signature = threshold_classify(dual, 0.0)

    passed = (
        mn_residual < tol
        and pullback_residual < tol
        and friedrichs_at_nu
        and krein_at_minus_nu
        and inverted_signature.krein_at_reference
        and dual_signature.friedrichs_at_reference
    )
    logger.debug(
        "Inverse duality at ν=%g: MN %.2e, pullback %.2e, pass=%s", nu, mn_residual, pullback_residual, passed
    )
    return InverseDualityReport(
        nu,
        mn_residual,
        pullback_residual,
        friedrichs_at_nu,
        krein_at_minus_nu,
        inverted_signature,
        dual_signature,
        passed,
    )
