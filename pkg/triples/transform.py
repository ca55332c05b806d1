"""
Model triples and their images under SL₂(ℝ) maps.

A :class:`ModelTriple` is a normalized measure μ (the multiplication operator
in L²(ℝ; dμ), with M(i) = i) plus a von Neumann parameter κ. Transforming it
by a Möbius map f splits on ω = f⁻¹(∞):

  branch (i)   ω in the core of the spectrum (or ∞): f(Â) is again a model
               dissipative operator; the result is a :class:`TransformedTriple`
               whose Weyl evaluator is a pullback and whose κ follows from
               kappa_affine (affine steps) or stays put (the inversion).
  branch (ii)  ω quasi-regular: f(Â) is bounded; the result is a
               :class:`BoundedCase` carrying ω and the phase S(ω+i0).

Usage:
    from triples.transform import ModelTriple, transform_triple, verify_invariance

    t = ModelTriple(normalize(power_measure(0.5)), 0.0)
    report = verify_invariance(t, inversion(), standard_grid())
    report.residual   # < 1e-6
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from triples.charfn import (
    CharEvaluator,
    VonNeumannParameter,
    char_S,
    char_S_at_boundary,
    normalized_S_hat,
)
from triples.errors import MeasureError, PointNotQuasiRegular, ResonancePoint
from triples.herglotz import (
    CachePolicy,
    WeylEvaluator,
    boundary_value,
    compose_evaluator,
    evaluate,
    measure_evaluator,
    weyl_m,
)
from triples.log import logger
from triples.measure import (
    NORMALIZATION_TOL,
    CoreSpectrum,
    QuasiRegular,
    RealMeasure,
    classify_point,
    integrate_measure,
    inverse_square_reweight,
    pushforward,
)
from triples.mobius import (
    MobiusMap,
    apply,
    compose,
    decompose,
    identity,
    inversion,
    invert,
    is_infinite,
    preimage_infinity,
)
from triples.oracle import apply_mobius, build_dissipative, char_bounded_trace, discretize


RESONANCE_TOL = 1e-12

# The inversion is recognised up to roundoff in its stored coefficients
INVERSION_TOL = 1e-15


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelTriple:
    """
    (Ȧ, Â, A) realized by multiplication in L²(ℝ; dμ).

    ``evaluator`` may carry an exact Weyl function of the same measure (the
    homogeneous closed forms); otherwise M is computed by quadrature.
    """

    measure: RealMeasure
    kappa: VonNeumannParameter
    evaluator: Optional[WeylEvaluator] = None

    def __post_init__(self):
        if not isinstance(self.kappa, VonNeumannParameter):
            object.__setattr__(self, "kappa", VonNeumannParameter(self.kappa))
        total = self.measure.weighted_total
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise MeasureError(f"model measure must be normalized, ∫dμ/(1+λ²) = {total:.12g}")
        if not self.measure.is_infinite_mass:
            logger.warning(
                "Model measure has finite total mass; the symmetric operator is not densely defined"
            )

    @property
    def weyl(self):
        if self.evaluator is not None:
            return self.evaluator
        return measure_evaluator(self.measure, CachePolicy.MEMO)

    @property
    def char(self):
        return CharEvaluator(self.weyl, self.kappa)

    @property
    def root(self):
        return self

    @property
    def total_map(self):
        return identity()


@dataclass(frozen=True)
class TransformedTriple:
    weyl: WeylEvaluator
    kappa: VonNeumannParameter
    provenance: tuple = ()
    root: Optional[ModelTriple] = None

    @property
    def char(self):
        return CharEvaluator(self.weyl, self.kappa)

    @property
    def total_map(self):
        """f_n∘…∘f_1 for provenance (f_1, …, f_n)."""
        total = identity()
        for step in self.provenance:
            total = compose(step, total)
        return total


Triple = Union[ModelTriple, TransformedTriple]


@dataclass(frozen=True)
class BoundedCase:
    """f(Â) is bounded; S_𝔄(ω+i0) fixes the phase of its characteristic function."""

    omega: float
    boundary_phase: complex
    triple: Triple
    map: MobiusMap


@dataclass(frozen=True)
class ResolventTerm:
    """(Â − z)⁻¹ = (A − z)⁻¹ − p·⟨·, g_z̄⟩ g_z with g_z(λ) = 1/(λ − z)."""

    p: complex
    z: complex

    def kernel(self, lam):
        return 1.0 / (lam - self.z)


@dataclass(frozen=True)
class RankOneKernel:
    """(Qf)(λ) = (1/λ)∫ f(s)/s dμ(s)."""

    measure: RealMeasure

    def __call__(self, lam, s):
        return 1.0 / (lam * s)

    def apply(self, fn):
        pairing = integrate_measure(self.measure, lambda s: fn(s) / s).value
        return lambda lam: pairing / lam


@dataclass(frozen=True)
class RankOneInverse:
    """Â⁻¹ = A⁻¹ − p·Q."""

    p: complex
    kernel: RankOneKernel


@dataclass(frozen=True)
class GridRow:
    z: complex
    lhs: complex
    rhs: complex

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)


@dataclass(frozen=True)
class InvarianceReport:
    branch: str
    omega: float
    residual: float
    rows: tuple = ()
    discrete_residual: Optional[float] = None
    closed_form_residual: Optional[float] = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "branch": self.branch,
            "omega": None if is_infinite(self.omega) else self.omega,
            "residual": self.residual,
            "discrete_residual": self.discrete_residual,
            "closed_form_residual": self.closed_form_residual,
            "details": dict(self.details),
            "grid": [
                {"z": _pair(row.z), "lhs": _pair(row.lhs), "rhs": _pair(row.rhs)}
                for row in self.rows
            ],
        }


def _pair(value):
    return [value.real, value.imag]


# ---------------------------------------------------------------------------
# κ under affine maps
# ---------------------------------------------------------------------------

def kappa_affine(t, f):
    """κ' = (M(w) − τ)/(conj M(w) − τ), w = f⁻¹(i), τ = i(1+κ)/(1−κ)."""
    return _kappa_after(t.weyl, t.kappa, f)


def _kappa_after(weyl, kappa, f):
    if not f.is_affine:
        raise ValueError(f"kappa_affine needs an affine map, got {f.as_text()}")
    w = apply(invert(f), 1j)
    m_value = weyl_m(weyl, w)
    tau = kappa.tau
    return VonNeumannParameter((m_value - tau) / (m_value.conjugate() - tau))


# ---------------------------------------------------------------------------
# Transform
# ---------------------------------------------------------------------------

def _step_affine(weyl, kappa, g):
    if g.is_identity():
        return weyl, kappa
    return compose_evaluator(weyl, g), _kappa_after(weyl, kappa, g)


def _classify_pole(t, omega):
    """Classify ω = f⁻¹(∞) in the coordinates of the root model."""
    root = t.root
    omega_root = apply(invert(t.total_map), omega)
    if is_infinite(omega_root):
        return CoreSpectrum() if root.measure.is_infinite_mass else QuasiRegular()
    return classify_point(root.measure, float(np.real(omega_root)))


def transform_triple(t, f):
    """f(𝔄) for a model or already transformed triple."""
    omega = preimage_infinity(f)
    if not is_infinite(omega):
        omega = float(omega) + 0.0
        point = _classify_pole(t, omega)
        logger.debug("Pole ω = %g of %s classified as %s", omega, f.as_text(), type(point).__name__)
        if isinstance(point, QuasiRegular):
            phase = char_S_at_boundary(t.char, omega, has_atom=point.has_atom)
            return BoundedCase(omega, phase, t, f)

    dec = decompose(f)
    weyl, kappa = t.weyl, t.kappa
    steps = []
    if dec.uses_inversion:
        weyl, kappa = _step_affine(weyl, kappa, dec.g)
        weyl = compose_evaluator(weyl, inversion())
        steps.extend((dec.g, inversion()))
    weyl, kappa = _step_affine(weyl, kappa, dec.h)
    steps.append(dec.h)
    history = () if isinstance(t, ModelTriple) else t.provenance
    return TransformedTriple(weyl, kappa, history + tuple(steps), t.root)


# ---------------------------------------------------------------------------
# Invariance checks
# ---------------------------------------------------------------------------

def _map_grid(fn, grid, workers):
    grid = [complex(z) for z in grid]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, grid))
    return [fn(z) for z in grid]


def verify_invariance(t, f, grid, n=4000, quantile_cut=1e-4, workers=1):
    """
    Residual of the invariance principle for f on a grid in ℂ₊.

    Branch (i):  max |Ŝ_{f(𝔄)}(f(z)) − Ŝ_𝔄(z)|.
    Branch (ii): max |S_{f(Â)}(f(z)) − S_𝔄(z)/S_𝔄(ω+i0)|, with S_{f(Â)} the
    characteristic function of the bounded matrix f(Â_N) of an N-node
    discretization.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("verification grid is empty")
    if any(not complex(z).imag > 0 for z in grid):
        raise ValueError("verification grid must lie in the upper half-plane")

    image = transform_triple(t, f)
    if isinstance(image, TransformedTriple):
        def row(z):
            return GridRow(z, normalized_S_hat(image.char, f(z)), normalized_S_hat(t.char, z))

        rows = tuple(_map_grid(row, grid, workers))
        residual = max(r.residual for r in rows)
        logger.debug("Branch (i) residual for %s: %.3e", f.as_text(), residual)
        return InvarianceReport("i", preimage_infinity(f), residual, rows)

    return _verify_bounded(t, f, image, grid, n, quantile_cut, workers)


def _verify_bounded(t, f, case, grid, n, quantile_cut, workers):
    if not isinstance(t, ModelTriple):
        raise ValueError("the bounded branch is verified on model triples only")
    d = discretize(t, n, quantile_cut)
    bounded = apply_mobius(f, build_dissipative(d))
    phase = case.boundary_phase
    discrete_phase = d.char_S(case.omega)

    def row(z):
        lhs = char_bounded_trace(bounded, f(z))
        return GridRow(z, lhs, char_S(t.char, z) / phase), abs(lhs - d.char_S(z) / discrete_phase)

    results = _map_grid(row, grid, workers)
    rows = tuple(r for r, _ in results)
    residual = max(r.residual for r in rows)
    discrete_residual = max(gap for _, gap in results)

    closed_form_residual = None
    if f.is_inversion(tol=INVERSION_TOL) and not t.measure.has_atom_at(0.0):
        closed_form_residual = max(
            abs(inverse_characteristic_closed_form(t, -1.0 / z) - char_S(t.char, z) / phase) for z in grid
        )
    logger.debug(
        "Branch (ii) at ω = %g: continuum %.3e, discrete %.3e (N = %d)",
        case.omega, residual, discrete_residual, d.size,
    )
    return InvarianceReport(
        "ii",
        case.omega,
        residual,
        rows,
        discrete_residual=discrete_residual,
        closed_form_residual=closed_form_residual,
        details={"n": d.size, "boundary_phase": _pair(phase)},
    )


# ---------------------------------------------------------------------------
# Resolvent and rank-one inverse
# ---------------------------------------------------------------------------

def resolvent_p(t, z):
    """p(z) = (M(z) + i(κ+1)/(κ−1))⁻¹ = (M(z) − τ)⁻¹, M continued to ℂ₋ by reflection."""
    denominator = evaluate(t.weyl, z) - t.kappa.tau
    if abs(denominator) < RESONANCE_TOL:
        raise ResonancePoint(f"p(z) has a vanishing denominator at z = {complex(z)} (κ = {t.kappa.kappa})")
    return 1.0 / denominator


def resolvent_term(t, z):
    z = complex(z)
    return ResolventTerm(resolvent_p(t, z), z)


def _inverse_p(t):
    point = classify_point(t.measure, 0.0)
    if isinstance(point, CoreSpectrum):
        raise PointNotQuasiRegular("0 is in the core of the spectrum; A has no bounded inverse")
    if point.has_atom:
        raise PointNotQuasiRegular("μ has an atom at 0; A has no bounded inverse")
    denominator = boundary_value(t.weyl, 0.0).value - t.kappa.tau
    if abs(denominator) < RESONANCE_TOL:
        raise ResonancePoint("M(0) − τ vanishes")
    return 1.0 / denominator


def inverse_rank_one(t):
    """Â⁻¹ = A⁻¹ − pQ with p = (M(0) − τ)⁻¹."""
    return RankOneInverse(_inverse_p(t), RankOneKernel(t.measure))


def inverse_characteristic_closed_form(t, zeta):
    """
    S_{−Â⁻¹}(ζ) = (1 − pJ(ζ))/(1 − p̄J(ζ)), J(ζ) = ∫dμ(λ)/(λ(1 + λζ)).
    """
    zeta = complex(zeta)
    p = _inverse_p(t)
    pole = -1.0 / zeta
    points = (pole.real,) if abs(pole.imag) < 1 else ()
    j_value = integrate_measure(t.measure, lambda lam: 1.0 / (lam * (1.0 + lam * zeta)), points).value
    return (1.0 - p * j_value) / (1.0 - p.conjugate() * j_value)


def inversion_measure(t):
    """Representing measure of the ι-transformed pair: the ι-image of dμ/λ²."""
    return pushforward(inverse_square_reweight(t.measure), inversion())
