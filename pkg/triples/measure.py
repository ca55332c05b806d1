"""
Borel measures on ℝ in a closed parametric family.

A :class:`RealMeasure` is a finite list of atoms plus density pieces, each
piece either a power law c·|λ − anchor|^ν on one side of its anchor or a
piecewise-linear tabulated density, all multiplied by a global ``scale``.

Every integral against a measure is computed against the probability-like
weight dμ(λ)/(1+λ²) with :func:`scipy.integrate.quad`. Power-law pieces are
integrated in λ: the segment at the anchor carries |λ − anchor|^ν as
QUADPACK's algebraic weight, an infinite end is folded onto a finite one by
u = 1/|λ − anchor|, and the rest is split at powers of ten and near-singular
points of the integrand. Tabulated pieces are integrated after λ = tan θ,
which turns the weight into ρ(tan θ)·dθ, split at their nodes.

Usage:
    from triples.measure import power_measure, normalize, cauchy_integral

    m = normalize(power_measure(0.5))
    cauchy_integral(m, 1j).value   # -> 1j
"""

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Union

import numpy as np
from scipy import integrate

from triples.errors import (
    AtomAtPole,
    Indeterminate,
    MeasureError,
    NonFiniteWeightedMass,
    QuadratureFailure,
)
from triples.log import logger


QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200

# Reported error estimates are expected below 1e-10; quad is only treated as
# failed when it flags non-convergence AND its estimate exceeds this.
QUAD_FAILURE_TOL = 1e-9

NORMALIZATION_TOL = 1e-9

# Tabulated second-moment refinement
MOMENT_DELTA0 = 1e-2
MOMENT_MAX_LEVELS = 40
MOMENT_CONVERGED_RTOL = 1e-10
MOMENT_GROWTH_FACTOR = 1.9
MOMENT_GROWTH_RUN = 3

HALF_PI = math.pi / 2

# Power-law pieces: a lower end this close to the anchor is the anchor; the
# tail substitution u = 1/t evaluates h no further out than 1/TAIL_FLOOR
ANCHOR_SNAP = 1e-12
TAIL_FLOOR = 1e-150


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    position: float
    mass: float

    def __post_init__(self):
        if not math.isfinite(self.position):
            raise MeasureError(f"atom position must be finite, got {self.position!r}")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise MeasureError(f"atom mass must be positive and finite, got {self.mass!r}")


@dataclass(frozen=True)
class PowerLaw:
    """Density c·|λ − anchor|^ν; ``side`` says which side of the anchor it lives on."""

    coefficient: float
    exponent: float
    anchor: float = 0.0
    side: str = "right"

    def __post_init__(self):
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise MeasureError(f"power-law coefficient must be positive, got {self.coefficient!r}")
        if not math.isfinite(self.exponent):
            raise MeasureError(f"power-law exponent must be finite, got {self.exponent!r}")
        if not math.isfinite(self.anchor):
            raise MeasureError(f"power-law anchor must be finite, got {self.anchor!r}")
        if self.side not in ("left", "right"):
            raise MeasureError(f"power-law side must be 'left' or 'right', got {self.side!r}")


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear density through (grid[k], values[k]); zero outside the grid."""

    grid: tuple
    values: tuple
    interpolation: str = "linear"

    def __post_init__(self):
        grid = tuple(float(x) for x in self.grid)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.interpolation != "linear":
            raise MeasureError(f"only linear interpolation is supported, got {self.interpolation!r}")
        if len(grid) < 2 or len(grid) != len(values):
            raise MeasureError("tabulated density needs at least two grid points and one value per point")
        if not all(math.isfinite(x) for x in grid):
            raise MeasureError("tabulated grid must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise MeasureError("tabulated grid must be strictly increasing")
        if any(not (v >= 0 and math.isfinite(v)) for v in values):
            raise MeasureError("tabulated values must be nonnegative and finite")


DensityForm = Union[PowerLaw, Tabulated]


@dataclass(frozen=True)
class DensityPiece:
    lower: float
    upper: float
    form: DensityForm

    def __post_init__(self):
        lower, upper = float(self.lower), float(self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if not lower < upper:
            raise MeasureError(f"piece support ({lower}, {upper}) is empty")
        form = self.form
        if isinstance(form, PowerLaw):
            if form.side == "right" and form.anchor > lower:
                raise MeasureError(
                    f"right-sided power law anchored at {form.anchor} must start at or after it, support starts at {lower}"
                )
            if form.side == "left" and form.anchor < upper:
                raise MeasureError(
                    f"left-sided power law anchored at {form.anchor} must end at or before it, support ends at {upper}"
                )
        elif isinstance(form, Tabulated):
            if form.grid[0] < lower or form.grid[-1] > upper:
                raise MeasureError("tabulated grid must lie inside the piece support")
        else:
            raise MeasureError(f"unknown density form {type(form).__name__}")

    # -- geometry -----------------------------------------------------------

    @property
    def is_power(self):
        return isinstance(self.form, PowerLaw)

    @property
    def effective_bounds(self):
        """Interval where the density can be nonzero."""
        if self.is_power:
            return self.lower, self.upper
        return max(self.lower, self.form.grid[0]), min(self.upper, self.form.grid[-1])

    def closure_contains(self, s):
        lo, hi = self.effective_bounds
        return lo <= s <= hi

    def theta_bounds(self):
        lo, hi = self.effective_bounds
        return to_theta(lo), to_theta(hi)

    def breakpoints(self):
        """Finite interior points where the density is not smooth."""
        if self.is_power:
            return ()
        lo, hi = self.effective_bounds
        return tuple(x for x in self.form.grid if lo < x < hi)

    # -- density ------------------------------------------------------------

    def density(self, lam):
        """Unscaled density at a real point."""
        lo, hi = self.effective_bounds
        if not lo < lam < hi:
            return 0.0
        form = self.form
        if self.is_power:
            distance = abs(lam - form.anchor)
            return form.coefficient * _power(distance, form.exponent)
        return float(np.interp(lam, form.grid, form.values, left=0.0, right=0.0))

    def theta_density(self, theta):
        """ρ(tan θ), with |tan θ − anchor| formed without cancellation near the anchor."""
        form = self.form
        if self.is_power:
            theta_a = math.atan(form.anchor)
            distance = abs(math.sin(theta - theta_a)) / (abs(math.cos(theta)) * math.cos(theta_a))
            return form.coefficient * _power(distance, form.exponent)
        return float(np.interp(math.tan(theta), form.grid, form.values, left=0.0, right=0.0))

    # -- integrability ------------------------------------------------------

    def _anchor_endpoint(self):
        """True when the anchor is a finite endpoint of the support."""
        form = self.form
        return (form.side == "right" and form.anchor == self.lower) or (
            form.side == "left" and form.anchor == self.upper
        )

    def _unbounded(self):
        return math.isinf(self.lower) or math.isinf(self.upper)

    @property
    def has_finite_weighted_mass(self):
        """Analytic test for power laws; tabulated pieces are always finite."""
        if not self.is_power:
            return True
        nu = self.form.exponent
        if self._anchor_endpoint() and nu <= -1:
            return False
        if self._unbounded() and nu >= 1:
            return False
        return True

    @property
    def has_infinite_mass(self):
        if not self.is_power:
            return False
        nu = self.form.exponent
        if self._anchor_endpoint() and nu <= -1:
            return True
        return self._unbounded() and nu >= -1


@dataclass(frozen=True)
class RealMeasure:
    """scale·(Σ mass·δ_position + Σ pieces)."""

    atoms: tuple = ()
    pieces: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        atoms = tuple(sorted(self.atoms, key=lambda a: a.position))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        positions = [a.position for a in atoms]
        if len(set(positions)) != len(positions):
            raise MeasureError("atom positions must be pairwise distinct")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise MeasureError(f"scale must be positive and finite, got {self.scale!r}")

    @property
    def is_infinite_mass(self):
        return any(p.has_infinite_mass for p in self.pieces)

    @cached_property
    def weighted_total(self):
        """∫dμ/(1+λ²); raises NonFiniteWeightedMass when infinite."""
        return weighted_total(self)

    def has_atom_at(self, s):
        return any(a.position == s for a in self.atoms)

    def scaled(self, factor):
        return replace(self, scale=self.scale * factor)

    def in_gap(self, omega):
        """True when ω lies in an open gap of the support (no atom there, outside every piece closure)."""
        if self.has_atom_at(omega):
            return False
        return not any(p.closure_contains(omega) for p in self.pieces)

    def validate(self):
        for piece in self.pieces:
            if not piece.has_finite_weighted_mass:
                raise NonFiniteWeightedMass(
                    f"piece on ({piece.lower}, {piece.upper}) with exponent {piece.form.exponent} "
                    "has infinite (1+λ²)⁻¹-weighted mass"
                )
        return self


@dataclass(frozen=True)
class CoreSpectrum:
    pass


@dataclass(frozen=True)
class QuasiRegular:
    has_atom: bool = False


PointClass = Union[CoreSpectrum, QuasiRegular]


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def atom_measure(*pairs, scale=1.0):
    """atom_measure((0.0, 1.0), (2.0, 3.0)) -> atoms at 0 and 2."""
    return RealMeasure(atoms=tuple(Atom(float(x), float(m)) for x, m in pairs), scale=scale)


def lebesgue(density=1.0):
    """density·dλ on ℝ, stored as two flat pieces meeting at 0."""
    return RealMeasure(pieces=(
        DensityPiece(-math.inf, 0.0, PowerLaw(density, 0.0, 0.0, "left")),
        DensityPiece(0.0, math.inf, PowerLaw(density, 0.0, 0.0, "right")),
    ))


def power_measure(nu, side="positive", coefficient=1.0):
    """c·|λ|^ν on (0, ∞) (side "positive") or (−∞, 0) (side "negative")."""
    if side == "positive":
        piece = DensityPiece(0.0, math.inf, PowerLaw(coefficient, nu, 0.0, "right"))
    elif side == "negative":
        piece = DensityPiece(-math.inf, 0.0, PowerLaw(coefficient, nu, 0.0, "left"))
    else:
        raise MeasureError(f"side must be 'positive' or 'negative', got {side!r}")
    return RealMeasure(pieces=(piece,))


def interval_density(lower, upper, value=1.0):
    """Constant density on (lower, upper)."""
    if math.isinf(lower) and math.isinf(upper):
        return lebesgue(value)
    if math.isfinite(lower):
        form = PowerLaw(value, 0.0, lower, "right")
    else:
        form = PowerLaw(value, 0.0, upper, "left")
    return RealMeasure(pieces=(DensityPiece(lower, upper, form),))


# ---------------------------------------------------------------------------
# Quadrature engine
# ---------------------------------------------------------------------------

def to_theta(x):
    if x == math.inf:
        return HALF_PI
    if x == -math.inf:
        return -HALF_PI
    return math.atan(x)


def _power(distance, exponent):
    if distance == 0.0:
        # Only reachable at a support endpoint; the integrable cases have exponent > −1
        return 0.0 if exponent > 0 else (1.0 if exponent == 0 else 1e300)
    return distance ** exponent


def adaptive_quad(fun, lo, hi, alg=None):
    """
    scipy quad with the package tolerances; returns (value, error).

    With ``alg`` = α the integrand is fun(x)·(x − lo)^α (QUADPACK's
    algebraic weight), for an endpoint singularity at ``lo``.
    """
    weight = {} if alg is None else {"weight": "alg", "wvar": (alg, 0.0)}
    out = integrate.quad(
        fun, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1, **weight
    )
    value, error = out[0], out[1]
    if len(out) > 3 and not error <= QUAD_FAILURE_TOL * max(1.0, abs(value)):
        raise QuadratureFailure(
            f"quadrature on [{lo:.6g}, {hi:.6g}] stopped at error {error:.3e}: {out[3]}"
        )
    return value, error


def _complex_quad(fun, lo, hi, complex_valued, alg=None):
    re, error = adaptive_quad(lambda x: fun(x).real, lo, hi, alg)
    if not complex_valued:
        return complex(re), error
    im, im_err = adaptive_quad(lambda x: fun(x).imag, lo, hi, alg)
    return complex(re, im), error + im_err


def integrate_piece_theta(piece, h, theta_lo, theta_hi, extra_theta=(), complex_valued=True):
    """
    ∫ h(tan θ)·ρ(tan θ) dθ over [theta_lo, theta_hi] ⊂ piece θ-range (unscaled).

    Returns (value, error). The range is split at the piece breakpoints and at
    any extra θ points that fall inside it.
    """
    cuts = {theta_lo, theta_hi}
    cuts.update(to_theta(x) for x in piece.breakpoints())
    cuts.update(extra_theta)
    nodes = sorted(t for t in cuts if theta_lo <= t <= theta_hi)

    def integrand(theta):
        return h(math.tan(theta)) * piece.theta_density(theta)

    total = 0j
    error = 0.0
    for lo, hi in zip(nodes, nodes[1:]):
        if hi <= lo:
            continue
        value, err = _complex_quad(integrand, lo, hi, complex_valued)
        total += value
        error += err
    return total, error


def _decade_edges(t_lo, scales):
    """Powers of ten bracketing every scale of the integrand, in t = |λ − anchor|."""
    small = min([1.0] + [s for s in scales if s > 0])
    large = max([1.0, t_lo] + list(scales))
    k_min = math.floor(math.log10(small)) - 1
    k_max = math.ceil(math.log10(large)) + 1
    return [10.0 ** k for k in range(k_min, k_max + 1)]


def integrate_power_piece(piece, h, lo=None, hi=None, extra_points=(), complex_valued=True):
    """
    ∫ h(λ)·ρ(λ) dλ/(1+λ²) over [lo, hi] ⊂ piece support (unscaled), in λ.

    With t = |λ − anchor| the density is c·t^ν. A segment starting at the
    anchor carries t^ν as an algebraic weight; an infinite end is mapped by
    u = 1/t and carries u^(−ν). The rest is split at powers of ten spanning
    the distances of ``extra_points`` from the anchor and at those points.
    Returns (value, error).
    """
    form = piece.form
    lo = piece.lower if lo is None else max(lo, piece.lower)
    hi = piece.upper if hi is None else min(hi, piece.upper)
    if not lo < hi:
        return 0j, 0.0
    a, c, nu = form.anchor, form.coefficient, form.exponent
    sign = 1.0 if form.side == "right" else -1.0
    t_lo, t_hi = sorted((sign * (lo - a), sign * (hi - a)))
    if 0 < t_lo <= ANCHOR_SNAP * max(1.0, abs(a)):
        t_lo = 0.0

    def smooth(t):
        lam = a + sign * t
        return c * h(lam) / (1.0 + lam * lam)

    def plain(t):
        return smooth(t) * t ** nu

    def tail(u):
        # λ = a ± 1/u; (1+λ²)·u² = u² + (a·u ± 1)²
        lam = a + sign / max(u, TAIL_FLOOR)
        return c * h(lam) / (u * u + (a * u + sign) ** 2)

    # 0 and ±1 are where the weight 1/(1+λ²) turns
    distances = [sign * (x - a) for x in (*extra_points, 0.0, -1.0, 1.0) if math.isfinite(x)]
    scales = [abs(x) for x in distances] + [abs(a)]
    cuts = {t_lo}
    cuts.update(e for e in _decade_edges(t_lo, scales) if t_lo < e < t_hi)
    cuts.update(x for x in distances if t_lo < x < t_hi)
    if math.isfinite(t_hi):
        cuts.add(t_hi)
    nodes = sorted(cuts)

    total = 0j
    error = 0.0
    for p, q in zip(nodes, nodes[1:]):
        if p == 0.0 and nu != 0.0:
            value, err = _complex_quad(smooth, 0.0, q, complex_valued, alg=nu)
        else:
            value, err = _complex_quad(plain, p, q, complex_valued)
        total += value
        error += err
    if math.isinf(t_hi):
        start = nodes[-1]
        alg = -nu if nu != 0.0 else None
        value, err = _complex_quad(tail, 0.0, 1.0 / start, complex_valued, alg=alg)
        total += value
        error += err
    return total, error


def integrate_piece(piece, h, lo=None, hi=None, extra_points=(), complex_valued=True):
    """∫ h·ρ dλ/(1+λ²) over [lo, hi] ∩ piece support (unscaled); power laws in λ, tables in θ."""
    if piece.is_power:
        return integrate_power_piece(piece, h, lo, hi, extra_points, complex_valued)
    p_lo, p_hi = piece.effective_bounds
    lo = p_lo if lo is None else max(lo, p_lo)
    hi = p_hi if hi is None else min(hi, p_hi)
    if not lo < hi:
        return 0j, 0.0
    extra_theta = tuple(to_theta(x) for x in extra_points)
    return integrate_piece_theta(piece, h, to_theta(lo), to_theta(hi), extra_theta, complex_valued)


def _weighted_integral(m, h, extra_points=(), complex_valued=True):
    """∫ h(λ) dμ(λ)/(1+λ²) for a validated measure, with an error estimate."""
    total = 0j
    error = 0.0
    for a in m.atoms:
        total += a.mass * h(a.position) / (1.0 + a.position ** 2)
    for piece in m.pieces:
        value, err = integrate_piece(piece, h, extra_points=extra_points, complex_valued=complex_valued)
        total += value
        error += err
    return m.scale * total, m.scale * error


def _near_singular_points(z):
    """Split points around Re z, closer in when z is near the real axis."""
    x, y = z.real, abs(z.imag)
    if y >= 1:
        return (x, x - y, x + y)
    return (x, x - y, x + y, x - 4 * y, x + 4 * y)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def weighted_total(m):
    """∫dμ/(1+λ²). The finiteness decision is analytic; the value is numeric."""
    m.validate()
    value, _ = _weighted_integral(m, lambda lam: 1.0, complex_valued=False)
    return value.real


def normalize(m):
    """Rescale m so that ∫dμ/(1+λ²) = 1."""
    total = m.weighted_total
    if not total > 0:
        raise NonFiniteWeightedMass("cannot normalize a measure with zero weighted mass")
    normalized = m.scaled(1.0 / total)
    logger.debug("Normalized measure: scale %.12g -> %.12g", m.scale, normalized.scale)
    return normalized


def cauchy_integral(m, z):
    """∫(1/(λ−z) − λ/(1+λ²)) dμ(λ) for Im z ≠ 0."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError(f"cauchy_integral needs Im z ≠ 0, got z = {z}")
    m.validate()

    def kernel(lam):
        # (1/(λ−z) − λ/(1+λ²))·(1+λ²)
        return (1.0 + lam * z) / (lam - z)

    value, error = _weighted_integral(m, kernel, _near_singular_points(z))
    if error > 1e-10 * max(1.0, abs(value)):
        logger.debug("cauchy_integral at z=%s: error estimate %.2e above target", z, error)
    return QuadratureResult(value, error)


def integrate_measure(m, fn, points=()):
    """∫ fn dμ, fn decaying fast enough for the integral to converge."""
    m.validate()
    value, error = _weighted_integral(m, lambda lam: fn(lam) * (1.0 + lam * lam), points)
    return QuadratureResult(value, error)


def second_moment_at(m, s):
    """∫dμ/(λ−s)², possibly math.inf."""
    m.validate()
    s = float(s)
    total = 0.0
    error = 0.0
    for a in m.atoms:
        if a.position == s:
            return math.inf
        total += a.mass / (a.position - s) ** 2

    def kernel(lam):
        return (1.0 + lam * lam) / (lam - s) ** 2

    for piece in m.pieces:
        if piece.closure_contains(s):
            if piece.is_power:
                if _power_moment_diverges(piece, s):
                    return math.inf
                value, err = _power_moment_at_anchor(piece, s)
            else:
                value = _tabulated_moment(piece, s)
                if math.isinf(value):
                    return math.inf
                err = 0.0
        else:
            value, err = integrate_piece(piece, kernel, extra_points=(s,), complex_valued=False)
            value = value.real
        total += value
        error += err
    return m.scale * total


def _power_moment_diverges(piece, s):
    # Density is bounded below near s unless s is the anchor; at the anchor
    # |λ−s|^(ν−2) is integrable only for ν > 1.
    form = piece.form
    return not (s == form.anchor and form.exponent > 1)


def _power_moment_at_anchor(piece, s):
    # ∫ c·t^(ν−2) dt from the anchor to the far end, ν > 1
    form = piece.form
    length = piece.upper - s if form.side == "right" else s - piece.lower
    if math.isinf(length):
        return math.inf, 0.0
    exponent = form.exponent - 1.0
    return form.coefficient * length ** exponent / exponent, 0.0


def _tabulated_moment(piece, s):
    """
    Truncated integrals over |λ − s| > δ_k with δ_k = δ₀·2^−k.

    Converged when an annulus adds less than 1e-10 relative; divergent when
    the annulus contributions grow by ≥ 1.9 three times running (a |λ−s|⁻²
    singularity doubles them); Indeterminate after the level budget.
    """
    lo, hi = piece.effective_bounds

    def kernel(lam):
        return (1.0 + lam * lam) / (lam - s) ** 2

    def over(a, b):
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            return 0.0
        value, _ = integrate_piece(piece, kernel, a, b, complex_valued=False)
        return value.real

    delta = MOMENT_DELTA0
    current = over(lo, s - delta) + over(s + delta, hi)
    previous_increment = None
    growth_run = 0
    for level in range(1, MOMENT_MAX_LEVELS + 1):
        inner = delta / 2
        increment = over(s - delta, s - inner) + over(s + inner, s + delta)
        current += increment
        delta = inner
        if increment <= MOMENT_CONVERGED_RTOL * max(1.0, abs(current)):
            logger.debug("Second moment at %g converged after %d levels", s, level)
            return current
        if previous_increment is not None and previous_increment > 0:
            if increment >= MOMENT_GROWTH_FACTOR * previous_increment:
                growth_run += 1
            else:
                growth_run = 0
            if growth_run >= MOMENT_GROWTH_RUN:
                logger.debug("Second moment at %g diverges (level %d)", s, level)
                return math.inf
        previous_increment = increment
    raise Indeterminate(
        f"second moment at s={s} neither converged nor diverged after {MOMENT_MAX_LEVELS} refinements"
    )


def classify_point(m, s):
    """CoreSpectrum iff ∫dμ/(λ−s)² = ∞ and μ({s}) = 0."""
    if m.has_atom_at(s):
        return QuasiRegular(has_atom=True)
    if math.isinf(second_moment_at(m, s)):
        return CoreSpectrum()
    return QuasiRegular(has_atom=False)


# ---------------------------------------------------------------------------
# Change of variables
# ---------------------------------------------------------------------------

def pushforward(m, f):
    """
    Image measure under an affine map or the inversion ι(λ) = −1/λ.

    The result is not renormalized and not validated: under ι a power law
    λ^ν becomes |t|^(−ν−2), whose weighted mass is finite only after the
    matching reweighting (see inverse_square_reweight).
    """
    if f.is_affine:
        return _pushforward_affine(m, f.slope, f.shift)
    if f.is_inversion(tol=1e-15):
        return _pushforward_inversion(m)
    raise MeasureError(f"pushforward supports affine maps and the inversion only, got {f.as_text()}")


def _pushforward_affine(m, k, t):
    atoms = tuple(Atom(k * a.position + t, a.mass) for a in m.atoms)
    pieces = []
    for piece in m.pieces:
        lower, upper = k * piece.lower + t, k * piece.upper + t
        form = piece.form
        if piece.is_power:
            new_form = PowerLaw(
                form.coefficient * k ** (-form.exponent - 1.0),
                form.exponent,
                k * form.anchor + t,
                form.side,
            )
        else:
            new_form = Tabulated(
                tuple(k * x + t for x in form.grid),
                tuple(v / k for v in form.values),
            )
        pieces.append(DensityPiece(lower, upper, new_form))
    return RealMeasure(atoms, tuple(pieces), m.scale)


def _split_at_zero(piece):
    """Pieces on one side of 0; a table crossing 0 gets a node there at its interpolated value."""
    if not piece.lower < 0 < piece.upper:
        return (piece,)
    form = piece.form
    if piece.is_power:
        return (DensityPiece(piece.lower, 0.0, form), DensityPiece(0.0, piece.upper, form))
    grid, values = form.grid, form.values
    if grid[-1] <= 0:
        return (DensityPiece(piece.lower, 0.0, form),)
    if grid[0] >= 0:
        return (DensityPiece(0.0, piece.upper, form),)
    at_zero = float(np.interp(0.0, grid, values))
    left = [(x, v) for x, v in zip(grid, values) if x < 0] + [(0.0, at_zero)]
    right = [(0.0, at_zero)] + [(x, v) for x, v in zip(grid, values) if x > 0]
    return (
        DensityPiece(piece.lower, 0.0, Tabulated(*zip(*left))),
        DensityPiece(0.0, piece.upper, Tabulated(*zip(*right))),
    )


def _zero_cell(form):
    """(outer node, outer value, value at 0) of the cell next to 0, or None if the grid avoids 0."""
    if form.grid[-1] == 0:
        return form.grid[-2], form.values[-2], form.values[-1]
    if form.grid[0] == 0:
        return form.grid[1], form.values[1], form.values[0]
    return None


def _away_from_zero(form):
    """The table without its node at 0, or None when fewer than two nodes remain."""
    kept = [(x, v) for x, v in zip(form.grid, form.values) if x != 0]
    if len(kept) < 2:
        return None
    return Tabulated(*zip(*kept))


def _invert_interval(lower, upper):
    """ι-image of an interval on one side of 0 (ι is increasing on each side)."""
    if lower >= 0:
        new_lower = -math.inf if lower == 0 else -1.0 / lower
        new_upper = 0.0 if math.isinf(upper) else -1.0 / upper
    else:
        new_lower = 0.0 if math.isinf(lower) else -1.0 / lower
        new_upper = math.inf if upper == 0 else -1.0 / upper
    return new_lower, new_upper


def _invert_table(piece):
    """ι-image of a table on one side of 0, by nodal Jacobian; a cell ending at 0 becomes power laws."""
    form = piece.form
    pieces = []
    rest = _away_from_zero(form)
    if rest is not None:
        logger.debug("Inverting tabulated piece by nodal Jacobian (linear interpolation kept)")
        new_grid = tuple(-1.0 / x for x in rest.grid)
        new_values = tuple(v / (t * t) for v, t in zip(rest.values, new_grid))
        lower, upper = _invert_interval(rest.grid[0], rest.grid[-1])
        pieces.append(DensityPiece(lower, upper, Tabulated(new_grid, new_values)))
    cell = _zero_cell(form)
    if cell is None:
        return pieces
    # ρ = v0 + (v − v0)·λ/x on the cell; its image is v0·|t|⁻² + ((v − v0)/|x|)·|t|⁻³
    x, v, v0 = cell
    r = 1.0 / abs(x)
    cubic = (v - v0) / abs(x)
    if cubic < 0:
        raise MeasureError("tabulated density decreases away from 0; its inversion image leaves the family")
    lower, upper, side = (r, math.inf, "right") if x < 0 else (-math.inf, -r, "left")
    for coefficient, exponent in ((v0, -2.0), (cubic, -3.0)):
        if coefficient > 0:
            pieces.append(DensityPiece(lower, upper, PowerLaw(coefficient, exponent, 0.0, side)))
    return pieces


def _pushforward_inversion(m):
    atoms = []
    for a in m.atoms:
        if a.position == 0:
            raise AtomAtPole("inversion λ ↦ −1/λ meets an atom at 0")
        atoms.append(Atom(-1.0 / a.position, a.mass))
    pieces = []
    for original in m.pieces:
        for piece in _split_at_zero(original):
            if not piece.is_power:
                pieces.extend(_invert_table(piece))
                continue
            lower, upper = _invert_interval(piece.lower, piece.upper)
            side = "left" if upper <= 0 else "right"
            form = piece.form
            if form.anchor == 0:
                exponent = -form.exponent - 2.0
            elif form.exponent == 0:
                exponent = -2.0
            else:
                raise MeasureError(
                    "inversion of a power law is a power law only for anchor 0 or exponent 0, "
                    f"got anchor {form.anchor} and exponent {form.exponent}"
                )
            pieces.append(DensityPiece(lower, upper, PowerLaw(form.coefficient, exponent, 0.0, side)))
    return RealMeasure(tuple(atoms), tuple(pieces), m.scale)


def inverse_square_reweight(m):
    """The measure dμ(λ)/λ², defined when 0 carries no atom."""
    atoms = []
    for a in m.atoms:
        if a.position == 0:
            raise AtomAtPole("dμ/λ² is undefined with an atom at 0")
        atoms.append(Atom(a.position, a.mass / a.position ** 2))
    pieces = []
    for original in m.pieces:
        for piece in _split_at_zero(original):
            form = piece.form
            if piece.is_power:
                if form.anchor == 0:
                    new_form = PowerLaw(form.coefficient, form.exponent - 2.0, 0.0, form.side)
                elif form.exponent == 0:
                    side = "left" if piece.upper <= 0 else "right"
                    new_form = PowerLaw(form.coefficient, -2.0, 0.0, side)
                else:
                    raise MeasureError(
                        "dμ/λ² of a power law stays in the family only for anchor 0 or exponent 0"
                    )
            else:
                cell = _zero_cell(form)
                if cell is not None and (cell[1] > 0 or cell[2] > 0):
                    raise MeasureError("tabulated density is positive next to 0; dμ/λ² is not locally finite")
                form = _away_from_zero(form)
                if form is None:
                    continue
                new_form = Tabulated(form.grid, tuple(v / x ** 2 for v, x in zip(form.values, form.grid)))
            pieces.append(DensityPiece(piece.lower, piece.upper, new_form))
    return RealMeasure(tuple(atoms), tuple(pieces), m.scale)


def gap_cauchy_integral(m, omega):
    """
    ∫(1/(λ−ω) − λ/(1+λ²)) dμ(λ) at a real ω lying in an open gap of the support.

    The integrand is bounded there, so this is the boundary value M(ω+i0)
    computed directly.
    """
    omega = float(omega)
    if not m.in_gap(omega):
        raise ValueError(f"ω = {omega} is not in an open gap of the support")
    m.validate()
    value, error = _weighted_integral(
        m, lambda lam: (1.0 + lam * omega) / (lam - omega), (omega,), complex_valued=False
    )
    return QuadratureResult(complex(value.real, 0.0), error)
