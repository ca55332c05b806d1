"""
SL₂(ℝ) algebra on the upper half-plane.

Maps are stored as real 2×2 matrices normalized to determinant 1 with the sign
convention a ≥ 0 (b ≥ 0 when a = 0), so that two maps are equal as maps
exactly when their stored coefficients agree. ∞ is an ordinary value of
:func:`apply`, represented by :data:`INFINITY`.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from triples.errors import DecompositionFailure, SpecFormatError


INFINITY = math.inf

# Lower-left entry of h = f∘g⁻¹∘ι⁻¹ allowed before the decomposition is rejected
DECOMPOSITION_TOL = 1e-12


def is_infinite(value):
    """True for the point at infinity (real or complex representation)."""
    return cmath.isinf(value)


@dataclass(frozen=True)
class MobiusMap:
    """z ↦ (az + b)/(cz + d) with ad − bc > 0, stored with det 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not det > 0 or not math.isfinite(det):
            raise ValueError(f"Möbius map needs a positive determinant, got ad − bc = {det!r}")
        scale = math.sqrt(det)
        a, b, c, d = a / scale, b / scale, c / scale, d / scale
        if a < 0 or (a == 0 and b < 0):
            a, b, c, d = -a, -b, -c, -d
        # Frozen dataclass: write the canonical representative through object.__setattr__
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def parse(cls, text):
        """Parse the command-line form "a,b,c,d"."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 4:
            raise SpecFormatError(f"Möbius map must be 'a,b,c,d', got {text!r}")
        try:
            a, b, c, d = (float(p) for p in parts)
        except ValueError:
            raise SpecFormatError(f"Möbius map coefficients must be real numbers, got {text!r}") from None
        if not a * d - b * c > 0:
            raise SpecFormatError(f"Möbius map {text!r} has determinant {a * d - b * c:g} ≤ 0")
        return cls(a, b, c, d)

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def determinant(self):
        return self.a * self.d - self.b * self.c

    @property
    def is_affine(self):
        return self.c == 0

    @property
    def slope(self):
        """Slope k of an affine map z ↦ kz + t."""
        if not self.is_affine:
            raise ValueError("slope is only defined for affine maps")
        return self.a / self.d

    @property
    def shift(self):
        if not self.is_affine:
            raise ValueError("shift is only defined for affine maps")
        return self.b / self.d

    def is_identity(self, tol=0.0):
        return isclose(self, identity(), tol=tol)

    def is_inversion(self, tol=0.0):
        return isclose(self, inversion(), tol=tol)

    def as_text(self):
        return f"{self.a:.17g},{self.b:.17g},{self.c:.17g},{self.d:.17g}"

    def __call__(self, z):
        return apply(self, z)


@dataclass(frozen=True)
class Decomposition:
    """f = h∘ι∘g (uses_inversion) or f = h (affine f, g the identity)."""

    g: MobiusMap
    uses_inversion: bool
    h: MobiusMap

    def recompose(self):
        if self.uses_inversion:
            return compose(self.h, compose(inversion(), self.g))
        return compose(self.h, self.g)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def identity():
    return MobiusMap(1.0, 0.0, 0.0, 1.0)


def inversion():
    """ι(z) = −1/z."""
    return MobiusMap(0.0, -1.0, 1.0, 0.0)


def translation(t):
    return MobiusMap(1.0, float(t), 0.0, 1.0)


def affine(slope, shift=0.0):
    """z ↦ slope·z + shift, slope > 0."""
    if not slope > 0:
        raise ValueError(f"affine automorphisms of the upper half-plane need slope > 0, got {slope!r}")
    root = math.sqrt(slope)
    return MobiusMap(root, shift / root, 0.0, 1.0 / root)


# ---------------------------------------------------------------------------
# Group operations
# ---------------------------------------------------------------------------

def apply(f, z):
    """(az + b)/(cz + d), with ∞ at the pole and f(∞) = a/c."""
    if is_infinite(z):
        return INFINITY if f.c == 0 else f.a / f.c
    denominator = f.c * z + f.d
    if denominator == 0:
        return INFINITY
    return (f.a * z + f.b) / denominator


def compose(f, g):
    """f∘g as the normalized matrix product."""
    return MobiusMap.from_matrix(f.matrix @ g.matrix)


def invert(f):
    return MobiusMap(f.d, -f.b, -f.c, f.a)


def preimage_infinity(f):
    """ω = f⁻¹(∞): −d/c, or ∞ for affine maps."""
    if f.c == 0:
        return INFINITY
    return -f.d / f.c


def isclose(f, g, tol=1e-12):
    """Entrywise comparison of canonical representatives, up to the global sign."""
    diff_plus = max(abs(x - y) for x, y in zip(_entries(f), _entries(g)))
    diff_minus = max(abs(x + y) for x, y in zip(_entries(f), _entries(g)))
    return min(diff_plus, diff_minus) <= tol


def decompose(f):
    """
    Split f into h∘ι∘g with g(z) = z − f⁻¹(∞) and h affine.

    Affine f is returned as (identity, False, f).
    """
    if f.is_affine:
        return Decomposition(identity(), False, f)

    omega = preimage_infinity(f)
    g = translation(-omega)
    raw = f.matrix @ invert(g).matrix @ invert(inversion()).matrix
    lower_left = raw[1, 0]
    if abs(lower_left) > DECOMPOSITION_TOL * max(1.0, np.abs(raw).max()):
        raise DecompositionFailure(
            f"h = f∘g⁻¹∘ι⁻¹ is not affine for f = {f.as_text()} (lower-left entry {lower_left:.3e})"
        )
    raw[1, 0] = 0.0
    h = MobiusMap.from_matrix(raw)
    return Decomposition(g, True, h)


def _entries(f):
    return (f.a, f.b, f.c, f.d)
