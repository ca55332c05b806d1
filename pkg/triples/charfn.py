"""
Livšic, characteristic and normalized characteristic functions.

From a Weyl evaluator M and a von Neumann parameter κ (|κ| < 1):

    s(z) = (M(z) − i)/(M(z) + i)          Livšic function, s(i) = 0
    S(z) = (s(z) − κ)/(κ̄ s(z) − 1)        characteristic function, S(i) = κ
    Ŝ(z) = ((1 − κ̄)/(1 − κ))·S(z)         normalized characteristic function

κ is stored as configured and used directly wherever S(i) is needed.
"""

import cmath
import math
from dataclasses import dataclass, field

from triples.errors import DegenerateValue, PoleAtEvaluation
from triples.herglotz import boundary_value, weyl_m
from triples.measure import integrate_measure


# |M + i| below which s is treated as a pole
POLE_TOL = 1e-14

LIVSIC_ZERO_TOL = 1e-9
DEFAULT_RAY_EPSILON = 0.1
DEFAULT_RADII = tuple(10.0 ** k for k in range(1, 6))
DEFAULT_ALPHA_COUNT = 12


@dataclass(frozen=True)
class VonNeumannParameter:
    kappa: complex

    def __post_init__(self):
        kappa = complex(self.kappa)
        object.__setattr__(self, "kappa", kappa)
        if not abs(kappa) < 1:
            raise ValueError(f"von Neumann parameter needs |κ| < 1, got κ = {kappa}")

    @property
    def tau(self):
        """τ = i(1+κ)/(1−κ), the point of ℂ₊ with s-value κ."""
        return 1j * (1 + self.kappa) / (1 - self.kappa)

    @classmethod
    def from_tau(cls, tau):
        """Inverse of :attr:`tau`: κ = (τ − i)/(τ + i)."""
        tau = complex(tau)
        return cls((tau - 1j) / (tau + 1j))


@dataclass(frozen=True)
class CharEvaluator:
    weyl: object
    kappa: VonNeumannParameter


@dataclass(frozen=True)
class GrowthSample:
    angle: float
    alpha: float
    radii: tuple
    magnitudes: tuple
    growing: bool


@dataclass(frozen=True)
class LivsicProbe:
    s_at_i_zero: bool
    s_at_i: complex
    growth_samples: tuple = field(default_factory=tuple)

    @property
    def all_growing(self):
        return all(sample.growing for sample in self.growth_samples)


# ---------------------------------------------------------------------------
# Value-level maps
# ---------------------------------------------------------------------------

def livsic_from_weyl_value(m_value):
    m_value = complex(m_value)
    if abs(m_value + 1j) < POLE_TOL:
        raise PoleAtEvaluation(f"M = {m_value} makes (M − i)/(M + i) singular")
    return (m_value - 1j) / (m_value + 1j)


def weyl_from_s(s_value):
    """M = (1/i)(s + 1)/(s − 1), the inverse of s = (M − i)/(M + i)."""
    s_value = complex(s_value)
    if s_value == 1:
        raise DegenerateValue("s = 1 has no Weyl preimage")
    return (s_value + 1) / (1j * (s_value - 1))


def kappa_mobius(x, kappa):
    """x ↦ (x − κ)/(κ̄x − 1); an involution of the unit disc."""
    kappa = complex(kappa)
    return (x - kappa) / (kappa.conjugate() * x - 1)


def char_from_weyl_value(m_value, kappa):
    return kappa_mobius(livsic_from_weyl_value(m_value), kappa.kappa)


def livsic_from_char(s_char, kappa):
    """Recover s from S; the same involution applied once more."""
    return kappa_mobius(s_char, kappa.kappa)


def normalization_factor(kappa):
    """(1 − conj S(i))/(1 − S(i)) with S(i) = κ; unimodular."""
    k = kappa.kappa
    return (1 - k.conjugate()) / (1 - k)


# ---------------------------------------------------------------------------
# Evaluator-level operations
# ---------------------------------------------------------------------------

def livsic_s(weyl, z):
    return livsic_from_weyl_value(weyl_m(weyl, z))


def char_S(c, z):
    return kappa_mobius(livsic_s(c.weyl, z), c.kappa.kappa)


def normalized_S_hat(c, z):
    return normalization_factor(c.kappa) * char_S(c, z)


def char_at_atom(kappa):
    """S at an atom of μ: M(ω + iε) → ∞ there, so s → 1 and S = (1 − κ)/(κ̄ − 1)."""
    return kappa_mobius(1.0, kappa.kappa)


def char_S_at_boundary(c, omega, has_atom=False):
    """S(ω + i0) at a quasi-regular ω, from the boundary value of M or the atom limit."""
    if has_atom:
        return char_at_atom(c.kappa)
    bv = boundary_value(c.weyl, omega)
    return char_from_weyl_value(bv.value, c.kappa)


def livsic_s_from_deficiency(m, z):
    """
    s(z) = ((z − i)/(z + i))·(g_z, g_−)/(g_z, g_+) in the model L²(ℝ; dμ),
    with deficiency elements g_z(λ) = 1/(λ − z), g_± = g_{±i}.
    """
    z = complex(z)

    def against_minus(lam):
        return 1.0 / ((lam - z) * (lam - 1j))

    def against_plus(lam):
        return 1.0 / ((lam - z) * (lam + 1j))

    points = (z.real,) if abs(z.imag) < 1 else ()
    numerator = integrate_measure(m, against_minus, points).value
    denominator = integrate_measure(m, against_plus, points).value
    return (z - 1j) / (z + 1j) * numerator / denominator


# ---------------------------------------------------------------------------
# Livšic criterion probe
# ---------------------------------------------------------------------------

def livsic_criterion_probe(weyl, epsilon=DEFAULT_RAY_EPSILON, radii=DEFAULT_RADII,
                           alpha_count=DEFAULT_ALPHA_COUNT):
    """Sampled evidence for s(i) = 0 and z(s(z) − e^{2iα}) → ∞ in sectors."""
    return probe_livsic_function(
        lambda z: livsic_s(weyl, z), epsilon=epsilon, radii=radii, alpha_count=alpha_count
    )


def probe_livsic_function(s, epsilon=DEFAULT_RAY_EPSILON, radii=DEFAULT_RADII,
                          alpha_count=DEFAULT_ALPHA_COUNT):
    """
    Probe any callable s on the rays arg z ∈ {ε, π/2, π − ε}.

    Each (ray, α) row records |z(s(z) − e^{2iα})| at the given radii and
    whether those magnitudes increase monotonically. This is sampled evidence,
    not a decision.
    """
    if not 0 < epsilon < math.pi / 2:
        raise ValueError(f"sector parameter must lie in (0, π/2), got {epsilon}")
    s_at_i = complex(s(1j))
    angles = (epsilon, math.pi / 2, math.pi - epsilon)
    alphas = tuple(math.pi * j / alpha_count for j in range(alpha_count))
    samples = []
    for angle in angles:
        points = [r * cmath.exp(1j * angle) for r in radii]
        values = [complex(s(z)) for z in points]
        for alpha in alphas:
            target = cmath.exp(2j * alpha)
            magnitudes = tuple(abs(z * (v - target)) for z, v in zip(points, values))
            growing = all(b > a for a, b in zip(magnitudes, magnitudes[1:]))
            samples.append(GrowthSample(angle, alpha, tuple(radii), magnitudes, growing))
    return LivsicProbe(
        s_at_i_zero=abs(s_at_i) < LIVSIC_ZERO_TOL,
        s_at_i=s_at_i,
        growth_samples=tuple(samples),
    )
