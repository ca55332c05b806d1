"""
Finite atomic models and brute-force linear-algebra checks.

A :class:`DiscreteModel` replaces μ by N weighted nodes. In the orthonormal
basis e_j = δ_{λ_j}/√w_j of L²(μ_N) the self-adjoint extension is the real
diagonal Λ and the dissipative extension is the rank-one perturbation

    T = Λ + β·u uᵀ,   u_j = √w_j,   β = 1/(1/p(z0) − G(z0))

with p(z) = (M_N(z) − τ)⁻¹ and G(z) = Σ w_j/(λ_j − z). β does not depend on
the anchor z0, which is what check_anchor_independence confirms on the
dense construction.

Every :class:`DissipativeMatrix` is kept as diagonal + γ·v vᴴ, so the
Livšic characteristic function and Möbius images cost O(N) through
Sherman-Morrison; ``dense()`` materializes the matrix for the checks that
compare against plain numpy inversion.

Usage:
    from triples.oracle import discretize, build_dissipative, char_bounded_trace

    d = discretize(triple, 2000)
    T = build_dissipative(d)
    char_bounded_trace(T, 1j)
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from triples.charfn import VonNeumannParameter, char_at_atom, char_from_weyl_value
from triples.errors import (
    EigenvalueHit,
    NodeAtZero,
    NotDissipative,
    ResonancePoint,
    SingularResolvent,
)
from triples.log import logger
from triples.measure import HALF_PI, integrate_piece, to_theta
from triples.mobius import MobiusMap, inversion


NORMALIZATION_TOL = 1e-12
RESONANCE_TOL = 1e-12
CONDITION_LIMIT = 1e12
DISSIPATIVE_TOL = 1e-10

DEFAULT_QUANTILE_CUT = 1e-4

# θ-panels per piece: a uniform core plus geometric refinement towards both ends
CORE_PANELS = 32
END_REFINEMENT = 30
QUANTILE_XTOL = 1e-14


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Nodes λ_j with weights w_j, Σ w_j/(1+λ_j²) = 1, and a von Neumann parameter."""

    nodes: np.ndarray
    weights: np.ndarray
    kappa: VonNeumannParameter

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if not isinstance(self.kappa, VonNeumannParameter):
            object.__setattr__(self, "kappa", VonNeumannParameter(self.kappa))
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("nodes and weights must be nonempty 1-d arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(weights > 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be positive and finite")
        total = float(np.sum(weights / (1.0 + nodes ** 2)))
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"discrete model is not normalized: Σ w/(1+λ²) = {total!r}")

    @property
    def size(self):
        return self.nodes.size

    @property
    def drift(self):
        """c = Σ w_j λ_j/(1+λ_j²); M_N(z) = G(z) − c."""
        return float(np.sum(self.weights * self.nodes / (1.0 + self.nodes ** 2)))

    def cauchy_sum(self, z):
        """G(z) = Σ w_j/(λ_j − z)."""
        return complex(np.sum(self.weights / (self.nodes - z)))

    def weyl_m(self, z):
        """M_N(z) = Σ w_j(1/(λ_j − z) − λ_j/(1+λ_j²)); real z off the nodes is allowed."""
        z = complex(z)
        if z.imag == 0 and np.any(self.nodes == z.real):
            raise EigenvalueHit(f"z = {z.real} is a node of the discrete model")
        return self.cauchy_sum(z) - self.drift

    def char_S(self, z):
        """S_N(z); at a node on the real axis the atom limit (1 − κ)/(κ̄ − 1)."""
        z = complex(z)
        if z.imag == 0 and np.any(self.nodes == z.real):
            return char_at_atom(self.kappa)
        return char_from_weyl_value(self.weyl_m(z), self.kappa)

    def resolvent_p(self, z):
        denominator = self.weyl_m(z) - self.kappa.tau
        if abs(denominator) < RESONANCE_TOL:
            raise ResonancePoint(f"M_N(z) − τ vanishes at z = {complex(z)}")
        return 1.0 / denominator


@dataclass(frozen=True, eq=False)
class DissipativeMatrix:
    """T = diag(diagonal) + coupling·v vᴴ with a real diagonal and Im coupling ≥ 0."""

    diagonal: np.ndarray
    coupling: complex
    vector: np.ndarray

    def __post_init__(self):
        diagonal = np.asarray(self.diagonal, dtype=float)
        vector = np.asarray(self.vector, dtype=complex)
        object.__setattr__(self, "diagonal", diagonal)
        object.__setattr__(self, "vector", vector)
        object.__setattr__(self, "coupling", complex(self.coupling))
        if diagonal.shape != vector.shape:
            raise ValueError("diagonal and vector must have the same length")
        if self.coupling.imag < -DISSIPATIVE_TOL * max(1.0, abs(self.coupling)):
            raise NotDissipative(f"coupling {self.coupling} has negative imaginary part")

    @property
    def size(self):
        return self.diagonal.size

    @property
    def channel(self):
        """χ with Im T = χ χᴴ."""
        return math.sqrt(max(self.coupling.imag, 0.0)) * self.vector

    def dense(self):
        return np.diag(self.diagonal).astype(complex) + self.coupling * np.outer(self.vector, self.vector.conj())

    def imaginary_part(self):
        t = self.dense()
        return (t - t.conj().T) / 2j

    @classmethod
    def from_dense(cls, t, tol=DISSIPATIVE_TOL):
        """Unitarily equivalent structured form of a dense T with rank-one PSD imaginary part."""
        t = np.asarray(t, dtype=complex)
        real_part = (t + t.conj().T) / 2
        imag_part = (t - t.conj().T) / 2j
        values, vectors = np.linalg.eigh(imag_part)
        scale = max(1.0, float(np.max(np.abs(values))))
        top = values[-1]
        if values[0] < -tol * scale or np.any(np.abs(values[:-1]) > tol * scale):
            raise NotDissipative(f"imaginary part is not rank-one PSD (eigenvalues {values[0]:.3e} .. {top:.3e})")
        chi = vectors[:, -1] * math.sqrt(max(top, 0.0))
        lam, basis = np.linalg.eigh(real_part)
        return cls(lam, 1j, basis.conj().T @ chi)


@dataclass(frozen=True, eq=False)
class ArrowheadMatrix:
    """
    X = diag(diagonal) + border·e_jᵀ + e_j·borderᴴ + corner·e_j e_jᵀ, j = index.

    diagonal and border vanish at j; Im X = Im corner·e_j e_jᵀ. This is the
    form of f(T) when a node of T sits on the pole of f.
    """

    diagonal: np.ndarray
    border: np.ndarray
    corner: complex
    index: int

    def __post_init__(self):
        object.__setattr__(self, "diagonal", np.asarray(self.diagonal, dtype=float))
        object.__setattr__(self, "border", np.asarray(self.border, dtype=complex))
        object.__setattr__(self, "corner", complex(self.corner))
        if self.diagonal.shape != self.border.shape:
            raise ValueError("diagonal and border must have the same length")
        if self.corner.imag < -DISSIPATIVE_TOL * max(1.0, abs(self.corner)):
            raise NotDissipative(f"corner {self.corner} has negative imaginary part")

    @property
    def size(self):
        return self.diagonal.size

    @property
    def channel(self):
        chi = np.zeros(self.size, dtype=complex)
        chi[self.index] = math.sqrt(max(self.corner.imag, 0.0))
        return chi

    def dense(self):
        x = np.diag(self.diagonal).astype(complex)
        x[:, self.index] += self.border
        x[self.index, :] += self.border.conj()
        x[self.index, self.index] += self.corner
        return x

    def imaginary_part(self):
        x = self.dense()
        return (x - x.conj().T) / 2j


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

def _panel_edges(theta_lo, theta_hi, breakpoints):
    width = theta_hi - theta_lo
    edges = set(np.linspace(theta_lo, theta_hi, CORE_PANELS + 1))
    for k in range(1, END_REFINEMENT + 1):
        step = width * 2.0 ** (-k) / CORE_PANELS
        edges.add(theta_lo + step)
        edges.add(theta_hi - step)
    edges.update(breakpoints)
    return [e for e in sorted(edges) if theta_lo <= e <= theta_hi]


def _from_theta(theta):
    if theta >= HALF_PI:
        return math.inf
    if theta <= -HALF_PI:
        return -math.inf
    return math.tan(theta)


def _continuous_mass(pieces):
    """(θa, θb) ↦ mass of the continuous part of dμ/(1+λ²) over [tan θa, tan θb], unscaled."""

    def one(lam):
        return 1.0

    def mass(theta_a, theta_b):
        lo, hi = _from_theta(theta_a), _from_theta(theta_b)
        return sum(integrate_piece(p, one, lo, hi, complex_valued=False)[0].real for p in pieces)

    return mass


def _continuous_quantiles(m, count, quantile_cut):
    """θ-positions of the midpoint quantiles of the continuous part of dμ/(1+λ²)."""
    pieces = m.pieces
    mass = _continuous_mass(pieces)
    edges = set()
    for piece in pieces:
        lo, hi = piece.theta_bounds()
        edges.update(_panel_edges(lo, hi, [to_theta(x) for x in piece.breakpoints()]))
    edges = sorted(edges)
    masses = np.array([mass(a, b) for a, b in zip(edges, edges[1:])])
    cumulative = np.concatenate(([0.0], np.cumsum(masses)))
    total = cumulative[-1]
    logger.debug("Discretization CDF: %d panels, continuous mass %.12g", len(masses), total)

    levels = (np.arange(1, count + 1) - 0.5) / count
    levels = np.clip(levels, quantile_cut, 1.0 - quantile_cut) * total
    thetas = np.empty(count)
    for j, target in enumerate(levels):
        k = int(np.searchsorted(cumulative, target, side="right")) - 1
        k = min(max(k, 0), len(masses) - 1)
        a, b = edges[k], edges[k + 1]
        base = cumulative[k]

        def excess(theta, a=a, base=base, target=target):
            return base + mass(a, theta) - target

        thetas[j] = _bracketed_root(excess, a, b)
    return thetas, total


def _bracketed_root(fun, a, b):
    # Panel masses and the in-panel integral may differ in the last bits
    if fun(b) <= 0:
        return b
    if fun(a) >= 0:
        return a
    return optimize.brentq(fun, a, b, xtol=QUANTILE_XTOL)


def discretize(t, n, quantile_cut=DEFAULT_QUANTILE_CUT):
    """
    N-node model of a triple: atoms become exact nodes, the continuous part
    gets the remaining nodes at its midpoint quantiles, each carrying an equal
    share of the continuous probability.
    """
    if n < 2:
        raise ValueError(f"discretization needs N ≥ 2, got {n}")
    if not 0 < quantile_cut < 0.5:
        raise ValueError(f"quantile cut must lie in (0, 0.5), got {quantile_cut}")
    m = t.measure
    nodes = [a.position for a in m.atoms]
    weights = [a.mass * m.scale for a in m.atoms]

    if m.pieces:
        count = max(n - len(nodes), 1)
        thetas, continuous_mass = _continuous_quantiles(m, count, quantile_cut)
        lam = np.tan(thetas)
        share = m.scale * continuous_mass / count
        nodes.extend(lam.tolist())
        weights.extend(((1.0 + lam ** 2) * share).tolist())
    elif len(nodes) < n:
        logger.debug("Purely atomic measure: %d nodes instead of %d", len(nodes), n)

    nodes = np.asarray(nodes)
    weights = np.asarray(weights)
    order = np.argsort(nodes)
    nodes, weights = nodes[order], weights[order]
    # Coinciding nodes (an atom hit by a quantile) are merged
    unique, index = np.unique(nodes, return_inverse=True)
    if unique.size < nodes.size:
        weights = np.bincount(index, weights=weights)
        nodes = unique
    weights = weights / np.sum(weights / (1.0 + nodes ** 2))
    return DiscreteModel(nodes, weights, t.kappa)


def random_model(n, seed, kappa=None):
    """Seeded admissible model: nodes kept at least 0.1 away from 0, random κ in |κ| < 0.9."""
    rng = np.random.default_rng(seed)
    magnitudes = 0.1 + np.abs(rng.standard_normal(n)) * 2.0
    nodes = np.sort(magnitudes * rng.choice([-1.0, 1.0], size=n))
    weights = rng.uniform(0.5, 1.5, size=n)
    weights = weights / np.sum(weights / (1.0 + nodes ** 2))
    if kappa is None:
        radius = 0.9 * math.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2 * math.pi)
        kappa = radius * complex(math.cos(angle), math.sin(angle))
    return DiscreteModel(nodes, weights, VonNeumannParameter(kappa))


# ---------------------------------------------------------------------------
# Dissipative matrices
# ---------------------------------------------------------------------------

def build_dissipative(d, z0=1j):
    """T = Λ + β·u uᵀ from the resolvent formula anchored at z0 ∈ ℂ₊."""
    z0 = complex(z0)
    if not z0.imag > 0:
        raise ValueError(f"anchor must lie in the upper half-plane, got {z0}")
    inverse_p = d.weyl_m(z0) - d.kappa.tau
    beta = 1.0 / (inverse_p - d.cauchy_sum(z0))
    return DissipativeMatrix(d.nodes, beta, np.sqrt(d.weights))


def resolvent_matrix(d, z):
    """(Â − z)⁻¹ = (A − z)⁻¹ − p(z)·g_z g_zᵀ in orthonormal coordinates, g_z = √w/(λ − z)."""
    z = complex(z)
    p = d.resolvent_p(z)
    g = np.sqrt(d.weights) / (d.nodes - z)
    return np.diag(1.0 / (d.nodes - z)) - p * np.outer(g, g)


def dense_from_resolvent(d, z0=1j):
    """T = R(z0)⁻¹ + z0·I by dense inversion."""
    r = resolvent_matrix(d, z0)
    condition = np.linalg.cond(r)
    if not condition < CONDITION_LIMIT:
        raise SingularResolvent(f"resolvent at z0 = {z0} has condition number {condition:.3e}")
    return np.linalg.inv(r) + complex(z0) * np.eye(d.size)


def apply_mobius(f: MobiusMap, t: DissipativeMatrix):
    """
    f(T) = (aT + b)(cT + d)⁻¹, again diagonal plus rank one.

    With E = cΛ + d: f(T) = diag(f(λ)) + γ'·(E⁻¹v)(E⁻¹v)ᴴ, γ' = γ/(1 + cγ·vᴴE⁻¹v).
    A node on the pole ω = −d/c gives an :class:`ArrowheadMatrix` instead.
    """
    if f.is_affine:
        k, shift = f.slope, f.shift
        return DissipativeMatrix(k * t.diagonal + shift, k * t.coupling, t.vector)
    e = f.c * t.diagonal + f.d
    hits = np.flatnonzero(np.abs(e) < RESONANCE_TOL)
    if hits.size:
        return _mobius_at_node(f, t, int(hits[0]))
    v = t.vector / e
    s = float(np.real(np.vdot(t.vector, v)))
    denominator = 1.0 + f.c * t.coupling * s
    if abs(denominator) < RESONANCE_TOL:
        raise SingularResolvent(f"T has the eigenvalue {-f.d / f.c:g}; f(T) is unbounded")
    diagonal = (f.a * t.diagonal + f.b) / e
    return DissipativeMatrix(diagonal, t.coupling / denominator, v)


def _mobius_at_node(f, t, j):
    """
    f(T) = a/c − (T − ω)⁻¹/c² with λ_j = ω, solved by bordering around row j.

    For k, l ≠ j: (T − ω)⁻¹ has diagonal 1/(λ_k − ω), column j entries
    −v_k/(v_j(λ_k − ω)) and corner (1/γ + q')/|v_j|², q' = Σ_{k≠j} |v_k|²/(λ_k − ω).
    """
    v_j = t.vector[j]
    if abs(v_j) < RESONANCE_TOL or abs(t.coupling) < RESONANCE_TOL:
        raise SingularResolvent(f"T has the eigenvalue {-f.d / f.c:g}; f(T) is unbounded")
    omega = -f.d / f.c
    rest = np.arange(t.size) != j
    shift = t.diagonal[rest] - omega
    c2 = f.c * f.c
    diagonal = np.zeros(t.size)
    diagonal[rest] = f.a / f.c - 1.0 / (c2 * shift)
    border = np.zeros(t.size, dtype=complex)
    border[rest] = t.vector[rest] / (shift * c2 * v_j)
    q_rest = float(np.sum(np.abs(t.vector[rest]) ** 2 / shift))
    corner = f.a / f.c - (1.0 / t.coupling + q_rest) / (c2 * abs(v_j) ** 2)
    logger.debug("Node %d sits on the pole %g of %s; image kept in arrowhead form", j, omega, f.as_text())
    return ArrowheadMatrix(diagonal, border, corner, j)


def _char_arrowhead(x, z):
    # (X* − z)⁻¹ at (j, j) by the Schur complement of the diagonal block
    rest = np.arange(x.size) != x.index
    diagonal = x.diagonal[rest]
    if np.any(diagonal == z):
        raise EigenvalueHit(f"z = {z} is an eigenvalue of Re X off the corner")
    schur = x.corner.conjugate() - z - complex(np.sum(np.abs(x.border[rest]) ** 2 / (diagonal - z)))
    if abs(schur) < RESONANCE_TOL:
        raise EigenvalueHit(f"z = {z} is an eigenvalue of X*")
    return 1.0 + 2j * x.corner.imag / schur


def char_bounded_trace(t, z):
    """
    S_T(z) = 1 + 2i·⟨(T* − z)⁻¹χ, χ⟩ with Im T = χχᴴ.

    With q = vᴴ(Λ − z)⁻¹v the inner product is Im γ·q/(1 + γ̄q).
    """
    z = complex(z)
    if isinstance(t, ArrowheadMatrix):
        return _char_arrowhead(t, z)
    if np.any(t.diagonal == z):
        raise EigenvalueHit(f"z = {z} is an eigenvalue of Re T")
    q = complex(np.sum(np.abs(t.vector) ** 2 / (t.diagonal - z)))
    denominator = 1.0 + t.coupling.conjugate() * q
    if abs(denominator) < RESONANCE_TOL:
        raise EigenvalueHit(f"z = {z} is an eigenvalue of T*")
    return 1.0 + 2j * t.coupling.imag * q / denominator


def char_dense_trace(t, z):
    """The same function from a dense matrix by a linear solve."""
    t = np.asarray(t, dtype=complex)
    imag_part = (t - t.conj().T) / 2j
    values, vectors = np.linalg.eigh(imag_part)
    chi = vectors[:, -1] * math.sqrt(max(values[-1], 0.0))
    shifted = t.conj().T - complex(z) * np.eye(t.shape[0])
    try:
        solved = np.linalg.solve(shifted, chi)
    except np.linalg.LinAlgError:
        raise EigenvalueHit(f"z = {z} is an eigenvalue of T*") from None
    return 1.0 + 2j * np.vdot(chi, solved)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_resolvent_identity(d, z1, z2):
    """‖R(z1) − R(z2) − (z1 − z2)R(z1)R(z2)‖₂."""
    z1, z2 = complex(z1), complex(z2)
    if z1 == z2:
        raise ValueError("the resolvent identity needs two distinct points")
    r1, r2 = resolvent_matrix(d, z1), resolvent_matrix(d, z2)
    return float(np.linalg.norm(r1 - r2 - (z1 - z2) * (r1 @ r2), 2))


def check_anchor_independence(d, z0=1j, z1=2j):
    """Entrywise gap between T built densely at two anchors."""
    return float(np.max(np.abs(dense_from_resolvent(d, z0) - dense_from_resolvent(d, z1))))


def rank_one_inverse_parts(d):
    """(p, a) with Â⁻¹ = Λ⁻¹ − p·a aᵀ, p = (M_N(0) − τ)⁻¹, a = √w/λ."""
    if np.any(d.nodes == 0):
        raise NodeAtZero("the discrete model has a node at 0; A is not invertible")
    p = d.resolvent_p(0.0)
    return p, np.sqrt(d.weights) / d.nodes


def check_rank_one_inverse(d):
    """‖Â⁻¹ − (B⁻¹ − pQ)‖ / ‖Â⁻¹‖ with Q = (√w/λ)(√w/λ)ᵀ in orthonormal coordinates."""
    p, a = rank_one_inverse_parts(d)
    direct = np.linalg.inv(build_dissipative(d).dense())
    formula = np.diag(1.0 / d.nodes) - p * np.outer(a, a)
    return float(np.linalg.norm(direct - formula, 2) / np.linalg.norm(direct, 2))


def check_inverse_characteristic(d, grid):
    """max |S_{−Â⁻¹}(−1/z) − S_N(z)/S_N(0)| over the grid, on the discrete model alone."""
    if np.any(d.nodes == 0):
        raise NodeAtZero("the discrete model has a node at 0; Â⁻¹ is unbounded")
    minus_inverse = apply_mobius(inversion(), build_dissipative(d))
    phase = d.char_S(0.0)
    residual = 0.0
    for z in grid:
        lhs = char_bounded_trace(minus_inverse, -1.0 / complex(z))
        residual = max(residual, abs(lhs - d.char_S(z) / phase))
    return residual


def check_bounded_affine_invariance(t, h, grid):
    """max |S_{h(T)}(h(z)) − S_T(z)| for an affine h."""
    if not h.is_affine:
        raise ValueError(f"expected an affine map, got {h.as_text()}")
    moved = apply_mobius(h, t)
    return max(abs(char_bounded_trace(moved, h(z)) - char_bounded_trace(t, z)) for z in grid)
