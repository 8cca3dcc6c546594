"""Smooth vector-valued function classes on the unit cube.

Members are finite trigonometric sums

    g(x) = sum_j  a_j * u_j * prod_l cos(2 pi k_{jl} x_l + theta_{jl}),

with integer frequencies k, so every partial derivative of every order is
again closed-form: differentiating one cosine factor multiplies by 2 pi k and
shifts the phase by pi/2. Amplitudes are scaled analytically so that all
derivative values up to total order m+1 stay inside the declared range set B;
no numerical differentiation happens anywhere in the class itself.

Values and all partial derivatives up to order m are tabulated on a uniform
grid (the declared sup-norm approximation); the term data doubles as the
generator descriptor for exact off-grid evaluation, exact means and exact
L2 inner products under the uniform law on [0,1]^d.
"""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import substream

_TAG_MEMBER = 101
_TAG_SAMPLE_B = 102

TWO_PI = 2.0 * math.pi

# Acceptance-grade default grid resolutions (nodes per axis).
_DEFAULT_RESOLUTION = {1: 1025, 2: 65}


def default_resolution(d: int) -> int:
    return _DEFAULT_RESOLUTION.get(d, 17)


def multi_indices(d: int, max_order: int):
    """All p in N_0^d with [p] <= max_order, in lexicographic order."""
    out = [p for p in itertools.product(range(max_order + 1), repeat=d)
           if sum(p) <= max_order]
    out.sort()
    return out


# --------------------------------------------------------------------------
# range-set descriptors


@dataclass(frozen=True)
class BallDescriptor:
    """B = closed ball of the given radius around the origin."""

    radius: float
    kind: str = field(default="ball", init=False)

    @property
    def k_b(self) -> float:
        return self.radius

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> bool:
        return bool(np.all(np.linalg.norm(points, axis=-1) <= self.radius + tol))

    def sample(self, count: int, d_y: int, rng: np.random.Generator) -> np.ndarray:
        raw = rng.standard_normal((count, d_y))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = self.radius * rng.uniform(size=count) ** (1.0 / d_y)
        return raw * radii[:, None]

    def to_json(self):
        return {"kind": "ball", "radius": self.radius}


@dataclass(frozen=True)
class SpanDescriptor:
    """B = span of the psi vectors, intersected with the radius-R ball."""

    psi: np.ndarray  # (r, d_Y)
    radius: float
    kind: str = field(default="span", init=False)

    @property
    def k_b(self) -> float:
        return self.radius

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> bool:
        pts = points.reshape(-1, points.shape[-1])
        if not np.all(np.linalg.norm(pts, axis=1) <= self.radius + tol):
            return False
        coef, *_ = np.linalg.lstsq(self.psi.T, pts.T, rcond=None)
        resid = pts.T - self.psi.T @ coef
        return bool(np.all(np.linalg.norm(resid, axis=0) <= tol))

    def sample(self, count: int, d_y: int, rng: np.random.Generator) -> np.ndarray:
        r = self.psi.shape[0]
        theta = rng.standard_normal((count, r))
        vals = theta @ self.psi
        norms = np.linalg.norm(vals, axis=1)
        norms[norms == 0] = 1.0
        scale = self.radius * rng.uniform(size=count) ** (1.0 / r) / norms
        return vals * scale[:, None]

    def to_json(self):
        return {"kind": "span", "radius": self.radius, "psi": self.psi.tolist()}


@dataclass(frozen=True)
class SmoothOutputDescriptor:
    """B = m'-smooth real functions on a d'-dim grid, all derivatives <= M.

    Output-space coordinates are grid samples scaled by 1/sqrt(d_Y) so the
    Euclidean inner product of coordinates equals the L2 inner product under
    the uniform measure on the output grid.
    """

    d_out: int
    m_out: int
    bound: float
    grid_out: int
    kind: str = field(default="smooth_output", init=False)

    @property
    def d_y(self) -> int:
        return self.grid_out ** self.d_out

    @property
    def k_b(self) -> float:
        return self.bound

    def contains(self, points: np.ndarray, tol_factor: float = 0.05) -> bool:
        return bool(
            self.max_difference_quotient(points) <= self.bound * (1.0 + tol_factor)
        )

    def max_difference_quotient(self, points: np.ndarray) -> float:
        """Largest forward divided difference of order [q] <= m_out.

        Each coordinate vector is read back as a function on the output grid;
        iterated forward differences of a function with |D^q f| <= M are
        themselves bounded by M (mean value theorem), so this is a sound
        finite surrogate for derivative membership.
        """
        if self.grid_out <= self.m_out:
            raise ValueError(
                "output grid too coarse for the order-m' finite-difference check"
            )
        pts = points.reshape(-1, self.d_y)
        h = 1.0 / (self.grid_out - 1)
        worst = 0.0
        for row in pts:
            f = row.reshape((self.grid_out,) * self.d_out) * math.sqrt(self.d_y)
            worst = max(worst, float(np.max(np.abs(f))))
            for q in multi_indices(self.d_out, self.m_out):
                if sum(q) == 0:
                    continue
                diff = f
                for axis, order in enumerate(q):
                    for _ in range(order):
                        diff = np.diff(diff, axis=axis) / h
                if diff.size:
                    worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    def sample(self, count: int, d_y: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError("no direct sampler for the smooth-output set")

    def to_json(self):
        return {"kind": "smooth_output", "d_out": self.d_out, "m_out": self.m_out,
                "bound": self.bound, "grid_out": self.grid_out}


def descriptor_from_json(obj) -> "BallDescriptor | SpanDescriptor | SmoothOutputDescriptor":
    kind = obj["kind"]
    if kind == "ball":
        return BallDescriptor(radius=float(obj["radius"]))
    if kind == "span":
        return SpanDescriptor(psi=np.asarray(obj["psi"], float), radius=float(obj["radius"]))
    if kind == "smooth_output":
        return SmoothOutputDescriptor(d_out=int(obj["d_out"]), m_out=int(obj["m_out"]),
                                      bound=float(obj["bound"]), grid_out=int(obj["grid_out"]))
    raise ValueError(f"unknown descriptor kind {kind!r}")


# --------------------------------------------------------------------------
# grid functions


def grid_nodes(d: int, resolution: int) -> np.ndarray:
    """Row-major uniform grid on [0,1]^d including endpoints; (res^d, d)."""
    axes = [np.linspace(0.0, 1.0, resolution)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class GridFunction:
    """One member: trig-sum generator plus tabulated values and derivatives."""

    d: int
    m: int
    d_y: int
    resolution: int
    freqs: np.ndarray    # (J, d) nonnegative ints
    phases: np.ndarray   # (J, d)
    amps: np.ndarray     # (J,)
    dirs: np.ndarray     # (J, d_Y)
    values: np.ndarray = field(repr=False)   # (res^d, d_Y)
    derivs: dict = field(repr=False)         # {p tuple: (res^d, d_Y)}, [p] <= m
    taylor_k: float = 0.0

    @classmethod
    def from_terms(cls, d, m, d_y, resolution, freqs, phases, amps, dirs):
        freqs = np.asarray(freqs, int)
        phases = np.asarray(phases, float)
        amps = np.asarray(amps, float)
        dirs = np.asarray(dirs, float)
        nodes = grid_nodes(d, resolution)
        derivs = {}
        for p in multi_indices(d, m):
            derivs[p] = _eval_terms(nodes, freqs, phases, amps, dirs, p)
        values = derivs[(0,) * d]
        # Operator-norm bound for the (m+1)-st derivative: multinomial
        # expansion of the directional derivative plus Cauchy-Schwarz gives
        # sum_j |a_j| ||u_j|| (2 pi ||k_j||_2)^{m+1}.
        knorm = np.linalg.norm(freqs.astype(float), axis=1)
        taylor_k = float(np.sum(np.abs(amps) * np.linalg.norm(dirs, axis=1)
                                * (TWO_PI * knorm) ** (m + 1)))
        return cls(d=d, m=m, d_y=d_y, resolution=resolution, freqs=freqs,
                   phases=phases, amps=amps, dirs=dirs, values=values,
                   derivs=derivs, taylor_k=taylor_k)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Exact values at arbitrary points x of shape (n, d); (n, d_Y)."""
        return self.evaluate_deriv(x, (0,) * self.d)

    def evaluate_deriv(self, x: np.ndarray, p) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        if x.shape[1] != self.d:
            raise ValueError(f"points must have {self.d} coordinates")
        return _eval_terms(x, self.freqs, self.phases, self.amps, self.dirs, tuple(p))

    def scaled(self, factor: float) -> "GridFunction":
        """The member factor*g (same generator family)."""
        return GridFunction.from_terms(self.d, self.m, self.d_y, self.resolution,
                                       self.freqs, self.phases,
                                       self.amps * factor, self.dirs)


def _eval_terms(x, freqs, phases, amps, dirs, p) -> np.ndarray:
    """D^p of the trig sum at points x: (n, d_Y)."""
    n = x.shape[0]
    if amps.size == 0:
        return np.zeros((n, dirs.shape[1] if dirs.ndim == 2 else 0))
    p = np.asarray(p, int)
    # factor per term: prod_l (2 pi k_l)^{p_l}; 0^0 == 1 by convention
    base = TWO_PI * freqs.astype(float)
    with np.errstate(divide="ignore"):
        factors = np.prod(np.where(p[None, :] > 0, base ** p[None, :], 1.0), axis=1)
    angle = base[None, :, :] * x[:, None, :] + phases[None, :, :] \
        + 0.5 * math.pi * p[None, None, :]
    cosprod = np.prod(np.cos(angle), axis=2)            # (n, J)
    return cosprod @ ((amps * factors)[:, None] * dirs)  # (n, d_Y)


# --------------------------------------------------------------------------
# classes and designs


@dataclass(frozen=True)
class FunctionClass:
    members: tuple
    b_descriptor: object
    d: int
    m: int
    d_y: int
    resolution: int
    seed: int | None = None

    def __post_init__(self):
        for g in self.members:
            if (g.d, g.m, g.d_y, g.resolution) != (self.d, self.m, self.d_y, self.resolution):
                raise ValueError("members disagree on (d, m, d_y, resolution)")

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i) -> GridFunction:
        return self.members[i]

    def validate_membership(self, tol: float = 1e-9) -> bool:
        """Every stored derivative value of every member lies in B."""
        for g in self.members:
            stacked = np.concatenate([v for v in g.derivs.values()], axis=0)
            if isinstance(self.b_descriptor, SmoothOutputDescriptor):
                if not self.b_descriptor.contains(stacked):
                    return False
            elif not self.b_descriptor.contains(stacked, tol=tol):
                return False
        return True

    def values_on(self, design: "EmpiricalDesign") -> np.ndarray:
        """Member values at the design points, shape (K, n, d_Y)."""
        return np.stack([g.evaluate(design.points) for g in self.members])


@dataclass(frozen=True)
class EmpiricalDesign:
    """Fixed evaluation points with uniform weights 1/n."""

    points: np.ndarray  # (n, d)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise ValueError("design points must lie in the unit cube")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @staticmethod
    def uniform(n: int, d: int, rng: np.random.Generator) -> "EmpiricalDesign":
        return EmpiricalDesign(rng.uniform(size=(n, d)))

    @staticmethod
    def midpoint_grid(n: int, d: int = 1) -> "EmpiricalDesign":
        if d != 1:
            side = int(round(n ** (1.0 / d)))
            axes = [(np.arange(side) + 0.5) / side] * d
            mesh = np.meshgrid(*axes, indexing="ij")
            return EmpiricalDesign(np.stack([m.ravel() for m in mesh], axis=1))
        return EmpiricalDesign(((np.arange(n) + 0.5) / n)[:, None])


# --------------------------------------------------------------------------
# generators


def _term_cap(freqs: np.ndarray, order: int) -> np.ndarray:
    """Per term, max over [p] <= order of prod_l (2 pi k_l)^{p_l}."""
    kmax = freqs.max(axis=1).astype(float)
    return np.maximum(1.0, (TWO_PI * kmax) ** order)


def _draw_terms(rng, n_terms, d, max_freq, min_freq=0):
    freqs = rng.integers(min_freq, max_freq + 1, size=(n_terms, d))
    # avoid the degenerate all-constant member: force one oscillating term
    if np.all(freqs == 0):
        freqs[0, rng.integers(0, d)] = 1 + rng.integers(0, max_freq)
    phases = rng.uniform(0.0, TWO_PI, size=(n_terms, d))
    raw = rng.uniform(0.3, 1.0, size=n_terms) * rng.choice([-1.0, 1.0], size=n_terms)
    return freqs, phases, raw


def _split_budget(rng, raw, per_term_cap, total):
    """Amplitudes a_j with sum_j |a_j| cap_j <= total, budget split per term.

    Splitting (rather than normalising the joint sum) keeps low-frequency
    terms at their full allowed size instead of letting one high-frequency
    cap crush every amplitude.
    """
    weights = np.abs(raw) / np.abs(raw).sum() * total * rng.uniform(0.35, 1.0)
    return np.sign(raw) * weights / per_term_cap


def generate_finite_dim_ball_class(d, m, d_y, k_b, count, seed, resolution=None,
                                   n_terms=6, max_freq=3,
                                   min_freq=0) -> FunctionClass:
    """Members with every D^p g, [p] <= m (indeed m+1), in the K_B ball.

    The amplitude budget sum_j |a_j| max_{[p]<=m+1} prod_l (2 pi k_l)^{p_l}
    is capped at K_B times a per-member draw in [0.35, 1] and split across
    terms, which bounds every derivative sup-norm analytically (triangle
    inequality, unit directions).
    """
    if min(d, m, d_y) < 1 or k_b <= 0 or count < 0:
        raise ValueError("d, m, d_y must be >= 1, k_b > 0, count >= 0")
    resolution = resolution or default_resolution(d)
    members = []
    for i in range(count):
        rng = substream(seed, _TAG_MEMBER, i)
        freqs, phases, raw = _draw_terms(rng, n_terms, d, max_freq, min_freq)
        dirs = rng.standard_normal((n_terms, d_y))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        amps = _split_budget(rng, raw, _term_cap(freqs, m + 1), k_b)
        members.append(GridFunction.from_terms(d, m, d_y, resolution,
                                               freqs, phases, amps, dirs))
    return FunctionClass(members=tuple(members), b_descriptor=BallDescriptor(k_b),
                         d=d, m=m, d_y=d_y, resolution=resolution, seed=seed)


def generate_span_class(d, m, psi_basis, radius, count, seed, d_y=None,
                        resolution=None, n_terms=6, max_freq=3) -> FunctionClass:
    """Members whose derivative values stay in span(psi) with norm <= R."""
    psi = np.atleast_2d(np.asarray(psi_basis, float))
    if psi.shape[0] < 1 or psi.size == 0:
        raise ValueError("span basis must contain at least one vector")
    d_y = d_y or psi.shape[1]
    if psi.shape[1] != d_y:
        raise ValueError("psi vectors must have length d_y")
    if np.linalg.matrix_rank(psi) < psi.shape[0]:
        raise ValueError("span basis is linearly dependent in the truncation")
    if radius <= 0 or count < 0 or min(d, m) < 1:
        raise ValueError("invalid parameters")
    resolution = resolution or default_resolution(d)
    r = psi.shape[0]
    psi_norms = np.linalg.norm(psi, axis=1)
    members = []
    for i in range(count):
        rng = substream(seed, _TAG_MEMBER, i)
        freqs, phases, raw = _draw_terms(rng, n_terms, d, max_freq)
        idx = rng.integers(0, r, size=n_terms)
        dirs = psi[idx]
        amps = _split_budget(rng, raw, _term_cap(freqs, m + 1) * psi_norms[idx],
                             radius)
        members.append(GridFunction.from_terms(d, m, d_y, resolution,
                                               freqs, phases, amps, dirs))
    return FunctionClass(members=tuple(members),
                         b_descriptor=SpanDescriptor(psi=psi, radius=radius),
                         d=d, m=m, d_y=d_y, resolution=resolution, seed=seed)


def generate_smooth_output_class(d, m, d_out, m_out, bound, grid_out, count, seed,
                                 resolution=None, n_terms=6, max_freq=2,
                                 max_freq_out=2) -> FunctionClass:
    """Members g(x) valued in m'-smooth functions on a d'-dim output grid.

    g(x)(x') = sum_j a_j phi_j(x) chi_j(x') with trig factors on both sides;
    amplitudes are scaled so |D^q_{x'} D^p_x g| <= M for [p] <= m+1 and
    [q] <= m'. Coordinates are output-grid samples scaled by 1/sqrt(d_Y).
    """
    if m_out < 1:
        raise ValueError("m' must be a positive integer")
    if grid_out <= m_out:
        raise ValueError("output grid too coarse for the order-m' finite-difference check")
    if min(d, m, d_out) < 1 or bound <= 0 or count < 0:
        raise ValueError("invalid parameters")
    resolution = resolution or default_resolution(d)
    d_y = grid_out ** d_out
    out_nodes = grid_nodes(d_out, grid_out)
    members = []
    for i in range(count):
        rng = substream(seed, _TAG_MEMBER, i)
        freqs, phases, raw = _draw_terms(rng, n_terms, d, max_freq)
        out_freqs = rng.integers(0, max_freq_out + 1, size=(n_terms, d_out))
        out_phases = rng.uniform(0.0, TWO_PI, size=(n_terms, d_out))
        angle = TWO_PI * out_freqs[:, None, :] * out_nodes[None, :, :] \
            + out_phases[:, None, :]
        chi = np.prod(np.cos(angle), axis=2)          # (J, d_Y)
        dirs = chi / math.sqrt(d_y)
        amps = _split_budget(rng, raw, _term_cap(freqs, m + 1)
                             * _term_cap(out_freqs, m_out), bound)
        members.append(GridFunction.from_terms(d, m, d_y, resolution,
                                               freqs, phases, amps, dirs))
    descriptor = SmoothOutputDescriptor(d_out=d_out, m_out=m_out, bound=bound,
                                        grid_out=grid_out)
    return FunctionClass(members=tuple(members), b_descriptor=descriptor,
                         d=d, m=m, d_y=d_y, resolution=resolution, seed=seed)


def sample_range_set(descriptor, count, d_y, seed) -> np.ndarray:
    """Explicit sample of the range set B, for cover augmentation."""
    return descriptor.sample(count, d_y, substream(seed, _TAG_SAMPLE_B))


def blend_members(g0: GridFunction, g1: GridFunction, weight: float) -> GridFunction:
    """(1-w) g0 + w g1, again a trig-sum member of the same class.

    The derivative-budget constraint is a norm ball, hence convex, so convex
    combinations of members remain members; the blend concatenates the two
    term lists with reweighted amplitudes.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    if (g0.d, g0.m, g0.d_y, g0.resolution) != (g1.d, g1.m, g1.d_y, g1.resolution):
        raise ValueError("members disagree on (d, m, d_y, resolution)")
    return GridFunction.from_terms(
        g0.d, g0.m, g0.d_y, g0.resolution,
        np.vstack([g0.freqs, g1.freqs]),
        np.vstack([g0.phases, g1.phases]),
        np.concatenate([(1.0 - weight) * g0.amps, weight * g1.amps]),
        np.vstack([g0.dirs, g1.dirs]))


# --------------------------------------------------------------------------
# seminorms and checks


def sup_norm(g: GridFunction) -> float:
    """Grid approximation of sup_x ||g(x)||: max over stored nodes."""
    return float(np.max(np.linalg.norm(g.values, axis=1))) if g.values.size else 0.0


def sup_distance(g1: GridFunction, g2: GridFunction) -> float:
    return float(np.max(np.linalg.norm(g1.values - g2.values, axis=1)))


def lp_seminorm(g: GridFunction, p: float, design: EmpiricalDesign) -> float:
    """((1/n) sum_i ||g(X_i)||^p)^{1/p}, evaluated off-grid exactly."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if design.n == 0:
        raise ValueError("design must be nonempty")
    norms = np.linalg.norm(g.evaluate(design.points), axis=1)
    return float(np.mean(norms ** p) ** (1.0 / p))


def semi_inner_product(g1: GridFunction, g2: GridFunction,
                       design: EmpiricalDesign) -> float:
    """<g1, g2>_{2,P_n} = (1/n) sum_i <g1(X_i), g2(X_i)>."""
    v1 = g1.evaluate(design.points)
    v2 = g2.evaluate(design.points)
    return float(np.mean(np.sum(v1 * v2, axis=1)))


def envelope(cls: FunctionClass, design: EmpiricalDesign) -> np.ndarray:
    """G(X_i) = max over members of ||g(X_i)||, per design point."""
    if len(cls) == 0:
        raise ValueError("envelope of an empty class is undefined")
    vals = cls.values_on(design)
    return np.linalg.norm(vals, axis=2).max(axis=0)


@dataclass(frozen=True)
class TaylorReport:
    lhs: float
    rhs: float
    ok: bool


def taylor_remainder_check(g: GridFunction, a, h, k: float | None = None) -> TaylorReport:
    """Order-m Taylor expansion at a, Lagrange remainder bound K||h||^{m+1}/(m+1)!.

    K defaults to the generator's own operator-norm bound on g^{(m+1)}.
    """
    a = np.asarray(a, float).reshape(1, -1)
    h = np.asarray(h, float).reshape(1, -1)
    b = a + h
    for pt in (a, b):
        if pt.min() < -1e-12 or pt.max() > 1 + 1e-12:
            raise ValueError("segment leaves the unit cube")
    if k is None:
        k = g.taylor_k
    approx = np.zeros((1, g.d_y))
    for p in multi_indices(g.d, g.m):
        hp = float(np.prod(h[0] ** np.asarray(p)))
        pfact = float(np.prod([math.factorial(c) for c in p]))
        approx += (hp / pfact) * g.evaluate_deriv(a, p)
    lhs = float(np.linalg.norm(g.evaluate(b) - approx))
    rhs = float(k * np.linalg.norm(h) ** (g.m + 1) / math.factorial(g.m + 1))
    return TaylorReport(lhs=lhs, rhs=rhs, ok=lhs <= rhs * (1 + 1e-9))


# --------------------------------------------------------------------------
# exact moments under the uniform law on [0,1]^d


def _axis_mean(k, theta):
    """int_0^1 cos(2 pi k x + theta) dx for integer k."""
    return np.where(k == 0, np.cos(theta), 0.0)


def mean_uniform(g: GridFunction) -> np.ndarray:
    """Pg = int g dP for P uniform on the cube; exact."""
    if g.amps.size == 0:
        return np.zeros(g.d_y)
    factors = np.prod(_axis_mean(g.freqs, g.phases), axis=1)
    return (g.amps * factors) @ g.dirs


def inner_uniform(g1: GridFunction, g2: GridFunction) -> float:
    """<g1, g2>_{2,P} = int <g1(x), g2(x)> dx; exact for the trig family."""
    if g1.amps.size == 0 or g2.amps.size == 0:
        return 0.0
    k1, k2 = g1.freqs, g2.freqs
    t1, t2 = g1.phases, g2.phases
    prod = np.ones((k1.shape[0], k2.shape[0]))
    for axis in range(g1.d):
        ka = k1[:, axis][:, None]
        kb = k2[:, axis][None, :]
        ta = t1[:, axis][:, None]
        tb = t2[:, axis][None, :]
        both_zero = (ka == 0) & (kb == 0)
        equal = (ka == kb) & ~both_zero
        axis_val = np.where(both_zero, np.cos(ta) * np.cos(tb),
                            np.where(equal, 0.5 * np.cos(ta - tb), 0.0))
        prod *= axis_val
    gram = g1.dirs @ g2.dirs.T
    return float(g1.amps @ (prod * gram) @ g2.amps)


def l2_distance_uniform(g1: GridFunction, g2: GridFunction) -> float:
    """||g1 - g2||_{2,P} under the uniform law; exact."""
    sq = inner_uniform(g1, g1) - 2.0 * inner_uniform(g1, g2) + inner_uniform(g2, g2)
    return math.sqrt(max(sq, 0.0))


# --------------------------------------------------------------------------
# serialization: JSON header + little-endian float64 payload

_MAGIC = b"VPFC"


def save_class(cls: FunctionClass, path) -> None:
    header = {
        "format": "vecproc-function-class",
        "version": 1,
        "d": cls.d, "m": cls.m, "d_y": cls.d_y, "resolution": cls.resolution,
        "count": len(cls), "seed": cls.seed,
        "b_descriptor": cls.b_descriptor.to_json(),
        "multi_indices": [list(p) for p in multi_indices(cls.d, cls.m)],
        "n_terms": [int(g.amps.size) for g in cls.members],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(np.uint32(len(blob)).astype("<u4").tobytes())
    buf.write(blob)
    order = multi_indices(cls.d, cls.m)
    for g in cls.members:
        for arr in (g.freqs.astype(float), g.phases, g.amps, g.dirs):
            buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        for p in order:
            buf.write(np.ascontiguousarray(g.derivs[p], dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_class(path) -> FunctionClass:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise ValueError("not a vecproc function-class file")
    hlen = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    d, m, d_y = header["d"], header["m"], header["d_y"]
    resolution = header["resolution"]
    order = [tuple(p) for p in header["multi_indices"]]
    nodes = resolution ** d
    offset = 8 + hlen
    data = np.frombuffer(raw, dtype="<f8", offset=offset)
    pos = 0

    def take(count):
        nonlocal pos
        out = data[pos:pos + count]
        pos += count
        return np.array(out)

    members = []
    for j in header["n_terms"]:
        freqs = take(j * d).reshape(j, d).astype(int)
        phases = take(j * d).reshape(j, d)
        amps = take(j)
        dirs = take(j * d_y).reshape(j, d_y)
        derivs = {}
        for p in order:
            derivs[p] = take(nodes * d_y).reshape(nodes, d_y)
        values = derivs[(0,) * d]
        knorm = np.linalg.norm(freqs.astype(float), axis=1)
        taylor_k = float(np.sum(np.abs(amps) * np.linalg.norm(dirs, axis=1)
                                * (TWO_PI * knorm) ** (m + 1)))
        members.append(GridFunction(d=d, m=m, d_y=d_y, resolution=resolution,
                                    freqs=freqs, phases=phases, amps=amps,
                                    dirs=dirs, values=values, derivs=derivs,
                                    taylor_k=taylor_k))
    return FunctionClass(members=tuple(members),
                         b_descriptor=descriptor_from_json(header["b_descriptor"]),
                         d=d, m=m, d_y=d_y, resolution=resolution,
                         seed=header.get("seed"))
