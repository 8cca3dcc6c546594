"""Covering numbers of finite metric sets and the constructive smooth cover.

Two families of operations live here: generic covers of finite point clouds
(deterministic farthest-point greedy, exhaustive exact minimum, maximal
packing), and the piecewise-polynomial cover of a smooth vector-valued
function class built from a spatial net plus per-derivative-level covers of
the range set, with cells disjointified in greedy order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .function_class import (EmpiricalDesign, FunctionClass, multi_indices,
                             sample_range_set, sup_distance)


# --------------------------------------------------------------------------
# point clouds


@dataclass(frozen=True)
class PointCloud:
    """Finite metric set: coordinates, sup-metric tensors, or a distance matrix."""

    points: np.ndarray
    metric: str = "euclidean"  # "euclidean" | "sup" | "matrix"

    def __post_init__(self):
        pts = np.asarray(self.points, float)
        if self.metric == "euclidean":
            pts = np.atleast_2d(pts)
        elif self.metric == "sup":
            if pts.ndim != 3:
                raise ValueError("sup metric expects (N, nodes, d_Y) value tensors")
        elif self.metric == "matrix":
            if pts.ndim != 2 or pts.shape[0] != pts.shape[1]:
                raise ValueError("matrix metric expects a square distance matrix")
            if np.any(np.abs(pts - pts.T) > 1e-9) or np.any(np.diag(pts) > 1e-12):
                raise ValueError("distance matrix must be symmetric with zero diagonal")
        else:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud contains non-finite entries")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def distances_to(self, index: int) -> np.ndarray:
        """Distances from every point to the point at `index`."""
        if self.metric == "euclidean":
            return np.linalg.norm(self.points - self.points[index], axis=1)
        if self.metric == "matrix":
            return self.points[index].copy()
        diff = self.points - self.points[index]
        return np.linalg.norm(diff, axis=2).max(axis=1)

    def distance_matrix(self) -> np.ndarray:
        if self.metric == "euclidean":
            sq = np.sum(self.points ** 2, axis=1)
            d2 = sq[:, None] + sq[None, :] - 2.0 * self.points @ self.points.T
            out = np.sqrt(np.maximum(d2, 0.0))
            out = 0.5 * (out + out.T)
            np.fill_diagonal(out, 0.0)
            return out
        if self.metric == "matrix":
            return self.points
        return np.stack([self.distances_to(i) for i in range(self.size)])

    def subset(self, indices) -> "PointCloud":
        indices = np.asarray(indices, int)
        if self.metric == "matrix":
            return PointCloud(self.points[np.ix_(indices, indices)], metric="matrix")
        return PointCloud(self.points[indices], metric=self.metric)

    @staticmethod
    def from_hpoints(points) -> "PointCloud":
        return PointCloud(np.atleast_2d(np.asarray(points, float)))

    @staticmethod
    def from_grid_functions(cls: FunctionClass) -> "PointCloud":
        """Members under the sup-norm metric, via their stored grids."""
        return PointCloud(np.stack([g.values for g in cls.members]), metric="sup")

    @staticmethod
    def from_empirical(cls: FunctionClass, design: EmpiricalDesign) -> "PointCloud":
        """Members under ||.||_{2,P_n}: scaled flattened design values."""
        vals = cls.values_on(design)
        flat = vals.reshape(len(cls), -1) / math.sqrt(design.n)
        return PointCloud(flat)


# --------------------------------------------------------------------------
# greedy and exact covers


@dataclass(frozen=True)
class CoverResult:
    radius: float
    center_indices: np.ndarray     # indices into the cloud
    assignment: np.ndarray         # per point, index into center_indices
    assignment_dist: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.center_indices)

    def is_valid(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.assignment_dist <= self.radius * (1 + tol) + tol))

    def to_json(self):
        return {"radius": self.radius,
                "center_indices": [int(i) for i in self.center_indices],
                "assignment": [int(i) for i in self.assignment]}


def greedy_cover(cloud: PointCloud, delta: float) -> CoverResult:
    """Deterministic farthest-point cover with centers in the cloud.

    First center is point 0; each next center is the farthest point from the
    current centers (ties broken by lowest index) until every point sits
    within `delta` of some center. Points are assigned to their nearest
    center, ties again to the lowest center position.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if cloud.size == 0:
        raise ValueError("cloud must be nonempty")
    centers = [0]
    mindist = cloud.distances_to(0)
    nearest = np.zeros(cloud.size, dtype=int)
    while True:
        far = int(np.argmax(mindist))  # argmax returns the first (lowest) index
        if mindist[far] <= delta:
            break
        centers.append(far)
        dist = cloud.distances_to(far)
        closer = dist < mindist
        nearest[closer] = len(centers) - 1
        mindist = np.where(closer, dist, mindist)
    return CoverResult(radius=float(delta), center_indices=np.array(centers),
                       assignment=nearest, assignment_dist=mindist)


def exact_cover_number(cloud: PointCloud, delta: float) -> int:
    """Minimum number of radius-delta balls with centers in the cloud.

    Branch and bound over cover bitmasks; exponential, so the cloud is
    capped at 20 points.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = cloud.size
    if n == 0:
        raise ValueError("cloud must be nonempty")
    if n > 20:
        raise ValueError("exact cover limited to clouds of at most 20 points")
    dm = cloud.distance_matrix()
    masks = []
    for j in range(n):
        mask = 0
        for i in range(n):
            if dm[i, j] <= delta * (1 + 1e-12):
                mask |= 1 << i
        masks.append(mask)
    full = (1 << n) - 1
    best = len(greedy_cover(cloud, delta).center_indices)
    order = sorted(range(n), key=lambda j: -bin(masks[j]).count("1"))

    def search(covered: int, used: int):
        nonlocal best
        if used >= best:
            return
        if covered == full:
            best = used
            return
        # lowest uncovered point must be covered by one of its candidates
        low = (~covered & full) & -(~covered & full)
        for j in order:
            if masks[j] & low:
                search(covered | masks[j], used + 1)

    search(0, 0)
    return best


def max_packing_size(cloud: PointCloud, delta: float) -> int:
    """Largest subset with pairwise distances > delta (brute force, <= 16)."""
    n = cloud.size
    if n > 16:
        raise ValueError("brute-force packing limited to 16 points")
    dm = cloud.distance_matrix()
    conflict = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and dm[i, j] <= delta:
                conflict[i] |= 1 << j
    best = 0
    for subset in range(1 << n):
        size = bin(subset).count("1")
        if size <= best:
            continue
        ok = True
        for i in range(n):
            if subset >> i & 1 and conflict[i] & subset:
                ok = False
                break
        if ok:
            best = size
    return best


def entropy(cloud: PointCloud, delta: float, mode: str = "greedy") -> float:
    """log covering number at radius delta, greedy or exact."""
    if mode == "greedy":
        count = greedy_cover(cloud, delta).size
    elif mode == "exact":
        count = exact_cover_number(cloud, delta)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return math.log(count)


# --------------------------------------------------------------------------
# constructive cover of a smooth class


def smooth_cover_constants(d: int, m: int, k_b: float, delta: float):
    """Remainder constant K1, net spacing Delta, and grid-net size L.

    K1 = max(1, max_{0<=k<=m-1} d^{m-k} K_B / (m-k)!) bounds the order-
    (m-[p]) Taylor remainders of all D^p g; Delta = (delta/4K1)^{1/m}; the
    spatial net has ceil(sqrt(d)/Delta) cubes per axis.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    k1 = max(1.0, max(d ** (m - k) * k_b / math.factorial(m - k)
                      for k in range(m)))
    cap_delta = (delta / (4.0 * k1)) ** (1.0 / m)
    n_side = math.ceil(math.sqrt(d) / cap_delta)
    return k1, cap_delta, n_side, n_side ** d


@dataclass(frozen=True)
class LevelCover:
    """Disjointified cover of the level-k derivative values of the class."""

    radius: float                  # delta_k: cell diameter bound
    centers: np.ndarray            # (N_k, d_Y) ball centers a^k_j
    n_cells: int


@dataclass(frozen=True)
class SmoothCoverPlan:
    delta: float
    k1: float
    cap_delta: float               # Delta = (delta/4K1)^{1/m}
    net_points: np.ndarray         # (L, d) cube centers, row-major
    level_radii: np.ndarray        # delta_k, k = 0..m-1
    level_covers: tuple            # LevelCover per k
    signatures: np.ndarray         # (members, L * #p) cell ids
    signature_keys: tuple          # (l, p) column order of `signatures`

    @property
    def n_net(self) -> int:
        return self.net_points.shape[0]

    def occupied_cell_count(self) -> int:
        """Number of distinct member signatures (occupied product cells)."""
        return len({tuple(row) for row in self.signatures})

    def groups(self):
        """Member indices grouped by identical signature."""
        buckets = {}
        for i, row in enumerate(self.signatures):
            buckets.setdefault(tuple(row), []).append(i)
        return list(buckets.values())

    def to_json(self):
        return {"delta": self.delta, "k1": self.k1, "cap_delta": self.cap_delta,
                "n_net": self.n_net,
                "level_radii": [float(r) for r in self.level_radii],
                "level_cells": [c.n_cells for c in self.level_covers],
                "occupied_cells": self.occupied_cell_count()}


def _net_points(d: int, n_side: int) -> np.ndarray:
    axes = [(np.arange(n_side) + 0.5) / n_side] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _first_cover_assign(points: np.ndarray, centers: np.ndarray, radius: float):
    """Cell of each point: first center (in order) within `radius`."""
    cells = np.full(points.shape[0], -1, dtype=int)
    remaining = np.arange(points.shape[0])
    for j, c in enumerate(centers):
        if remaining.size == 0:
            break
        d = np.linalg.norm(points[remaining] - c, axis=1)
        hit = d <= radius * (1 + 1e-12)
        cells[remaining[hit]] = j
        remaining = remaining[~hit]
    if remaining.size:
        raise RuntimeError("cover does not cover its own sample")
    return cells


def build_smooth_cover(cls: FunctionClass, delta: float, b_sample_count: int = 0,
                       sample_seed: int = 0) -> SmoothCoverPlan:
    """Constructive delta-cover of a smooth class under the sup norm.

    Builds the Delta/2 cube net, covers the sampled level-k derivative
    values of the range set at radius delta_k/2 (delta_k = delta/(2 Delta^k e^d))
    with greedy covers, disjointifies cells in greedy center order, and
    assigns every member its cell signature over all net points and all
    multi-indices [p] <= m-1. Members sharing a signature are sup-distance
    at most delta apart.
    """
    if len(cls) == 0:
        raise ValueError("class must be nonempty")
    d, m = cls.d, cls.m
    k_b = cls.b_descriptor.k_b
    k1, cap_delta, n_side, _ = smooth_cover_constants(d, m, k_b, delta)
    net = _net_points(d, n_side)
    level_radii = np.array([delta / (2.0 * cap_delta ** k * math.exp(d))
                            for k in range(m)])

    p_list = multi_indices(d, m - 1)
    # exact derivative values of every member at every net point, per level
    deriv_vals = {}
    for p in p_list:
        deriv_vals[p] = np.stack([g.evaluate_deriv(net, p) for g in cls.members])

    level_covers = []
    level_cells = {}
    for k in range(m):
        ps = [p for p in p_list if sum(p) == k]
        sample = np.concatenate([deriv_vals[p].reshape(-1, cls.d_y) for p in ps])
        if b_sample_count > 0:
            extra = sample_range_set(cls.b_descriptor, b_sample_count, cls.d_y,
                                     sample_seed + k)
            sample = np.concatenate([sample, extra])
        cloud = PointCloud(sample)
        cover = greedy_cover(cloud, level_radii[k] / 2.0)
        centers = sample[cover.center_indices]
        level_covers.append(LevelCover(radius=float(level_radii[k]),
                                       centers=centers,
                                       n_cells=cover.size))
        for p in ps:
            flat = deriv_vals[p].reshape(-1, cls.d_y)
            cells = _first_cover_assign(flat, centers, level_radii[k] / 2.0)
            level_cells[p] = cells.reshape(len(cls), net.shape[0])

    keys = [(l, p) for l in range(net.shape[0]) for p in p_list]
    signatures = np.empty((len(cls), len(keys)), dtype=int)
    for col, (l, p) in enumerate(keys):
        signatures[:, col] = level_cells[p][:, l]
    return SmoothCoverPlan(delta=float(delta), k1=k1, cap_delta=cap_delta,
                           net_points=net, level_radii=level_radii,
                           level_covers=tuple(level_covers),
                           signatures=signatures, signature_keys=tuple(keys))


@dataclass(frozen=True)
class CoverValidityReport:
    pairs_checked: int
    max_violation: float   # max over same-signature pairs of supdist/delta
    ok: bool


def verify_cover_validity(cls: FunctionClass, plan: SmoothCoverPlan) -> CoverValidityReport:
    """Same cell signature must imply sup-distance at most delta."""
    pairs = 0
    worst = 0.0
    for group in plan.groups():
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                dist = sup_distance(cls[group[a]], cls[group[b]])
                worst = max(worst, dist / plan.delta)
                pairs += 1
    return CoverValidityReport(pairs_checked=pairs, max_violation=worst,
                               ok=worst <= 1 + 1e-9)
