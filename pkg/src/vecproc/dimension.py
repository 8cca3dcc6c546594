"""Box-counting dimension estimation and homogeneity / Assouad checks.

All estimates operate on finite samples, so the box dimension comes from a
least-squares fit of entropy against log(1/delta) over a declared window,
and the Assouad-type quantities are explicitly heuristic upper estimates: a
finite sample can refute homogeneity (a ball needing too many small balls)
but never certify it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import PointCloud, exact_cover_number, greedy_cover
from .rng import substream

_TAG_TRIAL = 201

EXACT_LOCAL_LIMIT = 12
EXACT_LOCAL_MAX = 20


@dataclass(frozen=True)
class DimensionFit:
    delta_grid: np.ndarray
    entropies: np.ndarray
    slope: float
    intercept: float
    fit_range: tuple

    def to_json(self):
        return {"delta_grid": [float(d) for d in self.delta_grid],
                "entropies": [float(h) for h in self.entropies],
                "slope": self.slope, "intercept": self.intercept,
                "fit_range": list(self.fit_range)}


def _spread_starts(cloud: PointCloud, n_starts: int) -> np.ndarray:
    """Deterministic well-separated start indices: a coarse greedy cover."""
    coarse = greedy_cover(cloud, max(approx_diameter(cloud), 1e-12) / 4.0)
    return coarse.center_indices[:n_starts]


def greedy_entropy(cloud: PointCloud, delta: float, starts=None) -> float:
    """log of the smallest greedy cover over a fixed set of starting points.

    Every restart yields a valid cover, so the minimum is a tighter upper
    bound on N(delta) than any single run; restarting from spread points
    also damps the drift a corner start induces across radii.
    """
    if starts is None:
        starts = _spread_starts(cloud, 8)
    best = min(_greedy_size_from(cloud, delta, int(s)) for s in starts)
    return math.log(best)


def _greedy_size_from(cloud: PointCloud, delta: float, start: int) -> int:
    mindist = cloud.distances_to(start)
    count = 1
    while True:
        far = int(np.argmax(mindist))
        if mindist[far] <= delta:
            return count
        count += 1
        mindist = np.minimum(mindist, cloud.distances_to(far))


def box_dimension_estimate(cloud: PointCloud, delta_grid,
                           fit_range: tuple | None = None,
                           n_starts: int = 8) -> DimensionFit:
    """Fit H(delta) against log(1/delta) over the declared radius window.

    Entropies are greedy-cover entropies (smallest cover over n_starts
    deterministic spread starting points); the grid must be strictly
    decreasing with at least four radii.
    """
    deltas = np.asarray(delta_grid, float)
    if deltas.size < 4:
        raise ValueError("need at least 4 radii")
    if np.any(np.diff(deltas) >= 0):
        raise ValueError("delta grid must be strictly decreasing")
    if cloud.size == 0:
        raise ValueError("cloud must be nonempty")
    starts = _spread_starts(cloud, n_starts)
    entropies = np.array([greedy_entropy(cloud, d, starts) for d in deltas])
    lo, hi = fit_range if fit_range is not None else (0, deltas.size)
    x = np.log(1.0 / deltas[lo:hi])
    y = entropies[lo:hi]
    slope, intercept = np.polyfit(x, y, 1)
    return DimensionFit(delta_grid=deltas, entropies=entropies,
                        slope=float(slope), intercept=float(intercept),
                        fit_range=(lo, hi))


def default_radius_window(cloud: PointCloud):
    """[2 x median nearest-neighbour distance, diameter / 4].

    Below the lower end discreteness dominates; above the upper end boundary
    effects dominate.
    """
    nn = median_nn_distance(cloud)
    diam = approx_diameter(cloud)
    return 2.0 * nn, diam / 4.0


def median_nn_distance(cloud: PointCloud) -> float:
    n = cloud.size
    idx = range(n) if n <= 1024 else np.linspace(0, n - 1, 512).astype(int)
    dists = []
    for i in idx:
        d = cloud.distances_to(int(i))
        d[int(i)] = np.inf
        dists.append(d.min())
    return float(np.median(dists))


def approx_diameter(cloud: PointCloud) -> float:
    """Two farthest-point sweeps; within a factor 2 of the true diameter."""
    d0 = cloud.distances_to(0)
    far = int(np.argmax(d0))
    d1 = cloud.distances_to(far)
    return float(max(d0.max(), d1.max()))


@dataclass(frozen=True)
class HomogeneityTrial:
    center: int
    radius_big: float
    radius_small: float
    local_size: int
    measured: int
    bound: float
    exact: bool
    ok: bool


@dataclass(frozen=True)
class HomogeneityReport:
    m: float
    tau: float
    trials: tuple

    @property
    def all_ok(self) -> bool:
        return all(t.ok for t in self.trials)

    def to_json(self):
        return {"m": self.m, "tau": self.tau, "all_ok": self.all_ok,
                "trials": [{"center": t.center, "R": t.radius_big,
                            "r": t.radius_small, "local_size": t.local_size,
                            "measured": t.measured, "bound": t.bound,
                            "exact": t.exact, "ok": t.ok} for t in self.trials]}


def _sample_trials(cloud: PointCloud, n_trials: int, seed: int,
                   radius_range=None):
    """Random (center, R, r) triples with R and r log-uniform, r <= R/2.

    radius_range optionally pins (R_lo, R_hi); the default spans twice the
    median nearest-neighbour distance up to a quarter of the diameter.
    """
    nn = max(median_nn_distance(cloud), 1e-12)
    diam = approx_diameter(cloud)
    r_lo = 1.5 * nn
    if radius_range is not None:
        big_lo, big_hi = radius_range
    else:
        big_hi = max(diam / 4.0, 8.0 * nn)
        big_lo = min(4.0 * nn, big_hi / 2.0)
    # trial centres come from the central half of the cloud: local balls
    # around extreme points are clipped by the sample edge, which biases
    # local counts (and hence dimension estimates) downward
    d0 = cloud.distances_to(0)
    far = int(np.argmax(d0))
    d_far = cloud.distances_to(far)
    d_far2 = cloud.distances_to(int(np.argmax(d_far)))
    centrality = np.maximum(d_far, d_far2)
    candidates = np.where(centrality <= np.median(centrality))[0]
    out = []
    for i in range(n_trials):
        rng = substream(seed, _TAG_TRIAL, i)
        z = int(candidates[rng.integers(0, candidates.size)])
        radius_big = math.exp(rng.uniform(math.log(big_lo), math.log(big_hi)))
        # favour large R/r (better scaling regime) while keeping r above the
        # discreteness floor
        ratio_hi = max(2.0, min(16.0, radius_big / r_lo))
        ratio = math.exp(rng.uniform(math.log(2.0), math.log(ratio_hi)))
        out.append((z, radius_big, radius_big / ratio))
    return out


def _local_cover_number(cloud: PointCloud, center: int, radius_big: float,
                        radius_small: float):
    """Covering number of the ball B(z, R) cap E at radius r.

    Exact when the local set is small enough to brute-force; otherwise the
    spread-start greedy upper bound (failures are then conservative evidence
    only).
    """
    dist = cloud.distances_to(center)
    local_idx = np.where(dist <= radius_big)[0]
    local = cloud.subset(local_idx)
    if local.size <= EXACT_LOCAL_MAX:
        return exact_cover_number(local, radius_small), True, local.size
    count = round(math.exp(greedy_entropy(local, radius_small)))
    return count, False, local.size


def homogeneity_check(cloud: PointCloud, m: float, tau: float, n_trials: int,
                      seed: int, radius_range=None) -> HomogeneityReport:
    """Test N(r, B(z,R) cap E) <= M (R/r)^tau on random local balls."""
    if m < 1 or tau <= 0:
        raise ValueError("need M >= 1 and tau > 0")
    trials = []
    for z, radius_big, radius_small in _sample_trials(cloud, n_trials, seed,
                                                      radius_range):
        measured, exact, local_size = _local_cover_number(
            cloud, z, radius_big, radius_small)
        bound = m * (radius_big / radius_small) ** tau
        trials.append(HomogeneityTrial(center=z, radius_big=radius_big,
                                       radius_small=radius_small,
                                       local_size=local_size,
                                       measured=measured, bound=bound,
                                       exact=exact,
                                       ok=measured <= bound * (1 + 1e-12)))
    return HomogeneityReport(m=m, tau=tau, trials=tuple(trials))


def assouad_estimate(cloud: PointCloud, seed: int, n_trials: int = 64):
    """Heuristic upper estimate of (M, tau) from sampled local covers.

    tau is the least-squares slope of log N against log(R/r); M is then
    inflated so every sampled trial satisfies the homogeneity bound. A
    finite sample cannot certify homogeneity, so this is an estimate only.
    """
    if cloud.size < 10:
        raise ValueError("need at least 10 points")
    counts, ratios = [], []
    for z, radius_big, radius_small in _sample_trials(cloud, n_trials, seed):
        measured, _, _ = _local_cover_number(cloud, z, radius_big, radius_small)
        counts.append(measured)
        ratios.append(radius_big / radius_small)
    counts = np.array(counts, float)
    ratios = np.array(ratios, float)
    if np.all(counts == 1):
        return 1.0, 0.0
    slope, _ = np.polyfit(np.log(ratios), np.log(counts), 1)
    tau = max(float(slope), 0.0)
    if tau == 0.0:
        return float(max(counts.max(), 1.0)), 0.0
    m = float(max(1.0, np.max(counts / ratios ** tau)))
    return m, tau
