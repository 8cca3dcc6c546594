"""Fixed-design least squares with Hilbert-valued Gaussian noise, the peeling
threshold, rate experiments, Gaussian chaining, and Lipschitz-loss ERM.

The estimator is always an exhaustive argmin over a finite candidate class (a
net of the smooth class; the infinite argmin is not computable), with the net
radius tied to the peeling threshold delta_n so discretization error stays
subdominant. Everything is a deterministic function of (seed, reps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .concentration import CovarianceSpectrum, sample_gaussian_batch
from .covering import PointCloud, greedy_cover
from .empirical_process import build_chaining_plan
from .function_class import EmpiricalDesign, FunctionClass, SmoothOutputDescriptor
from .reports import TailReport, binomial_report
from .rng import map_blocks, substream

_TAG_LS = 501
_TAG_RATE = 502
_TAG_GCHAIN = 503
_TAG_ERM = 504
_TAG_ERM_RAD = 505


@dataclass(frozen=True)
class RegressionConfig:
    """Well-specified fixed-design setup: g0 is a member of the class."""

    cls: FunctionClass
    g0_index: int
    design: EmpiricalDesign
    noise: CovarianceSpectrum
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.g0_index < len(self.cls):
            raise ValueError("g0_index out of range")
        if abs(self.noise.trace - 1.0) > 1e-9:
            raise ValueError("noise covariance must have trace 1")
        if self.noise.d_y != self.cls.d_y:
            raise ValueError("noise dimension must match the output space")


@dataclass(frozen=True)
class LeastSquaresFit:
    index: int
    error: float            # ||ghat - g0||_{2,P_n}
    basic_lhs: float        # error^2
    basic_rhs: float        # 2 <eps, ghat - g0>_{2,P_n}


def least_squares_fit(cls: FunctionClass, g0_index: int, design: EmpiricalDesign,
                      noise: CovarianceSpectrum, seed: int,
                      replicate: int = 0) -> LeastSquaresFit:
    """Exhaustive least squares over the class for one noise replicate."""
    vals = cls.values_on(design)
    rng = substream(seed, _TAG_LS, replicate)
    eps = sample_gaussian_batch(noise, rng, design.n)
    y = vals[g0_index] + eps
    resid = np.sum((y[None] - vals) ** 2, axis=(1, 2))
    idx = int(np.argmin(resid))
    diff = vals[idx] - vals[g0_index]
    err2 = float(np.sum(diff ** 2) / design.n)
    rhs = 2.0 * float(np.sum(eps * diff) / design.n)
    return LeastSquaresFit(index=idx, error=math.sqrt(err2),
                           basic_lhs=err2, basic_rhs=rhs)


# --------------------------------------------------------------------------
# peeling threshold


def solve_delta_n(j_curve, n: int, t: float, bracket=(1e-8, 10.0),
                  rel_tol: float = 1e-6, check_grid=None) -> float:
    """Smallest delta with sqrt(n) delta^2 >= 8 (J(delta) + 4 delta sqrt(1+t)
    + delta sqrt(8t/3)), located by bisection to relative precision.

    The hypothesis that J(delta)/delta^2 is nonincreasing is checked on a
    grid; under it the feasible set is an upper interval, so bisection finds
    the boundary.
    """
    if t < 3.0 / 8.0:
        raise ValueError("theorem requires t >= 3/8")
    lo, hi = bracket
    if check_grid is None:
        check_grid = np.geomspace(max(lo, 1e-6), hi, 24)
    ratios = np.array([j_curve(u) / u ** 2 for u in check_grid])
    if np.any(ratios < -1e-12):
        raise ValueError("J must be nonnegative")
    if np.any(np.diff(ratios) > 1e-9 + 1e-6 * np.abs(ratios[:-1])):
        raise ValueError("J(delta)/delta^2 must be nonincreasing on the check grid")
    coef = 4.0 * math.sqrt(1.0 + t) + math.sqrt(8.0 * t / 3.0)

    def feasible(delta):
        return math.sqrt(n) * delta ** 2 >= 8.0 * (j_curve(delta) + delta * coef)

    if not feasible(hi):
        raise ValueError("no feasible delta below the bracket upper end")
    if feasible(lo):
        return lo
    while hi / lo > 1.0 + rel_tol:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def measured_entropy_integral(dist_matrix: np.ndarray, center: int,
                              u_points: int = 20):
    """Empirical J(delta) = 4 int_0^delta sqrt(2 H(u, ball(delta))) du.

    H is the greedy-cover entropy of the members within delta of `center`
    (the class shifted by g0), integrated on a log grid in u with the
    saturation value log(ball size) used below the grid; both choices only
    increase J, keeping any threshold solved from it valid. The returned
    callable is the nonincreasing-J/delta^2 envelope of the raw measurement,
    so the peeling hypothesis holds by construction.
    """
    norms = dist_matrix[center]
    positive = np.sort(norms[norms > 0])
    if positive.size == 0:
        return lambda delta: 0.0
    grid = np.geomspace(max(positive[0] * 0.5, 1e-9), positive[-1] * 1.001, 28)

    def raw_j(delta):
        inside = np.where(norms <= delta)[0]
        if inside.size <= 1:
            return 0.0
        sub = PointCloud(dist_matrix[np.ix_(inside, inside)], metric="matrix")
        u_grid = np.geomspace(delta / 64.0, delta, u_points)
        h_vals = np.array([math.log(greedy_cover(sub, u).size) for u in u_grid])
        head = u_grid[0] * math.sqrt(2.0 * math.log(inside.size))
        trapezoid = getattr(np, "trapezoid", np.trapz)
        return 4.0 * (head + float(trapezoid(np.sqrt(2.0 * h_vals), u_grid)))

    raw_vals = np.array([raw_j(u) for u in grid])
    env_ratio = np.maximum.accumulate((raw_vals / grid ** 2)[::-1])[::-1]

    def j_env(delta):
        if delta <= 0:
            return 0.0
        if delta >= grid[-1]:
            return float(raw_vals[-1])
        pos = int(np.searchsorted(grid, delta))
        ratio = env_ratio[min(pos, env_ratio.size - 1)]
        return float(min(ratio * delta ** 2, raw_vals[-1]))

    return j_env


# --------------------------------------------------------------------------
# rate experiment


@dataclass(frozen=True)
class RateFit:
    n_values: np.ndarray
    median_errors: np.ndarray
    slope: float
    theoretical_exponent: float
    delta_n: np.ndarray
    coverage_fail: np.ndarray       # P(error > delta_n) per n
    coverage_bound: float
    basic_ok: bool
    net_sizes: np.ndarray
    reps: int
    seed: int

    @property
    def coverage_ok(self) -> np.ndarray:
        se = np.sqrt(self.coverage_fail * (1 - self.coverage_fail) / self.reps)
        return self.coverage_fail <= self.coverage_bound + 3.0 * se

    def rows(self):
        return [(int(n), float(m), float(dn), float(cf), int(ns))
                for n, m, dn, cf, ns in zip(self.n_values, self.median_errors,
                                            self.delta_n, self.coverage_fail,
                                            self.net_sizes)]

    def to_json(self):
        return {"n_values": [int(v) for v in self.n_values],
                "median_errors": [float(v) for v in self.median_errors],
                "slope": self.slope,
                "theoretical_exponent": self.theoretical_exponent,
                "delta_n": [float(v) for v in self.delta_n],
                "coverage_fail": [float(v) for v in self.coverage_fail],
                "coverage_bound": self.coverage_bound,
                "coverage_ok": [bool(v) for v in self.coverage_ok],
                "basic_ok": self.basic_ok,
                "net_sizes": [int(v) for v in self.net_sizes],
                "reps": self.reps, "seed": self.seed}


def smoothness_exponent(cls: FunctionClass) -> float:
    """-1/(2 + d/m + d'/m'); d'/m' = 0 for finite-dimensional output."""
    extra = 0.0
    if isinstance(cls.b_descriptor, SmoothOutputDescriptor):
        extra = cls.b_descriptor.d_out / cls.b_descriptor.m_out
    return -1.0 / (2.0 + cls.d / cls.m + extra)


# shells calibrated so the least-squares flip boundary tracks the predicted
# decay over n in [64, 4096] with trace-1 noise: quarter-octave radii, counts
# rising toward the bottom rung
DEFAULT_SHELL_RADII = tuple(0.6 * 0.8409 ** k for k in range(16))
DEFAULT_SHELL_COUNTS = (3, 3, 3, 3, 4, 4, 5, 6, 7, 9, 11, 14, 18, 24, 32, 150)


def default_rate_pool(seed: int = 11, d_y: int = 3, k_b: float = 250.0,
                      base_count: int = 150) -> FunctionClass:
    return build_rate_pool(d=1, m=1, d_y=d_y, k_b=k_b, base_count=base_count,
                           shell_radii=DEFAULT_SHELL_RADII,
                           shell_counts=DEFAULT_SHELL_COUNTS, seed=seed)


def build_rate_pool(d: int, m: int, d_y: int, k_b: float, base_count: int,
                    shell_radii, shell_counts, seed: int, resolution: int = 257,
                    n_terms: int = 8, max_freq: int = 8,
                    min_freq: int = 1) -> FunctionClass:
    """Net-like pool: random members plus convex blends at fixed distances
    from member 0.

    The blends populate shells around the regression truth at the given
    L2(P) radii, realizing a local entropy profile dense enough for the
    least-squares error to track the peeling threshold instead of collapsing
    to zero once the raw pool's nearest-neighbour spacing is reached. Blends
    are convex combinations, so every pool member stays inside the class.
    """
    from .function_class import blend_members, generate_finite_dim_ball_class
    from .function_class import l2_distance_uniform

    base = generate_finite_dim_ball_class(d, m, d_y, k_b, base_count, seed,
                                          resolution=resolution,
                                          n_terms=n_terms, max_freq=max_freq,
                                          min_freq=min_freq)
    # anchor the truth near the centre of the pool: rays from it toward the
    # other members then point in nearly uncorrelated directions
    g0 = base[0].scaled(0.02)
    members = [g0] + list(base.members[1:base_count])
    # single-frequency partners: one dominant frequency per partner keeps the
    # shell directions spread over the whole frequency range instead of
    # collapsing onto the lowest mode, so the local direction space widens
    # as the shell radius shrinks (the smooth-class geometry)
    per_freq = (2 * sum(shell_counts)) // max_freq + 32
    partner_pools = [
        generate_finite_dim_ball_class(d, m, d_y, k_b, per_freq,
                                       seed + 7919 * k, resolution=resolution,
                                       n_terms=2, max_freq=k, min_freq=k)
        for k in range(1, max_freq + 1)
    ]
    partners = [pool[i] for i in range(per_freq) for pool in partner_pools]
    order = np.argsort(-np.asarray(shell_radii, float))
    needs = {int(i): int(shell_counts[i]) for i in order}
    for partner in partners:
        if not any(needs.values()):
            break
        dist = l2_distance_uniform(partner, g0)
        # largest still-unfilled shell this partner can reach
        for i in order:
            radius = shell_radii[i]
            if needs[int(i)] > 0 and dist > radius:
                members.append(blend_members(g0, partner, radius / dist))
                needs[int(i)] -= 1
                break
    unfilled = {shell_radii[i]: c for i, c in needs.items() if c > 0}
    if unfilled:
        raise ValueError(f"could not fill shells {unfilled}; enlarge the base pool")
    return FunctionClass(members=tuple(members), b_descriptor=base.b_descriptor,
                         d=d, m=m, d_y=d_y, resolution=resolution, seed=seed)


def rate_experiment(pool: FunctionClass, g0_index: int, noise: CovarianceSpectrum,
                    n_grid, reps: int, seed: int, t: float = 2.0,
                    net_fraction: float = 1.0 / 64.0,
                    threads: int = 1) -> RateFit:
    """Least-squares error decay over a shrinking net of the smooth class.

    Per sample size: measure the localized entropy integral J of the shifted
    pool on the fixed midpoint design, solve the peeling threshold delta_n,
    thin the pool to a (net_fraction * delta_n)-net containing g0, then run
    noise replicates. Records median errors, the log-log slope, coverage of
    the delta_n guarantee at the given t, and the per-replicate basic
    inequality.

    With trace-1 noise the explicit-constant threshold delta_n exceeds the
    class diameter at moderate n, so a net pruned exactly at delta_n keeps
    only g0; the default net_fraction keeps the net a delta_n-net while
    retaining the local structure the error actually explores.
    """
    if abs(noise.trace - 1.0) > 1e-9:
        raise ValueError("noise covariance must have trace 1")
    n_values = np.asarray(n_grid, int)
    coverage_bound = (1.0 + 2.0 / (math.e - 1.0)) * math.exp(-t)
    medians, deltas, cov_fail, net_sizes = [], [], [], []
    basic_ok = True
    for pos, n in enumerate(n_values):
        design = EmpiricalDesign.midpoint_grid(int(n), pool.d)
        vals = pool.values_on(design)
        flat = vals.reshape(len(pool), -1) / math.sqrt(n)
        sq = np.sum(flat ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * flat @ flat.T
        dist = np.sqrt(np.maximum(d2, 0.0))
        np.fill_diagonal(dist, 0.0)

        j_curve = measured_entropy_integral(dist, g0_index)
        # the theorem places no ceiling on delta_n; small n with trace-1
        # noise can push it past the conservative default bracket
        delta_n = solve_delta_n(j_curve, int(n), t, bracket=(1e-8, 1e3))
        net_radius = net_fraction * delta_n
        cloud = PointCloud(dist, metric="matrix")
        net = greedy_cover_from(cloud, net_radius, start=g0_index)
        cand = net.center_indices          # g0 first
        vc = vals[cand].reshape(len(cand), -1)
        truth = vals[g0_index].ravel()
        g_norm = np.sum(vc ** 2, axis=1)
        a_cross = vc @ truth

        def block(idx, size, pos=pos):
            rng = substream(seed, _TAG_RATE, pos, idx)
            eps = sample_gaussian_batch(noise, rng, size * int(n)) \
                .reshape(size, -1)
            cross = eps @ vc.T
            scores = g_norm[None, :] - 2.0 * (a_cross[None, :] + cross)
            pick = np.argmin(scores, axis=1)
            errs = dist[g0_index, cand[pick]]
            rows = np.arange(size)
            rhs = 2.0 * (cross[rows, pick] - cross[rows, 0]) / n
            return errs, errs ** 2 <= rhs + 1e-9

        parts = map_blocks(block, reps, threads)
        errs = np.concatenate([p[0] for p in parts])
        basic = np.concatenate([p[1] for p in parts])
        basic_ok = basic_ok and bool(np.all(basic))
        medians.append(float(np.median(errs)))
        deltas.append(delta_n)
        cov_fail.append(float(np.mean(errs > delta_n)))
        net_sizes.append(len(cand))
    medians = np.array(medians)
    if np.all(medians > 0):
        slope = float(np.polyfit(np.log(n_values.astype(float)),
                                 np.log(medians), 1)[0])
    else:
        slope = float("nan")
    return RateFit(n_values=n_values, median_errors=medians, slope=slope,
                   theoretical_exponent=smoothness_exponent(pool),
                   delta_n=np.array(deltas), coverage_fail=np.array(cov_fail),
                   coverage_bound=coverage_bound, basic_ok=basic_ok,
                   net_sizes=np.array(net_sizes), reps=reps, seed=seed)


def greedy_cover_from(cloud: PointCloud, delta: float, start: int = 0):
    """Greedy cover with a prescribed first center (used to pin g0 in nets)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    centers = [start]
    mindist = cloud.distances_to(start)
    nearest = np.zeros(cloud.size, dtype=int)
    while True:
        far = int(np.argmax(mindist))
        if mindist[far] <= delta:
            break
        centers.append(far)
        d = cloud.distances_to(far)
        closer = d < mindist
        nearest[closer] = len(centers) - 1
        mindist = np.where(closer, d, mindist)
    from .covering import CoverResult
    return CoverResult(radius=float(delta), center_indices=np.array(centers),
                       assignment=nearest, assignment_dist=mindist)


# --------------------------------------------------------------------------
# Gaussian chaining (Hilbert noise against the chain of a class)


def gaussian_chaining_check(cls: FunctionClass, design: EmpiricalDesign,
                            noise: CovarianceSpectrum, t_grid, reps: int,
                            seed: int, s_levels: int | None = None,
                            threads: int = 1) -> TailReport:
    """Tail of sup_g sum_s <eps, g^{s+1} - g^s>_{2,P_n} against e^-t.

    Telescopes to <eps, g^{S+1}>_{2,P_n}; the threshold is
    J_n/sqrt(n) + 4 R_n sqrt((1+t)/n) with trace-1 Gaussian noise.
    """
    if abs(noise.trace - 1.0) > 1e-9:
        raise ValueError("noise covariance must have trace 1")
    plan = build_chaining_plan(cls, design, s_levels)
    n = design.n
    ts = np.asarray(t_grid, float)
    thresholds = plan.j_n / math.sqrt(n) + 4.0 * plan.r_n * np.sqrt((1.0 + ts) / n)
    tops = np.unique(plan.chains[:, -1])
    top_flat = cls.values_on(design)[tops].reshape(len(tops), -1)

    def block(idx, size):
        rng = substream(seed, _TAG_GCHAIN, idx)
        eps = sample_gaussian_batch(noise, rng, size * n).reshape(size, -1)
        stat = (eps @ top_flat.T / n).max(axis=1)
        return (stat[:, None] >= thresholds[None, :]).sum(axis=0)

    counts = np.sum(map_blocks(block, reps, threads), axis=0)
    return binomial_report(ts, counts, np.exp(-ts), reps, seed)


# --------------------------------------------------------------------------
# Lipschitz-loss empirical risk minimisation (random design)


def clipped_loss(y: np.ndarray, yhat: np.ndarray, cap: float,
                 lipschitz: float) -> np.ndarray:
    """loss_c * min(||y - yhat||, cap): bounded by loss_c*cap and
    loss_c-Lipschitz in yhat."""
    return lipschitz * np.minimum(np.linalg.norm(y - yhat, axis=-1), cap)


@dataclass(frozen=True)
class ErmRow:
    n: int
    median_excess: float
    q95_excess: float
    rad_mean: float          # Rademacher complexity of the loss class
    rad_se: float
    bound: float
    decomposition_ok: bool
    ok: bool


@dataclass(frozen=True)
class ErmReport:
    rows: tuple
    risks: np.ndarray
    g_star: int
    risk_se: float
    reps: int
    seed: int

    @property
    def all_ok(self) -> bool:
        return all(r.ok and r.decomposition_ok for r in self.rows)

    def to_json(self):
        return {"g_star": self.g_star, "risk_se": self.risk_se,
                "reps": self.reps, "seed": self.seed, "all_ok": self.all_ok,
                "risks": [float(v) for v in self.risks],
                "rows": [{"n": r.n, "median_excess": r.median_excess,
                          "q95_excess": r.q95_excess, "rad_mean": r.rad_mean,
                          "rad_se": r.rad_se, "bound": r.bound,
                          "decomposition_ok": r.decomposition_ok, "ok": r.ok}
                         for r in self.rows]}


def population_risks(cls: FunctionClass, noise: CovarianceSpectrum,
                     g_true_index: int, cap: float, lipschitz: float,
                     seed: int, x_quad: int = 512, noise_quad: int = 100_000):
    """R(g) = E min-loss for every member: x-quadrature times common-random-
    number noise Monte Carlo; the shared noise sample keeps the member
    ordering exact and the recorded error estimate is the largest standard
    error across members."""
    xq = EmpiricalDesign.midpoint_grid(x_quad, cls.d)
    vals = cls.values_on(xq)                     # (K, xq, d_Y)
    truth = vals[g_true_index]
    risks = np.zeros(len(cls))
    risk_sq = np.zeros(len(cls))

    def block(idx, size):
        rng = substream(seed, _TAG_ERM, idx)
        eps = sample_gaussian_batch(noise, rng, size)
        out_sum = np.zeros(len(cls))
        out_sq = np.zeros(len(cls))
        for k in range(len(cls)):
            diff = truth[None, :, :] - vals[k][None, :, :] + eps[:, None, :]
            loss = lipschitz * np.minimum(np.linalg.norm(diff, axis=2), cap)
            per_draw = loss.mean(axis=1)
            out_sum[k] = per_draw.sum()
            out_sq[k] = (per_draw ** 2).sum()
        return out_sum, out_sq

    parts = map_blocks(block, noise_quad, threads=1, block=4096)
    risks = np.sum([p[0] for p in parts], axis=0) / noise_quad
    risk_sq = np.sum([p[1] for p in parts], axis=0) / noise_quad
    se = np.sqrt(np.maximum(risk_sq - risks ** 2, 0.0) / noise_quad)
    return risks, float(se.max())


def erm_lipschitz_experiment(cls: FunctionClass, noise: CovarianceSpectrum,
                             n_grid, reps: int, seed: int, cap: float = 1.0,
                             lipschitz: float = 1.0, g_true_index: int = 0,
                             fail_prob: float = 0.05, rad_patterns: int = 2048,
                             x_quad: int = 512, noise_quad: int = 100_000,
                             threads: int = 1) -> ErmReport:
    """Excess-risk distribution of clipped-loss ERM against the Rademacher
    generalization bound 2 R_n(L o G) + 5c sqrt(2 log(8/delta)/n).

    The population risks use quadrature with common random numbers, so the
    per-replicate decomposition excess <= sup(R - Rhat) + Rhat(g*) - R(g*)
    holds exactly. The loss-class Rademacher complexity is averaged over
    replicates (random design), matching the unconditional bound.
    """
    if abs(noise.trace - 1.0) > 1e-9:
        raise ValueError("noise covariance must have trace 1")
    risks, risk_se = population_risks(cls, noise, g_true_index, cap, lipschitz,
                                      seed, x_quad=x_quad,
                                      noise_quad=noise_quad)
    g_star = int(np.argmin(risks))
    c_bound = lipschitz * cap
    rows = []
    for pos, n in enumerate(np.asarray(n_grid, int)):
        def block(idx, size, n=int(n), pos=pos):
            rng = substream(seed, _TAG_ERM_RAD, pos, idx)
            excesses = np.empty(size)
            rads = np.empty(size)
            decomp = np.empty(size, dtype=bool)
            for b in range(size):
                x = rng.uniform(size=(n, cls.d))
                eps = sample_gaussian_batch(noise, rng, n)
                design = EmpiricalDesign(x)
                vals = cls.values_on(design)
                y = vals[g_true_index] + eps
                loss = lipschitz * np.minimum(
                    np.linalg.norm(y[None] - vals, axis=2), cap)   # (K, n)
                emp = loss.mean(axis=1)
                ghat = int(np.argmin(emp))
                excess = risks[ghat] - risks[g_star]
                excesses[b] = excess
                decomp[b] = excess <= (np.max(risks - emp)
                                       + emp[g_star] - risks[g_star] + 1e-12)
                signs = rng.choice([-1.0, 1.0], size=(rad_patterns, n))
                rads[b] = np.abs(signs @ loss.T / n).max(axis=1).mean()
            return excesses, rads, decomp

        parts = map_blocks(block, reps, threads, block=64)
        excess = np.concatenate([p[0] for p in parts])
        rad = np.concatenate([p[1] for p in parts])
        decomp_ok = bool(np.all(np.concatenate([p[2] for p in parts])))
        rad_mean = float(rad.mean())
        rad_se = float(rad.std(ddof=1) / math.sqrt(reps))
        bound = 2.0 * rad_mean + 5.0 * c_bound * math.sqrt(
            2.0 * math.log(8.0 / fail_prob) / n)
        q95 = float(np.quantile(excess, 0.95))
        ok = q95 <= bound + 3.0 * (2.0 * rad_se + risk_se)
        rows.append(ErmRow(n=int(n), median_excess=float(np.median(excess)),
                           q95_excess=q95, rad_mean=rad_mean, rad_se=rad_se,
                           bound=bound, decomposition_ok=decomp_ok, ok=ok))
    return ErmReport(rows=tuple(rows), risks=risks, g_star=g_star,
                     risk_se=risk_se, reps=reps, seed=seed)
