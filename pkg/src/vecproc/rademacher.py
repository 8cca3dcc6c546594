"""Norm-form and coordinate-wise Rademacher complexities.

The norm form E_sigma sup_g ||(1/n) sum_i sigma_i g(X_i)|| is basis-free;
the coordinate-wise form (one sign per sample per output coordinate) is not,
and the fixed two-projection fixture reproduces that failure exactly.

Two coordinate-wise conventions are implemented. The "pattern sum" follows
the counterexample's own arithmetic: sign variables whose coefficient is
identical across all members contribute the same amount to every member's
statistic and average to zero, so they are dropped, and the supremum is then
summed (not averaged) over the remaining sign patterns. The normalized form
averages over sign patterns and divides by n, matching the displayed
definition. Both are reported; they differ by bookkeeping only:
pattern_sum = 2^{#effective signs} * pattern mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical_process import build_chaining_plan
from .function_class import EmpiricalDesign, FunctionClass
from .hilbert import OrthonormalBasis
from .rng import map_blocks, substream

_TAG_NORM_MC = 601
_TAG_COORD_MC = 602

EXACT_PATTERN_LIMIT = 2 ** 20


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    mode: str                 # "exact_enumeration" | "monte_carlo"
    form: str                 # "norm" | "coordinatewise" | "pattern_sum_coordinatewise"
    n_patterns: int = 0       # patterns enumerated (exact) or sampled (MC)
    se: float = 0.0

    def to_json(self):
        return {"value": self.value, "mode": self.mode, "form": self.form,
                "n_patterns": self.n_patterns, "se": self.se}


def _sign_matrix(start: int, count: int, n_bits: int) -> np.ndarray:
    """Rows start..start+count-1 of the full +-1 pattern enumeration."""
    ints = np.arange(start, start + count, dtype=np.int64)
    bits = (ints[:, None] >> np.arange(n_bits)[None, :]) & 1
    return 2.0 * bits - 1.0


def norm_rademacher_values(values: np.ndarray, mode: str = "exact",
                           reps: int = 100_000, seed: int = 0,
                           threads: int = 1) -> RademacherEstimate:
    """E_sigma sup_g ||(1/n) sum_i sigma_i g(X_i)|| from a (K, n, d_Y) tensor."""
    k, n, d_y = values.shape
    if k == 0:
        raise ValueError("class must be nonempty")
    if mode == "exact":
        if n > 20:
            raise ValueError("exact enumeration limited to n <= 20")
        total = 0.0
        n_patterns = 1 << n
        chunk = min(n_patterns, 1 << 14)
        for start in range(0, n_patterns, chunk):
            count = min(chunk, n_patterns - start)
            signs = _sign_matrix(start, count, n)
            sums = np.einsum("cn,knd->ckd", signs, values) / n
            total += float(np.linalg.norm(sums, axis=2).max(axis=1).sum())
        return RademacherEstimate(value=total / n_patterns,
                                  mode="exact_enumeration", form="norm",
                                  n_patterns=n_patterns)
    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")

    def block(idx, size):
        rng = substream(seed, _TAG_NORM_MC, idx)
        signs = rng.choice([-1.0, 1.0], size=(size, n))
        sums = np.einsum("cn,knd->ckd", signs, values) / n
        stat = np.linalg.norm(sums, axis=2).max(axis=1)
        return stat.sum(), (stat ** 2).sum()

    parts = map_blocks(block, reps, threads)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / reps
    var = max(total_sq / reps - mean ** 2, 0.0)
    return RademacherEstimate(value=mean, mode="monte_carlo", form="norm",
                              n_patterns=reps, se=math.sqrt(var / reps))


def norm_rademacher(cls: FunctionClass, design: EmpiricalDesign,
                    mode: str = "exact", reps: int = 100_000, seed: int = 0,
                    threads: int = 1) -> RademacherEstimate:
    return norm_rademacher_values(cls.values_on(design), mode=mode, reps=reps,
                                  seed=seed, threads=threads)


def _effective_signs(coords: np.ndarray, tol: float = 1e-12):
    """Split the n*d_Y sign variables into member-constant and effective.

    coords has shape (K, n, d_Y); a sign variable (i, j) is degenerate when
    every member shares the coefficient g_j(X_i): it shifts all members
    equally and integrates to zero.
    """
    k = coords.shape[0]
    flat = coords.reshape(k, -1)
    spread = flat.max(axis=0) - flat.min(axis=0)
    effective = np.where(spread > tol)[0]
    return flat, effective


def coordinatewise_rademacher_values(coords: np.ndarray, normalized: bool,
                                     mode: str = "exact", reps: int = 100_000,
                                     seed: int = 0,
                                     threads: int = 1) -> RademacherEstimate:
    """Coordinate-wise complexity from a (K, n, d_Y) coordinate tensor.

    normalized=False returns the pattern sum over effective signs (the
    counterexample's arithmetic); normalized=True returns the expectation
    over all sign patterns divided by n.
    """
    k, n, d_y = coords.shape
    if k == 0:
        raise ValueError("class must be nonempty")
    flat, effective = _effective_signs(coords)
    eff = flat[:, effective]                      # (K, E)
    n_eff = effective.size
    if mode == "exact":
        if 2 ** n_eff > EXACT_PATTERN_LIMIT:
            raise ValueError("exact enumeration limited to 2^20 sign patterns")
        total = 0.0
        n_patterns = 1 << n_eff
        chunk = min(n_patterns, 1 << 14)
        for start in range(0, n_patterns, chunk):
            count = min(chunk, n_patterns - start)
            signs = _sign_matrix(start, count, n_eff)
            total += float((signs @ eff.T).max(axis=1).sum())
        if normalized:
            return RademacherEstimate(value=total / n_patterns / n,
                                      mode="exact_enumeration",
                                      form="coordinatewise",
                                      n_patterns=n_patterns)
        return RademacherEstimate(value=total, mode="exact_enumeration",
                                  form="pattern_sum_coordinatewise",
                                  n_patterns=n_patterns)
    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")
    if not normalized:
        raise ValueError("the pattern-sum form requires exact enumeration")

    def block(idx, size):
        rng = substream(seed, _TAG_COORD_MC, idx)
        signs = rng.choice([-1.0, 1.0], size=(size, n_eff))
        stat = (signs @ eff.T).max(axis=1) / n
        return stat.sum(), (stat ** 2).sum()

    parts = map_blocks(block, reps, threads)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / reps
    var = max(total_sq / reps - mean ** 2, 0.0)
    return RademacherEstimate(value=mean, mode="monte_carlo",
                              form="coordinatewise", n_patterns=reps,
                              se=math.sqrt(var / reps))


def coordinatewise_rademacher(cls: FunctionClass, design: EmpiricalDesign,
                              basis: OrthonormalBasis, normalized: bool,
                              mode: str = "exact", reps: int = 100_000,
                              seed: int = 0) -> RademacherEstimate:
    vals = cls.values_on(design)
    coords = vals @ basis.columns
    return coordinatewise_rademacher_values(coords, normalized=normalized,
                                            mode=mode, reps=reps, seed=seed)


# --------------------------------------------------------------------------
# the basis-dependence counterexample


def counterexample_values() -> np.ndarray:
    """Fixture: X1 = e1, X2 = e2; g1, g2 orthogonal projections onto the
    lines y = x and y = -x; values tensor (2 members, 2 samples, 2 coords)."""
    g1 = np.array([[0.5, 0.5], [0.5, 0.5]])
    g2 = np.array([[0.5, -0.5], [-0.5, 0.5]])
    return np.stack([g1, g2])


def rotated_basis() -> OrthonormalBasis:
    s = 1.0 / math.sqrt(2.0)
    return OrthonormalBasis(np.array([[s, -s], [s, s]]))


@dataclass(frozen=True)
class CounterexampleReport:
    standard: float            # pattern sum, standard basis
    rotated: float             # pattern sum, rotated basis
    normalized_standard: float  # pattern mean, standard basis
    normalized_rotated: float
    norm_form_standard: float
    norm_form_rotated: float
    dependent: bool

    def to_json(self):
        return {"standard": self.standard, "rotated": self.rotated,
                "normalized_standard": self.normalized_standard,
                "normalized_rotated": self.normalized_rotated,
                "norm_form_standard": self.norm_form_standard,
                "norm_form_rotated": self.norm_form_rotated,
                "dependent": self.dependent}


def basis_dependence_demo() -> CounterexampleReport:
    """Exact enumeration of the two-projection counterexample.

    The coordinate-wise pattern sums are 2 (standard basis) and 5 sqrt(2)
    (rotated basis); the norm-form complexity is identical in both bases.
    """
    values = counterexample_values()
    std = OrthonormalBasis.identity(2)
    rot = rotated_basis()
    out = {}
    for tag, basis in (("standard", std), ("rotated", rot)):
        coords = values @ basis.columns
        ps = coordinatewise_rademacher_values(coords, normalized=False)
        out[tag] = (ps.value, ps.value / ps.n_patterns)
    norm_std = norm_rademacher_values(values).value
    norm_rot = norm_rademacher_values(values @ rot.columns).value
    dependent = (abs(out["standard"][0] - out["rotated"][0]) > 1e-9
                 and abs(out["standard"][1] - out["rotated"][1]) > 1e-9)
    return CounterexampleReport(
        standard=out["standard"][0], rotated=out["rotated"][0],
        normalized_standard=out["standard"][1],
        normalized_rotated=out["rotated"][1],
        norm_form_standard=norm_std, norm_form_rotated=norm_rot,
        dependent=dependent)


# --------------------------------------------------------------------------
# entropy bound (chaining) on the norm-form complexity


@dataclass(frozen=True)
class EntropyBoundReport:
    estimate: float
    bound: float
    r_n: float
    j_n: float
    s_levels: int
    ok: bool

    def to_json(self):
        return {"estimate": self.estimate, "bound": self.bound, "r_n": self.r_n,
                "j_n": self.j_n, "s_levels": self.s_levels, "ok": self.ok}


def rademacher_entropy_bound_check(cls: FunctionClass, design: EmpiricalDesign,
                                   s_levels: int, mode: str = "exact",
                                   reps: int = 100_000,
                                   seed: int = 0) -> EntropyBoundReport:
    """Norm-form complexity against 2^-(S+1) R_n + 2 J_n / sqrt(n)."""
    plan = build_chaining_plan(cls, design, s_levels)
    bound = 0.5 ** (s_levels + 1) * plan.r_n + 2.0 * plan.j_n / math.sqrt(design.n)
    est = norm_rademacher(cls, design, mode=mode, reps=reps, seed=seed)
    slack = 3.0 * est.se if est.mode == "monte_carlo" else 1e-12
    return EntropyBoundReport(estimate=est.value, bound=bound, r_n=plan.r_n,
                              j_n=plan.j_n, s_levels=s_levels,
                              ok=est.value <= bound + slack)
