"""Samplers and validators for concentration inequalities in Hilbert space.

Monte-Carlo checks compare empirical exceedance frequencies against the
theoretical tail bounds with a slack of three binomial standard errors;
moment-generating-function inequalities for Gaussians are verified
deterministically through their finite-spectrum product form, with no
sampling noise at all. Replicates are partitioned into fixed blocks with
counter-derived seeds and combined in block order, so results depend only on
(seed, reps), never on the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import OrthonormalBasis
from .reports import TailReport, binomial_report
from .rng import map_blocks, substream

_TAG_REAL = 301
_TAG_HILBERT = 302
_TAG_COSH = 303
_TAG_GAUSS_TAIL = 304


@dataclass(frozen=True)
class CovarianceSpectrum:
    """Eigenvalues (nonincreasing, nonnegative) of a covariance operator."""

    eigenvalues: np.ndarray
    basis: OrthonormalBasis | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, float)
        if ev.ndim != 1 or ev.size == 0:
            raise ValueError("eigenvalues must be a nonempty vector")
        if np.any(ev < 0) or not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if np.any(np.diff(ev) > 1e-12):
            raise ValueError("eigenvalues must be nonincreasing")
        if self.basis is not None and self.basis.dim != ev.size:
            raise ValueError("basis dimension mismatch")
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def d_y(self) -> int:
        return self.eigenvalues.size

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @staticmethod
    def geometric(n_modes: int) -> "CovarianceSpectrum":
        """lambda_j proportional to 2^-j, normalised to trace 1."""
        ev = 0.5 ** np.arange(1, n_modes + 1)
        return CovarianceSpectrum(ev / ev.sum())

    @staticmethod
    def uniform(n_modes: int) -> "CovarianceSpectrum":
        return CovarianceSpectrum(np.full(n_modes, 1.0 / n_modes))

    @staticmethod
    def single() -> "CovarianceSpectrum":
        return CovarianceSpectrum(np.array([1.0]))


def sample_gaussian(mean, spectrum: CovarianceSpectrum,
                    rng: np.random.Generator) -> np.ndarray:
    """One draw of mean + sum_j sqrt(lambda_j) xi_j b_j."""
    return mean + sample_gaussian_batch(spectrum, rng, 1)[0]


def sample_gaussian_batch(spectrum: CovarianceSpectrum, rng: np.random.Generator,
                          size: int) -> np.ndarray:
    """Zero-mean draws, shape (size, d_y)."""
    xi = rng.standard_normal((size, spectrum.d_y))
    draws = xi * np.sqrt(spectrum.eigenvalues)
    if spectrum.basis is not None:
        draws = draws @ spectrum.basis.columns.T
    return draws


def _per_sample_bounds(c, n: int) -> np.ndarray:
    c = np.asarray(c, float)
    if c.ndim == 0:
        c = np.full(n, float(c))
    if c.shape != (n,) or np.any(c <= 0):
        raise ValueError("need n positive bounds c_i")
    return c


def hoeffding_real_check(c, n: int, t_grid, reps: int, seed: int,
                         threads: int = 1) -> TailReport:
    """P(S_n >= b sqrt(2t)) <= e^-t for S_n a sum of symmetric +-c_i signs."""
    c = _per_sample_bounds(c, n)
    b = math.sqrt(float(np.sum(c ** 2)))
    ts = np.asarray(t_grid, float)
    thresholds = b * np.sqrt(2.0 * ts)

    def block(idx, size):
        rng = substream(seed, _TAG_REAL, idx)
        signs = rng.choice([-1.0, 1.0], size=(size, n))
        s = signs @ c
        return (s[:, None] >= thresholds[None, :]).sum(axis=0)

    counts = np.sum(map_blocks(block, reps, threads), axis=0)
    return binomial_report(ts, counts, np.exp(-ts), reps, seed)


def _bounded_vector_sum(rng, size, n, d_y, c):
    """Sums of n independent vectors, each a random sign times c_i times a
    uniform random unit direction: zero mean, ||Y_i|| = c_i surely."""
    dirs = rng.standard_normal((size, n, d_y))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    signs = rng.choice([-1.0, 1.0], size=(size, n, 1))
    return np.sum(dirs * signs * c[None, :, None], axis=1)


def hoeffding_hilbert_check(c, n: int, d_y: int, t_grid, reps: int, seed: int,
                            threads: int = 1) -> TailReport:
    """P(||S_n|| >= 2b sqrt(t)) <= 2 e^-t for bounded zero-mean vectors."""
    c = _per_sample_bounds(c, n)
    b = math.sqrt(float(np.sum(c ** 2)))
    ts = np.asarray(t_grid, float)
    thresholds = 2.0 * b * np.sqrt(ts)

    def block(idx, size):
        rng = substream(seed, _TAG_HILBERT, idx)
        norms = np.linalg.norm(_bounded_vector_sum(rng, size, n, d_y, c), axis=1)
        return (norms[:, None] >= thresholds[None, :]).sum(axis=0)

    counts = np.sum(map_blocks(block, reps, threads), axis=0)
    return binomial_report(ts, counts, 2.0 * np.exp(-ts), reps, seed)


@dataclass(frozen=True)
class MomentRow:
    lam: float
    lhs: float
    rel_se: float
    rhs: float
    status: str   # "ok" | "fail" | "inconclusive"


@dataclass(frozen=True)
class MomentReport:
    rows: tuple
    reps: int
    seed: int

    @property
    def all_ok(self) -> bool:
        return all(r.status != "fail" for r in self.rows)

    def to_json(self):
        return {"reps": self.reps, "seed": self.seed, "all_ok": self.all_ok,
                "rows": [{"lambda": r.lam, "lhs": r.lhs, "rel_se": r.rel_se,
                          "rhs": r.rhs, "status": r.status} for r in self.rows]}


def cosh_moment_check(c, n: int, lambda_grid, reps: int, seed: int, d_y: int = 5,
                      threads: int = 1, rel_se_limit: float = 0.2) -> MomentReport:
    """E[cosh(lambda ||S_n||)] <= prod_i exp(lambda^2 c_i^2).

    Thresholds where the Monte-Carlo estimator is too noisy (relative
    standard error above `rel_se_limit`) are flagged inconclusive rather
    than failed.
    """
    c = _per_sample_bounds(c, n)
    lams = np.asarray(lambda_grid, float)
    if np.any(lams <= 0):
        raise ValueError("lambda values must be positive")

    def block(idx, size):
        rng = substream(seed, _TAG_COSH, idx)
        norms = np.linalg.norm(_bounded_vector_sum(rng, size, n, d_y, c), axis=1)
        vals = np.cosh(lams[None, :] * norms[:, None])
        return vals.sum(axis=0), (vals ** 2).sum(axis=0)

    parts = map_blocks(block, reps, threads)
    total = np.sum([p[0] for p in parts], axis=0)
    total_sq = np.sum([p[1] for p in parts], axis=0)
    mean = total / reps
    var = np.maximum(total_sq / reps - mean ** 2, 0.0)
    se = np.sqrt(var / reps)
    rhs = np.exp(lams ** 2 * float(np.sum(c ** 2)))
    rows = []
    for lam, lhs, s, r in zip(lams, mean, se, rhs):
        rel = s / lhs if lhs > 0 else 0.0
        if rel > rel_se_limit:
            status = "inconclusive"
        else:
            status = "ok" if lhs <= r * (1.0 + 3.0 * rel) else "fail"
        rows.append(MomentRow(lam=float(lam), lhs=float(lhs), rel_se=float(rel),
                              rhs=float(r), status=status))
    return MomentReport(rows=tuple(rows), reps=reps, seed=seed)


@dataclass(frozen=True)
class MgfRow:
    lam: float
    product: float
    bound: float
    ok: bool


def gaussian_mgf_check(spectrum: CovarianceSpectrum, lambda_grid):
    """Deterministic: prod_j (1-2 lambda lambda_j)^{-1/2} <= (1-2 lambda Tr)^{-1/2}.

    Evaluates the proof's exact product form for the finite spectrum; no
    Monte Carlo involved. Requires trace 1 and lambda < 1/2.
    """
    if abs(spectrum.trace - 1.0) > 1e-9:
        raise ValueError("spectrum must have trace 1")
    lam_max = float(spectrum.eigenvalues[0])
    rows = []
    for lam in np.asarray(lambda_grid, float):
        if lam <= 0 or lam >= 0.5:
            raise ValueError("lambda must lie in (0, 1/2)")
        if lam >= 1.0 / (2.0 * lam_max):
            raise ValueError("divergent product: lambda >= 1/(2 max eigenvalue)")
        product = float(np.prod((1.0 - 2.0 * lam * spectrum.eigenvalues) ** -0.5))
        bound = (1.0 - 2.0 * lam * spectrum.trace) ** -0.5
        rows.append(MgfRow(lam=float(lam), product=product, bound=bound,
                           ok=product <= bound * (1.0 + 1e-12)))
    return rows


def gaussian_tail_check(spectrum: CovarianceSpectrum, a_grid, reps: int,
                        seed: int, threads: int = 1) -> TailReport:
    """P(||Y|| >= a) <= 2 exp(-3 a^2 / (8 Tr Phi)) for zero-mean Gaussian Y."""
    if reps < 10 ** 4:
        raise ValueError("need at least 10^4 replicates")
    a_vals = np.asarray(a_grid, float)
    trace = spectrum.trace

    def block(idx, size):
        rng = substream(seed, _TAG_GAUSS_TAIL, idx)
        norms = np.linalg.norm(sample_gaussian_batch(spectrum, rng, size), axis=1)
        return (norms[:, None] >= a_vals[None, :]).sum(axis=0)

    counts = np.sum(map_blocks(block, reps, threads), axis=0)
    bounds = 2.0 * np.exp(-3.0 * a_vals ** 2 / (8.0 * trace))
    return binomial_report(a_vals, counts, bounds, reps, seed, label="a")
