"""Closed-form entropy bounds for smooth vector-valued function classes.

Each evaluator returns the pre-simplification expression from the end of the
corresponding proof chain rather than an opaque constant K, with the grid
count K2 * delta^{-d/m} replaced by the exact net size
L = ceil(sqrt(d) (4 K1 / delta)^{1/m})^d, so bound values are reproducible
and directly comparable against measured cover entropies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import (PointCloud, exact_cover_number, smooth_cover_constants)
from .function_class import EmpiricalDesign, FunctionClass


def _net_size(d: int, m: int, k_b: float, delta: float) -> int:
    _, _, _, size = smooth_cover_constants(d, m, k_b, delta)
    return size


def bound_assouad(d: int, m: int, k_b: float, delta: float, big_m: float,
                  tau_asd: float) -> float:
    """Entropy bound for a homogeneous range set; affine in tau_asd.

    L-cell term counts the per-net-point level choices, the additive term
    the unconstrained choices at the first net point.
    """
    _validate(d, m, k_b, delta)
    if big_m < 1 or tau_asd <= 0:
        raise ValueError("need M >= 1 and tau_asd > 0")
    big_l = _net_size(d, m, k_b, delta)
    per_cell = math.log(big_m) + tau_asd * math.log(math.exp(d) + 3.0)
    first = math.log(big_m) + tau_asd * math.log(4.0 * math.exp(d) * k_b / delta)
    return m ** d * big_l * per_cell + m ** d * first


def bound_box(d: int, m: int, k_b: float, delta: float, tau_box: float) -> float:
    """Entropy bound for a range set of finite upper box-counting dimension."""
    _validate(d, m, k_b, delta)
    if tau_box < 0:
        raise ValueError("tau_box must be nonnegative")
    big_l = _net_size(d, m, k_b, delta)
    return (tau_box + 1.0) * m ** d * big_l * math.log(2.0 * math.exp(d) / delta)


def bound_exp(d: int, m: int, k_b: float, delta: float, big_m: float,
              tau_exp: float) -> float:
    """Entropy bound for exponentially growing range-set covering numbers."""
    _validate(d, m, k_b, delta)
    if big_m <= 0 or tau_exp <= 0:
        raise ValueError("need M > 0 and tau_exp > 0")
    big_l = _net_size(d, m, k_b, delta)
    return big_m * (2.0 * math.exp(d) / delta) ** tau_exp * m ** d * big_l


def bound_rkhs(d: int, m: int, k_b: float, delta: float, big_m: float,
               h: float) -> float:
    """Smooth-kernel RKHS ball range set: exponential variant, tau = 2d/h."""
    if h <= d:
        raise ValueError("need h > d")
    return bound_exp(d, m, k_b, delta, big_m, 2.0 * d / h)


def combined_smooth_exponent(d: int, m: int, d_out: int, m_out: int) -> float:
    """Entropy exponent d/m + d'/m' when the output set is itself smooth."""
    if min(d, m, d_out, m_out) < 1:
        raise ValueError("all dimensions and orders must be positive")
    return d / m + d_out / m_out


def _validate(d, m, k_b, delta):
    if min(d, m) < 1 or k_b <= 0:
        raise ValueError("need d, m >= 1 and K_B > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class BoundParams:
    """Bound evaluation request: variant tag plus its parameters."""

    d: int
    m: int
    k_b: float
    delta: float
    variant: str            # assouad | box | exponential | rkhs
    big_m: float = 1.0
    tau: float = 1.0        # tau_asd / tau_box / tau_exp; h for rkhs

    def evaluate(self) -> float:
        if self.variant == "assouad":
            return bound_assouad(self.d, self.m, self.k_b, self.delta,
                                 self.big_m, self.tau)
        if self.variant == "box":
            return bound_box(self.d, self.m, self.k_b, self.delta, self.tau)
        if self.variant == "exponential":
            return bound_exp(self.d, self.m, self.k_b, self.delta,
                             self.big_m, self.tau)
        if self.variant == "rkhs":
            return bound_rkhs(self.d, self.m, self.k_b, self.delta,
                              self.big_m, self.tau)
        raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class ContractionRow:
    delta: float
    n_loss: int
    n_class: int
    ok: bool


def lipschitz_contraction_check(cls: FunctionClass, loss_c: float,
                                design: EmpiricalDesign, targets, delta_grid,
                                cap: float = 1.0):
    """N(c delta, L o G, ||.||_{2,P_n}) <= N(delta, G, ||.||_{2,P_n}), exactly.

    The loss is the clipped distance loss_c * min(||y - yhat||, cap), which
    is loss_c-Lipschitz in yhat; both covering numbers are exact, so the
    contraction inequality is tested with no slack.
    """
    if loss_c <= 0:
        raise ValueError("Lipschitz constant must be positive")
    if len(cls) > 20:
        raise ValueError("exact contraction check limited to 20 members")
    targets = np.atleast_2d(np.asarray(targets, float))
    if targets.shape != (design.n, cls.d_y):
        raise ValueError("targets must have shape (n, d_y)")
    vals = cls.values_on(design)                       # (K, n, d_Y)
    class_cloud = PointCloud(vals.reshape(len(cls), -1) / math.sqrt(design.n))
    dist = np.linalg.norm(targets[None, :, :] - vals, axis=2)
    loss_vals = loss_c * np.minimum(dist, cap)         # (K, n)
    loss_cloud = PointCloud(loss_vals / math.sqrt(design.n))
    rows = []
    for delta in np.asarray(delta_grid, float):
        n_loss = exact_cover_number(loss_cloud, loss_c * delta)
        n_class = exact_cover_number(class_cloud, delta)
        rows.append(ContractionRow(delta=float(delta), n_loss=n_loss,
                                   n_class=n_class, ok=n_loss <= n_class))
    return rows
