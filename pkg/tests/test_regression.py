import math

import numpy as np
import pytest

from vecproc import function_class as fc
from vecproc import regression as reg
from vecproc.concentration import CovarianceSpectrum
from vecproc.rng import substream


def ball_class(count, seed, d_y=3, resolution=129, **kw):
    return fc.generate_finite_dim_ball_class(1, 1, d_y, 1.0, count, seed,
                                             resolution=resolution, **kw)


def test_least_squares_zero_noise_recovers_truth():
    cls = ball_class(8, seed=1)
    design = fc.EmpiricalDesign.uniform(30, 1, substream(1, 1))
    silent = CovarianceSpectrum(np.zeros(3))
    fit = reg.least_squares_fit(cls, 3, design, silent, seed=0)
    assert fit.index == 3
    assert fit.error == 0.0
    assert fit.basic_lhs <= fit.basic_rhs + 1e-12


def test_least_squares_small_noise_prefers_truth():
    base = ball_class(1, seed=2, min_freq=1)
    g0 = base[0]
    far = g0.scaled(-1.0)
    cls = fc.FunctionClass(members=(g0, far), b_descriptor=base.b_descriptor,
                           d=1, m=1, d_y=3, resolution=129)
    design = fc.EmpiricalDesign.uniform(50, 1, substream(1, 2))
    tiny = CovarianceSpectrum(np.full(3, 1e-6 / 3) * (3 / 3))
    hits = sum(reg.least_squares_fit(cls, 0, design, tiny, seed=3,
                                     replicate=r).index == 0
               for r in range(100))
    assert hits >= 99


def test_least_squares_huge_noise_error_bounded():
    cls = ball_class(6, seed=3)
    design = fc.EmpiricalDesign(np.array([[0.5]]))
    loud = CovarianceSpectrum(np.full(3, 100.0 / 3))
    vals = cls.values_on(design)
    flat = vals.reshape(len(cls), -1)
    diam = max(np.linalg.norm(flat[i] - flat[j])
               for i in range(len(cls)) for j in range(len(cls)))
    for r in range(20):
        fit = reg.least_squares_fit(cls, 0, design, loud, seed=5, replicate=r)
        assert fit.error <= diam + 1e-12
        assert fit.basic_lhs <= fit.basic_rhs + 1e-12


# -------------------------------------------------------------- solve_delta_n


def test_solve_delta_n_zero_entropy_closed_form():
    for n, t in ((100, 2.0), (10_000, 0.5)):
        got = reg.solve_delta_n(lambda d: 0.0, n, t)
        want = 8.0 * (4 * math.sqrt(1 + t) + math.sqrt(8 * t / 3)) / math.sqrt(n)
        assert got == pytest.approx(want, rel=1e-5)


def test_solve_delta_n_linear_curve():
    t = 1.0
    n = 400
    got = reg.solve_delta_n(lambda d: d, n, t)
    coef = 4 * math.sqrt(1 + t) + math.sqrt(8 * t / 3)
    want = 8.0 * (1 + coef) / math.sqrt(n)
    assert got == pytest.approx(want, rel=1e-5)


def test_solve_delta_n_sqrt_curve_residual():
    j = lambda d: 2.0 * math.sqrt(d)
    n, t = 10_000, 1.0
    delta = reg.solve_delta_n(j, n, t)
    coef = 4 * math.sqrt(1 + t) + math.sqrt(8 * t / 3)
    residual = math.sqrt(n) * delta ** 2 - 8 * (j(delta) + coef * delta)
    assert residual >= -1e-9
    # just below the root the inequality must fail
    d2 = delta / (1 + 1e-3)
    assert math.sqrt(n) * d2 ** 2 - 8 * (j(d2) + coef * d2) < 0


def test_solve_delta_n_validation():
    with pytest.raises(ValueError):
        reg.solve_delta_n(lambda d: 0.0, 100, 0.2)       # t below 3/8
    with pytest.raises(ValueError):
        reg.solve_delta_n(lambda d: d ** 3, 100, 1.0)    # J/d^2 increasing
    with pytest.raises(ValueError):
        # enormous J: no feasible delta below the default bracket end
        reg.solve_delta_n(lambda d: 1e9, 4, 1.0)


def test_measured_entropy_integral_envelope():
    rng = substream(3, 1)
    pts = rng.uniform(size=(40, 3))
    dm = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    j = reg.measured_entropy_integral(dm, 0)
    deltas = np.geomspace(1e-3, 2.0, 30)
    vals = np.array([j(d) for d in deltas])
    assert np.all(vals >= 0)
    ratios = vals / deltas ** 2
    assert np.all(np.diff(ratios) <= 1e-9 + 1e-6 * ratios[:-1])


# ------------------------------------------------------------ rate experiment


def test_rate_experiment_structure():
    pool = reg.default_rate_pool(seed=11)
    noise = CovarianceSpectrum.uniform(3)
    fit = reg.rate_experiment(pool, 0, noise, [64, 256], reps=50, seed=0)
    assert fit.basic_ok
    assert np.all(fit.coverage_ok)
    assert np.all(fit.median_errors > 0)
    assert np.all(fit.delta_n > 0)
    assert fit.theoretical_exponent == pytest.approx(-1.0 / 3.0)


def test_rate_pool_membership_and_anchor():
    pool = reg.default_rate_pool(seed=11)
    sub = fc.FunctionClass(members=pool.members[:40],
                           b_descriptor=pool.b_descriptor, d=1, m=1,
                           d_y=3, resolution=pool.resolution)
    assert sub.validate_membership()
    assert fc.sup_norm(pool[0]) < 0.05


def test_rate_experiment_rejects_bad_noise():
    pool = reg.default_rate_pool(seed=11)
    with pytest.raises(ValueError):
        reg.rate_experiment(pool, 0, CovarianceSpectrum(np.ones(3)), [64],
                            reps=10, seed=0)


def test_regression_config_validation():
    cls = ball_class(4, seed=5)
    design = fc.EmpiricalDesign(np.array([[0.5]]))
    noise = CovarianceSpectrum.uniform(3)
    with pytest.raises(ValueError):
        reg.RegressionConfig(cls=cls, g0_index=9, design=design, noise=noise)
    with pytest.raises(ValueError):
        reg.RegressionConfig(cls=cls, g0_index=0, design=design,
                             noise=CovarianceSpectrum(np.ones(3)))
    reg.RegressionConfig(cls=cls, g0_index=0, design=design, noise=noise)


# ----------------------------------------------------------- gaussian chains


def test_gaussian_chaining_check():
    cls = ball_class(20, seed=7)
    design = fc.EmpiricalDesign.uniform(100, 1, substream(4, 1))
    noise = CovarianceSpectrum.uniform(3)
    rep = reg.gaussian_chaining_check(cls, design, noise, [0.5, 1.0, 2.0],
                                      5000, seed=1)
    assert rep.all_ok


def test_gaussian_chaining_singleton():
    cls = ball_class(1, seed=9)
    design = fc.EmpiricalDesign.uniform(40, 1, substream(4, 2))
    noise = CovarianceSpectrum.uniform(3)
    rep = reg.gaussian_chaining_check(cls, design, noise, [0.5], 2000, seed=2)
    assert rep.all_ok


# --------------------------------------------------------------- ERM


def test_clipped_loss_lipschitz():
    rng = substream(5, 1)
    y = rng.standard_normal(3)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    la = reg.clipped_loss(y, a, cap=1.0, lipschitz=2.0)
    lb = reg.clipped_loss(y, b, cap=1.0, lipschitz=2.0)
    assert abs(la - lb) <= 2.0 * np.linalg.norm(a - b) + 1e-12
    assert la <= 2.0


def test_erm_singleton_class():
    cls = ball_class(1, seed=11)
    noise = CovarianceSpectrum.uniform(3)
    rep = reg.erm_lipschitz_experiment(cls, noise, [50], reps=10, seed=0,
                                       rad_patterns=256, x_quad=128,
                                       noise_quad=20_000)
    assert rep.rows[0].median_excess == 0.0
    assert rep.all_ok


def test_erm_ten_member_bound_and_trend():
    cls = ball_class(10, seed=3, min_freq=1)
    noise = CovarianceSpectrum.uniform(3)
    rep = reg.erm_lipschitz_experiment(cls, noise, [100, 500, 1600], reps=40,
                                       seed=0, rad_patterns=512,
                                       x_quad=256, noise_quad=40_000)
    assert rep.all_ok
    meds = [r.median_excess for r in rep.rows]
    assert meds[-1] <= meds[0] + 1e-12
    row = rep.rows[1]      # n = 500
    assert row.q95_excess <= row.bound + 3 * (2 * row.rad_se + rep.risk_se)
    assert row.decomposition_ok
