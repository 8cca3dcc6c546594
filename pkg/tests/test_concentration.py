import math

import numpy as np
import pytest

from vecproc import concentration as conc
from vecproc.hilbert import OrthonormalBasis
from vecproc.rng import substream


def test_spectrum_validation():
    with pytest.raises(ValueError):
        conc.CovarianceSpectrum(np.array([0.1, 0.5]))   # increasing
    with pytest.raises(ValueError):
        conc.CovarianceSpectrum(np.array([-0.1]))
    spec = conc.CovarianceSpectrum.geometric(30)
    assert spec.trace == pytest.approx(1.0, abs=1e-12)
    assert conc.CovarianceSpectrum.uniform(10).trace == pytest.approx(1.0)
    assert conc.CovarianceSpectrum.single().d_y == 1


def test_sample_gaussian_zero_spectrum_returns_mean():
    spec = conc.CovarianceSpectrum(np.zeros(3))
    mean = np.array([1.0, -2.0, 0.5])
    out = conc.sample_gaussian(mean, spec, substream(0, 1))
    assert np.array_equal(out, mean)


def test_sample_gaussian_moments():
    rng = substream(1, 2)
    spec = conc.CovarianceSpectrum.single()
    draws = conc.sample_gaussian_batch(spec, rng, 100_000)
    assert draws.var() == pytest.approx(1.0, abs=0.02)

    spec = conc.CovarianceSpectrum.geometric(12)
    draws = conc.sample_gaussian_batch(spec, substream(1, 3), 100_000)
    sq = np.sum(draws ** 2, axis=1)
    se = sq.std() / math.sqrt(draws.shape[0])
    assert abs(sq.mean() - spec.trace) <= 3 * se


def test_sample_gaussian_projection_variance():
    # defining property: <Y, y> is Gaussian with variance <Phi y, y>
    spec = conc.CovarianceSpectrum(np.array([0.5, 0.3, 0.2]))
    draws = conc.sample_gaussian_batch(spec, substream(2, 4), 100_000)
    rng = substream(2, 5)
    for _ in range(10):
        y = rng.standard_normal(3)
        proj = draws @ y
        want = float(np.sum(spec.eigenvalues * y ** 2))
        assert proj.var() == pytest.approx(want, rel=0.05)


def test_sample_gaussian_with_rotated_basis():
    basis = OrthonormalBasis(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    spec = conc.CovarianceSpectrum(np.array([0.9, 0.1]), basis=basis)
    draws = conc.sample_gaussian_batch(spec, substream(3, 6), 50_000)
    cov = np.cov(draws.T)
    want = basis.columns @ np.diag(spec.eigenvalues) @ basis.columns.T
    assert np.allclose(cov, want, atol=0.02)


def test_hoeffding_real():
    rep = conc.hoeffding_real_check(1.0, 100, [0.0, 0.5, 2.0], 20_000, seed=5)
    assert rep.bounds[0] == 1.0          # t = 0: trivial bound
    assert rep.all_ok


def test_hoeffding_real_support_bound():
    # n=1, c=1: threshold sqrt(1.2) exceeds the support, frequency must be 0
    rep = conc.hoeffding_real_check(1.0, 1, [0.6], 10_000, seed=6)
    assert rep.freqs[0] == 0.0
    assert rep.all_ok


def test_hoeffding_hilbert():
    rep = conc.hoeffding_hilbert_check(1.0, 50, 20, [0.5, 1.0, 2.0, 4.0],
                                       20_000, seed=7)
    assert rep.all_ok
    small_t = conc.hoeffding_hilbert_check(1.0, 10, 3, [0.1], 10_000, seed=8)
    assert small_t.bounds[0] >= 1.0      # t <= log 2: bound exceeds one


def test_hoeffding_hilbert_dim_one_consistency():
    # d_Y = 1 reduces to a two-sided sign sum: ||S|| >= 2b sqrt(t) happens
    # about twice as often as the one-sided event at matched threshold
    t = 0.8
    rep_h = conc.hoeffding_hilbert_check(1.0, 40, 1, [t], 40_000, seed=9)
    rep_r = conc.hoeffding_real_check(1.0, 40, [2 * t], 40_000, seed=10)
    se = math.sqrt(max(rep_h.freqs[0], rep_r.freqs[0], 1e-4) / 40_000)
    assert abs(rep_h.freqs[0] - 2 * rep_r.freqs[0]) <= 6 * se + 1e-3


def test_cosh_moment_check():
    rep = conc.cosh_moment_check(1.0, 10, [0.01, 0.3], 20_000, seed=11)
    assert rep.all_ok
    lhs_small = rep.rows[0].lhs
    assert lhs_small == pytest.approx(1.0, abs=0.01)
    assert rep.rows[1].rhs == pytest.approx(math.exp(0.9), abs=1e-12)


def test_cosh_moment_deterministic_unit_vector():
    # n = 1: ||S_1|| = 1 surely, so the estimator is exactly cosh(lambda)
    for lam in (0.5, 1.0, 2.0):
        rep = conc.cosh_moment_check(1.0, 1, [lam], 5_000, seed=12)
        row = rep.rows[0]
        assert row.lhs == pytest.approx(math.cosh(lam), abs=1e-9)
        assert row.lhs <= math.exp(lam ** 2)
        assert row.status == "ok"


def test_cosh_inconclusive_when_estimator_noisy():
    # large lambda: the cosh estimator's relative error explodes and the
    # threshold is flagged inconclusive rather than failed
    rep = conc.cosh_moment_check(1.0, 30, [4.0], 10_000, seed=16)
    assert rep.rows[0].status == "inconclusive"
    assert rep.all_ok


def test_cosh_lambda_validation():
    with pytest.raises(ValueError):
        conc.cosh_moment_check(1.0, 5, [0.0], 1000, seed=0)


def test_gaussian_mgf_single_mode_equality():
    rows = conc.gaussian_mgf_check(conc.CovarianceSpectrum.single(),
                                   [0.1, 0.25, 0.4])
    for r in rows:
        assert r.product == pytest.approx(r.bound, abs=1e-12)
        assert r.ok


def test_gaussian_mgf_geometric_and_uniform():
    rows = conc.gaussian_mgf_check(conc.CovarianceSpectrum.geometric(30), [0.25])
    assert rows[0].product < math.sqrt(2.0)
    assert rows[0].ok
    rows = conc.gaussian_mgf_check(conc.CovarianceSpectrum.uniform(10), [0.4])
    assert rows[0].product <= 0.2 ** -0.5
    assert rows[0].ok


def test_gaussian_mgf_validation():
    spec = conc.CovarianceSpectrum.single()
    with pytest.raises(ValueError):
        conc.gaussian_mgf_check(spec, [0.6])
    with pytest.raises(ValueError):
        conc.gaussian_mgf_check(conc.CovarianceSpectrum(np.array([2.0])), [0.1])


def test_gaussian_tail():
    spec = conc.CovarianceSpectrum.geometric(10)
    rep = conc.gaussian_tail_check(spec, [0.0, 1.0, 2.0, 3.0], 20_000, seed=13)
    assert rep.bounds[0] == 2.0
    assert rep.all_ok
    with pytest.raises(ValueError):
        conc.gaussian_tail_check(spec, [1.0], 5_000, seed=0)


def test_gaussian_mgf_random_spectra_property():
    # the finite-product inequality holds for every trace-1 spectrum
    for seed in range(30):
        rng = substream(17, seed)
        ev = np.sort(rng.uniform(0.05, 1.0, size=int(rng.integers(1, 12))))[::-1]
        spec = conc.CovarianceSpectrum(ev / ev.sum())
        lam = float(rng.uniform(0.01, 0.49))
        rows = conc.gaussian_mgf_check(spec, [lam])
        assert rows[0].ok


def test_reports_deterministic_across_threads():
    a = conc.hoeffding_hilbert_check(1.0, 20, 5, [1.0, 2.0], 30_000, seed=14,
                                     threads=1)
    b = conc.hoeffding_hilbert_check(1.0, 20, 5, [1.0, 2.0], 30_000, seed=14,
                                     threads=4)
    assert np.array_equal(a.freqs, b.freqs)
    c = conc.gaussian_tail_check(conc.CovarianceSpectrum.uniform(5), [1.0],
                                 20_000, seed=15, threads=3)
    d = conc.gaussian_tail_check(conc.CovarianceSpectrum.uniform(5), [1.0],
                                 20_000, seed=15, threads=1)
    assert np.array_equal(c.freqs, d.freqs)
