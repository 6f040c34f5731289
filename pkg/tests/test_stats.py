import numpy as np
import pytest

from levyglass import stats
from levyglass.streams import derive_rng


def rng_for(name, rep=0):
    return derive_rng(111, name, rep)


def test_ks_identical_samples():
    x = np.linspace(0, 1, 50)
    res = stats.ks_two_sample(x, x.copy(), n_permutations=200, rng=rng_for("same"))
    assert res.statistic == 0.0
    assert res.p_value > 0.9


def test_ks_separated_samples():
    rng = rng_for("sep")
    a = rng.random(1000)
    b = rng.random(1000) + 0.5
    res = stats.ks_two_sample(a, b, n_permutations=2000, rng=rng_for("sep", 1))
    assert res.p_value < 1e-3
    assert 0.0 <= res.statistic <= 1.0


def test_ks_statistic_range_and_validation():
    rng = rng_for("rng")
    res = stats.ks_two_sample(rng.normal(size=40), rng.normal(size=60), n_permutations=300, rng=rng_for("r", 1))
    assert 0.0 <= res.statistic <= 1.0
    with pytest.raises(ValueError):
        stats.Sample(np.array([]))


def test_ks_null_p_values_roughly_uniform():
    rng = rng_for("null")
    rejections = 0
    trials = 200
    for t in range(trials):
        a = rng.normal(size=60)
        b = rng.normal(size=60)
        res = stats.ks_two_sample(a, b, n_permutations=800, rng=rng_for("null", t))
        rejections += res.p_value < 0.05
    assert 0.01 <= rejections / trials <= 0.12


def test_bootstrap_constant_sample():
    lo, hi = stats.bootstrap_ci(np.full(30, 2.5), np.mean, rng=rng_for("const"))
    assert lo == hi == 2.5


def test_bootstrap_normal_mean_width():
    rng = rng_for("width")
    x = rng.normal(size=10_000)
    lo, hi = stats.bootstrap_ci(x, np.mean, level=0.95, rng=rng_for("width", 1))
    expected = 2.0 * 1.96 / np.sqrt(10_000)
    assert abs((hi - lo) - expected) < 0.2 * expected
    assert lo <= np.mean(x) <= hi  # contains the plug-in estimate


def test_bootstrap_coverage():
    covered = 0
    for t in range(100):
        x = rng_for("cover", t).normal(size=100)
        lo, hi = stats.bootstrap_ci(x, np.mean, level=0.95, n_resamples=500, rng=rng_for("cover2", t))
        covered += lo <= 0.0 <= hi
    assert covered >= 90


def test_bootstrap_undersized():
    with pytest.raises(ValueError):
        stats.bootstrap_ci(np.ones(10), np.mean, rng=rng_for("u"))


def test_autocorr_iid():
    x = rng_for("iid").normal(size=10_000)
    res = stats.autocorr_stderr(x)
    assert 0.5 <= res.tau_int <= 1.5
    assert res.stationary


def test_autocorr_ar1():
    rho = 0.9
    rng = rng_for("ar1")
    x = np.empty(200_000)
    x[0] = 0.0
    noise = rng.normal(size=x.size)
    for i in range(1, x.size):
        x[i] = rho * x[i - 1] + noise[i]
    res = stats.autocorr_stderr(x)
    expected = 0.5 * (1 + rho) / (1 - rho)
    assert abs(res.tau_int - expected) < 0.3 * expected


def test_autocorr_stderr_exceeds_naive_for_correlated_input():
    rng = rng_for("corr")
    x = np.repeat(rng.normal(size=2000), 5)  # blocky, positively correlated
    res = stats.autocorr_stderr(x)
    naive = np.std(x, ddof=1) / np.sqrt(x.size)
    assert res.stderr > naive


def test_autocorr_needs_length():
    with pytest.raises(ValueError):
        stats.autocorr_stderr(np.ones(50))


def test_loglog_exact_power():
    x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    fit = stats.loglog_slope(x, x**-1)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    fit0 = stats.loglog_slope(x, np.full(5, 3.0))
    assert fit0.slope == pytest.approx(0.0, abs=1e-12)


def test_loglog_noisy_power():
    rng = rng_for("noise")
    x = np.geomspace(1.0, 10.0, 12)
    y = x**-1.5 * (1.0 + 0.05 * rng.normal(size=12))
    fit = stats.loglog_slope(x, y, rng=rng_for("noise", 1))
    assert abs(fit.slope + 1.5) < 0.2
    assert fit.ci_low <= fit.slope <= fit.ci_high


def test_loglog_validation():
    with pytest.raises(ValueError):
        stats.loglog_slope([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        stats.loglog_slope([1.0, 2.0, 3.0], [1.0, -2.0, 3.0])


def test_draw_file_round_trip_and_report(tmp_path):
    from levyglass.asymptotics import save_draws

    rng = rng_for("draws")
    a = rng.normal(size=200)
    b = rng.normal(size=300)
    pa, pb = tmp_path / "a.txt", tmp_path / "b.txt"
    save_draws(a, pa)
    save_draws(b, pb)
    sa = stats.load_draws(pa)
    sb = stats.load_draws(pb, label="b")
    assert np.array_equal(sa.values, a) and sb.label == "b"
    import json

    report_path = tmp_path / "ks.json"
    res = stats.ks_report(sa, sb, report_path, n_permutations=300, rng=rng_for("draws", 1))
    payload = json.loads(report_path.read_text())
    assert payload["statistic"] == res.statistic
    assert payload["n_a"] == 200 and payload["n_b"] == 300
