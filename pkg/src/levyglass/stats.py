"""Statistical comparison utilities for the experiment harness.

Two-sample distances use permutation p-values rather than asymptotic
formulas: the replication counts used at desk scale sit outside asymptotic
validity.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Sample",
    "KsResult",
    "AutocorrResult",
    "SlopeFit",
    "ks_two_sample",
    "bootstrap_ci",
    "autocorr_stderr",
    "loglog_slope",
    "load_draws",
    "ks_report",
]


def load_draws(path, label=""):
    """Read a raw draw file (one real per line) into a Sample."""
    with open(path) as fh:
        values = np.array([float(line) for line in fh if line.strip()])
    return Sample(values=values, label=label or str(path))


def ks_report(a, b, path, n_permutations=10_000, rng=None):
    """Run the permutation KS test and write a small JSON report."""
    import json

    res = ks_two_sample(a, b, n_permutations=n_permutations, rng=rng)
    payload = {
        "test": "two-sample Kolmogorov-Smirnov (permutation p-value)",
        "statistic": res.statistic,
        "p_value": res.p_value,
        "n_a": int(_as_values(a).size),
        "n_b": int(_as_values(b).size),
        "n_permutations": int(n_permutations),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
    return res


@dataclass
class Sample:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size == 0:
            raise ValueError("a sample must be nonempty")


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float


def _as_values(x):
    return x.values if isinstance(x, Sample) else np.asarray(x, dtype=float).ravel()


def _ks_stat_from_labels(labels, n_a, n_b, eval_mask):
    # ECDF differences are compared only at the last index of each tie group
    cum_a = np.cumsum(labels, axis=-1)
    pos = np.arange(1, labels.shape[-1] + 1)
    d = np.abs(cum_a / n_a - (pos - cum_a) / n_b)
    return np.where(eval_mask, d, 0.0).max(axis=-1)


def ks_two_sample(a, b, n_permutations=10_000, rng=None):
    """Two-sample Kolmogorov-Smirnov test with a permutation p-value."""
    va, vb = _as_values(a), _as_values(b)
    if va.size == 0 or vb.size == 0:
        raise ValueError("both samples must be nonempty")
    rng = rng if rng is not None else np.random.default_rng(0)
    combined = np.concatenate([va, vb])
    order = np.argsort(combined, kind="mergesort")
    sorted_vals = combined[order]
    eval_mask = np.empty(sorted_vals.size, dtype=bool)
    eval_mask[:-1] = sorted_vals[1:] != sorted_vals[:-1]
    eval_mask[-1] = True
    labels = np.zeros(combined.size, dtype=np.int64)
    labels[: va.size] = 1
    observed = float(_ks_stat_from_labels(labels[order], va.size, vb.size, eval_mask))
    exceed = 0
    chunk = max(1, min(256, n_permutations))
    done = 0
    while done < n_permutations:
        m = min(chunk, n_permutations - done)
        block = np.tile(labels, (m, 1))
        block = rng.permuted(block, axis=1)
        stats = _ks_stat_from_labels(block, va.size, vb.size, eval_mask)
        exceed += int(np.sum(stats >= observed - 1e-15))
        done += m
    p = (1.0 + exceed) / (n_permutations + 1.0)
    return KsResult(statistic=observed, p_value=p)


def bootstrap_ci(sample, statistic_fn, level=0.95, n_resamples=1000, rng=None):
    """Percentile bootstrap interval for statistic_fn over the sample."""
    values = _as_values(sample)
    if values.size < 20:
        raise ValueError("bootstrap_ci needs at least 20 observations")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0,1)")
    rng = rng if rng is not None else np.random.default_rng(0)
    reps = np.empty(n_resamples)
    for i in range(n_resamples):
        reps[i] = statistic_fn(values[rng.integers(0, values.size, values.size)])
    tail = 0.5 * (1.0 - level)
    return float(np.quantile(reps, tail)), float(np.quantile(reps, 1.0 - tail))


@dataclass(frozen=True)
class AutocorrResult:
    stderr: float
    tau_int: float
    geweke_z: float
    stationary: bool


def _tau_int(x):
    n = x.size
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var == 0.0:
        return 0.5, var
    # autocovariance via FFT, normalized to rho(0) = 1
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real / n
    rho = acov / acov[0]
    # Sokal windowing: grow the window until it exceeds 5 * tau(window)
    tau = 0.5
    for w in range(1, n // 2):
        tau += rho[w]
        if w >= 5.0 * tau:
            break
    return max(tau, 0.5), var


def autocorr_stderr(series):
    """Autocorrelation-corrected standard error of the mean of a time series."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 100:
        raise ValueError("autocorr_stderr needs at least 100 points")
    tau, var = _tau_int(x)
    stderr = float(np.sqrt(2.0 * tau * var / x.size))
    # Geweke diagnostic: early 10% against late 50%
    a = x[: max(x.size // 10, 10)]
    b = x[x.size // 2 :]
    za, va = _tau_int(a)
    zb, vb = _tau_int(b)
    denom = np.sqrt(2.0 * za * va / a.size + 2.0 * zb * vb / b.size)
    z = float((a.mean() - b.mean()) / denom) if denom > 0 else 0.0
    return AutocorrResult(stderr=stderr, tau_int=float(tau), geweke_z=z, stationary=abs(z) < 3.0)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    ci_low: float
    ci_high: float


def loglog_slope(x_grid, y_values, n_resamples=1000, rng=None):
    """Least-squares slope of ln y against ln x with a residual-bootstrap CI."""
    x = np.asarray(x_grid, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need at least 3 (x, y) points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    rng = rng if rng is not None else np.random.default_rng(0)
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    fit = design @ coef
    resid = ly - fit
    slopes = np.empty(n_resamples)
    for i in range(n_resamples):
        yb = fit + resid[rng.integers(0, resid.size, resid.size)]
        cb, *_ = np.linalg.lstsq(design, yb, rcond=None)
        slopes[i] = cb[0]
    return SlopeFit(slope=float(coef[0]), ci_low=float(np.quantile(slopes, 0.025)), ci_high=float(np.quantile(slopes, 0.975)))
