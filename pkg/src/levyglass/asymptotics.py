"""Samplers for the limit laws and the replica-symmetric functional.

The one-sided stable variable is built straight from its characteristic
function: points of the power-law intensity above a cutoff, the exact
compensator on (cutoff, 1], and a centered Gaussian standing in for the
removed small jumps.  The effective-part limit is a sum of independent
compound-Poisson cycle terms realized at a finite truncation level.
"""

from dataclasses import dataclass

import numpy as np

from .quadrature import FormulaResult, _lncosh_integral, free_energy_limit, lncosh

__all__ = [
    "LimitLawSpec",
    "sample_Y_alpha",
    "lnZbar_fluct_sample",
    "sample_X_alpha_beta",
    "cycle_term_magnitude",
    "sub1_free_energy_limit_sample",
    "rs_functional_Q",
    "save_draws",
]


def save_draws(values, path):
    """Raw draw file: one real per line, 17 significant digits."""
    from .records import fmt17

    with open(path, "w") as fh:
        for v in np.asarray(values, dtype=float).ravel():
            fh.write(fmt17(v) + "\n")

_CHUNK_POINTS = 1 << 23


@dataclass
class LimitLawSpec:
    """Tuning knobs for the limit-law samplers.

    lambda_rate scales the second point process entering the variational
    functional; the functional itself is defined (and only evaluated) at 1.
    """

    alpha: float = 1.5
    beta: float = 1.0
    cutoff_eps: float = 1e-3
    max_cycle_len: int = 9
    ppp_trunc: int = 10_000
    tail_correction: bool = True
    lambda_rate: float = 1.0

    def __post_init__(self):
        if self.cutoff_eps <= 0.0:
            raise ValueError("cutoff_eps must be positive")
        if self.max_cycle_len < 3:
            raise ValueError("max_cycle_len must be >= 3")
        if self.ppp_trunc < 1:
            raise ValueError("ppp_trunc must be >= 1")


def _poisson_sums(rng, lam, size, draw_fn):
    """Sums of draw_fn-values over Poisson(lam) points, one sum per output."""
    counts = rng.poisson(lam, size)
    out = np.zeros(size)
    start = 0
    while start < size:
        stop = start + 1
        block = int(counts[start])
        while stop < size and block + counts[stop] <= _CHUNK_POINTS:
            block += int(counts[stop])
            stop += 1
        if block:
            vals = draw_fn(block)
            idx = np.repeat(np.arange(start, stop), counts[start:stop])
            out[start:stop] = np.bincount(idx - start, weights=vals, minlength=stop - start)
        start = stop
    return out


def sample_Y_alpha(alpha, spec, rng, size=None, compensate=True):
    """Draws of the one-sided stable fluctuation limit.

    Sum of intensity-alpha*x^{-1-alpha} points above spec.cutoff_eps, minus
    the compensator int_eps^1 x dLevy, plus a centered Gaussian carrying the
    small-jump variance.  With compensate=False (needs alpha < 1) the mean
    of the small jumps is restored instead, matching the raw point-sum law.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0,2)")
    if not compensate and alpha >= 1.0:
        raise ValueError("the uncompensated sum only exists for alpha < 1")
    eps = spec.cutoff_eps
    scalar = size is None
    n = 1 if scalar else int(size)
    lam = eps ** (-alpha)
    sums = _poisson_sums(rng, lam, n, lambda m: eps * (1.0 - rng.random(m)) ** (-1.0 / alpha))
    small_var = alpha * eps ** (2.0 - alpha) / (2.0 - alpha)
    sums += np.sqrt(small_var) * rng.standard_normal(n)
    if compensate:
        if eps < 1.0:
            if alpha == 1.0:
                sums -= -np.log(eps)
            else:
                sums -= alpha * (1.0 - eps ** (1.0 - alpha)) / (1.0 - alpha)
    else:
        sums += alpha * eps ** (1.0 - alpha) / (1.0 - alpha)
    return float(sums[0]) if scalar else sums


def lnZbar_fluct_sample(alpha, beta, N, rng, size=None):
    """(ln Zbar_N - centering) / N^{1/alpha} for fresh disorder at size N."""
    from .quadrature import centering_integral

    scalar = size is None
    n_draws = 1 if scalar else int(size)
    if beta == 0.0:
        out = np.zeros(n_draws)
        return 0.0 if scalar else out
    n_edges = N * (N - 1) // 2
    center = centering_integral(alpha, beta, N).value
    scale = float(N) ** (-1.0 / alpha)
    out = np.empty(n_draws)
    chunk = max(1, _CHUNK_POINTS // max(n_edges, 1))
    start = 0
    while start < n_draws:
        stop = min(start + chunk, n_draws)
        m = stop - start
        u = 1.0 - rng.random((m, n_edges))
        absj = float(N) ** (-1.0 / alpha) * u ** (-1.0 / alpha)
        out[start:stop] = (lncosh(beta * absj).sum(axis=1) - center) * scale
        start = stop
    return float(out[0]) if scalar else out


def sample_X_alpha_beta(alpha, beta, spec, rng, size=None):
    """Multiplicative limit of the effective partition-function part.

    exp(T_3 + ... + T_m) with T_k a compound Poisson of rate eps^{-alpha k}/(2k)
    whose jumps are ln(1 + prod_{i<=k} tanh(beta g_i)) over k independent
    cutoff-conditioned couplings.  Cycles with a coordinate below the cutoff
    carry a variance of (q^k - q_eps^k)/(2k), where q is the two-replica bond
    moment alpha int tanh^2(beta x) x^{-1-alpha} dx and q_eps its truncation;
    with tail_correction on they are restored as an independent lognormal
    factor with matched variance and unit mean (their jumps are bounded by
    tanh(beta*eps), so the Gaussian stand-in is accurate).
    """
    from .quadrature import _tanh_sq_integral

    eps = spec.cutoff_eps
    m_max = spec.max_cycle_len
    worst = eps ** (-alpha * m_max) / (2.0 * m_max)
    if worst > 1e7:
        raise ValueError("cutoff_eps too small for max_cycle_len; the top cycle rate is unmanageable")
    scalar = size is None
    n = 1 if scalar else int(size)
    total = np.zeros(n)
    q_full = alpha * beta**alpha * _tanh_sq_integral(alpha, 0.0)[0] if beta > 0 else 0.0
    q_eps = alpha * beta**alpha * _tanh_sq_integral(alpha, beta * eps)[0] if beta > 0 else 0.0
    for k in range(3, m_max + 1):
        lam = eps ** (-alpha * k) / (2.0 * k)

        def jumps(m, k=k):
            g = eps * (1.0 - rng.random((m, k))) ** (-1.0 / alpha)
            sign = rng.integers(0, 2, (m, k)) * 2 - 1
            prod = np.prod(np.tanh(beta * g * sign), axis=1)
            return np.log1p(prod)

        total += _poisson_sums(rng, lam, n, jumps)
        if spec.tail_correction:
            v_k = (q_full**k - q_eps**k) / (2.0 * k)
            total += np.sqrt(v_k) * rng.standard_normal(n) - 0.5 * v_k
    x = np.exp(total)
    return float(x[0]) if scalar else x


def cycle_term_magnitude(alpha, beta, eps, k, rng, n_draws=4000):
    """Monte Carlo estimate of E|T_k|, for checking the cycle-length cap."""
    lam = eps ** (-alpha * k) / (2.0 * k)
    g = eps * (1.0 - rng.random((n_draws, k))) ** (-1.0 / alpha)
    sign = rng.integers(0, 2, (n_draws, k)) * 2 - 1
    jumps = np.log1p(np.prod(np.tanh(beta * g * sign), axis=1))
    return lam * float(np.mean(np.abs(jumps)))


def sub1_free_energy_limit_sample(alpha, beta, spec, rng, size=None):
    """Draws of (beta/2^{1/alpha}) * sum_j gamma_j^{-1/alpha} for alpha < 1.

    The sum is truncated at spec.ppp_trunc points; with tail_correction on,
    the deterministic remainder sum_{j>J} j^{-1/alpha} ~ J^{1-1/alpha}/(1/alpha-1)
    is added back.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("this limit needs alpha in (0,1)")
    scalar = size is None
    n = 1 if scalar else int(size)
    trunc = spec.ppp_trunc
    out = np.empty(n)
    chunk = max(1, _CHUNK_POINTS // trunc)
    start = 0
    while start < n:
        stop = min(start + chunk, n)
        gam = np.cumsum(rng.exponential(size=(stop - start, trunc)), axis=1)
        out[start:stop] = np.sum(gam ** (-1.0 / alpha), axis=1)
        start = stop
    if spec.tail_correction:
        out += trunc ** (1.0 - 1.0 / alpha) / (1.0 / alpha - 1.0)
    out *= beta / 2.0 ** (1.0 / alpha)
    return float(out[0]) if scalar else out


def _campbell_lncosh(alpha, beta, lo, hi):
    """E sum of ln cosh(beta xi) over intensity-(alpha/|x|^{1+alpha}) points in lo<|x|<=hi."""
    if hi <= lo:
        return 0.0
    val, _ = _lncosh_integral(alpha, beta * lo, beta * hi if np.isfinite(hi) else np.inf)
    return alpha * beta**alpha * val


def rs_functional_Q(alpha, beta, spec, rng, n_outer=20_000, method="product", n_inner=2048):
    """Monte Carlo value of the variational functional at the product kernel.

    For the product kernel the two inner expectations collapse to products of
    cosh over the point processes, so each outer draw contributes the
    difference of two ln cosh point sums.  Points below the cutoff and above
    the heavy-tail threshold enter through their exact first moments
    (Campbell), keeping the sampled part at finite variance; the heavy tail
    of ln cosh has index alpha < 2, so a naive full-sum average would not
    admit a meaningful standard error.
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError("the functional is evaluated for alpha in (1,2)")
    if method not in ("product", "nested"):
        raise ValueError("method must be 'product' or 'nested'")
    if beta == 0.0:
        return FormulaResult(np.log(2.0), 0.0)
    eps = spec.cutoff_eps
    t_heavy = max(100.0 / beta, 10.0 * eps)
    half = 0.5 * spec.lambda_rate
    lam_full = eps ** (-alpha)
    correction = (1.0 - half) * (_campbell_lncosh(alpha, beta, 0.0, eps) + _campbell_lncosh(alpha, beta, t_heavy, np.inf))

    def draw_points(lam, m):
        counts = rng.poisson(lam, m)
        total = int(counts.sum())
        mags = eps * (1.0 - rng.random(total)) ** (-1.0 / alpha)
        return counts, mags

    values = np.empty(n_outer)
    chunk = max(1, _CHUNK_POINTS // max(int(lam_full) + 1, 1) // 4)
    start = 0
    while start < n_outer:
        stop = min(start + chunk, n_outer)
        m = stop - start
        if method == "product":
            c1, p1 = draw_points(lam_full, m)
            c2, p2 = draw_points(half * lam_full, m)
            w1 = np.where(p1 <= t_heavy, lncosh(beta * p1), 0.0)
            w2 = np.where(p2 <= t_heavy, lncosh(beta * p2), 0.0)
            s1 = np.bincount(np.repeat(np.arange(m), c1), weights=w1, minlength=m)
            s2 = np.bincount(np.repeat(np.arange(m), c2), weights=w2, minlength=m)
            values[start:stop] = s1 - s2
        else:
            for i in range(m):
                values[start + i] = _nested_draw(alpha, beta, eps, t_heavy, half * lam_full, lam_full, rng, n_inner)
        start = stop
    est = np.log(2.0) + float(np.mean(values)) + correction
    stderr = float(np.std(values, ddof=1)) / np.sqrt(n_outer)
    return FormulaResult(est, stderr)


def _nested_draw(alpha, beta, eps, t_heavy, lam_half, lam_full, rng, n_inner):
    """One outer draw with explicit inner Monte Carlo over spin assignments."""

    def points(lam):
        count = rng.poisson(lam)
        mags = eps * (1.0 - rng.random(count)) ** (-1.0 / alpha)
        return mags[mags <= t_heavy]

    def log_mean_exp(t):
        m = t.max()
        return m + np.log(np.mean(np.exp(t - m)))

    xi = points(lam_full)
    xi2 = points(lam_half)
    # E_s cosh(beta sum xi_k s_k) = E_s exp(beta sum xi_k s_k) by symmetry
    term1 = 0.0
    if xi.size:
        s = rng.integers(0, 2, (n_inner, xi.size)) * 2.0 - 1.0
        term1 = log_mean_exp(beta * (s @ xi))
    term2 = 0.0
    if xi2.size:
        r = rng.integers(0, 2, (n_inner, xi2.size)) * 2.0 - 1.0
        term2 = log_mean_exp(beta * (r @ xi2))
    return term1 - term2
