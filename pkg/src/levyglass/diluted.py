"""Sparse Bernoulli and Poisson-multigraph models and the truncation bridge.

Zeroing the bonds below a cutoff eps turns the fully connected model into a
Bernoulli-diluted one with per-pair rate eps^{-alpha}/N; Poissonizing each
pair then yields the multigraph model.  The Poisson model family itself is
parameterized by a connectivity gamma with total edge count Poisson(gamma*N).

Note the bridge subtlety: the per-pair Bernoulli rate eps^{-alpha}/N
Poissonizes to a TOTAL rate of eps^{-alpha}(N-1)/2, i.e. a family parameter
gamma = eps^{-alpha}(N-1)/(2N), roughly half the truncation connectivity.
`bridge_gamma` returns it; comparisons against the fully connected model use
it, while the model family default stays gamma = eps^{-alpha}.
"""

from dataclasses import dataclass, field

import numpy as np

from .exact import exact_log_partition
from .heavy_tail import DisorderMatrix, sample_disorder, sample_g_eps
from .records import fmt17

__all__ = [
    "PvbInstance",
    "VbInstance",
    "bridge_gamma",
    "mean_abs_g_eps",
    "sample_pvb",
    "sample_vb",
    "truncation_gap",
    "TruncationGapReport",
    "vb_pvb_gap",
    "superadditivity_experiment",
    "DefectReport",
    "dump_pvb",
    "load_pvb",
]


def bridge_gamma(alpha, eps, n_sites):
    """Connectivity matching the Poissonized truncation of the dense model."""
    return eps ** (-alpha) * (n_sites - 1) / (2.0 * n_sites)


def mean_abs_g_eps(alpha, eps):
    """E|g_eps| = alpha * eps / (alpha - 1); finite only for alpha > 1."""
    if alpha <= 1.0:
        raise ValueError("the truncated coupling has no mean for alpha <= 1")
    return alpha * eps / (alpha - 1.0)


@dataclass
class PvbInstance:
    """Poisson multigraph instance; repeated edges are kept as drawn."""

    n_sites: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    weights: np.ndarray
    gamma: float
    eps: float

    def __post_init__(self):
        if self.edge_i.size and (self.edge_i.min() < 0 or self.edge_j.max() >= self.n_sites):
            raise ValueError("edge endpoints out of range")
        if self.weights.size and np.min(np.abs(self.weights)) < self.eps - 1e-12:
            raise ValueError("all weights must satisfy |w| >= eps")

    @property
    def n_edges(self):
        return self.weights.size

    def to_matrix(self):
        """Dense coupling table; parallel edges sum only here, inside the energy."""
        m = np.zeros((self.n_sites, self.n_sites))
        np.add.at(m, (self.edge_i, self.edge_j), self.weights)
        np.add.at(m, (self.edge_j, self.edge_i), self.weights)
        return DisorderMatrix(n_sites=self.n_sites, couplings=m)


@dataclass
class VbInstance:
    """Bernoulli-diluted instance; at most one edge per pair."""

    n_sites: int
    edge_i: np.ndarray
    edge_j: np.ndarray
    weights: np.ndarray
    eps: float

    @property
    def n_edges(self):
        return self.weights.size

    def to_matrix(self):
        m = np.zeros((self.n_sites, self.n_sites))
        m[self.edge_i, self.edge_j] = self.weights
        m[self.edge_j, self.edge_i] = self.weights
        return DisorderMatrix(n_sites=self.n_sites, couplings=m)


def sample_pvb(N, alpha, eps, rng, gamma=None):
    """Poisson(gamma*N) edges, endpoints uniform over unordered pairs, weights g_eps."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    gamma = eps ** (-alpha) if gamma is None else gamma
    iu, ju = np.triu_indices(N, k=1)
    count = int(rng.poisson(gamma * N))
    which = rng.integers(0, iu.size, count)
    weights = np.asarray(sample_g_eps(alpha, eps, rng, size=count), dtype=float)
    return PvbInstance(n_sites=N, edge_i=iu[which], edge_j=ju[which], weights=weights, gamma=gamma, eps=eps)


def sample_vb(N, alpha, eps, rng):
    """Bernoulli(eps^{-alpha}/N) per pair with independent g_eps weights."""
    p = eps ** (-alpha) / N
    if p > 1.0:
        raise ValueError("connectivity eps^(-alpha)/N exceeds 1; raise eps or N")
    iu, ju = np.triu_indices(N, k=1)
    mask = rng.random(iu.size) < p
    count = int(mask.sum())
    weights = np.asarray(sample_g_eps(alpha, eps, rng, size=count), dtype=float)
    return VbInstance(n_sites=N, edge_i=iu[mask], edge_j=ju[mask], weights=weights, eps=eps)


def _poisson_quantile_small(w, p, k_max=10):
    """Poisson(p) quantile at heights w, exact for counts up to k_max."""
    out = np.zeros(w.shape, dtype=np.int64)
    cdf = np.exp(-p)
    term = cdf
    for k in range(1, k_max + 1):
        out[w > cdf] = k
        term *= p / k
        cdf += term
    return out


def coupled_dilution_draw(alpha, eps, N, rng):
    """One draw of (dense, Bernoulli-diluted, Poisson-diluted) on shared uniforms.

    Each pair gets a presence height v and a magnitude height u.  The dense
    coupling is strong (|J| >= eps, magnitude eps*u^{-1/alpha}) when v <= p =
    eps^{-alpha}/N and weak otherwise; the Bernoulli model keeps exactly the
    strong edges with the same weights; the Poisson count is the quantile of
    Poisson(p) at 1-v, so it reuses the same first edge whenever possible.
    All three marginal laws are exact; only the overlap is maximized, which
    collapses the variance of free-energy differences.
    """
    p = eps ** (-alpha) / N
    if p > 1.0:
        raise ValueError("connectivity eps^(-alpha)/N exceeds 1; raise eps or N")
    iu, ju = np.triu_indices(N, k=1)
    n_pairs = iu.size
    v = rng.random(n_pairs)
    u = 1.0 - rng.random(n_pairs)
    signs = rng.integers(0, 2, n_pairs) * 2 - 1
    strong = v <= p
    mag = np.empty(n_pairs)
    mag[strong] = eps * u[strong] ** (-1.0 / alpha)
    mag[~strong] = (N * (p + (1.0 - p) * u[~strong])) ** (-1.0 / alpha)
    dense_vals = signs * mag
    dense = DisorderMatrix.from_upper(N, dense_vals)
    vb = VbInstance(n_sites=N, edge_i=iu[strong], edge_j=ju[strong],
                    weights=dense_vals[strong], eps=eps)
    counts = _poisson_quantile_small(1.0 - v, p)
    first = counts >= 1
    extra = counts - 1
    extra[~first] = 0
    n_extra = int(extra.sum())
    extra_w = np.asarray(sample_g_eps(alpha, eps, rng, size=n_extra), dtype=float).reshape(n_extra)
    ei = np.concatenate([iu[first], np.repeat(iu, extra)])
    ej = np.concatenate([ju[first], np.repeat(ju, extra)])
    ww = np.concatenate([dense_vals[first], extra_w])
    pvb = PvbInstance(n_sites=N, edge_i=ei, edge_j=ej, weights=ww,
                      gamma=bridge_gamma(alpha, eps, N), eps=eps)
    return dense, vb, pvb


@dataclass
class TruncationGapReport:
    alpha: float
    beta: float
    eps: float
    n_sites: int
    reps: int
    gap: float
    gap_stderr: float
    dense_mean: float
    pvb_mean: float
    vb_gap: float
    vb_gap_stderr: float
    truncation_bound: float


def truncation_gap(alpha, beta, eps, N, reps, rng):
    """Measured free-energy gap between the dense model and its Poissonized truncation.

    Free energies are exact (enumeration) and the three models share their
    uniforms per replication (coupled_dilution_draw), so the paired gap
    estimate has a usable standard error; the marginal laws are untouched.
    The report carries the analytic bound alpha beta^2 eps^{2-alpha}/(2-alpha).
    """
    if N > 20:
        raise ValueError("truncation_gap uses exact engines; N is limited to 20")
    dense = np.empty(reps)
    pvb = np.empty(reps)
    vb = np.empty(reps)
    for r in range(reps):
        dm, vi, pi = coupled_dilution_draw(alpha, eps, N, rng)
        dense[r] = exact_log_partition(dm, beta).log_z / N
        vb[r] = exact_log_partition(vi.to_matrix(), beta).log_z / N
        pvb[r] = exact_log_partition(pi.to_matrix(), beta).log_z / N
    diff = dense - pvb
    vb_diff = vb - pvb
    bound = alpha * beta**2 * eps ** (2.0 - alpha) / (2.0 - alpha)
    return TruncationGapReport(
        alpha=alpha, beta=beta, eps=eps, n_sites=N, reps=reps,
        gap=float(diff.mean()), gap_stderr=float(diff.std(ddof=1) / np.sqrt(reps)),
        dense_mean=float(dense.mean()), pvb_mean=float(pvb.mean()),
        vb_gap=float(vb_diff.mean()), vb_gap_stderr=float(vb_diff.std(ddof=1) / np.sqrt(reps)),
        truncation_bound=bound,
    )


@dataclass
class DefectReport:
    model: str
    m_sites: int
    n_sites: int
    reps: int
    defect: float
    stderr: float
    lower_bound: float | None
    per_size_means: dict = field(default_factory=dict)


def superadditivity_experiment(alpha, beta, sizes, reps, rng, model="levy", eps=1.0, spec=None):
    """Estimate E ln Z_{M+N} - E ln Z_M - E ln Z_N over independent draws.

    For the Poisson model the family connectivity gamma = eps^{-alpha} is
    shared by all three sizes, so the interpolation bound -6 beta gamma E|y|
    applies and is reported; for the dense model the bound field is None.
    """
    from .heavy_tail import HeavyTailSpec

    m_sites, n_sites = sizes
    total = m_sites + n_sites
    if total > 24:
        raise ValueError("superadditivity uses exact engines; M+N is limited to 24")
    if model not in ("levy", "pvb"):
        raise ValueError("model must be 'levy' or 'pvb'")
    spec = spec if spec is not None else HeavyTailSpec.canonical(alpha)

    def draw_lnz(size):
        if model == "levy":
            matrix = sample_disorder(spec, size, rng)
        else:
            matrix = sample_pvb(size, alpha, eps, rng).to_matrix()
        return exact_log_partition(matrix, beta).log_z

    samples = {size: np.empty(reps) for size in (total, m_sites, n_sites)}
    for r in range(reps):
        for size in (total, m_sites, n_sites):
            samples[size][r] = draw_lnz(size)
    defect = samples[total] - samples[m_sites] - samples[n_sites]
    bound = None
    if model == "pvb":
        bound = -6.0 * beta * eps ** (-alpha) * mean_abs_g_eps(alpha, eps)
    return DefectReport(
        model=model, m_sites=m_sites, n_sites=n_sites, reps=reps,
        defect=float(defect.mean()), stderr=float(defect.std(ddof=1) / np.sqrt(reps)),
        lower_bound=bound,
        per_size_means={int(k): float(v.mean()) for k, v in samples.items()},
    )


def _added_edge_mean(alpha, beta, eps, corr):
    """E over w ~ g_eps of ln<exp(beta w s_i s_j)> on a base with <s_i s_j> = corr.

    By the bond identity this is E ln cosh(beta w) + E ln(1 + tanh(beta w) corr);
    averaging the sign of w turns the second term into the bounded integrand
    ln(1 - tanh^2(beta x) corr^2)/2, so the heavy weight tail never appears.
    """
    from scipy import integrate

    from .quadrature import _lncosh_integral, lncosh

    k_lncosh = alpha * beta**alpha * eps**alpha * _lncosh_integral(alpha, beta * eps)[0]
    c2 = min(corr * corr, 1.0 - 1e-14)
    if c2 == 0.0:
        return k_lncosh
    # integrate far enough that the remainder (bounded by |ln(1-c2)| eps^a X^-a)
    # is below 1e-6 even for a nearly frozen pair; split where tanh saturates
    x_hi = max(60.0 / beta, (40.0 * eps**alpha * 1e6) ** (1.0 / alpha))
    x_mid = min(30.0 / beta, x_hi / 2.0)
    f = lambda x: 0.5 * np.log1p(-np.tanh(beta * x) ** 2 * c2) * x ** (-1.0 - alpha)
    # near-frozen pairs push the integrand to ln(1-c2); table accuracy of 1e-8
    # is ample, so run quietly (full_output) at a loose tolerance
    val = integrate.quad(f, eps, x_mid, limit=300, epsabs=1e-10, epsrel=1e-9, full_output=1)[0]
    val += 0.5 * np.log1p(-c2) * (x_mid ** (-alpha) - x_hi ** (-alpha)) / alpha
    return k_lncosh + alpha * eps**alpha * val


def _pair_mean_table(alpha, beta, eps, n_grid=257):
    """Table of the weight-averaged added-bond energy as a function of |<ss>|."""
    grid = np.linspace(0.0, 1.0, n_grid)
    vals = np.array([_added_edge_mean(alpha, beta, eps, c) for c in grid])
    return grid, vals


def vb_pvb_gap(alpha, beta, eps, N, reps, rng):
    """Conditional estimate of E F_VB - E F_PVB at matched per-pair rates.

    Given the shared (maximally coupled) edge configuration, a pair without a
    shared edge hosts a Bernoulli-only edge with probability
    (e^{-p}-1+p)/e^{-p}, and a shared pair carries (p-1+e^{-p})/(1-e^{-p})
    Poisson extras on average, p = eps^{-alpha}/N.  Both event classes shift
    the free energy by the weight-averaged bond energy at that pair's
    correlation, so the difference is estimated by weighting an exact
    correlation pass with these rates.  Nothing heavy-tailed is ever sampled;
    simultaneous-event interactions (O(p^4) per pair pair) are neglected.
    """
    from .exact import pair_correlations

    if N > 18:
        raise ValueError("vb_pvb_gap uses exact engines; N is limited to 18")
    p = eps ** (-alpha) / N
    q_vb_only = (np.exp(-p) - 1.0 + p) / np.exp(-p)
    q_extra = (p - 1.0 + np.exp(-p)) / (1.0 - np.exp(-p))
    grid, table = _pair_mean_table(alpha, beta, eps)
    iu, ju = np.triu_indices(N, k=1)
    diffs = np.empty(reps)
    for r in range(reps):
        _, vb, pvb = coupled_dilution_draw(alpha, eps, N, rng)
        shared = np.zeros((N, N))
        shared_mask = np.zeros(iu.size, dtype=bool)
        pvb_first = set(zip(pvb.edge_i.tolist(), pvb.edge_j.tolist()))
        lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(iu, ju))}
        for i, j, w in zip(vb.edge_i, vb.edge_j, vb.weights):
            if (int(i), int(j)) in pvb_first:
                shared[i, j] += w
                shared[j, i] += w
                shared_mask[lookup[(int(i), int(j))]] = True
        corr = pair_correlations(DisorderMatrix(n_sites=N, couplings=shared), beta)
        m_vals = np.interp(np.abs(corr[iu, ju]), grid, table)
        diffs[r] = (q_vb_only * m_vals[~shared_mask].sum() - q_extra * m_vals[shared_mask].sum()) / N
    return float(diffs.mean()), float(diffs.std(ddof=1) / np.sqrt(reps))


def dump_pvb(instance, path, alpha=float("nan"), beta=float("nan"), seed=0):
    """Instance text format with the extra edge-multiplicity column."""
    with open(path, "w") as fh:
        fh.write(f"N {instance.n_sites}\n")
        fh.write(f"alpha {fmt17(alpha)}\n")
        fh.write(f"beta {fmt17(beta)}\n")
        fh.write(f"seed {seed}\n")
        for i, j, w in zip(instance.edge_i, instance.edge_j, instance.weights):
            fh.write(f"{i + 1} {j + 1} {fmt17(w)} 1\n")


def load_pvb(path, gamma=float("nan"), eps=0.0):
    meta = {}
    ii, jj, ww = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] in ("N", "alpha", "beta", "seed"):
                meta[parts[0]] = float(parts[1]) if parts[0] in ("alpha", "beta") else int(parts[1])
            else:
                mult = int(parts[3]) if len(parts) > 3 else 1
                for _ in range(mult):
                    ii.append(int(parts[0]) - 1)
                    jj.append(int(parts[1]) - 1)
                    ww.append(float(parts[2]))
    inst = PvbInstance(n_sites=meta["N"], edge_i=np.array(ii, dtype=int), edge_j=np.array(jj, dtype=int),
                       weights=np.array(ww, dtype=float), gamma=gamma, eps=eps)
    return inst, meta
