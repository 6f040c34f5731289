"""Exact thermodynamics by exhaustive Gray-code enumeration.

Everything here is limited by explicit resource guards: 2^N states for the
log-partition function (N <= 30, streamed in segments), N^2 accumulators for
pair correlations (N <= 24), and M^2 bond-pair accumulators for the bond
overlap second moment (N <= 14).  Violations raise ResourceGuardError so
callers can fail fast with a sizing message.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .heavy_tail import DisorderMatrix, rank_edges
from .quadrature import lncosh
from .records import fmt17

__all__ = [
    "ResourceGuardError",
    "SpinConfig",
    "ExactThermo",
    "hamiltonian",
    "exact_log_partition",
    "naive_log_partition",
    "hat_log_partition_direct",
    "pair_correlations",
    "site_overlap_moment",
    "bond_overlap_stats",
    "gibbs_alignment",
    "ground_state",
    "dump_instance",
    "load_instance",
]

MAX_LOGZ_SITES = 30
MAX_CORR_SITES = 24
MAX_FOUR_POINT_SITES = 14
_SEGMENT_BITS = 22


class ResourceGuardError(RuntimeError):
    """Requested size exceeds the enumeration guards."""


@dataclass(frozen=True)
class SpinConfig:
    """N spins packed as a machine word; bit i set means spin i is -1."""

    bits: int
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1 or self.n_sites > 63:
            raise ValueError("n_sites out of range")
        if self.bits >> self.n_sites:
            raise ValueError("bits beyond n_sites are set")

    def to_signs(self):
        idx = np.arange(self.n_sites)
        return 1 - 2 * ((self.bits >> idx) & 1).astype(np.int8)

    @classmethod
    def from_signs(cls, signs):
        signs = np.asarray(signs)
        bits = int(np.sum((signs < 0).astype(np.int64) << np.arange(signs.size)))
        return cls(bits=bits, n_sites=signs.size)


@dataclass(frozen=True)
class ExactThermo:
    log_z: float
    log_z_bar: float
    log_z_hat: float
    beta: float


def _signs_of(sigma, n_sites):
    if isinstance(sigma, SpinConfig):
        if sigma.n_sites != n_sites:
            raise ValueError("configuration size does not match the matrix")
        return sigma.to_signs().astype(float)
    signs = np.asarray(sigma, dtype=float)
    if signs.shape != (n_sites,):
        raise ValueError("configuration size does not match the matrix")
    return signs


def hamiltonian(matrix, sigma, beta):
    """Negative Hamiltonian beta * sum_{i<j} J_ij s_i s_j."""
    s = _signs_of(sigma, matrix.n_sites)
    return 0.5 * beta * float(s @ matrix.couplings @ s)


def _segments(n_sites):
    total = 1 << n_sites
    if n_sites <= _SEGMENT_BITS:
        return [(0, total)]
    size = 1 << _SEGMENT_BITS
    return [(start, size) for start in range(0, total, size)]


def _guard(n_sites, limit, what):
    if n_sites > limit:
        raise ResourceGuardError(f"{what} is limited to N <= {limit}; got N = {n_sites}")
    if n_sites < 1:
        raise ValueError("need at least one site")


def _log_z_and_max(J, beta, segments):
    log_z = -np.inf
    s_max = -np.inf
    for start, count in segments:
        lz, m = _kernels.gray_pass_logz(J, beta, start, count)
        log_z = np.logaddexp(log_z, lz)
        s_max = max(s_max, m)
    return log_z, s_max


def log_z_bar(matrix, beta):
    """Scalar part: sum of ln cosh(beta J_ij) over the edges."""
    _, _, vals = matrix.edge_values()
    return float(np.sum(lncosh(beta * vals)))


def exact_log_partition(matrix, beta, n_sites_guard=MAX_LOGZ_SITES):
    """Gray-code log partition function and its scalar/effective split."""
    _guard(matrix.n_sites, n_sites_guard, "exact_log_partition")
    lz, _ = _log_z_and_max(matrix.couplings, beta, _segments(matrix.n_sites))
    lz_bar = log_z_bar(matrix, beta)
    return ExactThermo(log_z=lz, log_z_bar=lz_bar, log_z_hat=lz - lz_bar, beta=beta)


def naive_log_partition(matrix, beta):
    """Direct recomputation over all states; the enumeration oracle (N <= 16)."""
    _guard(matrix.n_sites, 16, "naive_log_partition")
    n = matrix.n_sites
    idx = np.arange(1 << n, dtype=np.int64)
    signs = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    S = 0.5 * np.einsum("bi,ij,bj->b", signs, matrix.couplings, signs)
    t = beta * S
    m = t.max()
    return float(m + np.log(np.sum(np.exp(t - m))))


def hat_log_partition_direct(matrix, beta):
    """Effective part by its own enumeration: ln sum_s prod (1 + s_i s_j tanh(beta J))."""
    _guard(matrix.n_sites, 16, "hat_log_partition_direct")
    n = matrix.n_sites
    iu, ju, vals = matrix.edge_values()
    t = np.tanh(beta * vals)
    idx = np.arange(1 << n, dtype=np.int64)
    signs = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    bond = signs[:, iu] * signs[:, ju]
    with np.errstate(divide="ignore"):  # tanh can round to +-1, giving -inf weight
        logs = np.sum(np.log1p(bond * t), axis=1)
    m = logs.max()
    return float(m + np.log(np.sum(np.exp(logs - m))))


def pair_correlations(matrix, beta):
    """Exact Gibbs two-point functions <s_i s_j> for all pairs (N <= 24)."""
    _guard(matrix.n_sites, MAX_CORR_SITES, "pair_correlations")
    segments = _segments(matrix.n_sites)
    _, s_max = _log_z_and_max(matrix.couplings, beta, segments)
    z = 0.0
    acc = np.zeros((matrix.n_sites, matrix.n_sites))
    for start, count in segments:
        zs, pair = _kernels.gray_pass_pair_sums(matrix.couplings, beta, s_max, start, count)
        z += zs
        acc += pair
    corr = (acc + acc.T) / z
    np.fill_diagonal(corr, 1.0)
    return corr


def site_overlap_moment(matrix, beta, k):
    """Gibbs expectation of R_k^2 via replica factorization over pair correlations."""
    if k < 2 or k % 2:
        raise ValueError("the overlap order k must be even and >= 2")
    n = matrix.n_sites
    corr = pair_correlations(matrix, beta)
    off = corr[~np.eye(n, dtype=bool)]
    return float((n + np.sum(off**k)) / n**2)


def _strong_edges(matrix, K):
    iu, ju, vals = matrix.edge_values()
    keep = np.abs(vals) >= K
    return iu[keep].astype(np.int64), ju[keep].astype(np.int64), vals[keep]


def bond_overlap_stats(matrix, beta, K):
    """Exact (mean, second moment) of the strong-bond overlap Q_K (N <= 14).

    Q_K averages s^1 s^1 s^2 s^2 over the edges with |J| >= K; with no such
    edge both moments are 0 by convention.
    """
    _guard(matrix.n_sites, MAX_FOUR_POINT_SITES, "bond_overlap_stats")
    ei, ej, _ = _strong_edges(matrix, K)
    m_edges = ei.size
    if m_edges == 0:
        return 0.0, 0.0
    segments = _segments(matrix.n_sites)
    _, s_max = _log_z_and_max(matrix.couplings, beta, segments)
    z = 0.0
    first = np.zeros(m_edges)
    second = np.zeros((m_edges, m_edges))
    for start, count in segments:
        zs, f, sec = _kernels.gray_pass_edge_corrs(matrix.couplings, beta, s_max, ei, ej, start, count)
        z += zs
        first += f
        second += sec
    bond_corr = (second + np.triu(second, 1).T) / z  # <p_a p_b>, symmetric
    mean = float(np.sum((first / z) ** 2)) / m_edges
    second_moment = float(np.sum(bond_corr**2)) / m_edges**2
    return mean, second_moment


def gibbs_alignment(matrix, beta, R, rng=None):
    """Exact Gibbs probability that the R heaviest edges are all satisfied."""
    _guard(matrix.n_sites, MAX_CORR_SITES, "gibbs_alignment")
    n_edges = matrix.n_sites * (matrix.n_sites - 1) // 2
    if not 1 <= R <= n_edges:
        raise ValueError("R must lie between 1 and the edge count")
    ranking = matrix.ranking or rank_edges(matrix, rng if rng is not None else np.random.default_rng(0))
    top = ranking.edges[:R]
    ei = top[:, 0].astype(np.int64)
    ej = top[:, 1].astype(np.int64)
    sgn = np.sign(matrix.couplings[ei, ej]).astype(np.int8)
    segments = _segments(matrix.n_sites)
    _, s_max = _log_z_and_max(matrix.couplings, beta, segments)
    z = 0.0
    good = 0.0
    for start, count in segments:
        zs, g = _kernels.gray_pass_alignment(matrix.couplings, beta, s_max, ei, ej, sgn, start, count)
        z += zs
        good += g
    return good / z


def ground_state(matrix):
    """Configuration minimizing -sum J s s (up to a global flip) and its energy."""
    _guard(matrix.n_sites, MAX_LOGZ_SITES, "ground_state")
    best = -np.inf
    best_idx = 0
    for start, count in _segments(matrix.n_sites):
        S, idx = _kernels.gray_ground_state(matrix.couplings, start, count)
        if S > best:
            best, best_idx = S, idx
    gray = best_idx ^ (best_idx >> 1)
    return SpinConfig(bits=gray, n_sites=matrix.n_sites), -best


# ---------------------------------------------------------------------------
# plain-text instance format (shared with the diluted module)

def dump_instance(matrix, path, alpha=float("nan"), beta=float("nan"), seed=0):
    """Write an instance as: header (N, alpha, beta, seed) then 1-based i j J rows."""
    iu, ju, vals = matrix.edge_values()
    with open(path, "w") as fh:
        fh.write(f"N {matrix.n_sites}\n")
        fh.write(f"alpha {fmt17(alpha)}\n")
        fh.write(f"beta {fmt17(beta)}\n")
        fh.write(f"seed {seed}\n")
        for i, j, v in zip(iu, ju, vals):
            fh.write(f"{i + 1} {j + 1} {fmt17(v)}\n")


def load_instance(path):
    """Read an instance file; returns (DisorderMatrix, header dict)."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] in ("N", "alpha", "beta", "seed"):
                meta[parts[0]] = float(parts[1]) if parts[0] in ("alpha", "beta") else int(parts[1])
            else:
                i, j = int(parts[0]) - 1, int(parts[1]) - 1
                rows.append((i, j, float(parts[2])))
    n = meta["N"]
    m = np.zeros((n, n))
    for i, j, v in rows:
        if not 0 <= i < j < n:
            raise ValueError(f"edge ({i + 1}, {j + 1}) out of range for N = {n}")
        m[i, j] += v
        m[j, i] += v
    return DisorderMatrix(n_sites=n, couplings=m), meta
