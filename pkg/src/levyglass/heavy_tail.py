"""Heavy-tailed randomness: couplings, truncated couplings, PPP skeletons.

Two tail families are supported.  The canonical family has
P(|X| > x) = x^{-alpha} on x >= 1, so couplings are sign * N^{-1/alpha} *
U^{-1/alpha} in closed form.  The log-power family modulates the tail by
L(x) = (1 + ln x)^p and is sampled by numerical inversion of the tail.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HeavyTailSpec",
    "PppSequence",
    "DisorderMatrix",
    "EdgeRanking",
    "sample_coupling",
    "sample_disorder",
    "sample_g_eps",
    "compute_a_N",
    "sample_gamma_sequence",
    "order_stats_via_ppp",
    "order_stats_direct",
    "rank_edges",
]

_A_N_REL_TOL = 1e-12
_A_N_MAX_ITER = 400


@dataclass
class HeavyTailSpec:
    """Stable index, tail family and the derived size scalings a_N."""

    alpha: float
    family: str = "canonical"
    power: float = 0.0
    _a_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie strictly in (0,2)")
        if self.family not in ("canonical", "log_power"):
            raise ValueError("tail family must be 'canonical' or 'log_power'")
        if self.family == "log_power":
            if self.power < 0.0:
                raise ValueError("log_power exponent must be >= 0")
            if self.power > self.alpha:
                # (1+ln x)^p / x^alpha must stay <= 1 and nonincreasing on x >= 1
                raise ValueError("log_power exponent must not exceed alpha")

    @classmethod
    def canonical(cls, alpha):
        return cls(alpha=alpha)

    @classmethod
    def log_power(cls, alpha, p):
        return cls(alpha=alpha, family="log_power", power=p)

    def slowly_varying(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "canonical":
            return np.ones_like(x)
        return (1.0 + np.log(np.maximum(x, 1.0))) ** self.power

    def tail(self, x):
        """P(|X| > x) for the unscaled variable; equals 1 below the support edge."""
        scalar = np.isscalar(x) or np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.ones_like(x)
        above = x > 1.0
        out[above] = self.slowly_varying(x[above]) * x[above] ** (-self.alpha)
        return float(out[0]) if scalar else out

    def a_N(self, N):
        if N not in self._a_cache:
            self._a_cache[N] = compute_a_N(self, N)
        return self._a_cache[N]

    def _log_tail(self, t):
        # ln P(|X| > e^t) on t >= 0
        return self.power * np.log1p(t) - self.alpha * t

    def _log_tail_slope(self, t):
        return self.power / (1.0 + t) - self.alpha

    def _inversion_grid(self):
        if "grid" not in self._a_cache:
            t_max = 80.0 / self.alpha + 40.0
            t = np.linspace(0.0, t_max, 4096)
            self._a_cache["grid"] = (t, self._log_tail(t))
        return self._a_cache["grid"]

    def abs_from_tail_height(self, u):
        """The magnitude x with P(|X| > x) = u, vectorized over heights u in (0, 1].

        Uses the cached log-spaced grid for a monotone first guess, then a few
        Newton corrections on ln P(|X| > e^t) = ln u (the slope is analytic).
        """
        if self.family == "canonical":
            out = np.asarray(u, dtype=float) ** (-1.0 / self.alpha)
            return float(out) if np.ndim(u) == 0 else out
        scalar = np.ndim(u) == 0
        log_u = np.log(np.atleast_1d(np.asarray(u, dtype=float)))
        t_grid, lt_grid = self._inversion_grid()
        t = np.interp(-log_u, -lt_grid, t_grid)
        for _ in range(4):
            t -= (self._log_tail(t) - log_u) / self._log_tail_slope(t)
            np.clip(t, 0.0, None, out=t)
        x = np.exp(t)
        return float(x[0]) if scalar else x

    def sample_abs_unscaled(self, rng, size=None):
        """|X| with tail L(x) x^{-alpha}, by inverting the tail at uniform heights."""
        return self.abs_from_tail_height(1.0 - rng.random(size))


def compute_a_N(spec, N):
    """Scaling a_N = inf{x > 0 : P(|X| > x) <= 1/N}.

    Canonical tails short-circuit to N^{1/alpha}; otherwise the root of
    tail(x) = 1/N is bracketed and bisected to relative tolerance 1e-12.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if spec.family == "canonical":
        return float(N) ** (1.0 / spec.alpha)
    target = 1.0 / N
    if N == 1:
        return 1.0
    lo, hi = 1.0, 2.0
    it = 0
    while spec.tail(hi) > target:
        hi *= 2.0
        it += 1
        if it > _A_N_MAX_ITER:
            raise ArithmeticError("a_N bracketing failed; tail family is ill posed")
    for _ in range(_A_N_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if spec.tail(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _A_N_REL_TOL * hi:
            return 0.5 * (lo + hi)
    raise ArithmeticError("a_N bisection did not converge; tail family is ill posed")


def sample_coupling(spec, n_sites, rng, size=None):
    """One coupling (or `size` of them) for a system with n_sites spins.

    Canonical: sign * n_sites^{-1/alpha} * U^{-1/alpha} with U uniform(0,1].
    General: X / a_N with |X| drawn by numerical tail inversion.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    sign = rng.integers(0, 2, size=size) * 2 - 1
    if spec.family == "canonical":
        u = 1.0 - rng.random(size)  # uniform on (0, 1]
        return sign * float(n_sites) ** (-1.0 / spec.alpha) * u ** (-1.0 / spec.alpha)
    return sign * spec.sample_abs_unscaled(rng, size) / spec.a_N(n_sites)


def sample_g_eps(alpha, eps, rng, size=None):
    """Coupling conditioned on magnitude >= eps: sign * eps * U^{-1/alpha}."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0,2)")
    sign = rng.integers(0, 2, size=size) * 2 - 1
    u = 1.0 - rng.random(size)
    return sign * eps * u ** (-1.0 / alpha)


@dataclass
class PppSequence:
    """Strictly increasing cumulative sums of unit-rate exponentials."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 1 or self.points.size < 1:
            raise ValueError("points must be a nonempty 1-d array")
        if self.points[0] <= 0.0 or np.any(np.diff(self.points) <= 0.0):
            raise ValueError("points must be strictly increasing and positive")

    @property
    def length(self):
        return self.points.size

    def extend(self, count, rng):
        """Fresh sequence continuing this one by `count` more arrivals."""
        extra = self.points[-1] + np.cumsum(rng.exponential(size=count))
        return PppSequence(np.concatenate([self.points, extra]))


def sample_gamma_sequence(count, rng):
    """First `count` arrival times of a unit-rate Poisson process."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return PppSequence(np.cumsum(rng.exponential(size=count)))


def order_stats_via_ppp(n, alpha, rng):
    """Decreasing magnitudes (gamma_{n+1}/n)^{1/a} * (gamma_1^{-1/a}, ..., gamma_n^{-1/a})."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = sample_gamma_sequence(n + 1, rng).points
    return (g[-1] / n) ** (1.0 / alpha) * g[:-1] ** (-1.0 / alpha)


def order_stats_direct(n, alpha, rng):
    """Decreasing magnitudes n^{-1/a} * sorted(|X_1|, ..., |X_n|) for the unit tail."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = 1.0 - rng.random(n)
    y = u ** (-1.0 / alpha)
    y.sort()
    return float(n) ** (-1.0 / alpha) * y[::-1]


@dataclass
class EdgeRanking:
    """Edges listed by decreasing coupling magnitude, ties shuffled uniformly."""

    edges: np.ndarray  # (n_edges, 2) int array, row k is the rank-(k+1) edge
    rank_lookup: np.ndarray  # (N, N) int array, rank_lookup[i, j] = rank (1-based)

    def rank_of(self, i, j):
        return int(self.rank_lookup[i, j])


@dataclass
class DisorderMatrix:
    """Symmetric coupling table for one quenched disorder sample."""

    n_sites: int
    couplings: np.ndarray  # (N, N) symmetric, zero diagonal
    ranking: EdgeRanking | None = None

    def __post_init__(self):
        self.couplings = np.asarray(self.couplings, dtype=float)
        if self.couplings.shape != (self.n_sites, self.n_sites):
            raise ValueError("couplings must be an (N, N) array")
        if not np.allclose(self.couplings, self.couplings.T):
            raise ValueError("couplings must be symmetric")
        np.fill_diagonal(self.couplings, 0.0)

    @classmethod
    def from_upper(cls, n_sites, values):
        iu, ju = np.triu_indices(n_sites, k=1)
        m = np.zeros((n_sites, n_sites))
        m[iu, ju] = values
        m[ju, iu] = values
        return cls(n_sites=n_sites, couplings=m)

    def edge_values(self):
        """(i, j, J_ij) arrays over the n(n-1)/2 unordered pairs."""
        iu, ju = np.triu_indices(self.n_sites, k=1)
        return iu, ju, self.couplings[iu, ju]

    def max_abs_coupling(self):
        return float(np.max(np.abs(self.couplings))) if self.n_sites > 1 else 0.0


def sample_disorder(spec, n_sites, rng):
    """Draw one quenched disorder sample at size n_sites."""
    n_edges = n_sites * (n_sites - 1) // 2
    values = sample_coupling(spec, n_sites, rng, size=n_edges) if n_edges else np.zeros(0)
    return DisorderMatrix.from_upper(n_sites, values)


def rank_edges(matrix, rng):
    """Rank the edges by decreasing |J|, breaking ties by a uniform shuffle."""
    iu, ju, vals = matrix.edge_values()
    order = np.lexsort((rng.random(vals.size), -np.abs(vals)))
    edges = np.column_stack([iu[order], ju[order]])
    lookup = np.zeros((matrix.n_sites, matrix.n_sites), dtype=np.int64)
    ranks = np.arange(1, vals.size + 1)
    lookup[edges[:, 0], edges[:, 1]] = ranks
    lookup[edges[:, 1], edges[:, 0]] = ranks
    ranking = EdgeRanking(edges=edges, rank_lookup=lookup)
    matrix.ranking = ranking
    return ranking
