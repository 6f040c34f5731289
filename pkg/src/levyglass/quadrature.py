"""Closed-form constants of the model, evaluated by adaptive quadrature.

All integrals reduce to the dimensionless families

    T2(a, lo)      = int_lo^inf  tanh^2(u) u^{-1-a} du
    TPW(a, m, lo)  = int_lo^inf  tanh^m(u) u^{-1-a} du
    LC(a, lo, hi)  = int_lo^hi   ln cosh(u) u^{-1-a} du
    TP(a, l, lo)   = int_lo^inf  tanh^l(u) u^{-a}   du

The integrable singularity at 0 is removed by the substitution u = e^{-t};
the infinite tail is replaced by a closed form with an exponentially small
certified remainder (ln cosh(u) = u - ln 2 + ln(1+e^{-2u}), 1 - tanh^m(u)
<= 2m e^{-2u}), so every returned value carries an honest error estimate.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureSettings",
    "FormulaResult",
    "BondOverlapLimit",
    "ConvergenceRow",
    "beta_alpha",
    "free_energy_limit",
    "centering_integral",
    "bond_overlap_limit",
    "gamma_ell",
    "L_pmf",
    "L_pmf_partial_sum",
    "expectation_limit_check",
    "finite_n_expectation",
    "quadrature_self_check",
    "MAX_ELL",
]

# ln cosh / tanh reach their asymptotes to double precision well before this
_TAIL_CUT = 40.0
# The cycle-length law has a logarithmically heavy tail (the mass beyond
# order l decays like l's iterated-log power), so the order cap is generous;
# partial sums must be closed with the analytic remainder gamma_{2k+1}/gamma_1.
MAX_ELL = 501


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class FormulaResult:
    value: float
    error_estimate: float


@dataclass(frozen=True)
class BondOverlapLimit:
    value: float
    error_estimate: float
    c_k: float
    c_k_error: float


_DEFAULT = QuadratureSettings()


def _lncosh(u):
    u = np.abs(u)
    return np.where(u > 20.0, u - np.log(2.0) + np.log1p(np.exp(-2.0 * np.minimum(u, 700.0))), np.log(np.cosh(np.minimum(u, 20.0))))


def lncosh(u):
    """Overflow-free ln cosh, scalar or ndarray."""
    return _lncosh(np.asarray(u, dtype=float))


def _quad(f, a, b, settings):
    val, err = integrate.quad(f, a, b, epsabs=settings.abs_tol, epsrel=settings.rel_tol, limit=settings.max_subdivisions)
    if not np.isfinite(val):
        raise ArithmeticError("quadrature did not converge")
    return val, err


def _tanh_over_u(u):
    return 1.0 - u * u / 3.0 if u < 1e-4 else np.tanh(u) / u


def _lncosh_over_u2(u):
    return 0.5 - u * u / 12.0 if u < 1e-4 else float(_lncosh(u)) / (u * u)


def _quad_zero_piece(f_bounded, order, power, upper, settings):
    """int_0^upper f(u) u^{-power} du with f(u) = f_bounded(u) u^order near 0.

    Substituting u = e^{-t} gives int f_bounded(e^{-t}) e^{-(order+1-power) t} dt,
    which is overflow-free since f_bounded stays O(1) and order+1 > power.
    """
    decay = order + 1.0 - power
    if decay <= 0.0:
        raise ValueError("integrand is not integrable at zero")
    t_lo = 0.0 if upper >= 1.0 else -np.log(upper)
    g = lambda t: f_bounded(np.exp(-t)) * np.exp(-decay * t)
    return _quad(g, t_lo, np.inf, settings)


def _tanh_pow_weight_integral(alpha, m, lower=0.0, settings=_DEFAULT):
    """int_lower^inf tanh^m(u) u^{-1-alpha} du for even m >= 2 (m=2 is T2)."""
    if m < 2 or m % 2:
        raise ValueError("m must be even and >= 2")
    f = lambda u: np.tanh(u) ** m
    fb = lambda u: _tanh_over_u(u) ** m
    T = _TAIL_CUT
    if lower >= T:
        # pure tail
        val = lower ** (-alpha) / alpha
        return val, 2.0 * m * np.exp(-2.0 * lower) * lower ** (-alpha)
    if lower <= 0.0:
        head, head_err = _quad_zero_piece(fb, m, 1.0 + alpha, 1.0, settings)
        mid, mid_err = _quad(lambda u: f(u) * u ** (-1.0 - alpha), 1.0, T, settings)
    elif lower < 1.0:
        head, head_err = _quad_zero_piece(fb, m, 1.0 + alpha, 1.0, settings)
        cut, cut_err = _quad_zero_piece(fb, m, 1.0 + alpha, lower, settings)
        head, head_err = head - cut, head_err + cut_err
        mid, mid_err = _quad(lambda u: f(u) * u ** (-1.0 - alpha), 1.0, T, settings)
    else:
        head, head_err = 0.0, 0.0
        mid, mid_err = _quad(lambda u: f(u) * u ** (-1.0 - alpha), lower, T, settings)
    tail = T ** (-alpha) / alpha
    tail_err = 2.0 * m * np.exp(-2.0 * T) * T ** (-alpha)
    return head + mid + tail, head_err + mid_err + tail_err


def _tanh_sq_integral(alpha, lower=0.0, settings=_DEFAULT):
    return _tanh_pow_weight_integral(alpha, 2, lower, settings)


def _lncosh_integral(alpha, lower=0.0, upper=np.inf, settings=_DEFAULT):
    """int_lower^upper ln cosh(u) u^{-1-alpha} du; upper=inf needs alpha > 1."""
    if np.isinf(upper) and alpha <= 1.0:
        raise ValueError("the ln cosh integral diverges at infinity for alpha <= 1")
    f = lambda u: _lncosh(u)
    T = min(_TAIL_CUT, upper)
    pieces = []
    if lower < min(1.0, T):
        cap = min(1.0, T)
        a, ae = _quad_zero_piece(_lncosh_over_u2, 2, 1.0 + alpha, cap, settings)
        if lower > 0.0:
            b, be = _quad_zero_piece(_lncosh_over_u2, 2, 1.0 + alpha, lower, settings)
            a, ae = a - b, ae + be
        pieces.append((a, ae))
    if T > max(lower, 1.0):
        pieces.append(_quad(lambda u: f(u) * u ** (-1.0 - alpha), max(lower, 1.0), T, settings))
    val = sum(p[0] for p in pieces)
    err = sum(p[1] for p in pieces)
    if np.isinf(upper):
        # int_T^inf (u - ln2) u^{-1-a} du, remainder bounded by e^{-2T}
        val += T ** (1.0 - alpha) / (alpha - 1.0) - np.log(2.0) * T ** (-alpha) / alpha
        err += np.exp(-2.0 * T) * T ** (-alpha)
    elif upper > T:
        val += (T ** (1.0 - alpha) - upper ** (1.0 - alpha)) / (alpha - 1.0) - np.log(2.0) * (T ** (-alpha) - upper ** (-alpha)) / alpha
        err += np.exp(-2.0 * T) * T ** (-alpha)
    return val, err


def _tanh_pow_integral(alpha, ell, lower=0.0, settings=_DEFAULT):
    """int_lower^inf tanh^ell(u) u^{-alpha} du; needs 1 < alpha < 2."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("tanh-power integral needs alpha in (1,2)")
    f = lambda u: np.tanh(u) ** ell
    fb = lambda u: _tanh_over_u(u) ** ell
    T = _TAIL_CUT
    if lower <= 0.0:
        head, head_err = _quad_zero_piece(fb, ell, alpha, 1.0, settings)
        mid, mid_err = _quad(lambda u: f(u) * u ** (-alpha), 1.0, T, settings)
    elif lower < 1.0:
        a, ae = _quad_zero_piece(fb, ell, alpha, 1.0, settings)
        b, be = _quad_zero_piece(fb, ell, alpha, lower, settings)
        head, head_err = a - b, ae + be
        mid, mid_err = _quad(lambda u: f(u) * u ** (-alpha), 1.0, T, settings)
    else:
        head, head_err = 0.0, 0.0
        mid, mid_err = _quad(lambda u: f(u) * u ** (-alpha), lower, T, settings)
    tail = T ** (1.0 - alpha) / (alpha - 1.0)
    tail_err = 2.0 * ell * np.exp(-2.0 * T) * T ** (1.0 - alpha)
    return head + mid + tail, head_err + mid_err + tail_err


def beta_alpha(alpha, settings=_DEFAULT):
    """Critical inverse temperature (alpha * int tanh^2(u) u^{-1-alpha} du)^{-1/alpha}."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0,2)")
    integral, err = _tanh_sq_integral(alpha, 0.0, settings)
    value = (alpha * integral) ** (-1.0 / alpha)
    return FormulaResult(value, value * err / (alpha * integral))


def free_energy_limit(alpha, beta, settings=_DEFAULT):
    """ln 2 + (alpha/2) int_0^inf ln cosh(beta x) x^{-1-alpha} dx  (alpha in (1,2))."""
    if not 1.0 < alpha < 2.0:
        raise ValueError("the free-energy integral requires alpha in (1,2)")
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    if beta == 0.0:
        return FormulaResult(np.log(2.0), 0.0)
    integral, err = _lncosh_integral(alpha, settings=settings)
    scale = 0.5 * alpha * beta**alpha
    return FormulaResult(np.log(2.0) + scale * integral, scale * err)


def centering_integral(alpha, beta, N, settings=_DEFAULT):
    """(alpha N / 2) int from N^{-1/a} to ((N-1)/2)^{1/a} of ln cosh(beta x) x^{-1-a} dx."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if beta == 0.0:
        return FormulaResult(0.0, 0.0)
    lo = float(N) ** (-1.0 / alpha)
    hi = ((N - 1) / 2.0) ** (1.0 / alpha)
    if hi <= lo:
        return FormulaResult(0.0, 0.0)
    # substitute u = beta x
    integral, err = _lncosh_integral(alpha, beta * lo, beta * hi, settings)
    scale = 0.5 * alpha * N * beta**alpha
    return FormulaResult(scale * integral, scale * err)


def bond_overlap_limit(alpha, beta, K, settings=_DEFAULT):
    """Limiting strong-bond overlap alpha K^a int_K^inf tanh^2(bx) x^{-1-a} dx, plus C_K."""
    if K <= 0.0:
        raise ValueError("K must be positive")
    if beta == 0.0:
        return BondOverlapLimit(0.0, 0.0, 0.0, 0.0)
    integral, err = _tanh_sq_integral(alpha, beta * K, settings)
    c_k = 0.5 * alpha * beta**alpha * integral
    c_k_err = 0.5 * alpha * beta**alpha * err
    return BondOverlapLimit(2.0 * K**alpha * c_k, 2.0 * K**alpha * c_k_err, c_k, c_k_err)


def gamma_ell(alpha, beta, ell, settings=_DEFAULT):
    """Odd-power moment constant alpha int_0^inf tanh^ell(beta x) x^{-alpha} dx."""
    if ell < 1 or ell % 2 == 0:
        raise ValueError("ell must be odd and >= 1")
    if ell > MAX_ELL:
        raise ValueError(f"ell capped at {MAX_ELL}; the mass beyond is below 1e-12")
    if not 1.0 < alpha < 2.0:
        raise ValueError("gamma_ell requires alpha in (1,2)")
    integral, err = _tanh_pow_integral(alpha, ell, 0.0, settings)
    scale = alpha * beta ** (alpha - 1.0)
    return FormulaResult(scale * integral, scale * err)


def L_pmf(alpha, beta, k, settings=_DEFAULT):
    """P(L = 2k) = (gamma_{2k-1} - gamma_{2k+1}) / gamma_1 for the cycle-length law."""
    if k < 1:
        raise ValueError("k must be >= 1")
    g1 = gamma_ell(alpha, beta, 1, settings).value
    ga = gamma_ell(alpha, beta, 2 * k - 1, settings).value
    gb = gamma_ell(alpha, beta, 2 * k + 1, settings).value
    p = (ga - gb) / g1
    return min(max(p, 0.0), 1.0)


def L_pmf_partial_sum(alpha, beta, k_max, settings=_DEFAULT):
    """Partial mass sum_{k<=k_max} P(L=2k) and the exact remainder.

    Returns (partial_sum, tail_mass) with partial_sum + tail_mass = 1; the
    remainder gamma_{2k_max+1}/gamma_1 decays only logarithmically in k_max,
    so it is never negligible at usable orders.
    """
    g1 = gamma_ell(alpha, beta, 1, settings).value
    tail = gamma_ell(alpha, beta, 2 * k_max + 1, settings).value / g1
    return 1.0 - tail, tail


# ---------------------------------------------------------------------------
# finite-size expectation vs limit (convergence tables)

_NAMED_INTEGRANDS = ("tanh2", "lncosh", "x_tanh_ell")


def _check_integrand(f, alpha, ell):
    if f not in _NAMED_INTEGRANDS:
        raise ValueError(f"unknown integrand {f!r}; choose from {_NAMED_INTEGRANDS}")
    if f in ("lncosh", "x_tanh_ell") and alpha <= 1.0:
        raise ValueError(f"{f} violates the integrability condition for alpha <= 1")
    if f == "x_tanh_ell" and (ell < 1 or ell % 2 == 0):
        raise ValueError("x_tanh_ell needs odd ell")


def _f_even(f, beta, ell):
    if f == "tanh2":
        return lambda x: np.tanh(beta * x) ** 2
    if f == "lncosh":
        return lambda x: _lncosh(beta * x)
    return lambda x: x * np.tanh(beta * x) ** ell


def _f_even_prime(f, beta, ell):
    if f == "tanh2":
        return lambda x: 2.0 * beta * np.tanh(beta * x) * (1.0 - np.tanh(beta * x) ** 2)
    if f == "lncosh":
        return lambda x: beta * np.tanh(beta * x)
    def d(x):
        t = np.tanh(beta * x)
        return t**ell + ell * beta * x * t ** (ell - 1) * (1.0 - t * t)
    return d


def _limit_value(f, alpha, beta, ell, settings):
    if f == "tanh2":
        v, e = _tanh_sq_integral(alpha, 0.0, settings)
        return alpha * beta**alpha * v, alpha * beta**alpha * e
    if f == "lncosh":
        v, e = _lncosh_integral(alpha, settings=settings)
        return alpha * beta**alpha * v, alpha * beta**alpha * e
    r = gamma_ell(alpha, beta, ell, settings)
    return r.value, r.error_estimate


def finite_n_expectation(f, spec, beta, N, settings=_DEFAULT, ell=1):
    """N * E f(J) at size N, by quadrature against the exact coupling law."""
    _check_integrand(f, spec.alpha, ell)
    alpha = spec.alpha
    fe = _f_even(f, beta, ell)
    if spec.family == "canonical":
        lo = float(N) ** (-1.0 / alpha)
        if f == "tanh2":
            v, e = _tanh_sq_integral(alpha, beta * lo, settings)
            return FormulaResult(alpha * beta**alpha * v, alpha * beta**alpha * e)
        if f == "lncosh":
            v, e = _lncosh_integral(alpha, beta * lo, settings=settings)
            return FormulaResult(alpha * beta**alpha * v, alpha * beta**alpha * e)
        v, e = _quad(lambda x: fe(x) * x ** (-1.0 - alpha), lo, _TAIL_CUT / beta, settings)
        tail = (_TAIL_CUT / beta) ** (1.0 - alpha) / (alpha - 1.0)
        return FormulaResult(alpha * (v + tail), alpha * e + 2 * ell * np.exp(-2 * _TAIL_CUT))
    # general slowly varying family: integrate f'(u) against the exact tail,
    # N E f(X/a_N) = N f(1/a_N) + int_{1/a_N}^inf f'(u) L(a_N u)/L(a_N) u^-a du
    a_n = spec.a_N(N)
    fp = _f_even_prime(f, beta, ell)
    ratio = lambda u: spec.slowly_varying(a_n * u) / spec.slowly_varying(a_n)
    g = lambda u: fp(u) * ratio(u) * u ** (-alpha)
    T = _TAIL_CUT / beta if f != "tanh2" else 60.0 / beta
    v, e = _quad(g, 1.0 / a_n, T, settings)
    tail = 0.0
    if f in ("lncosh", "x_tanh_ell"):
        # derivative tends to a constant (beta resp. 1) with sub-polynomial L drift
        const = beta if f == "lncosh" else 1.0
        tail = const * ratio(T) * T ** (1.0 - alpha) / (alpha - 1.0)
        e += 0.1 * abs(tail)
    return FormulaResult(N * fe(1.0 / a_n) + v + tail, e)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    mc_value: float
    mc_stderr: float
    finite_n_value: float
    limit_value: float


def expectation_limit_check(f, spec, beta, n_grid, rng, n_draws=10**6, settings=_DEFAULT, ell=1):
    """Convergence table of N*E f(J) (Monte Carlo and quadrature) against its limit."""
    from .heavy_tail import sample_coupling

    _check_integrand(f, spec.alpha, ell)
    fe = _f_even(f, beta, ell)
    limit, _ = _limit_value(f, spec.alpha, beta, ell, settings)
    rows = []
    for N in n_grid:
        draws = fe(np.abs(sample_coupling(spec, N, rng, size=n_draws)))
        mc = N * float(np.mean(draws))
        stderr = N * float(np.std(draws, ddof=1)) / np.sqrt(n_draws)
        rows.append(ConvergenceRow(N, mc, stderr, finite_n_expectation(f, spec, beta, N, settings, ell).value, limit))
    return rows


# ---------------------------------------------------------------------------
# independent evaluation schemes, used only for self-consistency checks

def _tanh_sq_integral_tan_rule(alpha, n_panels=160, order=10):
    """tanh^2 integral via x = tan(theta) on fixed-order Gauss-Legendre panels."""
    delta = 0.05
    # series head: tanh^2 u = u^2 - 2u^4/3 + 17u^6/45 - 62u^8/315 + ...
    head = (delta ** (2 - alpha) / (2 - alpha) - (2.0 / 3.0) * delta ** (4 - alpha) / (4 - alpha)
            + (17.0 / 45.0) * delta ** (6 - alpha) / (6 - alpha) - (62.0 / 315.0) * delta ** (8 - alpha) / (8 - alpha))
    t0, t1 = np.arctan(delta), np.arctan(_TAIL_CUT)
    edges = np.linspace(t0, t1, n_panels + 1)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mid = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        x = np.tan(th)
        mid += 0.5 * (b - a) * np.sum(weights * np.tanh(x) ** 2 * x ** (-1.0 - alpha) / np.cos(th) ** 2)
    return head + mid + _TAIL_CUT ** (-alpha) / alpha


def _lncosh_integral_tail_split(alpha, settings=_DEFAULT):
    """ln cosh integral via a series head, direct quad, and the exact linear tail."""
    d, T = 0.1, 60.0
    # ln cosh u = u^2/2 - u^4/12 + u^6/45 - 17 u^8/2520 + O(u^10)
    head = (d ** (2 - alpha) / (2 * (2 - alpha)) - d ** (4 - alpha) / (12 * (4 - alpha))
            + d ** (6 - alpha) / (45 * (6 - alpha)) - 17 * d ** (8 - alpha) / (2520 * (8 - alpha)))
    body, err = integrate.quad(lambda u: _lncosh(u) * u ** (-1.0 - alpha), d, T,
                               epsabs=settings.abs_tol, epsrel=settings.rel_tol, limit=settings.max_subdivisions)
    tail = T ** (1.0 - alpha) / (alpha - 1.0) - np.log(2.0) * T ** (-alpha) / alpha
    rem, rem_err = integrate.quad(lambda u: np.log1p(np.exp(-2.0 * u)) * u ** (-1.0 - alpha), T, np.inf)
    return head + body + tail + rem, err + rem_err


def _tanh_sq_integral_inverted(alpha, settings=_DEFAULT):
    """tanh^2 integral after x -> 1/u on both split domains."""
    f = lambda u: np.tanh(1.0 / u) ** 2 * u ** (alpha - 1.0)
    lo, lo_err = _quad(f, 0.0, 1.0, settings)
    hi, hi_err = _quad(f, 1.0, np.inf, settings)
    return lo + hi, lo_err + hi_err


def quadrature_self_check(alpha=1.5, beta=1.0, settings=_DEFAULT):
    """Residuals of the internal identities; all should be tiny.

    Returns a dict with the defining identity of the critical temperature,
    dual-scheme agreement for both core integrals, the x -> 1/x re-evaluation,
    and the two probability-mass forms of the cycle-length law.
    """
    out = {}
    i_t2, _ = _tanh_sq_integral(alpha, 0.0, settings)
    b_a = beta_alpha(alpha, settings).value
    out["beta_alpha_identity"] = abs(alpha * b_a**alpha * i_t2 - 1.0)
    out["tanh_sq_dual_method"] = abs(i_t2 - _tanh_sq_integral_tan_rule(alpha))
    out["tanh_sq_inversion"] = abs(i_t2 - _tanh_sq_integral_inverted(alpha, settings)[0])
    if alpha > 1.0:
        i_lc, _ = _lncosh_integral(alpha, settings=settings)
        out["lncosh_dual_method"] = abs(i_lc - _lncosh_integral_tail_split(alpha, settings)[0])
        g1 = gamma_ell(alpha, beta, 1, settings).value
        worst = 0.0
        for k in range(1, 6):
            lhs = L_pmf(alpha, beta, k, settings)
            num, _ = _tanh_pow_weight_integral(alpha, 2 * k, 0.0, settings)
            rhs = alpha**2 * beta**alpha * num / (2 * k * beta * g1)
            worst = max(worst, abs(lhs - rhs))
        out["L_pmf_dual_form"] = worst
        # total mass: sum_k P(L=2k) collapses to the ln cosh integral by parts
        out["L_pmf_total_mass"] = abs(alpha**2 * beta ** (alpha - 1.0) * i_lc / g1 - 1.0)
    return out
