"""Numba kernels: Gray-code enumeration passes and Metropolis sweeps.

The enumeration walks configurations in Gray-code order so each step flips a
single spin, updating the cached local fields h_i = sum_j J_ij s_j in O(N)
and the interaction sum S = sum_{i<j} J_ij s_i s_j in O(1).  Everything is
accumulated in the log domain with a running max shift, since couplings of
magnitude ~ N^{1/alpha} overflow exp() long before N reaches the guards.

Segments: a pass over indices [start, start+count) re-derives its starting
configuration from gray(start) = start ^ (start >> 1), so disjoint segments
can be evaluated independently and reduced in order.
"""

import numpy as np
from numba import njit

__all__ = [
    "gray_pass_logz",
    "gray_pass_pair_sums",
    "gray_pass_edge_corrs",
    "gray_pass_alignment",
    "gray_ground_state",
    "metropolis_sweeps",
]


@njit(cache=True, inline="always")
def _trailing_zeros(x):
    k = 0
    while x & 1 == 0:
        x >>= 1
        k += 1
    return k


@njit(cache=True)
def _init_state(J, start):
    """Spins, local fields and interaction sum for Gray-code index `start`."""
    n = J.shape[0]
    g = start ^ (start >> 1)
    s = np.empty(n, dtype=np.int8)
    for i in range(n):
        s[i] = -1 if (g >> i) & 1 else 1
    h = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += J[i, j] * s[j]
        h[i] = acc
    S = 0.0
    for i in range(n):
        S += s[i] * h[i]
    return s, h, 0.5 * S


@njit(cache=True)
def gray_pass_logz(J, beta, start, count):
    """(log sum exp(beta*S), max beta*S) over one Gray-code segment."""
    n = J.shape[0]
    s, h, S = _init_state(J, start)
    m = beta * S
    acc = 1.0
    for idx in range(start + 1, start + count):
        k = _trailing_zeros(idx)
        S -= 2.0 * s[k] * h[k]
        s[k] = -s[k]
        two_sk = 2.0 * s[k]
        for j in range(n):
            h[j] += two_sk * J[k, j]
        t = beta * S
        if t > m:
            acc = acc * np.exp(m - t) + 1.0
            m = t
        else:
            acc += np.exp(t - m)
    return m + np.log(acc), m


@njit(cache=True)
def gray_pass_pair_sums(J, beta, shift, start, count):
    """Weighted sums (Z', P') with Z' = sum w, P'[i,j] = sum w s_i s_j, w = exp(beta*S - shift)."""
    n = J.shape[0]
    s, h, S = _init_state(J, start)
    z = 0.0
    pair = np.zeros((n, n))
    for idx in range(start, start + count):
        if idx > start:
            k = _trailing_zeros(idx)
            S -= 2.0 * s[k] * h[k]
            s[k] = -s[k]
            two_sk = 2.0 * s[k]
            for j in range(n):
                h[j] += two_sk * J[k, j]
        w = np.exp(beta * S - shift)
        z += w
        for i in range(n):
            wsi = w * s[i]
            for j in range(i + 1, n):
                pair[i, j] += wsi * s[j]
    return z, pair


@njit(cache=True)
def gray_pass_edge_corrs(J, beta, shift, ei, ej, start, count):
    """Weighted sums of bond variables p_a = s_i s_j on the listed edges.

    Returns (Z', first[a] = sum w p_a, second[a,b] = sum w p_a p_b).
    """
    n = J.shape[0]
    m_edges = ei.shape[0]
    s, h, S = _init_state(J, start)
    z = 0.0
    first = np.zeros(m_edges)
    second = np.zeros((m_edges, m_edges))
    p = np.empty(m_edges)
    for idx in range(start, start + count):
        if idx > start:
            k = _trailing_zeros(idx)
            S -= 2.0 * s[k] * h[k]
            s[k] = -s[k]
            two_sk = 2.0 * s[k]
            for j in range(n):
                h[j] += two_sk * J[k, j]
        w = np.exp(beta * S - shift)
        z += w
        for a in range(m_edges):
            p[a] = s[ei[a]] * s[ej[a]]
        for a in range(m_edges):
            wpa = w * p[a]
            first[a] += wpa
            for b in range(a, m_edges):
                second[a, b] += wpa * p[b]
    return z, first, second


@njit(cache=True)
def gray_pass_alignment(J, beta, shift, ei, ej, sgn, start, count):
    """(Z', weight of configurations whose listed edges all satisfy s_i s_j = sgn)."""
    n = J.shape[0]
    m_edges = ei.shape[0]
    s, h, S = _init_state(J, start)
    z = 0.0
    good = 0.0
    for idx in range(start, start + count):
        if idx > start:
            k = _trailing_zeros(idx)
            S -= 2.0 * s[k] * h[k]
            s[k] = -s[k]
            two_sk = 2.0 * s[k]
            for j in range(n):
                h[j] += two_sk * J[k, j]
        w = np.exp(beta * S - shift)
        z += w
        ok = True
        for a in range(m_edges):
            if s[ei[a]] * s[ej[a]] != sgn[a]:
                ok = False
                break
        if ok:
            good += w
    return z, good


@njit(cache=True)
def gray_ground_state(J, start, count):
    """(max S, Gray index attaining it) over one segment."""
    s, h, S = _init_state(J, start)
    best = S
    best_idx = start
    n = J.shape[0]
    for idx in range(start + 1, start + count):
        k = _trailing_zeros(idx)
        S -= 2.0 * s[k] * h[k]
        s[k] = -s[k]
        two_sk = 2.0 * s[k]
        for j in range(n):
            h[j] += two_sk * J[k, j]
        if S > best:
            best = S
            best_idx = idx
    return best, best_idx


@njit(cache=True)
def metropolis_sweeps(spins, fields, inter, betas, J, sites, log_u, energy_trace):
    """Random-site Metropolis sweeps over a bank of chains, in place.

    spins: (C, N) int8, fields: (C, N) local fields, inter: (C,) interaction
    sums S_c, betas: (C,), sites: (K, C, N) proposal sites, log_u: (K, C, N)
    pre-drawn log-uniforms for K sweeps of N proposals each, energy_trace:
    (K, C) filled with S_c after each sweep.  Random proposal sites keep the
    dynamics ergodic even where every move is accepted (a sequential scan at
    beta = 0 would flip every spin and merely alternate two configurations).
    Returns the number of accepted flips.
    """
    n_sweeps = log_u.shape[0]
    n_chains = spins.shape[0]
    n = spins.shape[1]
    accepted = 0
    for k in range(n_sweeps):
        for c in range(n_chains):
            for t in range(n):
                i = sites[k, c, t]
                ds = -2.0 * spins[c, i] * fields[c, i]
                if log_u[k, c, t] < betas[c] * ds:
                    spins[c, i] = -spins[c, i]
                    two_s = 2.0 * spins[c, i]
                    for j in range(n):
                        fields[c, j] += two_s * J[i, j]
                    inter[c] += ds
                    accepted += 1
            energy_trace[k, c] = inter[c]
    return accepted
