"""Approximate Gibbs sampling beyond enumeration sizes.

Single-spin Metropolis dynamics with a parallel-tempering ladder: heavy
bonds of magnitude ~ N^{1/alpha} freeze pairs of spins at the target
temperature, so configurations are exchanged with progressively hotter
replicas (geometric ladder down to beta/8).  Equilibration is
self-diagnosed from the energy series, since the model comes with no
dynamics of its own.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .stats import autocorr_stderr

__all__ = [
    "ChainState",
    "OverlapEstimate",
    "InsufficientSamplesError",
    "metropolis_sweep",
    "tempering_step",
    "estimate_site_overlap",
    "estimate_bond_overlap",
]

DEFAULT_RUNGS = 10
LADDER_SPAN = 8.0
MIN_EFFECTIVE_SAMPLES = 30


class InsufficientSamplesError(RuntimeError):
    """Integrated autocorrelation time too large for the sweep budget."""


@dataclass
class ChainState:
    spins: np.ndarray  # (N,) of +-1, int8
    local_fields: np.ndarray  # (N,) h_i = sum_j J_ij s_j
    beta: float
    sweep_count: int = 0

    @classmethod
    def random(cls, matrix, beta, rng):
        spins = (rng.integers(0, 2, matrix.n_sites) * 2 - 1).astype(np.int8)
        return cls(spins=spins, local_fields=matrix.couplings @ spins, beta=beta)

    def interaction_sum(self):
        """S = sum_{i<j} J_ij s_i s_j; the energy is -S."""
        return 0.5 * float(self.spins @ self.local_fields)

    def fields_consistent(self, matrix, tol=1e-8):
        return bool(np.max(np.abs(matrix.couplings @ self.spins - self.local_fields)) < tol)


def metropolis_sweep(state, matrix, rng):
    """One sweep of N proposed single-spin flips, accepted with min(1, e^{-beta dH})."""
    n = matrix.n_sites
    spins = state.spins[None, :].copy()
    fields = state.local_fields[None, :].copy()
    inter = np.array([state.interaction_sum()])
    sites = rng.integers(0, n, (1, 1, n))
    log_u = np.log(rng.random((1, 1, n)))
    trace = np.empty((1, 1))
    _kernels.metropolis_sweeps(spins, fields, inter, np.array([state.beta]), matrix.couplings, sites, log_u, trace)
    return ChainState(spins=spins[0], local_fields=fields[0], beta=state.beta, sweep_count=state.sweep_count + 1)


def tempering_step(chains, rng):
    """Propose configuration swaps between all adjacent rungs of a ladder.

    Acceptance is min(1, exp((b_{k+1} - b_k)(H_{k+1} - H_k))) with H the
    unit-temperature energy -S; chains exchange configurations on success.
    """
    betas = [c.beta for c in chains]
    if any(b2 < b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("the tempering ladder must have nondecreasing beta")
    accepted = []
    for k in range(len(chains) - 1):
        a, b = chains[k], chains[k + 1]
        log_ratio = (b.beta - a.beta) * (-b.interaction_sum() + a.interaction_sum())
        if np.log(rng.random()) < log_ratio:
            a.spins, b.spins = b.spins, a.spins
            a.local_fields, b.local_fields = b.local_fields, a.local_fields
            accepted.append(True)
        else:
            accepted.append(False)
    return chains, accepted


@dataclass
class OverlapEstimate:
    mean: float
    stderr: float
    n_samples: int
    tau_int: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stderr < 0 or self.n_samples < 1:
            raise ValueError("stderr must be >= 0 and n_samples >= 1")


class _LadderBank:
    """n_ladders independent tempering ladders driven as one chain bank."""

    def __init__(self, matrix, beta, rng, n_ladders, n_rungs=DEFAULT_RUNGS):
        self.matrix = matrix
        self.n_ladders = n_ladders
        self.n_rungs = n_rungs
        if beta > 0.0:
            self.rung_betas = np.geomspace(beta, beta / LADDER_SPAN, n_rungs)
        else:
            self.rung_betas = np.zeros(n_rungs)
        n = matrix.n_sites
        c = n_ladders * n_rungs
        self.spins = (rng.integers(0, 2, (c, n)) * 2 - 1).astype(np.int8)
        self.fields = self.spins @ matrix.couplings
        self.inter = 0.5 * np.einsum("ci,ci->c", self.spins, self.fields)
        self.betas = np.tile(self.rung_betas, n_ladders)
        self.rng = rng
        self.sweep_parity = 0

    def target_rows(self):
        return np.arange(self.n_ladders) * self.n_rungs

    def run(self, n_sweeps, record=None):
        """Advance all ladders by n_sweeps (swap attempt after every sweep).

        record, if given, is a callable invoked after every sweep with the
        spin bank; its return values are collected and returned.
        """
        out = []
        chunk = 32
        done = 0
        n = self.matrix.n_sites
        c = self.spins.shape[0]
        while done < n_sweeps:
            m = min(chunk, n_sweeps - done)
            sites = self.rng.integers(0, n, (m, c, n))
            log_u = np.log(self.rng.random((m, c, n)))
            trace = np.empty((m, c))
            if record is None:
                _kernels.metropolis_sweeps(self.spins, self.fields, self.inter, self.betas,
                                           self.matrix.couplings, sites, log_u, trace)
                self._swap_block(m)
            else:
                for k in range(m):
                    _kernels.metropolis_sweeps(self.spins, self.fields, self.inter, self.betas,
                                               self.matrix.couplings, sites[k : k + 1], log_u[k : k + 1],
                                               trace[k : k + 1])
                    self._swap_block(1)
                    out.append(record(self.spins))
            done += m
        return out

    def _swap_block(self, n_attempts):
        for _ in range(n_attempts):
            start = self.sweep_parity % 2
            self.sweep_parity += 1
            u = self.rng.random((self.n_ladders, self.n_rungs))
            for lad in range(self.n_ladders):
                base = lad * self.n_rungs
                for r in range(start, self.n_rungs - 1, 2):
                    i, j = base + r, base + r + 1
                    log_ratio = (self.betas[j] - self.betas[i]) * (self.inter[i] - self.inter[j])
                    if np.log(u[lad, r]) < log_ratio:
                        self.spins[[i, j]] = self.spins[[j, i]]
                        self.fields[[i, j]] = self.fields[[j, i]]
                        self.inter[[i, j]] = self.inter[[j, i]]

    def energy_series(self, n_sweeps):
        rows = self.target_rows()
        series = self.run(n_sweeps, record=lambda s: self.inter[rows].copy())
        return np.asarray(series)


def _equilibrate(bank, pilot=300):
    """Pilot run, then burn-in of 20 * tau_int on the energy, re-estimated once."""
    energies = bank.energy_series(pilot)
    tau = autocorr_stderr(energies[:, 0]).tau_int
    for _ in range(2):
        burn = int(np.ceil(20.0 * tau))
        energies = bank.energy_series(max(burn, 100))
        tau = autocorr_stderr(energies[:, 0]).tau_int
    return tau


def _series_estimate(series, budget):
    series = np.asarray(series, dtype=float)
    if series.size < 100:
        raise InsufficientSamplesError(f"only {series.size} snapshots; raise the sweep budget {budget}")
    res = autocorr_stderr(series)
    thin = max(1, int(res.tau_int / 2.0))
    thinned = series[::thin]
    res_t = autocorr_stderr(thinned) if thinned.size >= 100 else res
    n_eff = thinned.size / (2.0 * max(res_t.tau_int, 0.5)) if thinned.size >= 100 else series.size / (2.0 * res.tau_int)
    if n_eff < MIN_EFFECTIVE_SAMPLES:
        raise InsufficientSamplesError(
            f"effective sample count {n_eff:.1f} < {MIN_EFFECTIVE_SAMPLES}; raise the sweep budget {budget}"
        )
    if thinned.size >= 100:
        return OverlapEstimate(mean=float(np.mean(thinned)), stderr=res_t.stderr, n_samples=thinned.size,
                               tau_int=res_t.tau_int, diagnostics={"geweke_z": res_t.geweke_z, "thin": thin})
    return OverlapEstimate(mean=float(np.mean(series)), stderr=res.stderr, n_samples=series.size,
                           tau_int=res.tau_int, diagnostics={"geweke_z": res.geweke_z, "thin": 1})


def estimate_site_overlap(matrix, beta, k, budget, rng, n_rungs=DEFAULT_RUNGS):
    """Estimate the Gibbs mean of R_k^2 from k independent tempered replicas."""
    if k < 2 or k % 2:
        raise ValueError("the overlap order k must be even and >= 2")
    bank = _LadderBank(matrix, beta, rng, n_ladders=k, n_rungs=n_rungs)
    _equilibrate(bank)
    rows = bank.target_rows()
    n = matrix.n_sites

    def record(spins):
        prod = spins[rows[0]].astype(np.float64)
        for r in rows[1:]:
            prod = prod * spins[r]
        return (prod.sum() / n) ** 2

    series = bank.run(budget, record=record)
    return _series_estimate(series, budget)


def estimate_bond_overlap(matrix, beta, K, budget, rng, n_rungs=DEFAULT_RUNGS):
    """Estimate the Gibbs mean of the strong-bond overlap Q_K from two replicas."""
    iu, ju, vals = matrix.edge_values()
    keep = np.abs(vals) >= K
    ei, ej = iu[keep], ju[keep]
    if ei.size == 0:
        return OverlapEstimate(mean=0.0, stderr=0.0, n_samples=1, tau_int=0.0, diagnostics={"strong_edges": 0})
    bank = _LadderBank(matrix, beta, rng, n_ladders=2, n_rungs=n_rungs)
    _equilibrate(bank)
    r0, r1 = bank.target_rows()

    def record(spins):
        a = spins[r0]
        b = spins[r1]
        return float(np.mean((a[ei] * a[ej] * b[ei] * b[ej]).astype(np.float64)))

    series = bank.run(budget, record=record)
    est = _series_estimate(series, budget)
    est.diagnostics["strong_edges"] = int(ei.size)
    return est
