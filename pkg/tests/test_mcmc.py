import numpy as np
import pytest

from levyglass import _kernels, exact, mcmc
from levyglass.heavy_tail import DisorderMatrix, HeavyTailSpec, sample_disorder
from levyglass.quadrature import beta_alpha
from levyglass.streams import derive_rng


def rng_for(name, rep=0):
    return derive_rng(31337, name, rep)


def test_zero_beta_accepts_everything():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 20, rng_for("acc"))
    spins = (rng_for("acc", 1).integers(0, 2, (1, 20)) * 2 - 1).astype(np.int8)
    fields = (spins @ m.couplings).astype(float)
    inter = 0.5 * np.einsum("ci,ci->c", spins, fields)
    sites = rng_for("acc", 3).integers(0, 20, (5, 1, 20))
    log_u = np.log(rng_for("acc", 2).random((5, 1, 20)))
    trace = np.empty((5, 1))
    accepted = _kernels.metropolis_sweeps(spins, fields, inter, np.zeros(1), m.couplings, sites, log_u, trace)
    assert accepted == 5 * 20


def test_single_sweep_updates_fields_consistently():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 15, rng_for("sweep"))
    state = mcmc.ChainState.random(m, 0.4, rng_for("sweep", 1))
    rng = rng_for("sweep", 2)
    for _ in range(1000):
        state = mcmc.metropolis_sweep(state, m, rng)
    assert state.sweep_count == 1000
    assert state.fields_consistent(m, tol=1e-8)


def test_two_spin_stationary_distribution():
    # the fraction of sweeps with aligned spins matches the exact two-spin law
    j, beta = 0.8, 0.9
    m = DisorderMatrix.from_upper(2, np.array([j]))
    spins = np.array([[1, 1]], dtype=np.int8)
    fields = (spins @ m.couplings).astype(float)
    inter = 0.5 * np.einsum("ci,ci->c", spins, fields)
    n_sweeps = 10**6
    sites = rng_for("db", 1).integers(0, 2, (n_sweeps, 1, 2))
    log_u = np.log(rng_for("db").random((n_sweeps, 1, 2)))
    trace = np.empty((n_sweeps, 1))
    _kernels.metropolis_sweeps(spins, fields, inter, np.array([beta]), m.couplings, sites, log_u, trace)
    aligned = trace[:, 0] > 0
    p_emp = aligned.mean()
    p_exact = np.exp(beta * j) / (2.0 * np.cosh(beta * j))
    from levyglass.stats import autocorr_stderr

    se = autocorr_stderr(aligned.astype(float)).stderr
    assert abs(p_emp - p_exact) < 3.0 * se


def test_tempering_step_swap_rules():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 8, rng_for("pt"))
    rng = rng_for("pt", 1)
    a = mcmc.ChainState.random(m, 0.2, rng)
    b = mcmc.ChainState(spins=a.spins.copy(), local_fields=a.local_fields.copy(), beta=0.5)
    _, accepted = mcmc.tempering_step([a, b], rng)
    assert accepted == [True]  # identical configurations always swap
    c = mcmc.ChainState.random(m, 0.4, rng)
    d = mcmc.ChainState.random(m, 0.4, rng)
    _, accepted = mcmc.tempering_step([c, d], rng)
    assert accepted == [True]  # equal betas always swap
    with pytest.raises(ValueError):
        mcmc.tempering_step([b, mcmc.ChainState.random(m, 0.1, rng)], rng)


def test_ladder_marginals_match_exact_correlations():
    beta = 0.5 * beta_alpha(1.5).value
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 10, rng_for("ladder"))
    bank = mcmc._LadderBank(m, beta, rng_for("ladder", 1), n_ladders=1, n_rungs=8)
    bank.run(400)
    series = np.asarray(bank.run(4000, record=lambda s: [s[c, 0] * s[c, 1] for c in range(8)]))
    from levyglass.stats import autocorr_stderr

    for rung in (0, 3, 7):
        exact_corr = exact.pair_correlations(m, bank.rung_betas[rung])[0, 1]
        res = autocorr_stderr(series[:, rung])
        assert abs(series[:, rung].mean() - exact_corr) < 3.5 * max(res.stderr, 1e-3)


def test_site_overlap_free_measure():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 12, rng_for("so"))
    est = mcmc.estimate_site_overlap(m, 0.0, 2, 1500, rng_for("so", 1))
    assert abs(est.mean - 1.0 / 12) < 3.0 * max(est.stderr, 1e-4)


def test_site_overlap_matches_exact():
    beta = 0.5 * beta_alpha(1.5).value
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 12, rng_for("sx"))
    est = mcmc.estimate_site_overlap(m, beta, 2, 4000, rng_for("sx", 1))
    target = exact.site_overlap_moment(m, beta, 2)
    assert abs(est.mean - target) < 3.0 * est.stderr


def test_bond_overlap_matches_exact():
    beta = 0.5 * beta_alpha(1.5).value
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 12, rng_for("bx"))
    est = mcmc.estimate_bond_overlap(m, beta, 1.0, 4000, rng_for("bx", 1))
    target = exact.bond_overlap_stats(m, beta, 1.0)[0]
    assert abs(est.mean - target) < 3.0 * est.stderr


def test_bond_overlap_empty_is_exact_zero():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 12, rng_for("be"))
    est = mcmc.estimate_bond_overlap(m, 0.5, m.max_abs_coupling() + 1.0, 500, rng_for("be", 1))
    assert est.mean == 0.0 and est.stderr == 0.0


def test_two_replica_runs_are_consistent():
    beta = 0.5 * beta_alpha(1.5).value
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 14, rng_for("rep"))
    a = mcmc.estimate_site_overlap(m, beta, 2, 3000, rng_for("rep", 1))
    b = mcmc.estimate_site_overlap(m, beta, 2, 3000, rng_for("rep", 2))
    assert abs(a.mean - b.mean) < 3.0 * np.hypot(a.stderr, b.stderr)


def test_insufficient_budget_raises():
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 10, rng_for("ins"))
    with pytest.raises(mcmc.InsufficientSamplesError):
        mcmc.estimate_site_overlap(m, 0.2, 2, 20, rng_for("ins", 1))


def test_overlap_estimate_validation():
    with pytest.raises(ValueError):
        mcmc.OverlapEstimate(mean=0.0, stderr=-1.0, n_samples=5, tau_int=1.0)
    with pytest.raises(ValueError):
        mcmc.estimate_site_overlap(sample_disorder(HeavyTailSpec.canonical(1.5), 6, rng_for("v")),
                                   0.3, 3, 100, rng_for("v", 1))


def test_energy_series_stationary_after_burn_in():
    beta = 0.5 * beta_alpha(1.5).value
    m = sample_disorder(HeavyTailSpec.canonical(1.5), 30, rng_for("geweke"))
    bank = mcmc._LadderBank(m, beta, rng_for("geweke", 1), n_ladders=1)
    mcmc._equilibrate(bank)
    from levyglass.stats import autocorr_stderr

    energies = bank.energy_series(2000)[:, 0]
    assert autocorr_stderr(energies).stationary
