"""Named experiments: each one checks a limit statement at desk scale.

Every experiment draws its randomness from streams derived off the master
seed and the (experiment, replication) pair, gathers per-replication values,
and compares an aggregate against a theory value computed at run time by the
quadrature or limit-law modules (never hard-coded).  Results are returned as
ResultRecord objects ready for CSV/JSONL emission.
"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics, diluted, mcmc, quadrature
from .exact import exact_log_partition, gibbs_alignment, naive_log_partition
from .heavy_tail import HeavyTailSpec, order_stats_direct, order_stats_via_ppp, sample_disorder
from .records import ResultRecord
from .stats import ks_two_sample, loglog_slope
from .streams import derive_rng

__all__ = ["REGISTRY", "run", "default_workers"]


def default_workers():
    env = os.environ.get("LEVYGLASS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _call(payload):
    fn, rep, args = payload
    return fn(rep, *args)


def _map_reps(rep_fn, n_reps, workers, *args):
    """Replications in index order; per-rep streams make scheduling irrelevant."""
    if workers <= 1 or n_reps <= 1:
        return [rep_fn(r, *args) for r in range(n_reps)]
    payloads = [(rep_fn, r, args) for r in range(n_reps)]
    chunk = max(1, n_reps // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, payloads, chunksize=chunk))


def _mean_stderr(values):
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), float("nan")
    return float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size))


def _spec_params(cfg):
    beta = cfg.resolve_beta()
    return HeavyTailSpec.canonical(cfg.alpha), beta


def _verdict(ok):
    return "pass" if ok else "fail"


def _ks_record(cfg, case, model_values, limit_values, params, theory_ref):
    rng = derive_rng(cfg.master_seed, f"{cfg.experiment}/ks/{case}", 0)
    ks = ks_two_sample(model_values, limit_values, rng=rng)
    params = dict(params)
    params.update(ks_statistic=ks.statistic, n_model=len(model_values), n_limit=len(limit_values))
    return ResultRecord(
        experiment=cfg.experiment, case=case, parameters=params,
        values=list(map(float, model_values)), estimate=ks.p_value, stderr=float("nan"),
        theory_value=float("nan"), theory_ref=theory_ref,
        criterion="two-sample KS p > 0.01", verdict=_verdict(ks.p_value > 0.01),
    )


# ---------------------------------------------------------------------------
# high-temperature free energy

def _rep_free_energy(rep, seed, name, alpha, beta, n_sites, family, power):
    rng = derive_rng(seed, name, rep)
    spec = HeavyTailSpec(alpha=alpha, family=family, power=power)
    thermo = exact_log_partition(sample_disorder(spec, n_sites, rng), beta)
    return thermo.log_z / n_sites, thermo.log_z_hat / n_sites


def free_energy_ht(cfg, workers):
    spec, beta = _spec_params(cfg)
    n_sites = cfg.N or 20
    rows = np.asarray(_map_reps(_rep_free_energy, cfg.replications, workers,
                                cfg.master_seed, cfg.experiment, cfg.alpha, beta, n_sites, "canonical", 0.0))
    raw_mean, raw_stderr = _mean_stderr(rows[:, 0])
    # finite-size prediction: ln 2 plus the exact scalar-part mean per site
    scalar = (n_sites - 1) / (2.0 * n_sites) * quadrature.finite_n_expectation("lncosh", spec, beta, n_sites).value
    theory = np.log(2.0) + scalar
    # the scalar part has tail index alpha < 2, so the raw mean does not obey
    # normal error bars at desk scale; replacing it by its exact expectation
    # (a zero-mean control variate) leaves the same estimand at finite variance
    cv_values = rows[:, 1] + scalar
    mean, stderr = _mean_stderr(cv_values)
    params = {"alpha": cfg.alpha, "beta": beta, "N": n_sites,
              "raw_mean": raw_mean, "raw_stderr": raw_stderr}
    rec = ResultRecord(
        experiment=cfg.experiment, case="free_energy_vs_prediction", parameters=params,
        values=list(map(float, cv_values)), estimate=mean, stderr=stderr, theory_value=float(theory),
        theory_ref="quadrature.finite_n_expectation(lncosh); ln2 + (N-1)/(2N) * N E ln cosh(beta J)",
        criterion="|estimate - theory| <= 3*stderr (scalar part at its exact mean)",
        verdict=_verdict(abs(mean - theory) <= 3.0 * stderr),
    )
    # the fluctuation-centered variant carries a known positive offset of
    # order N^{1/alpha - 1} (the limit law has nonzero mean); reported only
    centered = np.log(2.0) + quadrature.centering_integral(cfg.alpha, beta, n_sites).value / n_sites
    info = ResultRecord(
        experiment=cfg.experiment, case="truncated_centering_offset", parameters=params,
        values=[], estimate=mean - float(centered), stderr=stderr, theory_value=float(centered),
        theory_ref="quadrature.centering_integral", criterion="reported, not thresholded", verdict="info",
    )
    return [rec, info]


# ---------------------------------------------------------------------------
# fluctuation of the scalar part

def fluct_scalar(cfg, workers):
    alpha = cfg.alpha
    beta = cfg.beta if cfg.beta is not None else 1.0
    n_sites = cfg.N or 400
    rng_model = derive_rng(cfg.master_seed, cfg.experiment + "/model", 0)
    model = asymptotics.lnZbar_fluct_sample(alpha, beta, n_sites, rng_model, size=cfg.replications)
    rng_limit = derive_rng(cfg.master_seed, cfg.experiment + "/limit", 0)
    spec = asymptotics.LimitLawSpec(alpha=alpha, beta=beta, cutoff_eps=1e-3)
    limit = beta * 2.0 ** (-1.0 / alpha) * asymptotics.sample_Y_alpha(alpha, spec, rng_limit, size=10_000)
    params = {"alpha": alpha, "beta": beta, "N": n_sites, "cutoff_eps": spec.cutoff_eps}
    return [_ks_record(cfg, "scalar_fluctuation", model, limit, params,
                       "asymptotics.sample_Y_alpha (scaled by beta 2^{-1/alpha})")]


# ---------------------------------------------------------------------------
# fluctuation of the effective part

def _rep_hat_z(rep, seed, name, alpha, beta, n_sites):
    rng = derive_rng(seed, name, rep)
    spec = HeavyTailSpec.canonical(alpha)
    thermo = exact_log_partition(sample_disorder(spec, n_sites, rng), beta)
    return float(np.exp(thermo.log_z_hat - n_sites * np.log(2.0)))


def fluct_effective(cfg, workers):
    _, beta = _spec_params(cfg)
    if cfg.beta is None and cfg.beta_fraction is None:
        beta = 0.3 * quadrature.beta_alpha(cfg.alpha).value
    n_sites = cfg.N or 18
    model = _map_reps(_rep_hat_z, cfg.replications, workers,
                      cfg.master_seed, cfg.experiment, cfg.alpha, beta, n_sites)
    spec = asymptotics.LimitLawSpec(alpha=cfg.alpha, beta=beta, cutoff_eps=cfg.eps, max_cycle_len=7)
    rng_limit = derive_rng(cfg.master_seed, cfg.experiment + "/limit", 0)
    limit = asymptotics.sample_X_alpha_beta(cfg.alpha, beta, spec, rng_limit, size=10_000)
    params = {"alpha": cfg.alpha, "beta": beta, "N": n_sites,
              "cutoff_eps": spec.cutoff_eps, "max_cycle_len": spec.max_cycle_len}
    return [_ks_record(cfg, "effective_fluctuation", model, limit, params, "asymptotics.sample_X_alpha_beta")]


# ---------------------------------------------------------------------------
# overlap concentration

def _rep_site_overlap(rep, seed, name, alpha, beta, n_sites, budget):
    rng = derive_rng(seed, name, rep)
    matrix = sample_disorder(HeavyTailSpec.canonical(alpha), n_sites, rng)
    est = mcmc.estimate_site_overlap(matrix, beta, 2, budget, rng)
    return est.mean, est.stderr, est.tau_int


def _rep_bond_overlap(rep, seed, name, alpha, beta, n_sites, K, budget):
    rng = derive_rng(seed, name, rep)
    matrix = sample_disorder(HeavyTailSpec.canonical(alpha), n_sites, rng)
    est = mcmc.estimate_bond_overlap(matrix, beta, K, budget, rng)
    return est.mean, est.stderr, est.tau_int


def _rep_overlap_crosscheck(rep, seed, name, alpha, beta, n_sites, K, budget):
    from .exact import bond_overlap_stats, site_overlap_moment

    rng = derive_rng(seed, name, rep)
    matrix = sample_disorder(HeavyTailSpec.canonical(alpha), n_sites, rng)
    site = mcmc.estimate_site_overlap(matrix, beta, 2, budget, rng)
    bond = mcmc.estimate_bond_overlap(matrix, beta, K, budget, rng)
    site_exact = site_overlap_moment(matrix, beta, 2)
    bond_exact = bond_overlap_stats(matrix, beta, K)[0]
    z_site = abs(site.mean - site_exact) / site.stderr if site.stderr > 0 else 0.0
    z_bond = abs(bond.mean - bond_exact) / bond.stderr if bond.stderr > 0 else abs(bond.mean - bond_exact)
    return max(z_site, z_bond)


def overlaps_ht(cfg, workers):
    spec, beta = _spec_params(cfg)
    grid = cfg.N_grid or [50, 100, 200, 400]
    reps = cfg.replications
    budget = 2500
    records = []
    means = []
    for n_sites in grid:
        rows = _map_reps(_rep_site_overlap, reps, workers,
                         cfg.master_seed, f"{cfg.experiment}/site/{n_sites}", cfg.alpha, beta, n_sites, budget)
        vals = [r[0] for r in rows]
        mean, stderr = _mean_stderr(vals)
        means.append(mean)
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"site_overlap_N{n_sites}",
            parameters={"alpha": cfg.alpha, "beta": beta, "N": n_sites, "budget": budget,
                        "chain_stderrs": [r[1] for r in rows], "tau_ints": [r[2] for r in rows]},
            values=vals, estimate=mean, stderr=stderr, theory_value=0.0,
            theory_ref="site overlap concentrates at zero in the high-temperature regime",
            criterion="reported; trend judged across the N grid", verdict="info",
        ))
    fit = loglog_slope(np.asarray(grid, dtype=float), np.asarray(means))
    decreasing = all(a > b for a, b in zip(means, means[1:]))
    records.append(ResultRecord(
        experiment=cfg.experiment, case="site_overlap_trend",
        parameters={"alpha": cfg.alpha, "beta": beta, "N_grid": list(grid), "reps": reps},
        values=means, estimate=fit.slope, stderr=0.5 * (fit.ci_high - fit.ci_low),
        theory_value=-1.0, theory_ref="expected ~1/N decay of the mean square site overlap",
        criterion="strictly decreasing across the grid and log-log slope <= -0.2",
        verdict=_verdict(decreasing and fit.slope <= -0.2),
    ))

    n_bond = cfg.N or 300
    bond_rows = _map_reps(_rep_bond_overlap, reps, workers,
                          cfg.master_seed, f"{cfg.experiment}/bond/{n_bond}", cfg.alpha, beta, n_bond, cfg.K, budget)
    bond_vals = [r[0] for r in bond_rows]
    mean, stderr = _mean_stderr(bond_vals)
    limit = quadrature.bond_overlap_limit(cfg.alpha, beta, cfg.K)
    records.append(ResultRecord(
        experiment=cfg.experiment, case=f"bond_overlap_N{n_bond}",
        parameters={"alpha": cfg.alpha, "beta": beta, "N": n_bond, "K": cfg.K, "budget": budget,
                    "chain_stderrs": [r[1] for r in bond_rows], "tau_ints": [r[2] for r in bond_rows]},
        values=bond_vals, estimate=mean, stderr=stderr, theory_value=limit.value,
        theory_ref="quadrature.bond_overlap_limit",
        criterion="|estimate - theory| <= 3*stderr",
        verdict=_verdict(abs(mean - limit.value) <= 3.0 * stderr),
    ))

    cross_reps = min(reps, 6)
    zscores = _map_reps(_rep_overlap_crosscheck, cross_reps, workers,
                        cfg.master_seed, f"{cfg.experiment}/cross", cfg.alpha, beta, 12, cfg.K, 6000)
    records.append(ResultRecord(
        experiment=cfg.experiment, case="mcmc_vs_exact_N12",
        parameters={"alpha": cfg.alpha, "beta": beta, "N": 12, "K": cfg.K, "reps": cross_reps},
        values=list(map(float, zscores)), estimate=float(np.max(zscores)), stderr=float("nan"),
        theory_value=3.0, theory_ref="exact.site_overlap_moment / exact.bond_overlap_stats",
        criterion="all sampling estimates within 3 corrected stderr of exact values",
        verdict=_verdict(float(np.max(zscores)) <= 3.0),
    ))
    return records


# ---------------------------------------------------------------------------
# truncation bridge

def truncation_gap(cfg, workers):
    beta = cfg.beta if cfg.beta is not None else cfg.resolve_beta()
    n_sites = cfg.N or 14
    records = []
    gaps = []
    rng = derive_rng(cfg.master_seed, cfg.experiment, 0)
    for eps in (cfg.eps, cfg.eps / 2.0):
        report = diluted.truncation_gap(cfg.alpha, beta, eps, n_sites, cfg.replications, rng)
        gaps.append(report)
        ok = abs(report.gap) <= report.truncation_bound + 3.0 * report.gap_stderr
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"gap_eps_{eps:g}",
            parameters={"alpha": cfg.alpha, "beta": beta, "N": n_sites, "eps": eps,
                        "reps": cfg.replications, "dense_mean": report.dense_mean, "pvb_mean": report.pvb_mean},
            values=[], estimate=report.gap, stderr=report.gap_stderr,
            theory_value=report.truncation_bound,
            theory_ref="analytic truncation bound alpha beta^2 eps^(2-alpha)/(2-alpha)",
            criterion="|gap| <= bound + 3*stderr", verdict=_verdict(ok),
        ))
    shrink = abs(gaps[1].gap) <= abs(gaps[0].gap) + 3.0 * float(np.hypot(gaps[0].gap_stderr, gaps[1].gap_stderr))
    records.append(ResultRecord(
        experiment=cfg.experiment, case="gap_shrinks_with_eps",
        parameters={"alpha": cfg.alpha, "beta": beta, "N": n_sites, "eps_grid": [cfg.eps, cfg.eps / 2.0]},
        values=[g.gap for g in gaps], estimate=abs(gaps[0].gap) - abs(gaps[1].gap), stderr=float("nan"),
        theory_value=float("nan"), theory_ref="gap envelope eps^(2-alpha)",
        criterion="|gap| non-increasing as eps decreases (within noise)", verdict=_verdict(shrink),
    ))
    return records


# ---------------------------------------------------------------------------
# superadditivity

def superadditivity(cfg, workers):
    spec, beta = _spec_params(cfg)
    half = cfg.N or 10
    records = []
    # beta = 0: the enumerated defect must vanish identically
    rng0 = derive_rng(cfg.master_seed, cfg.experiment + "/zero", 0)
    zero = diluted.superadditivity_experiment(cfg.alpha, 0.0, (half, half), 2, rng0, model="levy", spec=spec)
    records.append(ResultRecord(
        experiment=cfg.experiment, case="beta_zero_defect",
        parameters={"alpha": cfg.alpha, "beta": 0.0, "M": half, "N": half},
        values=[], estimate=zero.defect, stderr=0.0, theory_value=0.0,
        theory_ref="ln Z_N = N ln 2 at beta = 0", criterion="|defect| < 1e-10, by enumeration",
        verdict=_verdict(abs(zero.defect) < 1e-10),
    ))
    rng = derive_rng(cfg.master_seed, cfg.experiment + "/pvb", 0)
    pvb = diluted.superadditivity_experiment(cfg.alpha, beta, (half, half), cfg.replications, rng,
                                             model="pvb", eps=cfg.eps)
    ok = pvb.defect >= pvb.lower_bound - 3.0 * pvb.stderr
    records.append(ResultRecord(
        experiment=cfg.experiment, case="pvb_defect",
        parameters={"alpha": cfg.alpha, "beta": beta, "M": half, "N": half, "eps": cfg.eps, "reps": cfg.replications},
        values=[], estimate=pvb.defect, stderr=pvb.stderr, theory_value=pvb.lower_bound,
        theory_ref="interpolation bound -6 beta gamma E|y| (diluted.superadditivity_experiment)",
        criterion="defect >= bound - 3*stderr", verdict=_verdict(ok),
    ))
    rng = derive_rng(cfg.master_seed, cfg.experiment + "/levy", 0)
    totals = cfg.N_grid or [12, 16, 20]
    defects = []
    for total in totals:
        rep = diluted.superadditivity_experiment(cfg.alpha, beta, (total // 2, total - total // 2),
                                                 cfg.replications, rng, model="levy", spec=spec)
        defects.append((total, rep.defect, rep.stderr))
    records.append(ResultRecord(
        experiment=cfg.experiment, case="levy_defect_trend",
        parameters={"alpha": cfg.alpha, "beta": beta, "totals": list(totals), "reps": cfg.replications,
                    "stderrs": [d[2] for d in defects]},
        values=[d[1] for d in defects], estimate=defects[-1][1], stderr=defects[-1][2],
        theory_value=float("nan"), theory_ref="sublinear defect envelope; reported, not thresholded",
        criterion="reported", verdict="info",
    ))
    return records


# ---------------------------------------------------------------------------
# free energy below stable index one

def _rep_sub1(rep, seed, name, alpha, beta, n_sites):
    rng = derive_rng(seed, name, rep)
    thermo = exact_log_partition(sample_disorder(HeavyTailSpec.canonical(alpha), n_sites, rng), beta)
    return thermo.log_z / float(n_sites) ** (1.0 / alpha)


def sub1_limit(cfg, workers):
    alpha = cfg.alpha if cfg.alpha < 1.0 else 0.5
    beta = cfg.beta if cfg.beta is not None else 1.0
    n_sites = cfg.N or 22
    model = _map_reps(_rep_sub1, cfg.replications, workers,
                      cfg.master_seed, cfg.experiment, alpha, beta, n_sites)
    spec = asymptotics.LimitLawSpec(alpha=alpha, beta=beta, ppp_trunc=10_000)
    rng_limit = derive_rng(cfg.master_seed, cfg.experiment + "/limit", 0)
    limit = asymptotics.sub1_free_energy_limit_sample(alpha, beta, spec, rng_limit, size=10_000)
    params = {"alpha": alpha, "beta": beta, "N": n_sites, "ppp_trunc": spec.ppp_trunc}
    return [_ks_record(cfg, "sub1_free_energy", model, limit, params, "asymptotics.sub1_free_energy_limit_sample")]


# ---------------------------------------------------------------------------
# alignment with the heaviest edges

def _rep_alignment(rep, seed, name, alpha, beta, grid, depth):
    # shared uniforms across sizes: each size reads the head of one edge stream
    rng = derive_rng(seed, name, rep)
    n_max = max(grid)
    n_edges = n_max * (n_max - 1) // 2
    u = 1.0 - rng.random(n_edges)
    signs = rng.integers(0, 2, n_edges) * 2 - 1
    from .heavy_tail import DisorderMatrix

    out = []
    for n_sites in grid:
        n_e = n_sites * (n_sites - 1) // 2
        j = signs[:n_e] * float(n_sites) ** (-1.0 / alpha) * u[:n_e] ** (-1.0 / alpha)
        matrix = DisorderMatrix.from_upper(n_sites, j)
        out.append(gibbs_alignment(matrix, beta, depth, rng))
    return tuple(out)


def _trend_verdict(per_rep_matrix, direction):
    """Statistical trend over CRN-coupled columns: no significant adjacent
    move against `direction` and a significant overall move with it."""
    arr = np.asarray(per_rep_matrix, dtype=float)
    sign = 1.0 if direction == "increasing" else -1.0
    ok = True
    for a, b in zip(range(arr.shape[1] - 1), range(1, arr.shape[1])):
        diff = sign * (arr[:, b] - arr[:, a])
        se = diff.std(ddof=1) / np.sqrt(arr.shape[0])
        if diff.mean() < -3.0 * se:
            ok = False
    overall = sign * (arr[:, -1] - arr[:, 0])
    se = overall.std(ddof=1) / np.sqrt(arr.shape[0])
    return ok and overall.mean() > 3.0 * se


def gibbs_alignment_experiment(cfg, workers):
    alpha = cfg.alpha if cfg.alpha < 1.0 else 0.5
    beta = cfg.beta if cfg.beta is not None else 1.0
    depth = int(cfg.K) if cfg.K > 1 else 2
    grid = cfg.N_grid or [10, 14, 18, 22]
    rows = _map_reps(_rep_alignment, cfg.replications, workers,
                     cfg.master_seed, cfg.experiment, alpha, beta, tuple(grid), depth)
    arr = np.asarray(rows, dtype=float)
    records = []
    means = []
    for col, n_sites in enumerate(grid):
        mean, stderr = _mean_stderr(arr[:, col])
        means.append(mean)
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"alignment_N{n_sites}",
            parameters={"alpha": alpha, "beta": beta, "N": n_sites, "R": depth, "reps": cfg.replications},
            values=list(map(float, arr[:, col])), estimate=mean, stderr=stderr, theory_value=1.0,
            theory_ref="alignment probability tends to one on the heaviest edges",
            criterion="reported; trend judged across the N grid", verdict="info",
        ))
    trend_ok = _trend_verdict(arr, "increasing")
    records.append(ResultRecord(
        experiment=cfg.experiment, case="alignment_trend",
        parameters={"alpha": alpha, "beta": beta, "N_grid": list(grid), "R": depth, "soft_threshold": 0.8},
        values=means, estimate=means[-1], stderr=float("nan"), theory_value=1.0,
        theory_ref="exact.gibbs_alignment",
        criterion="increasing trend across the N grid at 3 stderr (hard); exceeds 0.8 at the top size (soft)",
        verdict=_verdict(trend_ok),
    ))
    return records


# ---------------------------------------------------------------------------
# order-statistics representation identity

def representation_check(cfg, workers):
    records = []
    n_draws = 5000
    for alpha in (0.5, 1.5):
        for n in (500, 2000):
            rng_a = derive_rng(cfg.master_seed, f"{cfg.experiment}/ppp/{alpha}/{n}", 0)
            rng_b = derive_rng(cfg.master_seed, f"{cfg.experiment}/direct/{alpha}/{n}", 0)
            tops_ppp = np.array([order_stats_via_ppp(n, alpha, rng_a)[0] for _ in range(n_draws)])
            tops_dir = np.array([order_stats_direct(n, alpha, rng_b)[0] for _ in range(n_draws)])
            records.append(_ks_record(cfg, f"top_coordinate_a{alpha:g}_n{n}", tops_ppp, tops_dir,
                                      {"alpha": alpha, "n": n, "coordinate": 0, "n_draws": n_draws},
                                      "heavy_tail.order_stats_direct"))
    return records


# ---------------------------------------------------------------------------
# finite-size expectation convergence

def expectation_limit(cfg, workers):
    beta = cfg.beta if cfg.beta is not None else cfg.resolve_beta()
    grid = cfg.N_grid or [1000, 10_000, 100_000]
    n_draws = int(min(max(1000 * cfg.replications, 10**5), 2 * 10**6))
    records = []
    for family, power in (("canonical", 0.0), ("log_power", 1.0)):
        spec = HeavyTailSpec(alpha=cfg.alpha, family=family, power=power)
        rng = derive_rng(cfg.master_seed, f"{cfg.experiment}/{family}", 0)
        rows = quadrature.expectation_limit_check("tanh2", spec, beta, grid, rng, n_draws=n_draws)
        gaps = [abs(r.finite_n_value - r.limit_value) for r in rows]
        mc_ok = all(abs(r.mc_value - r.finite_n_value) <= 4.0 * r.mc_stderr for r in rows)
        gap_ok = all(a >= b for a, b in zip(gaps, gaps[1:]))
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"tanh2_{family}",
            parameters={"alpha": cfg.alpha, "beta": beta, "N_grid": list(grid), "power": power,
                        "finite_n": [r.finite_n_value for r in rows], "stderrs": [r.mc_stderr for r in rows]},
            values=[r.mc_value for r in rows], estimate=rows[-1].mc_value, stderr=rows[-1].mc_stderr,
            theory_value=rows[-1].limit_value, theory_ref="quadrature.finite_n_expectation / limit integral",
            criterion="MC matches finite-size quadrature within 4 stderr; quadrature gap to the limit decreasing",
            verdict=_verdict(mc_ok and gap_ok),
        ))
    return records


# ---------------------------------------------------------------------------
# variational functional at the product kernel

def rs_variational(cfg, workers):
    _, beta = _spec_params(cfg)
    spec = asymptotics.LimitLawSpec(alpha=cfg.alpha, beta=beta, cutoff_eps=0.5)
    rng = derive_rng(cfg.master_seed, cfg.experiment, 0)
    n_outer = max(cfg.replications, 100) * 100
    q_est = asymptotics.rs_functional_Q(cfg.alpha, beta, spec, rng, n_outer=n_outer)
    target = quadrature.free_energy_limit(cfg.alpha, beta).value
    records = [ResultRecord(
        experiment=cfg.experiment, case="product_kernel_value",
        parameters={"alpha": cfg.alpha, "beta": beta, "cutoff_eps": spec.cutoff_eps, "n_outer": n_outer},
        values=[], estimate=q_est.value, stderr=q_est.error_estimate, theory_value=target,
        theory_ref="quadrature.free_energy_limit",
        criterion="|estimate - theory| <= 3*stderr",
        verdict=_verdict(abs(q_est.value - target) <= 3.0 * q_est.error_estimate),
    )]
    q_zero = asymptotics.rs_functional_Q(cfg.alpha, 0.0, spec, rng, n_outer=10)
    records.append(ResultRecord(
        experiment=cfg.experiment, case="zero_temperature_value",
        parameters={"alpha": cfg.alpha, "beta": 0.0},
        values=[], estimate=q_zero.value, stderr=0.0, theory_value=float(np.log(2.0)),
        theory_ref="ln 2", criterion="|estimate - ln 2| <= 1e-10",
        verdict=_verdict(abs(q_zero.value - np.log(2.0)) <= 1e-10),
    ))
    return records


# ---------------------------------------------------------------------------
# universality across tail families

def _rep_universality(rep, seed, name, alpha, beta, grid, power):
    # both tail families AND all sizes share one stream of tail heights;
    # only the effective (light-tailed) parts are sampled, the heavy scalar
    # parts enter through their exact means
    rng = derive_rng(seed, name, rep)
    n_max = max(grid)
    n_edges = n_max * (n_max - 1) // 2
    u = 1.0 - rng.random(n_edges)
    signs = rng.integers(0, 2, n_edges) * 2 - 1
    lp = HeavyTailSpec.log_power(alpha, power)
    from .heavy_tail import DisorderMatrix

    out = []
    for n_sites in grid:
        n_e = n_sites * (n_sites - 1) // 2
        j_can = signs[:n_e] * float(n_sites) ** (-1.0 / alpha) * u[:n_e] ** (-1.0 / alpha)
        j_lp = signs[:n_e] * lp.abs_from_tail_height(u[:n_e]) / lp.a_N(n_sites)
        h_can = exact_log_partition(DisorderMatrix.from_upper(n_sites, j_can), beta).log_z_hat / n_sites
        h_lp = exact_log_partition(DisorderMatrix.from_upper(n_sites, j_lp), beta).log_z_hat / n_sites
        out.append(h_can - h_lp)
    return tuple(out)


def universality_gap(cfg, workers):
    _, beta = _spec_params(cfg)
    grid = cfg.N_grid or [10, 14, 18]
    lp = HeavyTailSpec.log_power(cfg.alpha, 1.0)
    can = HeavyTailSpec.canonical(cfg.alpha)
    rows = np.asarray(_map_reps(_rep_universality, cfg.replications, workers,
                                cfg.master_seed, cfg.experiment, cfg.alpha, beta, tuple(grid), 1.0))
    records = []
    gaps = []
    for col, n_sites in enumerate(grid):
        pref = (n_sites - 1) / (2.0 * n_sites)
        scalar_diff = pref * (quadrature.finite_n_expectation("lncosh", can, beta, n_sites).value
                              - quadrature.finite_n_expectation("lncosh", lp, beta, n_sites).value)
        full = rows[:, col] + scalar_diff
        mean, stderr = _mean_stderr(full)
        gaps.append((n_sites, abs(mean), stderr))
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"family_gap_N{n_sites}",
            parameters={"alpha": cfg.alpha, "beta": beta, "N": n_sites, "power": 1.0,
                        "reps": cfg.replications, "scalar_part_gap": scalar_diff},
            values=list(map(float, full)), estimate=mean, stderr=stderr, theory_value=0.0,
            theory_ref="free energies of matched-alpha tail families coincide in the limit",
            criterion="reported; trend judged across the N grid", verdict="info",
        ))
    measured = [g[1] for g in gaps]
    ses = [g[2] for g in gaps]
    decreasing = all(b < a + 3.0 * float(np.hypot(sa, sb))
                     for (a, sa), (b, sb) in zip(zip(measured, ses), zip(measured[1:], ses[1:])))
    decreasing = decreasing and measured[-1] < measured[0]
    records.append(ResultRecord(
        experiment=cfg.experiment, case="family_gap_trend",
        parameters={"alpha": cfg.alpha, "beta": beta, "N_grid": list(grid), "stderrs": ses},
        values=measured, estimate=measured[-1], stderr=ses[-1], theory_value=0.0,
        theory_ref="universality of the free energy across tail families",
        criterion="|mean gap| decreasing across the N grid (within 3 stderr pointwise)",
        verdict=_verdict(decreasing),
    ))
    return records


# ---------------------------------------------------------------------------
# concentration scan

def _rep_concentration(rep, seed, name, alpha, beta, grid):
    rng = derive_rng(seed, name, rep)
    n_max = max(grid)
    n_edges = n_max * (n_max - 1) // 2
    u = 1.0 - rng.random(n_edges)
    signs = rng.integers(0, 2, n_edges) * 2 - 1
    from .heavy_tail import DisorderMatrix

    out = []
    for n_sites in grid:
        n_e = n_sites * (n_sites - 1) // 2
        j = signs[:n_e] * float(n_sites) ** (-1.0 / alpha) * u[:n_e] ** (-1.0 / alpha)
        out.append(exact_log_partition(DisorderMatrix.from_upper(n_sites, j), beta).log_z / n_sites)
    return tuple(out)


def concentration_scan(cfg, workers):
    alpha = cfg.alpha
    _, beta = _spec_params(cfg)
    p = 1.6 if abs(alpha - 1.8) < 1e-9 else 0.5 * (2.0 * alpha / (1.0 + alpha) + alpha)
    if not 2.0 * alpha / (1.0 + alpha) < p < alpha:
        raise ValueError("concentration exponent p outside the valid window for this alpha")
    grid = cfg.N_grid or [10, 14, 18, 22]
    rows = np.asarray(_map_reps(_rep_concentration, cfg.replications, workers,
                                cfg.master_seed, cfg.experiment, alpha, beta, tuple(grid)))
    moments = []
    records = []
    for col, n_sites in enumerate(grid):
        vals = rows[:, col]
        dev = float(np.mean(np.abs(vals - vals.mean()) ** p))
        moments.append(dev)
        # robust companion: central 90% width, a tail-insensitive deviation scale
        width = float(np.quantile(vals, 0.95) - np.quantile(vals, 0.05))
        records.append(ResultRecord(
            experiment=cfg.experiment, case=f"p_moment_N{n_sites}",
            parameters={"alpha": alpha, "beta": beta, "N": n_sites, "p": p, "reps": cfg.replications,
                        "central_width_90": width},
            values=list(map(float, vals)), estimate=dev, stderr=float("nan"),
            theory_value=float(n_sites) ** (-(p + p / alpha - 2.0)),
            theory_ref="concentration envelope N^{-(p + p/alpha - 2)} (up to a constant)",
            criterion="reported; trend judged across the N grid", verdict="info",
        ))
    fit = loglog_slope(np.asarray(grid, dtype=float), np.asarray(moments))
    decreasing = all(a > b for a, b in zip(moments, moments[1:]))
    records.append(ResultRecord(
        experiment=cfg.experiment, case="p_moment_trend",
        parameters={"alpha": alpha, "beta": beta, "p": p, "N_grid": list(grid)},
        values=moments, estimate=fit.slope, stderr=0.5 * (fit.ci_high - fit.ci_low),
        theory_value=-(p + p / alpha - 2.0), theory_ref="concentration decay exponent",
        criterion="p-th deviation moment decreasing in N with a positive fitted decay exponent",
        verdict=_verdict(decreasing and fit.slope < 0.0),
    ))
    return records


REGISTRY = {
    "free_energy_ht": free_energy_ht,
    "fluct_scalar": fluct_scalar,
    "fluct_effective": fluct_effective,
    "overlaps_ht": overlaps_ht,
    "truncation_gap": truncation_gap,
    "superadditivity": superadditivity,
    "sub1_limit": sub1_limit,
    "gibbs_alignment": gibbs_alignment_experiment,
    "representation_check": representation_check,
    "expectation_limit": expectation_limit,
    "rs_variational": rs_variational,
    "universality_gap": universality_gap,
    "concentration_scan": concentration_scan,
}


def run(cfg, workers=None):
    """Execute a named experiment; returns its ResultRecord list."""
    from .records import ConfigError

    if cfg.experiment not in REGISTRY:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {sorted(REGISTRY)}")
    cfg.validate()
    workers = workers if workers is not None else (cfg.worker_count or default_workers())
    return REGISTRY[cfg.experiment](cfg, workers)
