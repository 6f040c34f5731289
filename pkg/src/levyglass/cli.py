"""Command-line entry point: one subcommand per experiment, plus utilities.

Exit codes: 0 success, 2 configuration error, 3 resource-guard violation,
4 statistical-acceptance failure when --check is passed.
"""

import argparse
import sys

import numpy as np

from . import experiments, quadrature
from .exact import ResourceGuardError, dump_instance, exact_log_partition, load_instance
from .heavy_tail import HeavyTailSpec, sample_disorder
from .records import ConfigError, ExperimentConfig, emit, fmt17, load_config_file
from .streams import derive_rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_CHECK = 4


def _add_experiment_parser(sub, name):
    p = sub.add_parser(name, help=f"run the {name} experiment")
    p.add_argument("--config", help="flat key-value config file; command line overrides it")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--beta-fraction", dest="beta_fraction", type=float,
                   help="beta as a fraction of the critical temperature (default 0.5)")
    p.add_argument("--N", type=int)
    p.add_argument("--N-grid", dest="N_grid", help="comma-separated sizes")
    p.add_argument("--K", type=float, help="bond threshold (alignment depth R for gibbs_alignment)")
    p.add_argument("--eps", type=float)
    p.add_argument("--replications", type=int)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--output", dest="output_path")
    p.add_argument("--workers", dest="worker_count", type=int)
    p.add_argument("--format", choices=("csv", "jsonl", "both"), default="both")
    p.add_argument("--check", action="store_true", help="exit 4 if any pass/fail criterion fails")
    return p


def _config_from_args(args):
    mapping = {}
    if args.config:
        mapping.update(load_config_file(args.config))
    mapping["experiment"] = args.experiment_name
    for key in ("alpha", "beta", "beta_fraction", "N", "N_grid", "K", "eps",
                "replications", "master_seed", "output_path", "worker_count"):
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = val
    return ExperimentConfig.from_mapping(mapping)


def _run_experiment(args):
    cfg = _config_from_args(args)
    records = experiments.run(cfg)
    files = emit(records, cfg.output_path, args.format)
    failed = [r for r in records if r.verdict == "fail"]
    for rec in records:
        tag = rec.verdict.upper() if rec.verdict else "INFO"
        print(f"[{tag}] {rec.experiment}/{rec.case}: estimate={rec.estimate:.6g} "
              f"stderr={rec.stderr:.3g} theory={rec.theory_value:.6g} ({rec.criterion})")
    print("wrote " + ", ".join(files))
    if args.check and failed:
        return EXIT_CHECK
    return EXIT_OK


def _cmd_formulas(args):
    name = args.name
    if name == "beta_alpha":
        res = quadrature.beta_alpha(args.alpha)
    elif name == "free_energy_limit":
        res = quadrature.free_energy_limit(args.alpha, _beta_of(args))
    elif name == "centering_integral":
        if args.N is None:
            raise ConfigError("centering_integral needs --N")
        res = quadrature.centering_integral(args.alpha, _beta_of(args), args.N)
    elif name == "bond_overlap_limit":
        bo = quadrature.bond_overlap_limit(args.alpha, _beta_of(args), args.K)
        print(f"bond_overlap_limit = {fmt17(bo.value)} +/- {fmt17(bo.error_estimate)}")
        print(f"C_K = {fmt17(bo.c_k)} +/- {fmt17(bo.c_k_error)}")
        return EXIT_OK
    elif name == "gamma_ell":
        res = quadrature.gamma_ell(args.alpha, _beta_of(args), args.ell)
    elif name == "L_pmf":
        p = quadrature.L_pmf(args.alpha, _beta_of(args), args.k)
        print(f"P(L = {2 * args.k}) = {fmt17(p)}")
        return EXIT_OK
    elif name == "self_check":
        for key, residual in quadrature.quadrature_self_check(args.alpha, _beta_of(args)).items():
            print(f"{key}: {fmt17(residual)}")
        return EXIT_OK
    else:
        raise ConfigError(f"unknown formula {name!r}")
    print(f"{name} = {fmt17(res.value)} +/- {fmt17(res.error_estimate)}")
    return EXIT_OK


def _beta_of(args):
    if args.beta is not None:
        return args.beta
    frac = args.beta_fraction if args.beta_fraction is not None else 0.5
    return frac * quadrature.beta_alpha(args.alpha).value


def _cmd_instance(args):
    if args.action == "dump":
        if args.master_seed is None:
            raise ConfigError("instance dump needs --master-seed")
        rng = derive_rng(args.master_seed, "instance", 0)
        matrix = sample_disorder(HeavyTailSpec.canonical(args.alpha), args.N, rng)
        dump_instance(matrix, args.path, alpha=args.alpha, beta=args.beta or float("nan"), seed=args.master_seed)
        print(f"wrote {args.path} (N={args.N}, edges={args.N * (args.N - 1) // 2})")
        return EXIT_OK
    matrix, meta = load_instance(args.path)
    print(f"N={matrix.n_sites} alpha={meta.get('alpha')} beta={meta.get('beta')} seed={meta.get('seed')}")
    print(f"edges={matrix.n_sites * (matrix.n_sites - 1) // 2} max|J|={matrix.max_abs_coupling():.6g}")
    if args.beta is not None:
        thermo = exact_log_partition(matrix, args.beta)
        print(f"log_Z={fmt17(thermo.log_z)} log_Z_bar={fmt17(thermo.log_z_bar)} log_Z_hat={fmt17(thermo.log_z_hat)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="levyglass",
                                     description="experiments on a fully connected model with power-law couplings")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in sorted(experiments.REGISTRY):
        p = _add_experiment_parser(sub, name)
        p.set_defaults(func=_run_experiment, experiment_name=name)

    f = sub.add_parser("formulas", help="print a quadrature constant")
    f.add_argument("name", choices=["beta_alpha", "free_energy_limit", "centering_integral",
                                    "bond_overlap_limit", "gamma_ell", "L_pmf", "self_check"])
    f.add_argument("--alpha", type=float, default=1.5)
    f.add_argument("--beta", type=float)
    f.add_argument("--beta-fraction", dest="beta_fraction", type=float)
    f.add_argument("--N", type=int)
    f.add_argument("--K", type=float, default=1.0)
    f.add_argument("--ell", type=int, default=1)
    f.add_argument("--k", type=int, default=1)
    f.set_defaults(func=_cmd_formulas)

    inst = sub.add_parser("instance", help="dump or load disorder instances in the text format")
    inst.add_argument("action", choices=["dump", "load"])
    inst.add_argument("path")
    inst.add_argument("--N", type=int, default=12)
    inst.add_argument("--alpha", type=float, default=1.5)
    inst.add_argument("--beta", type=float)
    inst.add_argument("--master-seed", dest="master_seed", type=int)
    inst.set_defaults(func=_cmd_instance)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
