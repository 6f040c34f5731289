import json
import os

import numpy as np
import pytest

from levyglass import cli, experiments
from levyglass.records import ConfigError, ExperimentConfig, ResultRecord, emit, fmt17, load_config_file
from levyglass.streams import derive_rng, experiment_key


def test_stream_derivation_is_deterministic_and_keyed():
    a = derive_rng(7, "exp", 3).random(5)
    b = derive_rng(7, "exp", 3).random(5)
    c = derive_rng(7, "exp", 4).random(5)
    d = derive_rng(7, "other", 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert experiment_key("exp") == experiment_key("exp")
    with pytest.raises(ValueError):
        derive_rng(-1, "exp", 0)


def test_config_unknown_key_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"experiment": "free_energy_ht", "master_seed": 1, "bogus": 3})


def test_config_requires_seed_and_positive_reps():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="free_energy_ht").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="free_energy_ht", master_seed=1, replications=0).validate()


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("experiment free_energy_ht\nalpha = 1.5\nN_grid 10,14\nmaster_seed 9\n# comment\n")
    cfg = ExperimentConfig.from_mapping(load_config_file(path))
    assert cfg.alpha == 1.5 and cfg.N_grid == [10, 14] and cfg.master_seed == 9


def test_fmt17_round_trips_floats():
    rng = derive_rng(1, "fmt", 0)
    for x in list(rng.normal(size=50)) + [1e-300, 1e300, np.pi]:
        assert float(fmt17(x)) == x


def test_emit_empty_and_round_trip(tmp_path):
    out = tmp_path / "res"
    files = emit([], str(out), "csv")
    text = open(files[0]).read().strip().splitlines()
    assert len(text) == 1  # header only

    rec = ResultRecord(experiment="e", case="c", parameters={"alpha": 1.5, "N": 3},
                       values=[0.1, 1 / 3, np.pi], estimate=np.pi, stderr=0.01,
                       theory_value=2.0, theory_ref="ref", criterion="crit", verdict="pass")
    files = emit([rec], str(out), "both")
    with open(out.with_suffix(".jsonl")) as fh:
        payload = json.loads(fh.readline())
    assert payload["values"][2] == np.pi
    csv_lines = open(out.with_suffix(".csv")).read().splitlines()
    values_cell = csv_lines[1].split(",")[-1].strip('"')
    assert [float(v) for v in values_cell.split(";")] == [0.1, 1 / 3, np.pi]


def test_unknown_experiment_exit_code(tmp_path, capsys):
    code = cli.main(["formulas", "beta_alpha", "--alpha", "1.5"])
    assert code == 0
    cfg = ExperimentConfig(experiment="nope", master_seed=1)
    with pytest.raises(ConfigError):
        experiments.run(cfg)


def test_cli_exit_codes(tmp_path, monkeypatch):
    # config error: replications = 0
    code = cli.main(["free_energy_ht", "--master-seed", "1", "--replications", "0",
                     "--output", str(tmp_path / "x")])
    assert code == cli.EXIT_CONFIG
    assert not (tmp_path / "x.csv").exists()
    # resource guard: N beyond the enumeration limit
    code = cli.main(["free_energy_ht", "--master-seed", "1", "--replications", "2",
                     "--N", "31", "--output", str(tmp_path / "y")])
    assert code == cli.EXIT_GUARD
    # statistical failure with --check: inject a failing experiment
    def fake(cfg, workers):
        return [ResultRecord(experiment=cfg.experiment, case="c", parameters={}, values=[1.0],
                             estimate=1.0, stderr=0.0, theory_value=0.0, theory_ref="",
                             criterion="always fails", verdict="fail")]

    monkeypatch.setitem(experiments.REGISTRY, "free_energy_ht", fake)
    code = cli.main(["free_energy_ht", "--master-seed", "1", "--replications", "2",
                     "--check", "--output", str(tmp_path / "z")])
    assert code == cli.EXIT_CHECK
    code = cli.main(["free_energy_ht", "--master-seed", "1", "--replications", "2",
                     "--output", str(tmp_path / "z2")])
    assert code == 0  # without --check the failure is only reported


def test_worker_count_invariance(tmp_path):
    # identical config + seed give byte-identical outputs for 1 and 2 workers
    outputs = []
    for workers, name in ((1, "w1"), (2, "w2")):
        cfg = ExperimentConfig(experiment="free_energy_ht", alpha=1.5, beta=0.2, N=10,
                               replications=8, master_seed=42,
                               output_path=str(tmp_path / name), worker_count=workers)
        records = experiments.run(cfg)
        emit(records, cfg.output_path, "jsonl")
        outputs.append(open(tmp_path / f"{name}.jsonl", "rb").read())
    assert outputs[0] == outputs[1]


def test_cli_instance_round_trip(tmp_path):
    path = str(tmp_path / "inst.txt")
    assert cli.main(["instance", "dump", path, "--N", "8", "--alpha", "1.5", "--master-seed", "5"]) == 0
    assert cli.main(["instance", "load", path, "--beta", "0.3"]) == 0


def test_cli_formulas_subcommands(capsys):
    assert cli.main(["formulas", "bond_overlap_limit", "--alpha", "1.5", "--beta", "0.4", "--K", "1.0"]) == 0
    assert cli.main(["formulas", "L_pmf", "--alpha", "1.5", "--beta", "1.0", "--k", "2"]) == 0
    assert cli.main(["formulas", "centering_integral", "--alpha", "1.5", "--beta", "1.0", "--N", "100"]) == 0
    out = capsys.readouterr().out
    assert "bond_overlap_limit" in out and "P(L = 4)" in out


def test_expectation_limit_registry_runs(tmp_path):
    cfg = ExperimentConfig(experiment="expectation_limit", alpha=1.5, beta=1.0,
                           N_grid=[1000, 10_000], replications=100, master_seed=77,
                           output_path=str(tmp_path / "el"))
    records = experiments.run(cfg)
    cases = {r.case: r for r in records}
    assert cases["tanh2_canonical"].verdict == "pass"
    assert cases["tanh2_log_power"].verdict == "pass"


def test_concentration_scan_registry_runs(tmp_path):
    cfg = ExperimentConfig(experiment="concentration_scan", alpha=1.8, beta_fraction=0.5,
                           N_grid=[8, 10, 12], replications=60, master_seed=5,
                           output_path=str(tmp_path / "cs"))
    records = experiments.run(cfg)
    cases = {r.case for r in records}
    assert "p_moment_trend" in cases and "p_moment_N10" in cases
