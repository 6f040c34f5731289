"""Experiment configuration and result records, with CSV/JSONL emission.

Numbers are serialized with 17 significant digits so emitted files round-trip
to the exact float64 bits regardless of platform.
"""

import json
import math
import os
from dataclasses import dataclass, field

__all__ = ["fmt17", "ExperimentConfig", "ResultRecord", "ConfigError", "emit", "load_config_file"]

CSV_HEADER = [
    "experiment",
    "case",
    "parameters",
    "n_values",
    "estimate",
    "stderr",
    "theory_value",
    "theory_ref",
    "criterion",
    "verdict",
    "values",
]


def fmt17(x):
    """17 significant digits; enough to reproduce any float64 exactly."""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return str(x)
    return format(float(x), ".16e")


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown key, missing or bad value)."""


_CONFIG_FIELDS = {
    "experiment": str,
    "alpha": float,
    "beta": float,
    "beta_fraction": float,
    "N": int,
    "N_grid": lambda s: [int(v) for v in str(s).split(",") if v != ""],
    "K": float,
    "eps": float,
    "replications": int,
    "master_seed": int,
    "output_path": str,
    "worker_count": int,
}


@dataclass
class ExperimentConfig:
    experiment: str
    alpha: float = 1.5
    beta: float | None = None
    beta_fraction: float | None = None
    N: int | None = None
    N_grid: list | None = None
    K: float = 1.0
    eps: float = 1.0
    replications: int = 100
    master_seed: int | None = None
    output_path: str = "results"
    worker_count: int | None = None

    def validate(self):
        if not self.experiment:
            raise ConfigError("an experiment name is required")
        if self.master_seed is None:
            raise ConfigError("master_seed is mandatory; wall-clock seeding is not supported")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in 64 bits")
        if not 0.0 < self.alpha < 2.0:
            raise ConfigError("alpha must lie in (0,2)")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.beta is not None and self.beta < 0:
            raise ConfigError("beta must be nonnegative")
        if self.beta_fraction is not None and self.beta_fraction < 0:
            raise ConfigError("beta_fraction must be nonnegative")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.K < 0:
            raise ConfigError("K must be nonnegative")
        if self.worker_count is not None and self.worker_count < 1:
            raise ConfigError("worker_count must be >= 1")
        return self

    def resolve_beta(self):
        """Explicit beta wins; otherwise beta_fraction (default 0.5) times the critical beta."""
        from .quadrature import beta_alpha

        if self.beta is not None:
            return self.beta
        frac = 0.5 if self.beta_fraction is None else self.beta_fraction
        return frac * beta_alpha(self.alpha).value

    @classmethod
    def from_mapping(cls, mapping):
        kwargs = {}
        for key, raw in mapping.items():
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            try:
                kwargs[key] = _CONFIG_FIELDS[key](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
        if "experiment" not in kwargs:
            raise ConfigError("an experiment name is required")
        return cls(**kwargs).validate()


def load_config_file(path):
    """Flat key-value text file: one `key value` (or `key = value`) per line."""
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace("=", " ", 1).split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"cannot parse config line: {raw.rstrip()}")
            out[parts[0]] = parts[1].strip()
    return out


@dataclass
class ResultRecord:
    """One experiment case: replicated values, aggregate, and its theory target."""

    experiment: str
    case: str
    parameters: dict
    values: list = field(default_factory=list)
    estimate: float = float("nan")
    stderr: float = float("nan")
    theory_value: float = float("nan")
    theory_ref: str = ""
    criterion: str = ""
    verdict: str = ""

    def to_json(self):
        payload = {
            "experiment": self.experiment,
            "case": self.case,
            "parameters": {k: v for k, v in sorted(self.parameters.items())},
            "n_values": len(self.values),
            "estimate": self.estimate,
            "stderr": self.stderr,
            "theory_value": self.theory_value,
            "theory_ref": self.theory_ref,
            "criterion": self.criterion,
            "verdict": self.verdict,
            "values": [float(v) for v in self.values],
        }
        return json.dumps(payload, sort_keys=True, allow_nan=True)

    def to_csv_row(self):
        params = ";".join(f"{k}={_param_str(v)}" for k, v in sorted(self.parameters.items()))
        vals = ";".join(fmt17(v) for v in self.values)
        cells = [
            self.experiment,
            self.case,
            params,
            str(len(self.values)),
            fmt17(self.estimate),
            fmt17(self.stderr),
            fmt17(self.theory_value),
            self.theory_ref,
            self.criterion,
            self.verdict,
            vals,
        ]
        return ",".join(_csv_quote(c) for c in cells)


def _param_str(v):
    if isinstance(v, float):
        return fmt17(v)
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_param_str(x) for x in v) + "]"
    return str(v)


def _csv_quote(cell):
    if any(c in cell for c in ",\"\n"):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def emit(records, output_path, fmt="both"):
    """Write records as CSV and/or JSONL; returns the list of files written."""
    if fmt not in ("csv", "jsonl", "both"):
        raise ConfigError(f"unknown output format {fmt!r}")
    written = []
    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if fmt in ("csv", "both"):
        path = output_path + ".csv"
        with open(path, "w") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for rec in records:
                fh.write(rec.to_csv_row() + "\n")
        written.append(path)
    if fmt in ("jsonl", "both"):
        path = output_path + ".jsonl"
        with open(path, "w") as fh:
            for rec in records:
                fh.write(rec.to_json() + "\n")
        written.append(path)
    return written
