"""Experiment runner.

Configuration is a flat key=value namespace with defaults for every key;
values come from (lowest to highest precedence) defaults, a config file,
repeated --set overrides, and named command-line flags. All floats are
serialized with 17 significant digits so snapshots round-trip exactly and
repeated runs of one configuration produce byte-identical artifacts.

Artifacts written per run:
    config.txt          resolved configuration snapshot
    training_log.csv    one row per batch load (step, event, losses, trigger terms)
    line_<i>.csv        sampled (round, s, loss) triples of line search i
    fits.csv            chosen fit per line search, coefficients empty-padded
    cross_section.csv   only in --dump-cross-section mode

Exit codes: 0 success, 1 configuration error, 2 divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, StepDecaySchedule, run_baseline
from .controller import DivergenceError, ElfConfig, TrainingLog, run
from .linesearch import LineSearchConfig
from .problems import LogisticBlobs, MlpBlobs, NoisyQuadraticEnsemble, cross_section_profile
from .seeding import rng_streams


class ConfigError(ValueError):
    """Unknown keys or names, or values that do not parse."""


DEFAULTS: dict[str, object] = {
    "problem": "quadratic",
    "optimizer": "elf",
    "steps": 2000,
    "batch_size": 50,
    "seed": 0,
    "out": "run_out",
    "quiet": False,
    # problem generation
    "quadratic.n_batches": 100,
    "quadratic.dim": 20,
    "logistic.n_train": 2000,
    "logistic.n_val": 500,
    "logistic.n_features": 2,
    "logistic.separation": 5.0,
    "logistic.cluster_std": 0.7,
    "mlp.n_train": 2000,
    "mlp.n_val": 500,
    "mlp.n_features": 2,
    "mlp.n_classes": 3,
    "mlp.hidden1": 16,
    "mlp.hidden2": 16,
    "mlp.separation": 4.0,
    "mlp.cluster_std": 0.7,
    # step-measuring optimizer
    "elf.window_size": 150,
    "elf.loss_improvement_factor": 0.01,
    "elf.momentum_beta": 0.4,
    "elf.decrease_factor_delta": 0.2,
    "elf.lines_to_average": 3,
    "elf.sample_from_validation": True,
    "elf.grid_search_candidates": (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0),
    "elf.grid_search_probe_steps": 20,
    "elf.line.k": 5,
    "elf.line.n": 100,
    "elf.line.initial_interval_width": 1.0,
    "elf.line.min_window_size": 50,
    "elf.line.folds": 5,
    "elf.line.max_degree": 10,
    # baselines
    "sgd.learning_rate": 0.01,
    "sgd.momentum": 0.9,
    "adam.learning_rate": 0.001,
    "adam.beta1": 0.9,
    "adam.beta2": 0.999,
    "adam.epsilon": 1e-8,
    "schedule.milestones": (0.5, 0.75),
    "schedule.divisor": 10.0,
    # cross-section diagnostics
    "cross_section.s_min": -0.3,
    "cross_section.s_max": 0.7,
    "cross_section.points": 50,
    "cross_section.direction": "batch_gradient",
}

PROBLEM_NAMES = ("quadratic", "logistic", "mlp")
OPTIMIZER_NAMES = ("elf", "sgd", "adam")


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, tuple):
        return ",".join("%.17g" % v for v in value)
    return str(value)


def parse_value(key: str, text: str):
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            lowered = text.strip().lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(part) for part in text.split(",") if part.strip())
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {text!r}") from exc


class RunConfig:
    """Resolved flat configuration; every key always present."""

    def __init__(self, values: dict[str, object] | None = None):
        self.values = dict(DEFAULTS)
        for key, value in (values or {}).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    def set(self, key: str, value) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        self.values[key] = value

    def serialize(self) -> str:
        return "".join(f"{k}={format_value(v)}\n" for k, v in self.values.items())

    @classmethod
    def deserialize(cls, text: str) -> "RunConfig":
        config = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            config.set(key, parse_value(key, value))
        return config


def build_problem(config: RunConfig, data_rng):
    name = config["problem"]
    batch_size = int(config["batch_size"])
    if name == "quadratic":
        return NoisyQuadraticEnsemble(
            n_batches=int(config["quadratic.n_batches"]),
            dim=int(config["quadratic.dim"]),
            rng=data_rng,
        )
    if name == "logistic":
        return LogisticBlobs(
            n_train=int(config["logistic.n_train"]),
            n_val=int(config["logistic.n_val"]),
            n_features=int(config["logistic.n_features"]),
            separation=float(config["logistic.separation"]),
            cluster_std=float(config["logistic.cluster_std"]),
            batch_size=batch_size,
            rng=data_rng,
        )
    if name == "mlp":
        return MlpBlobs(
            n_train=int(config["mlp.n_train"]),
            n_val=int(config["mlp.n_val"]),
            n_features=int(config["mlp.n_features"]),
            n_classes=int(config["mlp.n_classes"]),
            hidden1=int(config["mlp.hidden1"]),
            hidden2=int(config["mlp.hidden2"]),
            separation=float(config["mlp.separation"]),
            cluster_std=float(config["mlp.cluster_std"]),
            batch_size=batch_size,
            rng=data_rng,
        )
    raise ConfigError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}")


def build_elf_config(config: RunConfig) -> ElfConfig:
    line = LineSearchConfig(
        k=int(config["elf.line.k"]),
        n=int(config["elf.line.n"]),
        initial_interval_width=float(config["elf.line.initial_interval_width"]),
        min_window_size=int(config["elf.line.min_window_size"]),
        folds=int(config["elf.line.folds"]),
        max_degree=int(config["elf.line.max_degree"]),
    )
    return ElfConfig(
        window_size=int(config["elf.window_size"]),
        loss_improvement_factor=float(config["elf.loss_improvement_factor"]),
        momentum_beta=float(config["elf.momentum_beta"]),
        decrease_factor_delta=float(config["elf.decrease_factor_delta"]),
        lines_to_average=int(config["elf.lines_to_average"]),
        line_search=line,
        grid_search_candidates=tuple(config["elf.grid_search_candidates"]),
        grid_search_probe_steps=int(config["elf.grid_search_probe_steps"]),
        sample_from_validation=bool(config["elf.sample_from_validation"]),
    )


def build_baseline_config(config: RunConfig, optimizer: str) -> BaselineConfig:
    schedule = StepDecaySchedule(
        total_steps=int(config["steps"]),
        milestones=tuple(config["schedule.milestones"]),
        divisor=float(config["schedule.divisor"]),
    )
    if optimizer == "sgd":
        return BaselineConfig(
            learning_rate=float(config["sgd.learning_rate"]),
            momentum=float(config["sgd.momentum"]),
            schedule=schedule,
        )
    return BaselineConfig(
        learning_rate=float(config["adam.learning_rate"]),
        beta1=float(config["adam.beta1"]),
        beta2=float(config["adam.beta2"]),
        epsilon=float(config["adam.epsilon"]),
        schedule=schedule,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    return "%.17g" % float(value)


def write_training_log(path: Path, log: TrainingLog) -> None:
    lines = ["step,event,train_loss,update_step,expected_improvement,real_improvement"]
    for row in log.rows:
        lines.append(
            f"{row.step},{row.event},{_fmt(row.train_loss)},{_fmt(row.update_step)},"
            f"{_fmt(row.expected_improvement)},{_fmt(row.real_improvement)}"
        )
    path.write_text("\n".join(lines) + "\n")


def write_line_csvs(out_dir: Path, log: TrainingLog) -> None:
    for record in log.line_searches:
        lines = ["round,s,loss"]
        for r, s, loss in zip(
            record.rounds, record.samples.positions, record.samples.losses
        ):
            lines.append(f"{int(r)},{_fmt(s)},{_fmt(loss)}")
        (out_dir / f"line_{record.index}.csv").write_text("\n".join(lines) + "\n")


def write_fits_csv(path: Path, log: TrainingLog, max_degree: int) -> None:
    header = "line_index,degree," + ",".join(f"c{i}" for i in range(max_degree + 1))
    lines = [header]
    for record in log.line_searches:
        coef = list(record.fit.polynomial.coefficients)
        padded = [_fmt(c) for c in coef] + [""] * (max_degree + 1 - len(coef))
        lines.append(f"{record.index},{record.fit.chosen_degree}," + ",".join(padded))
    path.write_text("\n".join(lines) + "\n")


def run_experiment(config: RunConfig) -> int:
    """Run the configured optimizer on the configured problem and write all
    artifact files; nothing is written until the configuration validates."""
    optimizer = config["optimizer"]
    if optimizer not in OPTIMIZER_NAMES:
        raise ConfigError(f"unknown optimizer {optimizer!r}; expected one of {OPTIMIZER_NAMES}")
    streams = rng_streams(int(config["seed"]))
    problem = build_problem(config, streams.data)
    steps = int(config["steps"])
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    try:
        if optimizer == "elf":
            elf_config = build_elf_config(config)
        else:
            baseline_config = build_baseline_config(config, optimizer)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    quiet = bool(config["quiet"])

    out_dir = Path(str(config["out"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(config.serialize())

    exit_code = 0
    log = TrainingLog()
    try:
        if optimizer == "elf":
            _, log = run(problem, elf_config, steps, streams)
        else:
            _, log = run_baseline(problem, optimizer, baseline_config, steps, streams)
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        exit_code = 2

    write_training_log(out_dir / "training_log.csv", log)
    write_line_csvs(out_dir, log)
    write_fits_csv(out_dir / "fits.csv", log, int(config["elf.line.max_degree"]))

    if not quiet:
        total = len(log.rows)
        print(f"run complete: {total} steps "
              f"(sgd={log.count('sgd')}, line_search={log.count('line_search')}, "
              f"grid_search={log.count('grid_search')}), "
              f"{len(log.line_searches)} line searches, artifacts in {out_dir}")
    return exit_code


def dump_cross_section(config: RunConfig) -> int:
    """Densely sample every training batch's loss along one direction from
    the initial parameters and write the profile CSV."""
    streams = rng_streams(int(config["seed"]))
    problem = build_problem(config, streams.data)
    theta0 = np.asarray(problem.initial_theta(streams.theta_init), dtype=float)

    mode = str(config["cross_section.direction"])
    if mode == "batch_gradient":
        gradient = problem.batch_gradient(theta0, problem.train_batches[0])
        norm = float(np.linalg.norm(gradient))
        if norm == 0.0:
            raise ConfigError("zero gradient at the initial parameters; use direction=random")
        direction = -gradient / norm
    elif mode == "random":
        vector = streams.line_search.normal(size=theta0.size)
        direction = vector / np.linalg.norm(vector)
    else:
        raise ConfigError(f"unknown cross_section.direction {mode!r}")

    points = int(config["cross_section.points"])
    if points < 1:
        raise ConfigError("cross_section.points must be >= 1")
    if points == 1:
        s_grid = np.array([float(config["cross_section.s_min"])])
    else:
        s_grid = np.linspace(
            float(config["cross_section.s_min"]),
            float(config["cross_section.s_max"]),
            points,
        )
    profile = cross_section_profile(problem, theta0, direction, s_grid)

    out_dir = Path(str(config["out"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(config.serialize())
    lines = ["series,s,loss"]
    for i in range(profile.per_batch.shape[0]):
        for j, s in enumerate(profile.s_grid):
            lines.append(f"batch_{i},{_fmt(s)},{_fmt(profile.per_batch[i, j])}")
    for name, curve in (("mean", profile.mean), ("q1", profile.q1),
                        ("q2", profile.q2), ("q3", profile.q3)):
        for j, s in enumerate(profile.s_grid):
            lines.append(f"{name},{_fmt(s)},{_fmt(curve[j])}")
    (out_dir / "cross_section.csv").write_text("\n".join(lines) + "\n")

    if not bool(config["quiet"]):
        print(f"cross section written: {profile.per_batch.shape[0]} batches x "
              f"{points} points, artifacts in {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elfopt",
        description="Run a training experiment or dump a loss cross section.",
    )
    parser.add_argument("--config", type=str, default=None, help="config file (key=value lines)")
    parser.add_argument("--problem", type=str, default=None)
    parser.add_argument("--optimizer", type=str, default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
    parser.add_argument("--dump-cross-section", action="store_true",
                        help="write a dense cross-section profile instead of training")
    parser.add_argument("--quiet", action="store_true")
    return parser


def config_from_args(args) -> RunConfig:
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {args.config}")
        config = RunConfig.deserialize(path.read_text())
    else:
        config = RunConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        config.set(key.strip(), parse_value(key.strip(), value))
    for key, value in (
        ("problem", args.problem),
        ("optimizer", args.optimizer),
        ("steps", args.steps),
        ("batch_size", args.batch_size),
        ("seed", args.seed),
        ("out", args.out),
    ):
        if value is not None:
            config.set(key, value)
    if args.quiet:
        config.set("quiet", True)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if args.dump_cross_section:
            return dump_cross_section(config)
        return run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
