"""Experiment harness: multi-seed trials, budget accounting, CSV/JSON output.

Every trial is a pure function of (config, seed), so re-running a config
reproduces curves and genomes byte for byte. Curve CSVs and genome files are
the data products; summary JSON and rendered figures sit alongside them.
"""

from __future__ import annotations

import json
import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .deepga import GAConfig, run_ga
from .envs import EnvSpec, RolloutEnv, SPARSE_MOUNTAIN_CAR, rollout
from .genome import load_genome, materialize, save_genome
from .search import RunResult, SearchConfig, run_mctspo

log = logging.getLogger(__name__)

ALGORITHMS = ("mctspo", "deepga")

PAPER_HIDDEN_DIMS = (128, 64, 32)
DESK_HIDDEN_DIMS = (32, 32)
DESK_BUDGET = 500_000


@dataclass
class ExperimentConfig:
    env: EnvSpec
    algorithm: str = "mctspo"
    hidden_dims: tuple[int, ...] = PAPER_HIDDEN_DIMS
    budget: int = 5_000_000
    seeds: tuple[int, ...] = (1,)
    search: SearchConfig = field(default_factory=SearchConfig)
    ga: GAConfig = field(default_factory=GAConfig)
    out_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        self.hidden_dims = tuple(int(d) for d in self.hidden_dims)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("need at least one trial seed")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @classmethod
    def desk(cls, env_kind: str = SPARSE_MOUNTAIN_CAR,
             algorithm: str = "mctspo") -> "ExperimentConfig":
        """Small-network preset sized for a laptop core: net 32/32, 5e5 calls."""
        return cls(env=EnvSpec(kind=env_kind), algorithm=algorithm,
                   hidden_dims=DESK_HIDDEN_DIMS, budget=DESK_BUDGET)

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "algorithm": self.algorithm,
            "hidden_dims": list(self.hidden_dims),
            "budget": self.budget,
            "seeds": list(self.seeds),
            "search": self.search.to_dict(),
            "ga": self.ga.to_dict(),
            "out_dir": self.out_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        kwargs["env"] = EnvSpec.from_dict(kwargs["env"])
        if "search" in kwargs:
            kwargs["search"] = SearchConfig.from_dict(kwargs["search"])
        if "ga" in kwargs:
            kwargs["ga"] = GAConfig.from_dict(kwargs["ga"])
        if "hidden_dims" in kwargs:
            kwargs["hidden_dims"] = tuple(kwargs["hidden_dims"])
        if "seeds" in kwargs:
            kwargs["seeds"] = tuple(kwargs["seeds"])
        return cls(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"cannot parse config file {path}: {e}") from e
    try:
        return ExperimentConfig.from_dict(d)
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed config file {path}: {e}") from e


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


@dataclass
class TrialResult:
    seed: int
    best_return: float
    best_genome_path: str | None
    curve_path: str | None
    wall_ms: float
    env_calls: int
    first_goal_env_calls: int | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "best_return": self.best_return,
            "best_genome_path": self.best_genome_path,
            "curve_path": self.curve_path,
            "wall_ms": self.wall_ms,
            "env_calls": self.env_calls,
            "first_goal_env_calls": self.first_goal_env_calls,
            "error": self.error,
        }


def write_curve_csv(curve: list[tuple[int, float]], path: str | Path) -> None:
    lines = ["env_calls,best_return"]
    lines += [f"{calls},{best!r}" for calls, best in curve]
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve_csv(path: str | Path) -> list[tuple[int, float]]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0] != "env_calls,best_return":
        raise ValueError(f"{path} is not a curve CSV")
    out = []
    for line in lines[1:]:
        calls, best = line.split(",")
        out.append((int(calls), float(best)))
    return out


def run_single(config: ExperimentConfig, seed: int) -> RunResult:
    """One trial: algorithm under its own env-call budget, no file output."""
    env = RolloutEnv(config.env)
    shape = config.env.network_shape(config.hidden_dims)
    if config.algorithm == "mctspo":
        return run_mctspo(env, shape, config.search, seed, config.budget)
    return run_ga(env, shape, config.ga, seed, config.budget)


def _run_trial(config: ExperimentConfig, seed: int, out_dir: str) -> TrialResult:
    out = Path(out_dir)
    t0 = time.perf_counter()
    try:
        result = run_single(config, seed)
    except Exception as e:  # noqa: BLE001 - a failed trial must not kill the batch
        log.exception("trial seed=%d failed", seed)
        return TrialResult(seed=seed, best_return=math.nan, best_genome_path=None,
                           curve_path=None, wall_ms=(time.perf_counter() - t0) * 1e3,
                           env_calls=0, error=f"{type(e).__name__}: {e}")
    wall_ms = (time.perf_counter() - t0) * 1e3

    curve_path = out / f"curve_seed{seed}.csv"
    write_curve_csv(result.curve, curve_path)
    genome_path = None
    if result.best_genome is not None:
        genome_path = out / f"genome_seed{seed}.json"
        save_genome(result.best_genome, genome_path)
    return TrialResult(
        seed=seed,
        best_return=result.best_return,
        best_genome_path=str(genome_path) if genome_path else None,
        curve_path=str(curve_path),
        wall_ms=wall_ms,
        env_calls=result.env_calls,
        first_goal_env_calls=result.first_goal_env_calls,
    )


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


def summarize(config: ExperimentConfig, trials: list[TrialResult]) -> dict:
    ok = [t for t in trials if not t.failed]
    mean, stderr = _mean_stderr([t.best_return for t in ok])
    goals = [t for t in ok if t.first_goal_env_calls is not None]
    goal_calls = [t.first_goal_env_calls for t in goals]
    return {
        "algorithm": config.algorithm,
        "env": config.env.to_dict(),
        "hidden_dims": list(config.hidden_dims),
        "budget": config.budget,
        "n_trials": len(trials),
        "n_failed": len(trials) - len(ok),
        "mean_best_return": mean,
        "stderr_best_return": stderr,
        "goal_trials": len(goals),
        "mean_env_calls_to_first_goal":
            sum(goal_calls) / len(goal_calls) if goal_calls else None,
        "trials": [t.to_dict() for t in trials],
    }


def run_experiment(config: ExperimentConfig, render_figures: bool = True) -> list[TrialResult]:
    """One trial per seed, each under its own budget; writes per-trial curve
    CSV and best-genome files, a summary JSON, and a curve figure."""
    if config.out_dir is None:
        raise ValueError("config needs an output directory")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if config.workers > 1 and len(config.seeds) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(min(config.workers, len(config.seeds))) as pool:
            trials = pool.starmap(
                _run_trial, [(config, s, str(out)) for s in config.seeds])
    else:
        trials = [_run_trial(config, s, str(out)) for s in config.seeds]

    summary = summarize(config, trials)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if render_figures:
        from . import plotting
        curves = [(t.seed, read_curve_csv(t.curve_path))
                  for t in trials if t.curve_path]
        plotting.render_curves(
            curves, config.budget, out / "curves.png",
            title=f"{config.algorithm} on {config.env.kind}")
    return trials


def replay(genome_path: str | Path, env_spec: EnvSpec) -> tuple[float, bool]:
    """Rebuild a persisted genome and roll it out once."""
    genome = load_genome(genome_path)
    shape = genome.shape
    if shape.input_dim != env_spec.obs_dim or shape.output_dim != env_spec.action_dim:
        raise ValueError(
            f"genome network ({shape.input_dim}->{shape.output_dim}) does not match "
            f"environment {env_spec.kind} ({env_spec.obs_dim}->{env_spec.action_dim})")
    traj = rollout(env_spec, materialize(genome))
    return traj.total_return, traj.reached_goal


COMPARE_COLUMNS = ("label", "algorithm", "trials", "mean_best_return",
                   "stderr_best_return", "goal_trials",
                   "mean_env_calls_to_first_goal")


def compare(config_a: ExperimentConfig, config_b: ExperimentConfig,
            out_dir: str | Path, render_figures: bool = True) -> list[dict]:
    """Run two configs on the same env/budget and emit a side-by-side table
    (CSV + aligned text) plus a mean-curve figure."""
    if config_a.env != config_b.env:
        raise ValueError("compare requires both configs to share the environment")
    if config_a.budget != config_b.budget:
        raise ValueError("compare requires both configs to share the env-call budget")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    labelled_curves = {}
    for label, cfg in (("a", config_a), ("b", config_b)):
        sub = out / f"{label}_{cfg.algorithm}"
        cfg = replace(cfg, out_dir=str(sub))
        trials = run_experiment(cfg, render_figures=render_figures)
        summary = summarize(cfg, trials)
        rows.append({
            "label": label,
            "algorithm": cfg.algorithm,
            "trials": summary["n_trials"],
            "mean_best_return": summary["mean_best_return"],
            "stderr_best_return": summary["stderr_best_return"],
            "goal_trials": summary["goal_trials"],
            "mean_env_calls_to_first_goal": summary["mean_env_calls_to_first_goal"],
        })
        labelled_curves[f"{label}:{cfg.algorithm}"] = [
            read_curve_csv(t.curve_path) for t in trials if t.curve_path]

    _write_compare_csv(rows, out / "compare.csv")
    (out / "compare.txt").write_text(format_compare_table(rows))
    if render_figures:
        from . import plotting
        plotting.render_comparison(labelled_curves, config_a.budget,
                                   out / "compare.png",
                                   title=f"compare on {config_a.env.kind}")
    return rows


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def _write_compare_csv(rows: list[dict], path: Path) -> None:
    lines = [",".join(COMPARE_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) if row[c] is not None else ""
                              for c in COMPARE_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def format_compare_table(rows: list[dict]) -> str:
    cells = [COMPARE_COLUMNS] + [[_fmt(r[c]) for c in COMPARE_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(COMPARE_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in cells]
    return "\n".join(lines) + "\n"
