"""Error metrics, sweep aggregation, and CSV/JSON output.

Accuracies are stored as fractions in [0, 1]; CSV headers say so.
"""

from __future__ import annotations

import csv
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .trainer import EpochMetrics

CONVERGENCE_FRACTION = 0.95
METRICS_HEADER = ["epoch", "accuracy_frac", "mse", "mean_pulses_per_sample", "eval_accuracy_frac"]
SWEEP_HEADER = ["axis_value", "seed", "final_accuracy_frac", "final_mse", "epochs_to_converge", "error"]
AGGREGATE_HEADER = ["axis_value", "mean_final_accuracy_frac", "min_final_accuracy_frac",
                    "max_final_accuracy_frac", "mean_final_mse", "epochs_to_converge", "n_runs",
                    "n_failed"]


def mse(xi: np.ndarray, n_samples: int, n_bins: int) -> float:
    """(1/N)·Σ_k ((1/T_bins)·Σ_t ξ_k(t))², with ξ of shape (N, T_bins)."""
    if n_samples < 1:
        raise ValueError("N must be >= 1")
    xi = np.asarray(xi, dtype=np.float64).reshape(n_samples, n_bins)
    return float(np.mean((xi.sum(axis=1) / n_bins) ** 2))


def accuracy_from_predictions(predictions: Sequence[int], labels: Sequence[int]) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.size == 0:
        raise ValueError("no predictions to score")
    return float(np.mean(predictions == labels))


def epochs_to_converge(accuracies: Sequence[float],
                       fraction: float = CONVERGENCE_FRACTION) -> int | None:
    """First 1-based epoch whose accuracy reaches ``fraction`` of the final value."""
    if len(accuracies) == 0:
        return None
    final = accuracies[-1]
    if final <= 0:
        return None
    goal = fraction * final
    for k, a in enumerate(accuracies):
        if a >= goal - 1e-12:
            return k + 1
    return None


def score_of(m: EpochMetrics) -> float:
    """Evaluation accuracy when the run had an evaluation set, else batch accuracy."""
    return m.eval_accuracy if m.eval_accuracy is not None else m.accuracy


# ---------------------------------------------------------------------------
# per-run output
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_metrics_csv(history: Iterable[EpochMetrics], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for m in history:
            w.writerow([m.epoch, _fmt(float(m.accuracy)), _fmt(float(m.mse)),
                        _fmt(float(m.mean_pulses_per_sample)),
                        _fmt(None if m.eval_accuracy is None else float(m.eval_accuracy))])


def read_metrics_csv(path: str | Path) -> list[EpochMetrics]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ev = row["eval_accuracy_frac"]
            out.append(EpochMetrics(int(row["epoch"]), float(row["accuracy_frac"]),
                                    float(row["mse"]), float(row["mean_pulses_per_sample"]),
                                    float(ev) if ev else None))
    return out


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunOutcome:
    value: float
    seed: int
    final_accuracy: float | None
    final_mse: float | None
    epochs_to_converge: int | None
    error: str | None = None


@dataclass(frozen=True)
class SweepPoint:
    value: float
    final_accuracy: float
    final_mse: float
    epochs_to_converge: int | None
    min_accuracy: float = math.nan
    max_accuracy: float = math.nan
    n_runs: int = 0
    n_failed: int = 0


@dataclass(frozen=True)
class SweepResult:
    axis: str
    points: tuple[SweepPoint, ...]
    runs: tuple[RunOutcome, ...] = field(default=())

    def __post_init__(self):
        if self.axis not in ("learning_rate", "hidden_pairs"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        pts = tuple(sorted(self.points, key=lambda p: p.value))
        object.__setattr__(self, "points", pts)
        for p in pts:
            if not math.isnan(p.final_accuracy) and not 0 <= p.final_accuracy <= 1:
                raise ValueError("accuracies must lie in [0, 1]")

    def point(self, value: float) -> SweepPoint:
        for p in self.points:
            if p.value == value:
                return p
        raise KeyError(value)


def aggregate(axis: str, runs: Sequence[RunOutcome]) -> SweepResult:
    values = sorted({r.value for r in runs})
    points = []
    for v in values:
        ok = [r for r in runs if r.value == v and r.error is None]
        failed = sum(1 for r in runs if r.value == v and r.error is not None)
        if ok:
            accs = [r.final_accuracy for r in ok]
            conv = [r.epochs_to_converge for r in ok if r.epochs_to_converge is not None]
            points.append(SweepPoint(v, float(np.mean(accs)), float(np.mean([r.final_mse for r in ok])),
                                     int(round(float(np.mean(conv)))) if conv else None,
                                     float(min(accs)), float(max(accs)), len(ok), failed))
        else:
            points.append(SweepPoint(v, math.nan, math.nan, None, math.nan, math.nan, 0, failed))
    return SweepResult(axis, tuple(points), tuple(runs))


def _run_one(run_fn, value, seed) -> RunOutcome:
    try:
        history = run_fn(value, seed)
        accs = [score_of(m) for m in history]
        return RunOutcome(float(value), int(seed), float(accs[-1]), float(history[-1].mse),
                          epochs_to_converge(accs))
    except Exception as exc:  # a failed point must not abort the sweep
        msg = f"{type(exc).__name__}: {exc}"
        traceback.print_exc()
        return RunOutcome(float(value), int(seed), None, None, None, msg)


def run_sweep(run_fn: Callable[[float, int], list[EpochMetrics]], axis: str,
              values: Sequence[float], seeds: Sequence[int], jobs: int = 1) -> SweepResult:
    """Train one run per (value, seed) and aggregate by value.

    ``run_fn(value, seed)`` returns the epoch history of one run; it must be
    picklable when ``jobs > 1``.
    """
    if not values:
        raise ValueError("sweep needs at least one value")
    tasks = [(v, s) for v in values for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_one, [run_fn] * len(tasks), *zip(*tasks)))
    else:
        runs = [_run_one(run_fn, v, s) for v, s in tasks]
    return aggregate(axis, runs)


def write_sweep(result: SweepResult, directory: str | Path) -> tuple[Path, Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    runs_path = d / "sweep.csv"
    agg_path = d / "sweep_aggregate.csv"
    with open(runs_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.runs:
            w.writerow([_fmt(r.value), r.seed, _fmt(r.final_accuracy), _fmt(r.final_mse),
                        _fmt(r.epochs_to_converge), r.error or ""])
    with open(agg_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_HEADER)
        for p in result.points:
            w.writerow([_fmt(p.value), _fmt(p.final_accuracy), _fmt(p.min_accuracy),
                        _fmt(p.max_accuracy), _fmt(p.final_mse), _fmt(p.epochs_to_converge),
                        p.n_runs, p.n_failed])
    write_json({"axis": result.axis, "values": [p.value for p in result.points],
                "seeds": sorted({r.seed for r in result.runs}),
                "files": [runs_path.name, agg_path.name]}, d / "sweep_manifest.json")
    return runs_path, agg_path


def read_sweep(directory: str | Path, axis: str) -> SweepResult:
    def opt(s, cast):
        return cast(s) if s != "" else None

    runs = []
    with open(Path(directory) / "sweep.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            runs.append(RunOutcome(float(row["axis_value"]), int(row["seed"]),
                                   opt(row["final_accuracy_frac"], float), opt(row["final_mse"], float),
                                   opt(row["epochs_to_converge"], int), row["error"] or None))
    points = []
    with open(Path(directory) / "sweep_aggregate.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(SweepPoint(float(row["axis_value"]), float(row["mean_final_accuracy_frac"]),
                                     float(row["mean_final_mse"]), opt(row["epochs_to_converge"], int),
                                     float(row["min_final_accuracy_frac"]),
                                     float(row["max_final_accuracy_frac"]),
                                     int(row["n_runs"]), int(row["n_failed"])))
    return SweepResult(axis, tuple(points), tuple(runs))
