"""Experiment drivers behind the CLI subcommands."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, build_config, replace_train
from .data import (Dataset, class_filter, load_mnist_split, pool_dataset, random_subset,
                   xor_dataset)
from .metrics import (SweepResult, run_sweep, score_of, write_json, write_metrics_csv,
                      write_sweep)
from .network import Network, Topology, build_network, load_snapshot, save_snapshot
from .neuron import simulate_light_protocol
from .optics import make_pulse_train
from .plasticity import eta, omega
from .trainer import TrainResult, evaluate, train

log = logging.getLogger(__name__)


def load_datasets(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    spec = cfg.data
    if spec.name == "xor":
        ds = xor_dataset()
        return ds, ds
    directory = spec.dir or None
    tr = load_mnist_split(directory, "train")
    te = load_mnist_split(directory, "test")
    if spec.classes:
        tr = class_filter(tr, spec.classes)
        te = class_filter(te, spec.classes)
    if spec.pool:
        tr = pool_dataset(tr)
        te = pool_dataset(te)
    if spec.n_train and spec.n_train < len(tr):
        tr = random_subset(tr, spec.n_train, spec.subset_seed)
    if spec.n_test and spec.n_test < len(te):
        te = random_subset(te, spec.n_test, spec.subset_seed + 1)
    return tr, te


def make_network(cfg: RunConfig, train_set: Dataset, seed: int | None = None) -> Network:
    topo = Topology(train_set.feature_dim, cfg.topology.n_hidden_pairs, train_set.n_classes)
    return build_network(topo, cfg.init, cfg.train.seed if seed is None else seed, cfg.network)


def manifest(cfg: RunConfig, train_set: Dataset, test_set: Dataset, **extra) -> dict:
    return {
        "package_version": __version__,
        "config": cfg.to_dict(),
        "config_values": dict(sorted(cfg.values.items())),
        "seed": cfg.train.seed,
        "train_digest": train_set.digest,
        "test_digest": test_set.digest,
        "n_train": len(train_set),
        "n_test": len(test_set),
        "feature_dim": train_set.feature_dim,
        **extra,
    }


@dataclass
class TrainRun:
    result: TrainResult
    test_accuracy: float
    untrained_accuracy: float
    manifest: dict


def run_train(cfg: RunConfig, out_dir: str | Path | None = None,
              dump_schedule: bool = False) -> TrainRun:
    train_set, test_set = load_datasets(cfg)
    net = make_network(cfg, train_set)
    t_cfg = cfg.train
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    dt = t_cfg.resolved_dt(net)
    started = time.perf_counter()
    untrained, _ = evaluate(net, test_set, t_cfg.T, dt)
    log.info("untrained test accuracy %.4f", untrained)

    on_schedule = None
    if dump_schedule and out is not None:
        sched_path = out / "schedule.csv"
        if sched_path.exists():
            sched_path.unlink()
        on_schedule = lambda s: s.write_csv(sched_path, append=True)  # noqa: E731

    def on_epoch(m, network):
        log.info("epoch %d accuracy %.4f mse %.4f pulses %.1f eval %s", m.epoch, m.accuracy,
                 m.mse, m.mean_pulses_per_sample,
                 "-" if m.eval_accuracy is None else f"{m.eval_accuracy:.4f}")
        every = cfg.output.snapshot_every
        if out is not None and every and m.epoch % every == 0:
            save_snapshot(network, out / f"snapshot_epoch{m.epoch:04d}.json")

    # XOR is evaluated every epoch (four samples); larger sets only at the end
    eval_each = test_set if len(test_set) <= 16 else None
    result = train(net, train_set, t_cfg, eval_each, cfg.plasticity, cfg.optics, on_epoch,
                   on_schedule)
    test_acc, confusion = evaluate(net, test_set, t_cfg.T, dt)
    runtime = time.perf_counter() - started
    man = manifest(cfg, train_set, test_set, final_test_accuracy=test_acc,
                   untrained_test_accuracy=untrained, confusion=confusion,
                   final_train_batch_accuracy=result.final.accuracy if result.final else None,
                   epochs_run=len(result.history), runtime_s=round(runtime, 3))
    if out is not None:
        write_metrics_csv(result.history, out / "metrics.csv")
        save_snapshot(net, out / "snapshot.json")
        write_json(man, out / "manifest.json")
    log.info("final test accuracy %.4f (%.1f s)", test_acc, runtime)
    return TrainRun(result, test_acc, untrained, man)


def run_eval(cfg: RunConfig, snapshot_path: str | Path,
             out_dir: str | Path | None = None) -> tuple[float, np.ndarray]:
    net = load_snapshot(snapshot_path)
    _, test_set = load_datasets(cfg)
    if net.topology.n_input_pairs != test_set.feature_dim:
        raise ValueError(f"snapshot expects {net.topology.n_input_pairs} inputs, "
                         f"dataset has {test_set.feature_dim}")
    dt = cfg.train.resolved_dt(net)
    acc, confusion = evaluate(net, test_set, cfg.train.T, dt)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json({"snapshot": str(snapshot_path), "accuracy": acc, "confusion": confusion,
                    "test_digest": test_set.digest}, out / "eval.json")
    return acc, confusion


class SweepRunner:
    """Picklable per-point training job for ``metrics.run_sweep``."""

    def __init__(self, values: dict, axis: str):
        self.values = dict(values)
        self.axis = axis

    def __call__(self, value: float, seed: int):
        flat = dict(self.values)
        flat["train.seed"] = str(seed)
        if self.axis == "learning_rate":
            flat["train.mu"] = repr(float(value))
        else:
            flat["topology.n_hidden_pairs"] = str(int(value))
        cfg = build_config(flat)
        train_set, test_set = load_datasets(cfg)
        net = make_network(cfg, train_set)
        res = train(net, train_set, cfg.train, test_set, cfg.plasticity, cfg.optics)
        return res.history


def run_sweep_experiment(cfg: RunConfig, out_dir: str | Path | None = None,
                         jobs: int = 1) -> SweepResult:
    runner = SweepRunner(cfg.values, cfg.sweep.axis)
    result = run_sweep(runner, cfg.sweep.axis, list(cfg.sweep.values), list(cfg.sweep.seeds), jobs)
    if out_dir is not None:
        write_sweep(result, out_dir)
        write_json({"config": cfg.to_dict(), "config_values": cfg.values},
                   Path(out_dir) / "manifest.json")
    return result


def neuron_demo(cfg: RunConfig, out_dir: str | Path | None = None):
    d = cfg.demo
    pulses = make_pulse_train(d.n_pulses, d.start, d.width, d.period, d.intensity)
    t_end = d.start + d.n_pulses * d.period + d.tail
    t, v, irr, spk = simulate_light_protocol(cfg.network.full,
                                             [(p.start, p.width, p.intensity) for p in pulses],
                                             t_end, d.dt)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "neuron_demo.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ms", "v_mV", "irradiance", "spike_flag"])
            for row in zip(t, v, irr, spk):
                w.writerow([f"{row[0]:.4f}", f"{row[1]:.6f}", f"{row[2]:g}", int(row[3])])
    return t, v, irr, spk, pulses


def plasticity_probe(cfg: RunConfig, out_dir: str | Path | None = None):
    d = cfg.demo
    ca = np.linspace(0.0, d.ca_max, d.ca_points)
    om = np.array([omega(c, cfg.plasticity) for c in ca])
    et = np.array([eta(c, cfg.plasticity) for c in ca])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "plasticity_probe.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["ca", "omega", "eta_per_ms"])
            for row in zip(ca, om, et):
                w.writerow([repr(float(x)) for x in row])
    return ca, om, et


def verify_manifest(manifest_path: str | Path) -> tuple[bool, float, float]:
    """Re-run a recorded training run and compare the final test accuracy."""
    import json

    man = json.loads(Path(manifest_path).read_text())
    cfg = build_config(man["config_values"])
    cfg = replace_train(cfg, seed=int(man["seed"]))
    run = run_train(cfg, None)
    recorded = float(man["final_test_accuracy"])
    return run.test_accuracy == recorded, recorded, run.test_accuracy


def summary_line(run: TrainRun) -> str:
    final = run.result.final
    batch = f"{score_of(final):.4f}" if final else "-"
    return (f"test_accuracy={run.test_accuracy:.4f} untrained={run.untrained_accuracy:.4f} "
            f"last_epoch_score={batch} epochs={len(run.result.history)}")
