"""Command-line entry point.

    optostdp neuron-demo [--out DIR]
    optostdp plasticity-probe [--out DIR]
    optostdp train --preset xor.default [--seed N] [--mode ideal|optical] [--out DIR]
    optostdp eval --preset xor.default --snapshot runs/xor.default/snapshot.json
    optostdp sweep --preset xor.default [--jobs N]

Configuration comes from a bundled preset, a config file, and flag
overrides, applied in that order.  ``--set section.key=value`` overrides any
field.  Logs go to stderr and data products go to files in the output
directory, so stdout carries only a one-line summary.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .neuron import IntegrationDiverged

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
OUT_ROOT_ENV = "OPTOSTDP_OUT_ROOT"

log = logging.getLogger("optostdp")


def _parse_set(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--preset", metavar="NAME", help="bundled preset, e.g. xor.default")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override a config field, e.g. train.mu=0.05 (repeatable)")
    common.add_argument("--seed", type=int, help="training and initialisation seed")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default: ${OUT_ROOT_ENV}/output.dir)")
    common.add_argument("--mode", choices=("ideal", "optical"), help="weight update mode")
    common.add_argument("--mu", type=float, help="learning rate")
    common.add_argument("--epochs", type=int, help="number of epochs")
    common.add_argument("--backend", choices=("fast", "full"), help="neuron back-end")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes (sweep)")
    common.add_argument("--dump-schedule", action="store_true",
                        help="write every light-pulse schedule to schedule.csv (optical mode)")
    common.add_argument("--log-level", default="INFO",
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"))

    parser = argparse.ArgumentParser(prog="optostdp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("neuron-demo", parents=[common], help="light-pulse response of one neuron")
    sub.add_parser("plasticity-probe", parents=[common], help="dump the Omega and eta curves")
    p_train = sub.add_parser("train", parents=[common], help="train a network")
    p_train.add_argument("--verify-manifest", metavar="PATH",
                         help="re-run the run recorded in a manifest and compare accuracy")
    p_eval = sub.add_parser("eval", parents=[common], help="evaluate a snapshot")
    p_eval.add_argument("--snapshot", metavar="PATH", required=True)
    sub.add_parser("sweep", parents=[common], help="learning-rate or hidden-size sweep")
    return parser


def resolve_config(args):
    overrides = _parse_set(args.set)
    for flag, key in (("seed", "train.seed"), ("mode", "train.mode"), ("mu", "train.mu"),
                      ("epochs", "train.epochs"), ("backend", "network.backend")):
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = repr(val) if isinstance(val, float) else str(val)
    return load_config(args.config, args.preset, overrides)


def output_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ROOT_ENV, ".")) / cfg.output.dir


def run(args) -> int:
    from . import experiments as ex

    if args.command == "train" and args.verify_manifest:
        same, recorded, again = ex.verify_manifest(args.verify_manifest)
        print(f"recorded={recorded:.6f} rerun={again:.6f} {'MATCH' if same else 'MISMATCH'}")
        return EXIT_OK if same else EXIT_FAILURE

    cfg = resolve_config(args)
    out = output_dir(args, cfg)
    if args.command == "neuron-demo":
        t, v, irr, spk, pulses = ex.neuron_demo(cfg, out)
        print(f"spikes={int(spk.sum())} pulses={len(pulses)} trace={out / 'neuron_demo.csv'}")
    elif args.command == "plasticity-probe":
        ex.plasticity_probe(cfg, out)
        print(f"curves={out / 'plasticity_probe.csv'}")
    elif args.command == "train":
        result = ex.run_train(cfg, out, dump_schedule=args.dump_schedule)
        print(ex.summary_line(result) + f" out={out}")
    elif args.command == "eval":
        acc, _ = ex.run_eval(cfg, args.snapshot, out)
        log.info("accuracy %.4f", acc)
        print(f"accuracy={acc:.4f}")
    elif args.command == "sweep":
        res = ex.run_sweep_experiment(cfg, out, jobs=args.jobs)
        for p in res.points:
            print(f"{res.axis}={p.value:g} mean_accuracy={p.final_accuracy:.4f} "
                  f"min={p.min_accuracy:.4f} max={p.max_accuracy:.4f} failed={p.n_failed}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except IntegrationDiverged as exc:
        log.error("numerical divergence: %s", exc)
        return EXIT_NUMERIC
    except (OSError, EOFError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
