"""Run configuration: INI files with ``section.key`` field paths.

A config file is a standard INI file.  Every key maps onto a dataclass field
(``[train] mu = 0.01`` is the field path ``train.mu``).  The ``[full]``
section additionally accepts ``g.<channel>`` and ``e.<channel>`` keys for the
channel conductance and reversal maps.  Presets are INI files bundled with
the package and are addressed by name (``xor.default``).
"""

from __future__ import annotations

import configparser
import difflib
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .network import NetworkConfig, Topology, WeightInit
from .neuron import CHANNELS, FastParams, NeuronParams
from .optics import PairingProtocol
from .plasticity import PlasticityParams
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataSpec:
    name: str = "xor"
    dir: str = ""
    classes: tuple[int, ...] = ()
    n_train: int = 0
    n_test: int = 0
    pool: bool = False
    subset_seed: int = 123

    def __post_init__(self):
        if self.name not in ("xor", "mnist"):
            raise ValueError("data.name must be 'xor' or 'mnist'")
        if self.n_train < 0 or self.n_test < 0:
            raise ValueError("data.n_train and data.n_test must be >= 0")


@dataclass(frozen=True)
class TopologySpec:
    n_hidden_pairs: int = 20

    def __post_init__(self):
        if self.n_hidden_pairs < 1:
            raise ValueError("topology.n_hidden_pairs must be >= 1")


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "runs/latest"
    snapshot_every: int = 0

    def __post_init__(self):
        if self.snapshot_every < 0:
            raise ValueError("output.snapshot_every must be >= 0")


@dataclass(frozen=True)
class SweepSpec:
    axis: str = "learning_rate"
    values: tuple[float, ...] = (1e-4, 1e-3, 0.01, 0.05, 0.5)
    seeds: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self):
        if self.axis not in ("learning_rate", "hidden_pairs"):
            raise ValueError("sweep.axis must be 'learning_rate' or 'hidden_pairs'")
        if not self.values:
            raise ValueError("sweep.values must be nonempty")
        if not self.seeds:
            raise ValueError("sweep.seeds must be nonempty")


@dataclass(frozen=True)
class DemoSpec:
    n_pulses: int = 10
    start: float = 10.0
    width: float = 5.0
    period: float = 55.0
    intensity: float = 1.0
    dt: float = 0.1
    tail: float = 50.0
    ca_max: float = 1.5
    ca_points: int = 301


SECTIONS: dict[str, type] = {
    "data": DataSpec,
    "topology": TopologySpec,
    "init": WeightInit,
    "network": NetworkConfig,
    "fast": FastParams,
    "full": NeuronParams,
    "plasticity": PlasticityParams,
    "train": TrainConfig,
    "optics": PairingProtocol,
    "output": OutputSpec,
    "sweep": SweepSpec,
    "demo": DemoSpec,
}
# fields that are filled from other sections, not set directly
_NESTED = {("network", "fast"), ("network", "full"), ("full", "channel_peak_conductances"),
           ("full", "reversal_potentials")}


@dataclass(frozen=True)
class RunConfig:
    data: DataSpec = field(default_factory=DataSpec)
    topology: TopologySpec = field(default_factory=TopologySpec)
    init: WeightInit = field(default_factory=WeightInit)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    optics: PairingProtocol = field(default_factory=PairingProtocol)
    output: OutputSpec = field(default_factory=OutputSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    demo: DemoSpec = field(default_factory=DemoSpec)
    values: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {}
        for name in ("data", "topology", "init", "plasticity", "train", "optics", "output",
                     "sweep", "demo"):
            out[name] = asdict(getattr(self, name))
        out["network"] = self.network.to_dict()
        return out


def valid_keys() -> list[str]:
    keys = []
    for sec, cls in SECTIONS.items():
        for f in fields(cls):
            if (sec, f.name) not in _NESTED:
                keys.append(f"{sec}.{f.name}")
    keys += [f"full.g.{c}" for c in CHANNELS] + [f"full.e.{c}" for c in CHANNELS]
    return keys


def _default_of(cls, name):
    for f in fields(cls):
        if f.name == name:
            if f.default is not MISSING:
                return f.default
            if f.default_factory is not MISSING:
                return f.default_factory()
    raise KeyError(name)


_NULLABLE = {("train", "dt"), ("network", "thresholds")}
_TUPLE_TYPES = {("data", "classes"): int, ("sweep", "values"): float, ("sweep", "seeds"): int,
                ("network", "thresholds"): float}


def _convert(section: str, key: str, raw: str):
    path = f"{section}.{key}"
    text = raw.strip()
    if (section, key) in _NULLABLE and text.lower() in ("", "none", "auto"):
        return None
    if (section, key) in _TUPLE_TYPES:
        cast = _TUPLE_TYPES[(section, key)]
        parts = [p for p in text.replace(",", " ").split() if p]
        try:
            return tuple(cast(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"{path}: cannot parse {raw!r} as a list of {cast.__name__}") from exc
    default = _default_of(SECTIONS[section], key)
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            return float(text)
        return text
    except ValueError as exc:
        kind = type(default).__name__ if default is not None else "float"
        raise ConfigError(f"{path}: cannot parse {raw!r} as {kind}") from exc


def _check_key(path: str) -> None:
    keys = valid_keys()
    if path not in keys:
        near = difflib.get_close_matches(path, keys, n=1, cutoff=0.0)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        raise ConfigError(f"unknown config key {path!r}{hint}")


def read_ini(path: str | Path) -> dict[str, str]:
    """Flat ``{section.key: raw string}`` view of an INI file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read(p)
    except configparser.Error as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    flat = {}
    for sec in cp.sections():
        for key, val in cp.items(sec):
            flat[f"{sec}.{key}"] = val
    return flat


def preset_path(name: str) -> Path:
    ref = resources.files("optostdp") / "presets" / f"{name}.ini"
    p = Path(str(ref))
    if not p.is_file():
        available = sorted(q.stem for q in Path(str(resources.files("optostdp") / "presets")).glob("*.ini"))
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available)}")
    return p


def build_config(flat: dict[str, str]) -> RunConfig:
    """Validate raw ``section.key`` strings into a RunConfig."""
    values: dict[str, dict[str, Any]] = {sec: {} for sec in SECTIONS}
    g_map, e_map = {}, {}
    for path, raw in flat.items():
        _check_key(path)
        sec, _, key = path.partition(".")
        if sec == "full" and key[:2] in ("g.", "e."):
            target = g_map if key[0] == "g" else e_map
            try:
                target[key[2:]] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: cannot parse {raw!r} as float") from exc
            continue
        values[sec][key] = _convert(sec, key, raw)

    def make(sec, **extra):
        try:
            return SECTIONS[sec](**values[sec], **extra)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            msg = str(exc)
            if not msg.startswith(sec + "."):
                msg = f"{sec}: {msg}"
            raise ConfigError(msg) from exc

    full_extra = {}
    if g_map:
        full_extra["channel_peak_conductances"] = g_map
    if e_map:
        full_extra["reversal_potentials"] = e_map
    fast = make("fast")
    full = make("full", **full_extra)
    network = make("network", fast=fast, full=full)
    return RunConfig(data=make("data"), topology=make("topology"), init=make("init"),
                     network=network, plasticity=make("plasticity"), train=make("train"),
                     optics=make("optics"), output=make("output"), sweep=make("sweep"),
                     demo=make("demo"), values=dict(flat))


def load_config(config: str | None = None, preset: str | None = None,
                overrides: dict[str, str] | None = None) -> RunConfig:
    """Merge preset, config file and overrides (later wins), then validate."""
    flat: dict[str, str] = {}
    if preset:
        flat.update(read_ini(preset_path(preset)))
    if config:
        flat.update(read_ini(config))
    for k, v in (overrides or {}).items():
        flat[k] = str(v)
    return build_config(flat)


def with_overrides(cfg: RunConfig, overrides: dict[str, str]) -> RunConfig:
    flat = dict(cfg.values)
    flat.update({k: str(v) for k, v in overrides.items()})
    return build_config(flat)


def replace_train(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, train=replace(cfg.train, **changes))
