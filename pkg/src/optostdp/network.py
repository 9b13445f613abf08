"""Three-layer network of paired excitatory/inhibitory neurons.

Each input and hidden unit is a pair of physical neurons.  Both members of a
pair receive the same drive (inputs) or the same incoming synapses (hidden),
so in a plain forward pass their trajectories coincide; they only diverge
when light targets one member.  The excitatory member of a pair projects the
excitatory synapses, the inhibitory member the inhibitory ones.  Output
neurons are single.

Physical neuron ids are global: inputs first (``2i`` excitatory, ``2i+1``
inhibitory), then hidden (same convention), then outputs.

Weights live in four matrices::

    g_ih_exc, g_ih_inh : (n_input_pairs, n_hidden_pairs)
    g_ho_exc, g_ho_inh : (n_hidden_pairs, n_output)

Snapshot weight order: for each input pair i, for each hidden pair h, the
excitatory then the inhibitory weight; then for each hidden pair h, for each
output o, excitatory then inhibitory.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .neuron import (
    SV_V, FastParams, NeuronParams, SpikeRecord, _fast_step_many,
    _full_step_many, resting_state,
)
from .optics import StimulationSchedule
from .plasticity import PlasticityParams, online_synapse_step
from .synapse import E_EXC_DEFAULT, E_INH_DEFAULT, TAU_SYN_DEFAULT, Role, Synapse, reference_potential

SNAPSHOT_FORMAT = "optostdp-network"
SNAPSHOT_VERSION = 1
NO_PREDICTION = -1


class SnapshotError(ValueError):
    pass


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    n_input_pairs: int
    n_hidden_pairs: int
    n_output: int

    def __post_init__(self):
        for name in ("n_input_pairs", "n_hidden_pairs", "n_output"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def n_synapses(self) -> int:
        return 2 * (self.n_input_pairs * self.n_hidden_pairs + self.n_hidden_pairs * self.n_output)

    @property
    def n_physical(self) -> int:
        return 2 * self.n_input_pairs + 2 * self.n_hidden_pairs + self.n_output

    def input_ids(self, i: int) -> tuple[int, int]:
        return 2 * i, 2 * i + 1

    def hidden_ids(self, h: int) -> tuple[int, int]:
        base = 2 * self.n_input_pairs
        return base + 2 * h, base + 2 * h + 1

    def output_id(self, o: int) -> int:
        return 2 * self.n_input_pairs + 2 * self.n_hidden_pairs + o


@dataclass(frozen=True)
class WeightInit:
    """Uniform initial weights in [g_lo, g_hi] times a per-layer reference."""

    g_lo: float = 0.3
    g_hi: float = 0.7
    ref_ih: float = 1.0
    ref_ho: float = 1.0

    def __post_init__(self):
        if not 0 <= self.g_lo <= self.g_hi:
            raise ValueError("need 0 <= g_lo <= g_hi")
        if self.ref_ih < 0 or self.ref_ho < 0:
            raise ValueError("reference conductances must be >= 0")


@dataclass(frozen=True)
class NetworkConfig:
    """Simulation settings shared by every forward pass of a network.

    ``synaptic_scale`` converts stored weights into membrane conductance
    (mS/cm²).  ``thresholds`` optionally overrides the spike threshold of the
    input, hidden and output layers.
    """

    backend: str = "fast"
    fast: FastParams = field(default_factory=FastParams)
    full: NeuronParams = field(default_factory=NeuronParams)
    i_max: float = 10.0
    synaptic_scale: float = 0.5
    e_exc: float = E_EXC_DEFAULT
    e_inh: float = E_INH_DEFAULT
    tau_syn: float = TAU_SYN_DEFAULT
    thresholds: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.backend not in ("fast", "full"):
            raise ValueError("backend must be 'fast' or 'full'")
        if self.i_max < 0 or self.synaptic_scale < 0:
            raise ValueError("i_max and synaptic_scale must be >= 0")
        if self.tau_syn <= 0:
            raise ValueError("tau_syn must be > 0")
        if self.thresholds is not None:
            object.__setattr__(self, "thresholds", tuple(float(x) for x in self.thresholds))
            if len(self.thresholds) != 3:
                raise ValueError("thresholds needs one value per layer")

    def layer_params(self):
        """Neuron parameters of the (input, hidden, output) layers."""
        if self.backend == "fast":
            base = self.fast
            if self.thresholds is None:
                return (base,) * 3
            return tuple(replace(base, v_thresh=th) for th in self.thresholds)
        base = self.full
        if self.thresholds is None:
            return (base,) * 3
        return tuple(replace(base, spike_threshold=th) for th in self.thresholds)

    def refractory(self) -> float:
        return self.fast.refractory if self.backend == "fast" else self.full.refractory_period

    def to_dict(self) -> dict:
        full = self.full.to_dict()
        return {"backend": self.backend, "fast": asdict(self.fast), "full": full,
                "i_max": self.i_max, "synaptic_scale": self.synaptic_scale,
                "e_exc": self.e_exc, "e_inh": self.e_inh, "tau_syn": self.tau_syn,
                "thresholds": None if self.thresholds is None else list(self.thresholds)}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        d["fast"] = FastParams(**d["fast"])
        d["full"] = NeuronParams(**d["full"])
        if d.get("thresholds") is not None:
            d["thresholds"] = tuple(d["thresholds"])
        return cls(**d)


@dataclass(eq=False)
class Network:
    topology: Topology
    config: NetworkConfig
    g_ih_exc: np.ndarray
    g_ih_inh: np.ndarray
    g_ho_exc: np.ndarray
    g_ho_inh: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        t = self.topology
        shapes = {"g_ih_exc": (t.n_input_pairs, t.n_hidden_pairs),
                  "g_ih_inh": (t.n_input_pairs, t.n_hidden_pairs),
                  "g_ho_exc": (t.n_hidden_pairs, t.n_output),
                  "g_ho_inh": (t.n_hidden_pairs, t.n_output)}
        for name, shape in shapes.items():
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite and >= 0")
            setattr(self, name, arr)

    # -- structure ---------------------------------------------------------

    def weight_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.g_ih_exc, self.g_ih_inh, self.g_ho_exc, self.g_ho_inh

    def copy(self) -> "Network":
        return Network(self.topology, self.config, self.g_ih_exc.copy(), self.g_ih_inh.copy(),
                       self.g_ho_exc.copy(), self.g_ho_inh.copy(), self.rng_seed)

    def flat_weights(self) -> np.ndarray:
        ih = np.stack([self.g_ih_exc, self.g_ih_inh], axis=-1).ravel()
        ho = np.stack([self.g_ho_exc, self.g_ho_inh], axis=-1).ravel()
        return np.concatenate([ih, ho])

    def set_flat_weights(self, flat: np.ndarray) -> None:
        t = self.topology
        flat = np.asarray(flat, dtype=np.float64)
        n_ih = 2 * t.n_input_pairs * t.n_hidden_pairs
        if flat.shape != (t.n_synapses,):
            raise ValueError(f"expected {t.n_synapses} weights, got {flat.shape}")
        ih = flat[:n_ih].reshape(t.n_input_pairs, t.n_hidden_pairs, 2)
        ho = flat[n_ih:].reshape(t.n_hidden_pairs, t.n_output, 2)
        self.g_ih_exc = np.ascontiguousarray(ih[..., 0])
        self.g_ih_inh = np.ascontiguousarray(ih[..., 1])
        self.g_ho_exc = np.ascontiguousarray(ho[..., 0])
        self.g_ho_inh = np.ascontiguousarray(ho[..., 1])

    def synapses(self) -> list[Synapse]:
        """Explicit synapse list in snapshot order.

        The ``post`` of an input-to-hidden synapse is the excitatory member of
        the hidden pair, standing for the pair (both members share it).
        """
        t = self.topology
        out = []
        tau = self.config.tau_syn
        for i in range(t.n_input_pairs):
            pe, pi = t.input_ids(i)
            for h in range(t.n_hidden_pairs):
                post = t.hidden_ids(h)[0]
                out.append(Synapse(pe, post, Role.EXCITATORY, float(self.g_ih_exc[i, h]), tau,
                                   self.config.e_exc))
                out.append(Synapse(pi, post, Role.INHIBITORY, float(self.g_ih_inh[i, h]), tau,
                                   self.config.e_inh))
        for h in range(t.n_hidden_pairs):
            pe, pi = t.hidden_ids(h)
            for o in range(t.n_output):
                post = t.output_id(o)
                out.append(Synapse(pe, post, Role.EXCITATORY, float(self.g_ho_exc[h, o]), tau,
                                   self.config.e_exc))
                out.append(Synapse(pi, post, Role.INHIBITORY, float(self.g_ho_inh[h, o]), tau,
                                   self.config.e_inh))
        return out

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (self.topology == other.topology and self.config == other.config
                and self.rng_seed == other.rng_seed
                and all(np.array_equal(a, b) for a, b in zip(self.weight_arrays(),
                                                               other.weight_arrays())))


def build_network(topology: Topology, init: WeightInit = WeightInit(), seed: int = 0,
                  config: NetworkConfig = NetworkConfig()) -> Network:
    rng = np.random.default_rng(seed)
    t = topology
    ih = (t.n_input_pairs, t.n_hidden_pairs)
    ho = (t.n_hidden_pairs, t.n_output)
    g_ih_exc = rng.uniform(init.g_lo, init.g_hi, ih) * init.ref_ih
    g_ih_inh = rng.uniform(init.g_lo, init.g_hi, ih) * init.ref_ih
    g_ho_exc = rng.uniform(init.g_lo, init.g_hi, ho) * init.ref_ho
    g_ho_inh = rng.uniform(init.g_lo, init.g_hi, ho) * init.ref_ho
    return Network(topology, config, g_ih_exc, g_ih_inh, g_ho_exc, g_ho_inh, int(seed))


def encode_input(values: Sequence[float], i_max: float) -> np.ndarray:
    """Constant drive per input pair, proportional to the normalised intensity."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise EncodingError("input must be one-dimensional")
    if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise EncodingError("input values must lie in [0, 1]; normalise first")
    return x * i_max


# ---------------------------------------------------------------------------
# simulation kernel
# ---------------------------------------------------------------------------

@njit(cache=True, error_model="numpy")
def _layer_step(full, states, v, ca, t, last, p, i_syn, irr, dt, spk):
    if full:
        return _full_step_many(states, p, i_syn, irr, dt, spk)
    return _fast_step_many(v, ca, t, last, p, i_syn, irr, dt, spk)


@njit(cache=True, error_model="numpy")
def _plastic_block(w, ca, pre_spk, pre_off, post_spk, post_stride, t_pre, t_post, t, pp, dt):
    # pre neuron of row a is physical 2a + pre_off; post of column b is b * post_stride
    n_a, n_b = w.shape
    for a in range(n_a):
        ip = 2 * a + pre_off
        sp = pre_spk[ip] != 0
        for b in range(n_b):
            jp = b * post_stride
            sq = post_spk[jp] != 0
            c = ca[a, b]
            if c == 0.0 and not sp and not sq:
                continue
            c, wn = online_synapse_step(c, w[a, b], sp, sq, t, t_pre[ip], t_post[jp], pp, dt)
            ca[a, b] = c
            w[a, b] = wn


@njit(cache=True, error_model="numpy")
def _simulate(full, n_steps, dt, drive_in,
              ge_ih, gi_ih, ge_ho, gi_ho, scale, e_exc, e_inh, v_ref, tau_s,
              st_in, st_hid, st_out, p_in, p_hid, p_out,
              pulse_id, pulse_s0, pulse_s1, pulse_amp,
              plastic, pp, ca_ih_e, ca_ih_i, ca_ho_e, ca_ho_i,
              s_in, s_hid, s_out):
    n_in2 = drive_in.shape[0]
    n_hp, n_o = ge_ho.shape
    n_ip = n_in2 // 2
    n_h2 = 2 * n_hp

    # fast back-end state (unused by the full back-end)
    v_in = np.full(n_in2, p_in[1])
    v_hid = np.full(n_h2, p_hid[1])
    v_out = np.full(n_o, p_out[1])
    ca_in = np.zeros(n_in2)
    ca_hid = np.zeros(n_h2)
    ca_out = np.zeros(n_o)
    t_in = np.zeros(n_in2)
    t_hid = np.zeros(n_h2)
    t_out = np.zeros(n_o)
    l_in = np.full(n_in2, np.nan)
    l_hid = np.full(n_h2, np.nan)
    l_out = np.full(n_o, np.nan)

    a_in = np.zeros(n_in2)
    y_in = np.zeros(n_in2)
    a_hid = np.zeros(n_h2)
    y_hid = np.zeros(n_h2)
    i_in = np.empty(n_in2)
    for j in range(n_in2):
        i_in[j] = -drive_in[j]
    i_hid = np.zeros(n_h2)
    i_out = np.zeros(n_o)
    irr_in = np.zeros(n_in2)
    irr_hid = np.zeros(n_h2)
    irr_out = np.zeros(n_o)
    spk_in = np.zeros(n_in2, dtype=np.bool_)
    spk_hid = np.zeros(n_h2, dtype=np.bool_)
    spk_out = np.zeros(n_o, dtype=np.bool_)

    tl_in = np.full(n_in2, -1e18)
    tl_hid = np.full(n_h2, -1e18)
    tl_out = np.full(n_o, -1e18)

    decay_s = math.exp(-dt / tau_s)
    inc_s = dt / tau_s
    fe = v_ref - e_exc
    fi = v_ref + e_inh
    n_pulses = pulse_id.shape[0]
    base_h = n_in2
    base_o = n_in2 + n_h2

    for k in range(n_steps):
        # light
        if n_pulses > 0:
            irr_in[:] = 0.0
            irr_hid[:] = 0.0
            irr_out[:] = 0.0
            for q in range(n_pulses):
                if pulse_s0[q] <= k < pulse_s1[q]:
                    nid = pulse_id[q]
                    if nid < base_h:
                        irr_in[nid] = pulse_amp[q]
                    elif nid < base_o:
                        irr_hid[nid - base_h] = pulse_amp[q]
                    else:
                        irr_out[nid - base_o] = pulse_amp[q]

        # synaptic currents from the alpha traces at the start of the step
        for h in range(n_hp):
            g_e = 0.0
            g_i = 0.0
            for i in range(n_ip):
                ae = a_in[2 * i]
                ai = a_in[2 * i + 1]
                if ae != 0.0:
                    g_e += ae * ge_ih[i, h]
                if ai != 0.0:
                    g_i += ai * gi_ih[i, h]
            g_e *= scale
            g_i *= scale
            for m in range(2):
                j = 2 * h + m
                if full:
                    v = st_hid[j, SV_V]
                    i_hid[j] = g_e * (v - e_exc) + g_i * (v + e_inh)
                else:
                    i_hid[j] = g_e * fe + g_i * fi
        for o in range(n_o):
            g_e = 0.0
            g_i = 0.0
            for h in range(n_hp):
                ae = a_hid[2 * h]
                ai = a_hid[2 * h + 1]
                if ae != 0.0:
                    g_e += ae * ge_ho[h, o]
                if ai != 0.0:
                    g_i += ai * gi_ho[h, o]
            g_e *= scale
            g_i *= scale
            if full:
                v = st_out[o, SV_V]
                i_out[o] = g_e * (v - e_exc) + g_i * (v + e_inh)
            else:
                i_out[o] = g_e * fe + g_i * fi

        bad = _layer_step(full, st_in, v_in, ca_in, t_in, l_in, p_in, i_in, irr_in, dt, spk_in)
        if bad >= 0:
            return 1, k
        bad = _layer_step(full, st_hid, v_hid, ca_hid, t_hid, l_hid, p_hid, i_hid, irr_hid, dt, spk_hid)
        if bad >= 0:
            return 2, k
        bad = _layer_step(full, st_out, v_out, ca_out, t_out, l_out, p_out, i_out, irr_out, dt, spk_out)
        if bad >= 0:
            return 3, k

        t_now = (k + 1) * dt
        for j in range(n_in2):
            s_in[k, j] = spk_in[j]
        for j in range(n_h2):
            s_hid[k, j] = spk_hid[j]
        for j in range(n_o):
            s_out[k, j] = spk_out[j]

        if plastic:
            _plastic_block(ge_ih, ca_ih_e, spk_in, 0, spk_hid, 2, tl_in, tl_hid, t_now, pp, dt)
            _plastic_block(gi_ih, ca_ih_i, spk_in, 1, spk_hid, 2, tl_in, tl_hid, t_now, pp, dt)
            _plastic_block(ge_ho, ca_ho_e, spk_hid, 0, spk_out, 1, tl_hid, tl_out, t_now, pp, dt)
            _plastic_block(gi_ho, ca_ho_i, spk_hid, 1, spk_out, 1, tl_hid, tl_out, t_now, pp, dt)
            for j in range(n_in2):
                if spk_in[j]:
                    tl_in[j] = t_now
            for j in range(n_h2):
                if spk_hid[j]:
                    tl_hid[j] = t_now
            for j in range(n_o):
                if spk_out[j]:
                    tl_out[j] = t_now

        # advance the alpha traces to the end of the step (exact recursion)
        for j in range(n_in2):
            a_in[j] = (a_in[j] + y_in[j] * inc_s) * decay_s
            y_in[j] = y_in[j] * decay_s + (1.0 if spk_in[j] else 0.0)
        for j in range(n_h2):
            a_hid[j] = (a_hid[j] + y_hid[j] * inc_s) * decay_s
            y_hid[j] = y_hid[j] * decay_s + (1.0 if spk_hid[j] else 0.0)
    return 0, n_steps


@dataclass(frozen=True)
class ForwardTrace:
    """Spike rasters of one simulation window ``(0, T]``.

    Row ``k`` of each raster holds spikes detected at ``t = (k+1)·dt``.
    """

    spikes_input: np.ndarray
    spikes_hidden: np.ndarray
    spikes_output: np.ndarray
    T: float
    dt: float

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.spikes_output.shape[0]) + 1) * self.dt

    # pair-level views (the excitatory member stands for its pair)
    @property
    def input_pairs(self) -> np.ndarray:
        return self.spikes_input[:, 0::2]

    @property
    def hidden_pairs(self) -> np.ndarray:
        return self.spikes_hidden[:, 0::2]

    def output_counts(self) -> np.ndarray:
        return self.spikes_output.sum(axis=0, dtype=np.int64)

    def binned(self, raster: np.ndarray, bin_width: float) -> np.ndarray:
        steps = int(round(bin_width / self.dt))
        n = raster.shape[0]
        if steps < 1 or n % steps:
            raise ValueError(f"bin width {bin_width} ms does not tile the {self.T} ms window")
        return raster.reshape(n // steps, steps, -1).sum(axis=1, dtype=np.int64)

    def records(self, topology: Topology) -> list[SpikeRecord]:
        t = self.times
        out = []
        for raster, base in ((self.spikes_input, 0),
                             (self.spikes_hidden, 2 * topology.n_input_pairs),
                             (self.spikes_output, 2 * topology.n_input_pairs
                              + 2 * topology.n_hidden_pairs)):
            for j in range(raster.shape[1]):
                out.append(SpikeRecord(base + j, tuple(t[raster[:, j] != 0])))
        return out


def _layer_states(config: NetworkConfig, layer_params, sizes):
    if config.backend == "full":
        states = []
        packs = []
        for prm, n in zip(layer_params, sizes):
            row = resting_state(prm).packed()
            states.append(np.tile(row, (n, 1)))
            packs.append(prm.packed())
        return states, packs
    dummy = [np.zeros((1, 1)) for _ in sizes]
    return dummy, [prm.packed() for prm in layer_params]


_REST_CACHE: dict = {}


def _cached_layer_states(config: NetworkConfig, topology: Topology):
    key = (config, topology)
    hit = _REST_CACHE.get(key)
    if hit is None:
        sizes = (2 * topology.n_input_pairs, 2 * topology.n_hidden_pairs, topology.n_output)
        hit = _layer_states(config, config.layer_params(), sizes)
        if len(_REST_CACHE) > 32:
            _REST_CACHE.clear()
        _REST_CACHE[key] = hit
    states, packs = hit
    return [s.copy() for s in states], packs


def simulate(network: Network, drive: np.ndarray, T: float, dt: float,
             schedule: StimulationSchedule | None = None,
             plasticity: PlasticityParams | None = None,
             weights: tuple[np.ndarray, ...] | None = None) -> ForwardTrace:
    """Run the network from rest for ``T`` ms.

    With ``plasticity`` set, the online calcium rule updates the arrays in
    ``weights`` (default: copies of the network's) in place; the network
    object itself is never modified here.
    """
    from .neuron import IntegrationDiverged

    cfg = network.config
    topo = network.topology
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be > 0")
    if cfg.backend == "full" and dt > 0.5:
        raise ValueError("full back-end requires dt <= 0.5 ms")
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")
    drive = np.asarray(drive, dtype=np.float64)
    if drive.shape != (topo.n_input_pairs,):
        raise ValueError(f"drive must have {topo.n_input_pairs} entries")
    drive_phys = np.repeat(drive, 2)

    states, packs = _cached_layer_states(cfg, topo)
    if weights is None:
        weights = tuple(w.copy() for w in network.weight_arrays())
    ge_ih, gi_ih, ge_ho, gi_ho = weights
    if schedule is not None and len(schedule):
        pid, ps0, ps1, pamp = schedule.pulse_arrays(dt)
        if np.any(pid >= topo.n_physical) or np.any(pid < 0):
            raise ValueError("schedule targets a neuron outside the network")
    else:
        pid = np.zeros(0, dtype=np.int64)
        ps0 = ps1 = np.zeros(0, dtype=np.int64)
        pamp = np.zeros(0)
    plastic = plasticity is not None
    pp = (plasticity or PlasticityParams()).packed()
    cas = [np.zeros_like(w) for w in weights]

    s_in = np.zeros((n_steps, 2 * topo.n_input_pairs), dtype=np.uint8)
    s_hid = np.zeros((n_steps, 2 * topo.n_hidden_pairs), dtype=np.uint8)
    s_out = np.zeros((n_steps, topo.n_output), dtype=np.uint8)
    v_ref = reference_potential(cfg.e_exc, cfg.e_inh)
    code, k = _simulate(cfg.backend == "full", n_steps, float(dt), drive_phys,
                        ge_ih, gi_ih, ge_ho, gi_ho, cfg.synaptic_scale, cfg.e_exc, cfg.e_inh,
                        v_ref, cfg.tau_syn, states[0], states[1], states[2],
                        packs[0], packs[1], packs[2], pid, ps0, ps1, pamp,
                        plastic, pp, cas[0], cas[1], cas[2], cas[3], s_in, s_hid, s_out)
    if code:
        layer = ("input", "hidden", "output")[code - 1]
        raise IntegrationDiverged(f"{layer} layer diverged at step {k} (t={(k + 1) * dt} ms)")
    return ForwardTrace(s_in, s_hid, s_out, float(T), float(dt))


def forward_pass(network: Network, drive: np.ndarray, T: float = 50.0,
                 dt: float | None = None) -> ForwardTrace:
    """Read-only forward simulation; the network's weights are not touched."""
    if dt is None:
        dt = 1.0 if network.config.backend == "fast" else 0.1
    return simulate(network, drive, T, dt)


def decode_output(trace: ForwardTrace) -> int:
    counts = trace.output_counts()
    if counts.max(initial=0) == 0:
        return NO_PREDICTION
    return int(np.argmax(counts))


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

def snapshot(network: Network) -> str:
    t = network.topology
    doc = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "topology": {"n_input_pairs": t.n_input_pairs, "n_hidden_pairs": t.n_hidden_pairs,
                     "n_output": t.n_output},
        "seed": network.rng_seed,
        "backend": network.config.backend,
        "config": network.config.to_dict(),
        "weight_order": "ih[i][h](exc,inh) then ho[h][o](exc,inh)",
        "weights": [float(x) for x in network.flat_weights()],
    }
    return json.dumps(doc, indent=1)


def restore(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError("not a network snapshot")
    if doc.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"snapshot version {doc.get('version')!r} unsupported (expected {SNAPSHOT_VERSION})")
    try:
        topo = Topology(**doc["topology"])
        config = NetworkConfig.from_dict(doc["config"])
        if config.backend != doc["backend"]:
            raise SnapshotError("backend header disagrees with stored config")
        flat = np.array(doc["weights"], dtype=np.float64)
        net = build_network(topo, WeightInit(0.0, 0.0), int(doc["seed"]), config)
        net.set_flat_weights(flat)
        Network.__post_init__(net)
    except SnapshotError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SnapshotError(f"malformed snapshot: {exc}") from exc
    return net


def save_snapshot(network: Network, path: str | Path) -> None:
    Path(path).write_text(snapshot(network))


def load_snapshot(path: str | Path) -> Network:
    return restore(Path(path).read_text())
