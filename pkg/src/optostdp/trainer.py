"""Indirect training through light-driven pairings.

Each sample goes through one forward pass.  Output errors are computed per
ε-wide time bin, propagated to the hidden layer through the net
(excitatory − inhibitory) hidden-to-output weights, and turned into
conductance deltas.  A positive delta is realised by potentiating the
excitatory synapse of the connection, a negative one by potentiating the
inhibitory synapse; the magnitude is quantised into a whole number of
canonical pairings.

``ideal`` mode applies the quantised pairings directly.  ``optical`` mode
schedules light pulses for each synapse in turn and simulates the network
with the online plasticity rule, so weights only change through spikes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import Dataset, sample_indices
from .network import NO_PREDICTION, ForwardTrace, Network, decode_output, encode_input, simulate
from .optics import PairingProtocol, ScheduleOverflow, schedule_pairings
from .plasticity import PairingKind, PlasticityParams, quantized_potentiation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """``dt`` of ``None`` picks the back-end default (1 ms fast, 0.1 ms full).

    ``pairing_dt`` is the integration step of pairing episodes, both for the
    canonical episodes of ideal mode and for simulated optical sessions.
    ``readout_noise`` adds Gaussian noise (standard deviation, conductance
    units) to the weights the trainer reads; 0 disables it.
    """

    mu: float = 0.01
    epsilon_window: float = 5.0
    T: float = 50.0
    dt: float | None = None
    epochs: int = 150
    batch_per_epoch: int = 50
    max_pulses: int = 50
    mode: str = "ideal"
    seed: int = 0
    pairing_dt: float = 0.1
    readout_noise: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("train.mu must be > 0")
        if self.epsilon_window <= 0:
            raise ValueError("train.epsilon_window must be > 0")
        if self.epsilon_window > self.T:
            raise ValueError("train.epsilon_window must be <= train.T")
        if self.batch_per_epoch < 1:
            raise ValueError("train.batch_per_epoch must be >= 1")
        if self.max_pulses < 1:
            raise ValueError("train.max_pulses must be >= 1")
        if self.epochs < 0:
            raise ValueError("train.epochs must be >= 0")
        if self.mode not in ("ideal", "optical"):
            raise ValueError("train.mode must be 'ideal' or 'optical'")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("train.dt must be > 0")
        if self.pairing_dt <= 0:
            raise ValueError("train.pairing_dt must be > 0")
        if self.readout_noise < 0:
            raise ValueError("train.readout_noise must be >= 0")

    def resolved_dt(self, network: Network) -> float:
        if self.dt is not None:
            return self.dt
        return 1.0 if network.config.backend == "fast" else 0.1

    @property
    def n_bins(self) -> int:
        return int(round(self.T / self.epsilon_window))


@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    accuracy: float
    mse: float
    mean_pulses_per_sample: float
    eval_accuracy: float | None = None

    def __post_init__(self):
        if not 0 <= self.accuracy <= 1:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.mse < 0:
            raise ValueError("mse must be >= 0")


@dataclass
class SampleResult:
    pulses: int
    bin_errors: np.ndarray
    prediction: int
    capped: int = 0
    off_target_spikes: int = 0


@dataclass
class TrainResult:
    network: Network
    history: list[EpochMetrics] = field(default_factory=list)

    @property
    def final(self) -> EpochMetrics | None:
        return self.history[-1] if self.history else None


# ---------------------------------------------------------------------------
# error and delta computation
# ---------------------------------------------------------------------------

def output_error(trace: ForwardTrace, target_class: int, bin_width: float) -> np.ndarray:
    """Per-bin output errors in {−1, 0, +1}, shape ``(n_bins, n_output)``."""
    n_out = trace.spikes_output.shape[1]
    if not 0 <= target_class < n_out:
        raise ValueError(f"target class {target_class} outside {n_out} outputs")
    observed = (trace.binned(trace.spikes_output, bin_width) > 0).astype(np.int64)
    expected = np.zeros_like(observed)
    expected[:, target_class] = 1
    return expected - observed


def hidden_error(g_ho_exc: np.ndarray, g_ho_inh: np.ndarray, output_errors: np.ndarray,
                 trace: ForwardTrace) -> np.ndarray:
    """Per-bin hidden errors, zero for hidden pairs that stayed silent."""
    spiked = trace.hidden_pairs.sum(axis=0) > 0
    return (output_errors @ (g_ho_exc - g_ho_inh).T) * spiked


def conductance_deltas(trace: ForwardTrace, out_err: np.ndarray, hid_err: np.ndarray,
                       mu: float, epsilon_window: float) -> tuple[np.ndarray, np.ndarray]:
    """Signed deltas ``(Δg_IH, Δg_HO)`` from binned presynaptic counts and errors."""
    b_in = trace.binned(trace.input_pairs, epsilon_window)
    b_hid = trace.binned(trace.hidden_pairs, epsilon_window)
    d_ho = mu * (b_hid.T @ out_err)
    d_ih = mu * (b_in.T @ hid_err)
    return d_ih, d_ho


def route_delta(dg: float) -> tuple[str | None, float, PairingKind]:
    """Which member of an (exc, inh) synapse pair to potentiate, and by how much."""
    if dg > 0:
        return "excitatory", float(dg), PairingKind.POTENTIATE
    if dg < 0:
        return "inhibitory", float(-dg), PairingKind.POTENTIATE
    return None, 0.0, PairingKind.NO_CHANGE


def _read_weights(network: Network, config: TrainConfig, rng: np.random.Generator | None):
    ws = network.weight_arrays()
    if config.readout_noise == 0 or rng is None:
        return ws
    return tuple(np.maximum(w + rng.normal(0.0, config.readout_noise, w.shape), 0.0) for w in ws)


def plan_pulses(network: Network, d_ih: np.ndarray, d_ho: np.ndarray, config: TrainConfig,
                plasticity: PlasticityParams, readout=None):
    """Pulse counts per synapse matrix, in the order of ``Network.weight_arrays``.

    Returns ``(counts, realised)``: integer pulse counts and, for ideal mode,
    the weights those pulses produce on the read-out values.
    """
    readout = readout or network.weight_arrays()
    counts = []
    realised = []
    for d, w_exc, w_inh in ((d_ih, readout[0], readout[1]), (d_ho, readout[2], readout[3])):
        for sign, w in ((1.0, w_exc), (-1.0, w_inh)):
            mag = np.where(sign * d > 0, np.abs(d), 0.0)
            n, w_new = quantized_potentiation(mag, w, plasticity, config.max_pulses,
                                              config.pairing_dt)
            counts.append(n.reshape(w.shape))
            realised.append(w_new.reshape(w.shape))
    return counts, realised


def _synapse_endpoints(network: Network, which: int, a: int, b: int):
    topo = network.topology
    if which < 2:
        pre = topo.input_ids(a)[which]
        post = list(topo.hidden_ids(b))
    else:
        pre = topo.hidden_ids(a)[which - 2]
        post = [topo.output_id(b)]
    return pre, post


def run_optical_sessions(network: Network, counts, plasticity: PlasticityParams,
                         protocol: PairingProtocol, pairing_dt: float,
                         on_schedule: Callable | None = None) -> tuple[int, int]:
    """Realise pulse counts by simulated light sessions, one synapse at a time.

    Each session starts the network from rest, lights the pre neuron and the
    post neuron(s) of one synapse, and lets the online rule update every
    synapse.  Weights of ``network`` are updated in place.

    Returns ``(dropped, off_target)``: pairings dropped to respect the
    session limit, and spikes fired by neurons that were not lit.  Off-target
    spikes come from synaptic transmission and are the only way a session can
    touch synapses other than its own.
    """
    dropped = 0
    off_target = 0
    weights = network.weight_arrays()
    zero_drive = np.zeros(network.topology.n_input_pairs)
    for which, n_mat in enumerate(counts):
        for a, b in zip(*np.nonzero(n_mat)):
            n = int(n_mat[a, b])
            pre, post = _synapse_endpoints(network, which, int(a), int(b))
            try:
                sched = schedule_pairings(pre, post, n, PairingKind.POTENTIATE, protocol,
                                          plasticity.pairing_window)
            except ScheduleOverflow:
                fit = max(int((protocol.max_horizon - protocol.session_length(1)) // protocol.gap) + 1, 0)
                log.warning("session for synapse %s(%d,%d) capped from %d to %d pairings",
                            which, a, b, n, fit)
                dropped += n - fit
                n = fit
                if n == 0:
                    continue
                sched = schedule_pairings(pre, post, n, PairingKind.POTENTIATE, protocol,
                                          plasticity.pairing_window)
            if on_schedule is not None:
                on_schedule(sched)
            horizon = round(sched.horizon / pairing_dt) * pairing_dt
            trace = simulate(network, zero_drive, horizon, pairing_dt, schedule=sched,
                             plasticity=plasticity, weights=weights)
            counts_all = np.concatenate([trace.spikes_input.sum(axis=0),
                                         trace.spikes_hidden.sum(axis=0),
                                         trace.spikes_output.sum(axis=0)])
            lit = sorted(sched.neurons())
            off_target += int(counts_all.sum() - counts_all[lit].sum())
    if off_target:
        log.debug("optical sessions produced %d off-target spikes", off_target)
    return dropped, off_target


def train_sample(network: Network, features: np.ndarray, label: int, config: TrainConfig,
                 plasticity: PlasticityParams = PlasticityParams(),
                 protocol: PairingProtocol = PairingProtocol(),
                 rng: np.random.Generator | None = None,
                 on_schedule: Callable | None = None) -> tuple[Network, SampleResult]:
    """One forward pass and one round of weight updates; ``network`` is updated in place."""
    dt = config.resolved_dt(network)
    drive = encode_input(features, network.config.i_max)
    trace = simulate(network, drive, config.T, dt)
    out_err = output_error(trace, label, config.epsilon_window)
    prediction = decode_output(trace)
    if not out_err.any():
        return network, SampleResult(0, out_err, prediction)

    readout = _read_weights(network, config, rng)
    hid_err = hidden_error(readout[2], readout[3], out_err, trace)
    d_ih, d_ho = conductance_deltas(trace, out_err, hid_err, config.mu, config.epsilon_window)
    counts, realised = plan_pulses(network, d_ih, d_ho, config, plasticity, readout)
    capped = sum(int(np.count_nonzero(n >= config.max_pulses)) for n in counts)
    if capped:
        log.debug("%d synapses hit the %d-pulse cap", capped, config.max_pulses)
    total = int(sum(int(n.sum()) for n in counts))

    if config.mode == "ideal":
        for w, w_new, n in zip(network.weight_arrays(), realised, counts):
            mask = n > 0
            if config.readout_noise == 0:
                w[mask] = w_new[mask]
            else:
                _apply_counts(w, n, plasticity, config.pairing_dt)
        off_target = 0
    else:
        dropped, off_target = run_optical_sessions(network, counts, plasticity, protocol,
                                                   config.pairing_dt, on_schedule)
        total -= dropped
    return network, SampleResult(total, out_err, prediction, capped, off_target)


def _apply_counts(w: np.ndarray, n: np.ndarray, plasticity: PlasticityParams, dt: float) -> None:
    from .plasticity import episode_map

    a, b = episode_map(plasticity, PairingKind.POTENTIATE, dt)
    for idx in zip(*np.nonzero(n)):
        x = w[idx]
        for _ in range(int(n[idx])):
            x = max(a * x + b, 0.0)
        w[idx] = x


# ---------------------------------------------------------------------------
# epochs and evaluation
# ---------------------------------------------------------------------------

def sample_xi(bin_errors: np.ndarray) -> np.ndarray:
    """Summed signed error across output neurons, per bin."""
    return np.asarray(bin_errors).sum(axis=1)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(epoch)])


def train_epoch(network: Network, dataset: Dataset, config: TrainConfig,
                rng: np.random.Generator, epoch: int = 0,
                plasticity: PlasticityParams = PlasticityParams(),
                protocol: PairingProtocol = PairingProtocol(),
                on_schedule: Callable | None = None) -> tuple[Network, EpochMetrics]:
    from .metrics import mse

    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    idx = sample_indices(len(dataset), config.batch_per_epoch, rng)
    noise_rng = np.random.default_rng(rng.integers(2**63)) if config.readout_noise else None
    xis = []
    correct = 0
    pulses = 0
    for k in idx:
        _, res = train_sample(network, dataset.features[k], int(dataset.labels[k]), config,
                              plasticity, protocol, noise_rng, on_schedule)
        xis.append(sample_xi(res.bin_errors))
        correct += res.prediction == int(dataset.labels[k])
        pulses += res.pulses
    n = len(idx)
    metrics = EpochMetrics(epoch, correct / n, mse(np.array(xis), n, config.n_bins), pulses / n)
    return network, metrics


def evaluate(network: Network, dataset: Dataset, T: float = 50.0,
             dt: float | None = None) -> tuple[float, np.ndarray]:
    """Accuracy and confusion counts; column ``n_classes`` counts silent outputs.

    The network is left untouched.
    """
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if dt is None:
        dt = 1.0 if network.config.backend == "fast" else 0.1
    k = dataset.n_classes
    confusion = np.zeros((k, k + 1), dtype=np.int64)
    for x, y in zip(dataset.features, dataset.labels):
        trace = simulate(network, encode_input(x, network.config.i_max), T, dt)
        pred = decode_output(trace)
        col = k if pred == NO_PREDICTION or pred >= k else pred
        confusion[int(y), col] += 1
    return float(np.trace(confusion[:, :k]) / len(dataset)), confusion


def train(network: Network, dataset: Dataset, config: TrainConfig,
          eval_set: Dataset | None = None,
          plasticity: PlasticityParams = PlasticityParams(),
          protocol: PairingProtocol = PairingProtocol(),
          on_epoch: Callable[[EpochMetrics, Network], None] | None = None,
          on_schedule: Callable | None = None) -> TrainResult:
    result = TrainResult(network)
    for ep in range(config.epochs):
        rng = epoch_rng(config.seed, ep)
        _, m = train_epoch(network, dataset, config, rng, ep + 1, plasticity, protocol, on_schedule)
        if eval_set is not None:
            acc, _ = evaluate(network, eval_set, config.T, config.resolved_dt(network))
            m = EpochMetrics(m.epoch, m.accuracy, m.mse, m.mean_pulses_per_sample, acc)
        result.history.append(m)
        if on_epoch is not None:
            on_epoch(m, network)
    return result
