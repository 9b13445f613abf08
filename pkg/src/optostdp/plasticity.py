"""Calcium-controlled plasticity.

A synapse carries a calcium trace.  Weight changes follow

    dW/dt = η(Ca) · (Ω(Ca) − λ·W)

where Ω is a double sigmoid with a depression basin between ``theta_d`` and
``theta_p`` and a potentiation plateau above ``theta_p``, and η is a Hill
function that gates learning off when calcium is absent.

Pairing episodes are canonicalised: a potentiating pairing lifts calcium to
``ca_quantum_pre + ca_quantum_pair``, a depressing one to
``ca_quantum_pre + ca_quantum_depress``, after which calcium decays
exponentially for five time constants.  Because the rate equation is linear
in W for a fixed calcium time course, one episode is an affine map
``W -> A·W + B`` (clamped at 0); ``episode_map`` caches ``A`` and ``B``.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from numba import njit

from .synapse import Synapse


class PairingKind(str, Enum):
    POTENTIATE = "potentiate"
    DEPRESS = "depress"
    NO_CHANGE = "no_change"


HILL_EXPONENT = 2.0
EPISODE_TAUS = 5.0


@dataclass(frozen=True)
class PlasticityParams:
    """Shape and calcium-bookkeeping parameters of the learning rule.

    Calcium is in normalised units.  ``eta_max`` is per ms and its default
    makes one potentiating episode add about 1% to a weight of 0.5 at the
    default 0.1 ms integration step.  ``omega_slope`` sets the steepness of
    both sigmoid edges of Ω (per unit calcium).
    """

    theta_d: float = 0.35
    theta_p: float = 0.55
    lambda_decay: float = 0.01
    eta_max: float = 7.0e-4
    eta_half_ca: float = 0.5
    omega_depress_depth: float = -0.25
    omega_potentiate_level: float = 1.0
    pairing_window: float = 5.0
    ca_quantum_pre: float = 0.05
    ca_quantum_pair: float = 0.95
    ca_quantum_depress: float = 0.40
    tau_ca_syn: float = 20.0
    omega_slope: float = 40.0

    def __post_init__(self):
        if not 0 < self.theta_d < self.theta_p:
            raise ValueError("need 0 < theta_d < theta_p")
        if self.lambda_decay < 0:
            raise ValueError("lambda_decay must be >= 0")
        for name in ("eta_max", "eta_half_ca", "tau_ca_syn", "pairing_window", "omega_slope"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.omega_depress_depth >= 0:
            raise ValueError("omega_depress_depth must be negative")
        if self.omega_potentiate_level <= 0:
            raise ValueError("omega_potentiate_level must be positive")
        for name in ("ca_quantum_pre", "ca_quantum_pair", "ca_quantum_depress"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.ca_quantum_pre >= self.theta_d:
            raise ValueError("ca_quantum_pre must stay below theta_d")

    @property
    def episode_duration(self) -> float:
        return EPISODE_TAUS * self.tau_ca_syn

    def peak_calcium(self, kind: PairingKind) -> float:
        kind = PairingKind(kind)
        if kind is PairingKind.POTENTIATE:
            return self.ca_quantum_pre + self.ca_quantum_pair
        if kind is PairingKind.DEPRESS:
            return self.ca_quantum_pre + self.ca_quantum_depress
        return 0.0

    def packed(self) -> np.ndarray:
        return np.array([self.theta_d, self.theta_p, self.lambda_decay, self.eta_max,
                         self.eta_half_ca, self.omega_depress_depth,
                         self.omega_potentiate_level, self.pairing_window,
                         self.ca_quantum_pre, self.ca_quantum_pair,
                         self.ca_quantum_depress, self.tau_ca_syn, self.omega_slope])


# packed parameter slots, shared with the network kernels
(PP_THETA_D, PP_THETA_P, PP_LAMBDA, PP_ETA_MAX, PP_ETA_HALF, PP_DEPTH, PP_LEVEL,
 PP_WINDOW, PP_Q_PRE, PP_Q_PAIR, PP_Q_DEP, PP_TAU, PP_SLOPE) = range(13)


@dataclass(frozen=True)
class PairingOutcome:
    kind: PairingKind
    dw: float

    def __post_init__(self):
        kind = PairingKind(self.kind)
        object.__setattr__(self, "kind", kind)
        ok = {PairingKind.POTENTIATE: self.dw > 0, PairingKind.DEPRESS: self.dw < 0,
              PairingKind.NO_CHANGE: self.dw == 0}[kind]
        if not ok:
            raise ValueError(f"dw={self.dw} inconsistent with {kind.value}")


# ---------------------------------------------------------------------------
# shape functions
# ---------------------------------------------------------------------------

@njit(cache=True)
def _sig(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def omega_packed(ca, pp):
    beta = pp[PP_SLOPE]
    depth = pp[PP_DEPTH]
    return (depth * _sig(beta * (ca - pp[PP_THETA_D]))
            + (pp[PP_LEVEL] - depth) * _sig(beta * (ca - pp[PP_THETA_P])))


@njit(cache=True)
def eta_packed(ca, pp):
    c2 = ca * ca
    h = pp[PP_ETA_HALF]
    return pp[PP_ETA_MAX] * c2 / (c2 + h * h)


def omega(ca: float, params: PlasticityParams) -> float:
    if ca < 0:
        raise ValueError("calcium must be >= 0")
    return float(omega_packed(float(ca), params.packed()))


def eta(ca: float, params: PlasticityParams) -> float:
    if ca < 0:
        raise ValueError("calcium must be >= 0")
    return float(eta_packed(float(ca), params.packed()))


def weight_derivative(w: float, ca: float, params: PlasticityParams) -> float:
    if w < 0 or ca < 0:
        raise ValueError("w and ca must be >= 0")
    return eta(ca, params) * (omega(ca, params) - params.lambda_decay * w)


def classify_pairing(t_pre: float, t_post: float, window: float) -> PairingKind:
    if window <= 0:
        raise ValueError("window must be > 0")
    if t_pre <= t_post and t_post - t_pre <= window:
        return PairingKind.POTENTIATE
    if t_pre > t_post and t_pre - t_post <= window:
        return PairingKind.DEPRESS
    return PairingKind.NO_CHANGE


# ---------------------------------------------------------------------------
# canonical episodes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _episode_map_cached(key: tuple, kind: PairingKind, dt: float) -> tuple[float, float]:
    params = PlasticityParams(*key)
    pp = params.packed()
    peak = params.peak_calcium(kind)
    n = int(round(params.episode_duration / dt))
    half = math.exp(-0.5 * dt / params.tau_ca_syn)
    a, b, ca = 1.0, 0.0, peak
    for _ in range(n):
        mid = ca * half
        e = eta_packed(mid, pp)
        f = 1.0 - dt * params.lambda_decay * e
        a = a * f
        b = b * f + dt * e * omega_packed(mid, pp)
        ca = mid * half
    return a, b


def episode_map(params: PlasticityParams, kind: PairingKind, dt: float = 0.1) -> tuple[float, float]:
    """Return (A, B) such that one episode maps W to max(A·W + B, 0).

    The pair reproduces Euler integration at step ``dt`` with the rate
    evaluated at the calcium level of each step's midpoint, which is exactly
    what the online rule computes for an isolated pairing.  Sampling the
    decaying trace at the midpoint keeps the 0.1 ms result within about 1e-5
    relative of a much finer integration.
    """
    kind = PairingKind(kind)
    if kind is PairingKind.NO_CHANGE:
        return 1.0, 0.0
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return _episode_map_cached(astuple(params), kind, float(dt))


def _episode_weight(w: float, a: float, b: float) -> float:
    return max(a * w + b, 0.0)


def dw_single(params: PlasticityParams, w: float, kind: PairingKind,
              dt: float = 0.1) -> float:
    """Magnitude of the weight change of one canonical pairing at weight ``w``."""
    if w < 0:
        raise ValueError("w must be >= 0")
    a, b = episode_map(params, kind, dt)
    return abs(_episode_weight(w, a, b) - w)


def apply_pairing(synapse: Synapse, kind: PairingKind, params: PlasticityParams,
                  dt_integration: float = 0.1) -> Synapse:
    kind = PairingKind(kind)
    if kind is PairingKind.NO_CHANGE:
        return synapse
    a, b = episode_map(params, kind, dt_integration)
    n = int(round(params.episode_duration / dt_integration))
    ca_end = params.peak_calcium(kind) * math.exp(-n * dt_integration / params.tau_ca_syn)
    new = synapse.with_weight(_episode_weight(synapse.g_peak, a, b))
    return Synapse(pre=new.pre, post=new.post, role=new.role, g_peak=new.g_peak,
                   tau=new.tau, e_syn=new.e_syn, pre_spike_times=new.pre_spike_times,
                   ca_trace=ca_end)


def pairing_outcome(kind: PairingKind, w: float, params: PlasticityParams,
                    dt: float = 0.1) -> PairingOutcome:
    kind = PairingKind(kind)
    a, b = episode_map(params, kind, dt)
    dw = _episode_weight(w, a, b) - w
    if dw == 0:
        return PairingOutcome(PairingKind.NO_CHANGE, 0.0)
    return PairingOutcome(kind, dw)


@njit(cache=True)
def _quantized_kernel(dg, w0, a, b, max_pulses, n_out, w_out):
    for k in range(dg.shape[0]):
        w = w0[k]
        step = max(a * w + b, 0.0) - w
        target = dg[k] - 0.5 * abs(step)
        n = 0
        cum = 0.0
        if dg[k] > 0:
            while n < max_pulses and cum < target:
                nxt = max(a * w + b, 0.0)
                cum += abs(nxt - w)
                w = nxt
                n += 1
        n_out[k] = n
        w_out[k] = w


def quantized_potentiation(dg, w, params: PlasticityParams, max_pulses: int,
                           dt: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Pulse counts for requested increments ``dg`` and the weights they realise.

    Counts obey the quantisation rule of ``pulses_required``; the returned
    weights are the result of applying that many canonical pairings.
    """
    dg = np.ascontiguousarray(dg, dtype=float).ravel()
    w = np.ascontiguousarray(w, dtype=float).ravel()
    if dg.shape != w.shape:
        raise ValueError("dg and w must have the same size")
    if np.any(dg < 0):
        raise ValueError("dg magnitudes must be >= 0")
    a, b = episode_map(params, PairingKind.POTENTIATE, dt)
    n = np.zeros(dg.shape[0], dtype=np.int64)
    w_new = np.empty_like(w)
    _quantized_kernel(dg, w, a, b, int(max_pulses), n, w_new)
    return n, w_new


def pulses_required(dg_magnitude: float, w_current: float, params: PlasticityParams,
                    max_pulses: int, dt: float = 0.1) -> int:
    """Smallest n whose sequential pairing sum reaches ``dg − dw_single(w)/2``, capped."""
    if dg_magnitude < 0:
        raise ValueError("dg_magnitude must be >= 0")
    n, _ = quantized_potentiation([dg_magnitude], [w_current], params, max_pulses, dt)
    return int(n[0])


# ---------------------------------------------------------------------------
# online rule, used for simulated optical sessions
# ---------------------------------------------------------------------------

@njit(cache=True)
def online_synapse_step(ca, w, pre_spiked, post_spiked, t, t_pre_last, t_post_last, pp, dt):
    """One step of the event-driven calcium rule for a single synapse.

    ``t_pre_last`` / ``t_post_last`` are the latest spike times strictly
    before this step.  Returns the updated (calcium, weight); the returned
    calcium has already decayed over the step.
    """
    window = pp[PP_WINDOW]
    if pre_spiked:
        ca += pp[PP_Q_PRE]
        if t - t_post_last <= window + 1e-9:
            ca += pp[PP_Q_DEP]
    if post_spiked:
        tp = t if pre_spiked else t_pre_last
        if t - tp <= window + 1e-9:
            ca += pp[PP_Q_PAIR]
    if ca > 1e-12:
        half = math.exp(-0.5 * dt / pp[PP_TAU])
        mid = ca * half
        e = eta_packed(mid, pp)
        w = w + dt * e * (omega_packed(mid, pp) - pp[PP_LAMBDA] * w)
        if w < 0.0:
            w = 0.0
        ca = mid * half
    else:
        ca = 0.0
    return ca, w


@njit(cache=True)
def _online_pair_kernel(w, step_pre, step_post, n_steps, pp, dt):
    ca = 0.0
    t_pre = -1e18
    t_post = -1e18
    for k in range(n_steps):
        t = (k + 1) * dt
        pre = k + 1 == step_pre
        post = k + 1 == step_post
        ca, w = online_synapse_step(ca, w, pre, post, t, t_pre, t_post, pp, dt)
        if pre:
            t_pre = t
        if post:
            t_post = t
    return w


def realize_pairing_online(t_pre: float, t_post: float, w: float, params: PlasticityParams,
                           dt: float = 0.1) -> float:
    """Weight after an isolated pre/post spike pair, integrated with the online rule."""
    s_pre = int(round(t_pre / dt))
    s_post = int(round(t_post / dt))
    if min(s_pre, s_post) < 1:
        raise ValueError("spike times must be >= dt")
    n = max(s_pre, s_post) + int(round(params.episode_duration / dt))
    return float(_online_pair_kernel(float(w), s_pre, s_post, n, params.packed(), dt))


def integrate_constant_calcium(w0: float, ca: float, duration: float,
                               params: PlasticityParams) -> float:
    """Integrate the rate equation with calcium held fixed; exact exponential solution."""
    e = eta(ca, params)
    lam = params.lambda_decay
    om = omega(ca, params)
    if lam == 0:
        return max(w0 + e * om * duration, 0.0)
    w_star = om / lam
    return max(w_star + (w0 - w_star) * math.exp(-e * lam * duration), 0.0)
