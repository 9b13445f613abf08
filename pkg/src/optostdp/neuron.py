"""Point-neuron dynamics: a conductance-based neuron with a light-gated ChR2
channel (the ``full`` back-end) and a leaky integrate-and-fire reduction
(the ``fast`` back-end).

Membrane equation of the full back-end (µF/cm², mS/cm², mV, ms, µA/cm²)::

    C dV/dt = -(I_syn + I_Na + I_Kdr + I_KA + I_Kahp + I_Kc + I_Ca
                + I_ChR2 + I_Leak + gc * V)

Every current uses the outward-positive convention, so a negative ``i_syn``
depolarises.  Gating variables advance with the Rush-Larsen (exponential)
update, which keeps them inside [0, 1] up to the 0.5 ms step bound; the
voltage uses exponential Euler by default and plain forward Euler on request.

Channel kinetics are Hodgkin-Huxley style.  The numeric defaults are
calibration products (silent at rest, one spike per 5 ms, 1 mW/mm² light
pulse), not measured values.

The kernels work on packed ``float64`` state rows so that populations can be
stepped in a single compiled loop; the dataclasses below are the public view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numba import njit
from scipy.optimize import brentq


class IntegrationDiverged(FloatingPointError):
    """Raised when a state variable becomes non-finite during a step."""


CHANNELS = ("Na", "Kdr", "KA", "Kahp", "Kc", "Ca", "ChR2", "Leak")
GATES = ("m", "h", "n", "a", "b", "s", "q", "c")

# packed state row
SV_V, SV_M, SV_H, SV_N, SV_A, SV_B, SV_S, SV_Q, SV_C = range(9)
SV_CA, SV_CLOSED, SV_OPEN, SV_DES, SV_T, SV_LAST = range(9, 15)
N_STATE = 15

# packed parameter row
(P_CM, P_GNA, P_GKDR, P_GKA, P_GKAHP, P_GKC, P_GCA, P_GCHR2, P_GL, P_GC,
 P_ENA, P_EK, P_ECA, P_ECHR2, P_EL, P_THRESH, P_REFR, P_TAU_CA, P_CA_INFLUX,
 P_KAHP_HALF, P_TAU_Q, P_KC_HALF, P_CHR2_KA, P_CHR2_KD, P_CHR2_KR,
 P_EXP_V) = range(26)
N_PARAM = 26

_GATE_SLOT = {"m": SV_M, "h": SV_H, "n": SV_N, "a": SV_A, "b": SV_B,
              "s": SV_S, "q": SV_Q, "c": SV_C}

DEFAULT_CONDUCTANCES = {"Na": 120.0, "Kdr": 36.0, "KA": 4.0, "Kahp": 0.8,
                        "Kc": 4.0, "Ca": 0.5, "ChR2": 1.6, "Leak": 0.3}
DEFAULT_REVERSALS = {"Na": 50.0, "Kdr": -77.0, "KA": -77.0, "Kahp": -77.0,
                     "Kc": -77.0, "Ca": 120.0, "ChR2": 0.0, "Leak": -54.4}


# ---------------------------------------------------------------------------
# rate functions (scalar, compiled)
# ---------------------------------------------------------------------------

@njit(cache=True, error_model="numpy")
def _vtrap(x, y):
    # x / (exp(x/y) - 1) with the removable singularity at x = 0
    r = x / y
    if abs(r) < 1e-6:
        return y * (1.0 - 0.5 * r)
    return x / (math.exp(r) - 1.0)


@njit(cache=True, error_model="numpy")
def _sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


@njit(cache=True, error_model="numpy")
def _gate_targets(v, ca, p, out):
    """Fill ``out`` with (x_inf, tau) pairs for the eight gates."""
    am = 0.1 * _vtrap(-(v + 40.0), 10.0)
    bm = 4.0 * math.exp(-(v + 65.0) / 18.0)
    ah = 0.07 * math.exp(-(v + 65.0) / 20.0)
    bh = 1.0 / (1.0 + math.exp(-(v + 35.0) / 10.0))
    an = 0.01 * _vtrap(-(v + 55.0), 10.0)
    bn = 0.125 * math.exp(-(v + 65.0) / 80.0)
    out[0, 0] = am / (am + bm)
    out[0, 1] = 1.0 / (am + bm)
    out[1, 0] = ah / (ah + bh)
    out[1, 1] = 1.0 / (ah + bh)
    out[2, 0] = an / (an + bn)
    out[2, 1] = 1.0 / (an + bn)
    # A-type K: fast activation, slow inactivation
    out[3, 0] = _sigmoid((v + 45.0) / 14.5)
    out[3, 1] = 1.0
    out[4, 0] = _sigmoid(-(v + 70.0) / 7.5)
    out[4, 1] = 15.0
    # high-voltage activated Ca
    out[5, 0] = _sigmoid((v + 25.0) / 5.0)
    out[5, 1] = 1.0
    # Kahp: slow, calcium gated
    caf = max(ca, 0.0)
    out[6, 0] = caf / (caf + p[P_KAHP_HALF])
    out[6, 1] = p[P_TAU_Q]
    # Kc voltage gate (the calcium factor multiplies it in the current)
    out[7, 0] = _sigmoid((v + 10.0) / 7.0)
    out[7, 1] = 1.0


@njit(cache=True, error_model="numpy")
def _channel_terms(st, p):
    """Return (total conductance, sum g*E, I_Ca) for the current state."""
    v = st[SV_V]
    ca = max(st[SV_CA], 0.0)
    g_na = p[P_GNA] * st[SV_M] ** 3 * st[SV_H]
    g_kdr = p[P_GKDR] * st[SV_N] ** 4
    g_ka = p[P_GKA] * st[SV_A] ** 3 * st[SV_B]
    g_kahp = p[P_GKAHP] * st[SV_Q]
    g_kc = p[P_GKC] * st[SV_C] * ca / (ca + p[P_KC_HALF])
    g_ca = p[P_GCA] * st[SV_S] ** 2
    g_chr2 = p[P_GCHR2] * st[SV_OPEN]
    g_l = p[P_GL]
    g_k = g_kdr + g_ka + g_kahp + g_kc
    g_tot = g_na + g_k + g_ca + g_chr2 + g_l + p[P_GC]
    g_e = (g_na * p[P_ENA] + g_k * p[P_EK] + g_ca * p[P_ECA]
           + g_chr2 * p[P_ECHR2] + g_l * p[P_EL])
    i_ca = g_ca * (v - p[P_ECA])
    return g_tot, g_e, i_ca


@njit(cache=True, error_model="numpy")
def _full_step_row(st, p, i_syn, irr, dt, work):
    """Advance one packed state row in place; return True on a spike."""
    v0 = st[SV_V]
    g_tot, g_e, i_ca = _channel_terms(st, p)
    cm = p[P_CM]
    if p[P_EXP_V] > 0.5:
        v_inf = (g_e - i_syn) / g_tot
        v1 = v_inf + (v0 - v_inf) * math.exp(-dt * g_tot / cm)
    else:
        v1 = v0 + dt * (g_e - g_tot * v0 - i_syn) / cm

    _gate_targets(v0, st[SV_CA], p, work)
    for k in range(8):
        x_inf = work[k, 0]
        st[SV_M + k] = x_inf + (st[SV_M + k] - x_inf) * math.exp(-dt / work[k, 1])

    tau_ca = p[P_TAU_CA]
    ca_inf = -p[P_CA_INFLUX] * i_ca * tau_ca
    ca1 = ca_inf + (st[SV_CA] - ca_inf) * math.exp(-dt / tau_ca)
    st[SV_CA] = max(ca1, 0.0)

    # photocycle: each outflow is the exact fraction leaving in dt, so the
    # three fractions stay in [0, 1] and their sum is conserved
    c, o, d = st[SV_CLOSED], st[SV_OPEN], st[SV_DES]
    f_co = c * (1.0 - math.exp(-p[P_CHR2_KA] * irr * dt))
    f_od = o * (1.0 - math.exp(-p[P_CHR2_KD] * dt))
    f_dc = d * (1.0 - math.exp(-p[P_CHR2_KR] * dt))
    c = c - f_co + f_dc
    o = o + f_co - f_od
    st[SV_CLOSED] = c
    st[SV_OPEN] = o
    st[SV_DES] = 1.0 - c - o

    st[SV_V] = v1
    t1 = st[SV_T] + dt
    st[SV_T] = t1
    last = st[SV_LAST]
    spiked = False
    if v0 < p[P_THRESH] <= v1:
        if math.isnan(last) or t1 - last >= p[P_REFR] - 1e-9:
            spiked = True
            st[SV_LAST] = t1
    return spiked


@njit(cache=True, error_model="numpy")
def _full_step_many(states, p, i_syn, irr, dt, spiked):
    work = np.empty((8, 2))
    bad = -1
    for j in range(states.shape[0]):
        spiked[j] = _full_step_row(states[j], p, i_syn[j], irr[j], dt, work)
        if bad < 0:
            for k in range(SV_T):
                if not math.isfinite(states[j, k]):
                    bad = j
                    break
    return bad


# ---------------------------------------------------------------------------
# public types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeuronParams:
    """Parameters of the full conductance-based neuron.

    Conductances in mS/cm², potentials in mV, times in ms.  Calcium is in
    normalised units; ``ca_influx`` converts inward Ca current (µA/cm²) into
    calcium per ms.  ChR2 rates are per ms, and the opening rate is further
    multiplied by irradiance in mW/mm².
    """

    membrane_capacitance: float = 1.0
    channel_peak_conductances: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CONDUCTANCES))
    reversal_potentials: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_REVERSALS))
    coupling_conductance_gc: float = 0.0
    spike_threshold: float = -20.0
    refractory_period: float = 2.0
    tau_ca: float = 20.0
    ca_influx: float = 0.002
    kahp_half_ca: float = 0.5
    tau_kahp: float = 50.0
    kc_half_ca: float = 0.2
    chr2_activation: float = 0.5
    chr2_desensitization: float = 0.2
    chr2_recovery: float = 0.05
    voltage_integrator: str = "exponential"

    def __post_init__(self):
        g = {**DEFAULT_CONDUCTANCES, **dict(self.channel_peak_conductances)}
        e = {**DEFAULT_REVERSALS, **dict(self.reversal_potentials)}
        unknown = (set(g) | set(e)) - set(CHANNELS)
        if unknown:
            raise ValueError(f"unknown channel ids: {sorted(unknown)}")
        object.__setattr__(self, "channel_peak_conductances", g)
        object.__setattr__(self, "reversal_potentials", e)
        for name, val in g.items():
            if val < 0:
                raise ValueError(f"conductance of {name} must be >= 0, got {val}")
        if self.coupling_conductance_gc < 0:
            raise ValueError("coupling_conductance_gc must be >= 0")
        if self.membrane_capacitance <= 0:
            raise ValueError("membrane_capacitance must be > 0")
        if self.refractory_period <= 0:
            raise ValueError("refractory_period must be > 0")
        if not e["Leak"] < self.spike_threshold < e["Na"]:
            raise ValueError("spike_threshold must lie between the leak and Na reversals")
        if self.voltage_integrator not in ("exponential", "euler"):
            raise ValueError("voltage_integrator must be 'exponential' or 'euler'")
        for name in ("tau_ca", "tau_kahp", "kahp_half_ca", "kc_half_ca"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("ca_influx", "chr2_activation", "chr2_desensitization", "chr2_recovery"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def __hash__(self):
        return hash(tuple(self.packed()))

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d["channel_peak_conductances"] = dict(self.channel_peak_conductances)
        d["reversal_potentials"] = dict(self.reversal_potentials)
        return d

    def packed(self) -> np.ndarray:
        g, e = self.channel_peak_conductances, self.reversal_potentials
        p = np.zeros(N_PARAM)
        p[P_CM] = self.membrane_capacitance
        p[P_GNA], p[P_GKDR], p[P_GKA] = g["Na"], g["Kdr"], g["KA"]
        p[P_GKAHP], p[P_GKC], p[P_GCA] = g["Kahp"], g["Kc"], g["Ca"]
        p[P_GCHR2], p[P_GL] = g["ChR2"], g["Leak"]
        p[P_GC] = self.coupling_conductance_gc
        p[P_ENA], p[P_EK], p[P_ECA] = e["Na"], e["Kdr"], e["Ca"]
        p[P_ECHR2], p[P_EL] = e["ChR2"], e["Leak"]
        if not (e["Kdr"] == e["KA"] == e["Kahp"] == e["Kc"]):
            raise ValueError("all potassium channels must share one reversal potential")
        p[P_THRESH] = self.spike_threshold
        p[P_REFR] = self.refractory_period
        p[P_TAU_CA] = self.tau_ca
        p[P_CA_INFLUX] = self.ca_influx
        p[P_KAHP_HALF] = self.kahp_half_ca
        p[P_TAU_Q] = self.tau_kahp
        p[P_KC_HALF] = self.kc_half_ca
        p[P_CHR2_KA] = self.chr2_activation
        p[P_CHR2_KD] = self.chr2_desensitization
        p[P_CHR2_KR] = self.chr2_recovery
        p[P_EXP_V] = 1.0 if self.voltage_integrator == "exponential" else 0.0
        return p


@dataclass(frozen=True)
class ChR2State:
    closed: float = 1.0
    open: float = 0.0
    desensitized: float = 0.0

    def __post_init__(self):
        for name in ("closed", "open", "desensitized"):
            val = getattr(self, name)
            if not -1e-12 <= val <= 1.0 + 1e-12:
                raise ValueError(f"ChR2 fraction {name}={val} outside [0, 1]")
        if abs(self.closed + self.open + self.desensitized - 1.0) > 1e-9:
            raise ValueError("ChR2 fractions must sum to 1")


@dataclass(frozen=True)
class NeuronState:
    v: float
    gating: Mapping[str, float]
    ca_internal: float = 0.0
    chr2: ChR2State = field(default_factory=ChR2State)
    last_spike_time: float | None = None
    t: float = 0.0

    def __post_init__(self):
        missing = set(GATES) - set(self.gating)
        if missing:
            raise ValueError(f"missing gating variables: {sorted(missing)}")
        for name, val in self.gating.items():
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"gating variable {name}={val} outside [0, 1]")
        if self.ca_internal < 0:
            raise ValueError("ca_internal must be >= 0")

    def packed(self) -> np.ndarray:
        row = np.empty(N_STATE)
        row[SV_V] = self.v
        for name, slot in _GATE_SLOT.items():
            row[slot] = self.gating[name]
        row[SV_CA] = self.ca_internal
        row[SV_CLOSED] = self.chr2.closed
        row[SV_OPEN] = self.chr2.open
        row[SV_DES] = self.chr2.desensitized
        row[SV_T] = self.t
        row[SV_LAST] = np.nan if self.last_spike_time is None else self.last_spike_time
        return row

    @classmethod
    def from_packed(cls, row: np.ndarray) -> "NeuronState":
        last = float(row[SV_LAST])
        des = min(max(float(row[SV_DES]), 0.0), 1.0)
        return cls(
            v=float(row[SV_V]),
            gating={name: min(max(float(row[slot]), 0.0), 1.0)
                    for name, slot in _GATE_SLOT.items()},
            ca_internal=max(float(row[SV_CA]), 0.0),
            chr2=ChR2State(float(row[SV_CLOSED]), float(row[SV_OPEN]), des),
            last_spike_time=None if math.isnan(last) else last,
            t=float(row[SV_T]),
        )


@dataclass(frozen=True)
class SpikeRecord:
    neuron_id: int
    spike_times: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "spike_times", tuple(float(t) for t in self.spike_times))
        if any(b <= a for a, b in zip(self.spike_times, self.spike_times[1:])):
            raise ValueError("spike_times must be strictly increasing")

    def check_refractory(self, refractory: float) -> None:
        for a, b in zip(self.spike_times, self.spike_times[1:]):
            if b - a < refractory - 1e-9:
                raise AssertionError(
                    f"neuron {self.neuron_id}: spikes at {a} and {b} closer than {refractory} ms")

    def __len__(self):
        return len(self.spike_times)


# ---------------------------------------------------------------------------
# full back-end operations
# ---------------------------------------------------------------------------

def chr2_current(chr2: ChR2State, v: float, g_chr2: float, e_chr2: float) -> float:
    """Photocurrent g·O·(V − E); negative (depolarising) below reversal."""
    return g_chr2 * chr2.open * (v - e_chr2)


def _steady_current(v: float, p: np.ndarray) -> tuple[float, np.ndarray]:
    work = np.empty((8, 2))
    row = np.zeros(N_STATE)
    row[SV_V] = v
    row[SV_CLOSED] = 1.0
    # Ca and the Ca-gated conductances depend on each other only through
    # the Ca current, which is independent of Ca itself
    _gate_targets(v, 0.0, p, work)
    for k in range(8):
        row[SV_M + k] = work[k, 0]
    i_ca = p[P_GCA] * row[SV_S] ** 2 * (v - p[P_ECA])
    ca = max(-p[P_CA_INFLUX] * i_ca * p[P_TAU_CA], 0.0)
    row[SV_CA] = ca
    _gate_targets(v, ca, p, work)
    row[SV_Q] = work[6, 0]
    g_tot, g_e, _ = _channel_terms(row, p)
    return g_tot * v - g_e, row


def resting_state(params: NeuronParams) -> NeuronState:
    """Exact equilibrium of the full model with no input and no light."""
    p = params.packed()
    f = lambda v: _steady_current(v, p)[0]
    lo, hi = params.reversal_potentials["Kdr"] + 1e-6, params.spike_threshold
    if f(lo) * f(hi) > 0:
        raise ValueError("parameters have no resting equilibrium below the spike threshold")
    v_rest = brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    _, row = _steady_current(v_rest, p)
    row[SV_LAST] = np.nan
    return NeuronState.from_packed(row)


def step_conductance_neuron(state: NeuronState, params: NeuronParams, i_syn: float,
                            irradiance: float, dt: float) -> tuple[NeuronState, bool]:
    if not 0 < dt <= 0.5:
        raise ValueError(f"dt must be in (0, 0.5] ms, got {dt}")
    pop = FullPopulation(params, 1, initial=state)
    spiked = pop.step(np.array([i_syn]), np.array([irradiance]), dt)
    return pop.state(0), bool(spiked[0])


class FullPopulation:
    """A block of identical-parameter full neurons stepped together."""

    backend = "full"

    def __init__(self, params: NeuronParams, n: int, initial: NeuronState | None = None):
        self.params = params
        self._p = params.packed()
        row = (initial or resting_state(params)).packed()
        self.states = np.tile(row, (n, 1))
        self._spiked = np.zeros(n, dtype=np.bool_)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, SV_V]

    def step(self, i_syn: np.ndarray, irradiance: np.ndarray, dt: float) -> np.ndarray:
        bad = _full_step_many(self.states, self._p, np.asarray(i_syn, float),
                              np.asarray(irradiance, float), dt, self._spiked)
        if bad >= 0:
            raise IntegrationDiverged(
                f"neuron {bad} state became non-finite at t={self.states[bad, SV_T]:.3f} ms "
                f"(dt={dt} ms too large or pathological parameters)")
        return self._spiked.copy()

    def state(self, j: int) -> NeuronState:
        return NeuronState.from_packed(self.states[j])


# ---------------------------------------------------------------------------
# fast back-end
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FastParams:
    """Leaky integrate-and-fire reduction.

    ``light_current`` is the depolarising current (µA/cm²) substituted for
    1 mW/mm² of light; its default makes a 5 ms pulse yield one spike.
    """

    tau_m: float = 10.0
    v_rest: float = -65.0
    v_thresh: float = -50.0
    v_reset: float = -65.0
    refractory: float = 2.0
    capacitance: float = 1.0
    tau_ca: float = 20.0
    ca_per_spike: float = 0.1
    light_current: float = 6.5

    def __post_init__(self):
        if self.tau_m <= 0 or self.capacitance <= 0 or self.tau_ca <= 0:
            raise ValueError("tau_m, capacitance and tau_ca must be > 0")
        if self.refractory <= 0:
            raise ValueError("refractory must be > 0")
        if not self.v_reset < self.v_thresh or not self.v_rest < self.v_thresh:
            raise ValueError("v_rest and v_reset must lie below v_thresh")

    def packed(self) -> np.ndarray:
        return np.array([self.tau_m, self.v_rest, self.v_thresh, self.v_reset,
                         self.refractory, self.capacitance, self.tau_ca,
                         self.ca_per_spike, self.light_current])

    def firing_period(self, i_syn: float) -> float | None:
        """Analytic inter-spike interval for constant ``i_syn`` (no dt effects)."""
        v_inf = self.v_rest - i_syn * self.tau_m / self.capacitance
        if v_inf <= self.v_thresh:
            return None
        return self.refractory + self.tau_m * math.log(
            (v_inf - self.v_reset) / (v_inf - self.v_thresh))


@dataclass(frozen=True)
class FastState:
    v: float
    ca_internal: float = 0.0
    last_spike_time: float | None = None
    t: float = 0.0

    @classmethod
    def rest(cls, params: FastParams) -> "FastState":
        return cls(v=params.v_rest)


@njit(cache=True, error_model="numpy")
def _fast_step_many(v, ca, t, last, p, i_syn, irr, dt, spiked):
    tau_m, v_rest, v_th, v_reset, refr, cm = p[0], p[1], p[2], p[3], p[4], p[5]
    decay_m = math.exp(-dt / tau_m)
    decay_ca = math.exp(-dt / p[6])
    bad = -1
    for j in range(v.shape[0]):
        t1 = t[j] + dt
        ca[j] *= decay_ca
        spiked[j] = False
        if not math.isnan(last[j]) and t1 - last[j] <= refr + 1e-9:
            v[j] = v_reset
        else:
            i_tot = i_syn[j] - p[8] * irr[j]
            v_inf = v_rest - i_tot * tau_m / cm
            v[j] = v_inf + (v[j] - v_inf) * decay_m
            if v[j] >= v_th:
                spiked[j] = True
                v[j] = v_reset
                last[j] = t1
                ca[j] += p[7]
        t[j] = t1
        if bad < 0 and not math.isfinite(v[j]):
            bad = j
    return bad


def step_fast_neuron(state: FastState, params: FastParams, i_syn: float,
                     dt: float) -> tuple[FastState, bool]:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    pop = FastPopulation(params, 1, initial=state)
    spiked = pop.step(np.array([i_syn]), np.zeros(1), dt)
    return pop.state(0), bool(spiked[0])


class FastPopulation:
    backend = "fast"

    def __init__(self, params: FastParams, n: int, initial: FastState | None = None):
        self.params = params
        self._p = params.packed()
        init = initial or FastState.rest(params)
        self._v = np.full(n, init.v)
        self._ca = np.full(n, init.ca_internal)
        self._t = np.full(n, init.t)
        last = np.nan if init.last_spike_time is None else init.last_spike_time
        self._last = np.full(n, last)
        self._spiked = np.zeros(n, dtype=np.bool_)

    @property
    def n(self) -> int:
        return self._v.shape[0]

    @property
    def v(self) -> np.ndarray:
        return self._v

    def step(self, i_syn: np.ndarray, irradiance: np.ndarray, dt: float) -> np.ndarray:
        bad = _fast_step_many(self._v, self._ca, self._t, self._last, self._p,
                              np.asarray(i_syn, float), np.asarray(irradiance, float),
                              dt, self._spiked)
        if bad >= 0:
            raise IntegrationDiverged(f"fast neuron {bad} voltage became non-finite")
        return self._spiked.copy()

    def state(self, j: int) -> FastState:
        last = float(self._last[j])
        return FastState(v=float(self._v[j]), ca_internal=float(self._ca[j]),
                         last_spike_time=None if math.isnan(last) else last,
                         t=float(self._t[j]))


def simulate_light_protocol(params: NeuronParams, pulses, t_end: float, dt: float = 0.1):
    """Drive one full neuron with light pulses ``[(start, width, intensity)]``.

    Returns ``(t, v, irradiance, spiked)`` arrays sampled at the end of each step.
    """
    n = int(round(t_end / dt))
    pop = FullPopulation(params, 1)
    t = np.empty(n)
    v = np.empty(n)
    irr = np.zeros(n)
    spk = np.zeros(n, dtype=bool)
    zero = np.zeros(1)
    for k in range(n):
        t0 = k * dt
        for start, width, intensity in pulses:
            if start - 1e-9 <= t0 < start + width - 1e-9:
                irr[k] = intensity
        spk[k] = pop.step(zero, irr[k:k + 1], dt)[0]
        t[k] = (k + 1) * dt
        v[k] = pop.states[0, SV_V]
    return t, v, irr, spk


__all__ = [
    "CHANNELS", "GATES", "ChR2State", "FastParams", "FastPopulation", "FastState",
    "FullPopulation", "IntegrationDiverged", "NeuronParams", "NeuronState",
    "SpikeRecord", "chr2_current", "resting_state", "simulate_light_protocol",
    "step_conductance_neuron", "step_fast_neuron",
]
