"""Alpha-function synapses and the excitatory/inhibitory current forms.

Currents follow the neuron module's outward-positive convention: an
excitatory synapse below its reversal produces a negative (depolarising)
current.  Inhibitory reversal potentials are stored as positive magnitudes,
so the inhibitory current is ``g * (v + e_syn)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

E_EXC_DEFAULT = 0.0
E_INH_DEFAULT = 80.0
TAU_SYN_DEFAULT = 5.0
TRUNCATION_TAUS = 8.0


class Role(str, Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"


@dataclass(frozen=True)
class Synapse:
    pre: int
    post: int
    role: Role
    g_peak: float
    tau: float = TAU_SYN_DEFAULT
    e_syn: float | None = None
    pre_spike_times: tuple[float, ...] = ()
    ca_trace: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.e_syn is None:
            default = E_EXC_DEFAULT if self.role is Role.EXCITATORY else E_INH_DEFAULT
            object.__setattr__(self, "e_syn", default)
        if self.g_peak < 0:
            raise ValueError(f"g_peak must be >= 0, got {self.g_peak}")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.ca_trace < 0:
            raise ValueError("ca_trace must be >= 0")
        times = tuple(float(t) for t in self.pre_spike_times)
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("pre_spike_times must be sorted ascending")
        object.__setattr__(self, "pre_spike_times", times)

    def with_weight(self, g: float) -> "Synapse":
        """Copy with a new peak conductance; negative requests clamp to 0."""
        return replace(self, g_peak=max(0.0, float(g)))

    def adjust(self, dg: float) -> "Synapse":
        return self.with_weight(self.g_peak + dg)

    def record_spike(self, t: float) -> "Synapse":
        """Append a presynaptic spike, dropping history older than the truncation horizon."""
        if self.pre_spike_times and t < self.pre_spike_times[-1]:
            raise ValueError("spikes must be recorded in time order")
        horizon = t - TRUNCATION_TAUS * self.tau
        kept = tuple(s for s in self.pre_spike_times if s >= horizon)
        return replace(self, pre_spike_times=kept + (float(t),))


def alpha_kernel(dt_since: float, tau: float) -> float:
    """Unit-peak-conductance alpha waveform (Δt/τ)·exp(−Δt/τ); zero for Δt < 0."""
    if dt_since < 0:
        return 0.0
    x = dt_since / tau
    return x * math.exp(-x)


def alpha_conductance(synapse: Synapse, t: float, truncate: bool = True) -> float:
    """Summed alpha conductance at time ``t`` over recorded spikes with t_i ≤ t.

    With ``truncate`` set, spikes older than 8τ are skipped; each dropped term
    is below 8·e⁻⁸ ≈ 0.27% of g_peak.
    """
    total = 0.0
    horizon = TRUNCATION_TAUS * synapse.tau
    for ti in synapse.pre_spike_times:
        d = t - ti
        if d < 0 or (truncate and d > horizon):
            continue
        total += alpha_kernel(d, synapse.tau)
    return synapse.g_peak * total


def excitatory_current(g_syn: float, v: float, e_syn: float) -> float:
    if g_syn < 0:
        raise ValueError("g_syn must be >= 0")
    return g_syn * (v - e_syn)


def inhibitory_current(g_syn: float, v: float, e_syn: float) -> float:
    if g_syn < 0:
        raise ValueError("g_syn must be >= 0")
    return g_syn * (v + e_syn)


def synaptic_current(synapse: Synapse, g_syn: float, v: float) -> float:
    if synapse.role is Role.EXCITATORY:
        return excitatory_current(g_syn, v, synapse.e_syn)
    return inhibitory_current(g_syn, v, synapse.e_syn)


def reference_potential(e_exc: float = E_EXC_DEFAULT, e_inh: float = E_INH_DEFAULT) -> float:
    """Potential at which excitatory and inhibitory driving forces are equal.

    The fast back-end evaluates its current-based synapses here, so one unit
    of excitatory and one unit of inhibitory conductance cancel exactly.
    """
    return 0.5 * (e_exc - e_inh)


def layer_net_input(excitatory: Sequence[Synapse], inhibitory: Sequence[Synapse],
                    t: float, v_j: float) -> float:
    """Total synaptic current into neuron ``j`` (outward positive).

    The net drive seen by the neuron is the negative of this value, i.e. the
    excitatory contribution minus the inhibitory one.
    """
    posts = {s.post for s in excitatory} | {s.post for s in inhibitory}
    if len(posts) > 1:
        raise ValueError(f"synapses target several neurons: {sorted(posts)}")
    for s in excitatory:
        if s.role is not Role.EXCITATORY:
            raise ValueError("inhibitory synapse passed in the excitatory list")
    for s in inhibitory:
        if s.role is not Role.INHIBITORY:
            raise ValueError("excitatory synapse passed in the inhibitory list")
    i_exc = sum(excitatory_current(alpha_conductance(s, t), v_j, s.e_syn) for s in excitatory)
    i_inh = sum(inhibitory_current(alpha_conductance(s, t), v_j, s.e_syn) for s in inhibitory)
    return i_exc + i_inh


def spikes_to_synapse(pre: int, post: int, role: Role, g_peak: float,
                      spike_times: Iterable[float], **kwargs) -> Synapse:
    syn = Synapse(pre=pre, post=post, role=role, g_peak=g_peak, **kwargs)
    for t in spike_times:
        syn = syn.record_spike(t)
    return syn
