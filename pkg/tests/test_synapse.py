import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optostdp.network import NetworkConfig, Topology, build_network, encode_input, forward_pass
from optostdp.synapse import (
    TRUNCATION_TAUS, Role, Synapse, alpha_conductance, alpha_kernel, excitatory_current,
    inhibitory_current, layer_net_input, reference_potential, spikes_to_synapse,
    synaptic_current,
)
from oracles import alpha_sum

spike_lists = st.lists(st.floats(0.0, 200.0, allow_nan=False), max_size=12).map(sorted)


class TestAlphaConductance:
    def test_no_spikes(self):
        assert alpha_conductance(Synapse(0, 1, Role.EXCITATORY, 0.4), 10.0) == 0.0

    def test_peak_at_tau(self):
        syn = spikes_to_synapse(0, 1, Role.EXCITATORY, 0.7, [3.0], tau=5.0)
        assert abs(alpha_conductance(syn, 8.0) - 0.7 * math.exp(-1)) < 1e-9

    def test_kernel_maximum_is_at_tau(self):
        grid = np.linspace(0, 40, 40001)
        vals = [alpha_kernel(x, 5.0) for x in grid]
        assert grid[int(np.argmax(vals))] == pytest.approx(5.0, abs=1e-3)

    def test_two_spike_sum(self):
        tau, g, t0 = 5.0, 0.3, 2.0
        syn = spikes_to_synapse(0, 1, Role.EXCITATORY, g, [t0, t0 + tau], tau=tau)
        expected = g * (2 * math.exp(-2) + math.exp(-1))
        assert alpha_conductance(syn, t0 + 2 * tau) == pytest.approx(expected, rel=1e-12)
        assert alpha_sum(g, [t0, t0 + tau], t0 + 2 * tau, tau) == pytest.approx(expected, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(spike_lists, st.floats(0.0, 250.0), st.floats(0.0, 2.0))
    def test_matches_direct_sum(self, times, t, g):
        syn = Synapse(0, 1, Role.EXCITATORY, g, pre_spike_times=tuple(times))
        assert alpha_conductance(syn, t, truncate=False) == pytest.approx(
            alpha_sum(g, times, t, 5.0), rel=1e-12, abs=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(spike_lists, spike_lists, st.floats(0.0, 250.0))
    def test_linearity(self, a, b, t):
        g = 0.5
        sa = Synapse(0, 1, Role.EXCITATORY, g, pre_spike_times=tuple(a))
        sb = Synapse(0, 1, Role.EXCITATORY, g, pre_spike_times=tuple(b))
        su = Synapse(0, 1, Role.EXCITATORY, g, pre_spike_times=tuple(sorted(a + b)))
        total = alpha_conductance(su, t, truncate=False)
        parts = alpha_conductance(sa, t, truncate=False) + alpha_conductance(sb, t, truncate=False)
        assert total == pytest.approx(parts, rel=1e-12, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(spike_lists, st.floats(0.0, 200.0), st.floats(0.1, 100.0))
    def test_causality(self, times, t, later):
        g = 1.0
        syn = Synapse(0, 1, Role.EXCITATORY, g, pre_spike_times=tuple(times))
        extended = Synapse(0, 1, Role.EXCITATORY, g,
                           pre_spike_times=tuple(times) + (200.0 + later,))
        assert alpha_conductance(syn, t) == alpha_conductance(extended, t)

    def test_truncation_bound(self):
        tau = 5.0
        bound = TRUNCATION_TAUS * math.exp(-TRUNCATION_TAUS)
        assert bound < 0.003
        syn = spikes_to_synapse(0, 1, Role.EXCITATORY, 1.0, [0.0], tau=tau)
        t = TRUNCATION_TAUS * tau + 0.01
        dropped = alpha_conductance(syn, t, truncate=False) - alpha_conductance(syn, t)
        assert 0 < dropped < 0.003

    def test_record_spike_drops_old_history(self):
        syn = spikes_to_synapse(0, 1, Role.EXCITATORY, 1.0, [0.0, 10.0, 100.0], tau=5.0)
        assert syn.pre_spike_times == (100.0,)

    def test_record_spike_in_order(self):
        syn = spikes_to_synapse(0, 1, Role.EXCITATORY, 1.0, [10.0])
        with pytest.raises(ValueError):
            syn.record_spike(5.0)


class TestCurrents:
    def test_excitatory_examples(self):
        assert excitatory_current(0.0, -65.0, 0.0) == 0.0
        assert excitatory_current(0.3, 0.0, 0.0) == 0.0
        assert excitatory_current(0.2, -65.0, 0.0) == pytest.approx(-13.0)

    def test_inhibitory_examples(self):
        assert inhibitory_current(0.0, -65.0, 80.0) == 0.0
        assert inhibitory_current(0.3, -80.0, 80.0) == 0.0
        assert inhibitory_current(0.2, -65.0, 80.0) == pytest.approx(3.0)

    def test_negative_conductance_rejected(self):
        with pytest.raises(ValueError):
            excitatory_current(-0.1, -65.0, 0.0)
        with pytest.raises(ValueError):
            inhibitory_current(-0.1, -65.0, 80.0)

    def test_role_dispatch(self):
        exc = Synapse(0, 1, Role.EXCITATORY, 1.0)
        inh = Synapse(0, 1, Role.INHIBITORY, 1.0)
        assert exc.e_syn == 0.0 and inh.e_syn == 80.0
        assert synaptic_current(exc, 0.2, -65.0) == pytest.approx(-13.0)
        assert synaptic_current(inh, 0.2, -65.0) == pytest.approx(3.0)

    def test_reference_potential_balances_driving_forces(self):
        v = reference_potential(0.0, 80.0)
        assert v == -40.0
        assert excitatory_current(1.0, v, 0.0) == -inhibitory_current(1.0, v, 80.0)


class TestNonNegativity:
    def test_negative_g_rejected_on_construction(self):
        with pytest.raises(ValueError):
            Synapse(0, 1, Role.EXCITATORY, -0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 2.0), st.lists(st.floats(-1.0, 1.0), max_size=50))
    def test_decrements_clamp_at_zero(self, g0, steps):
        syn = Synapse(0, 1, Role.INHIBITORY, g0)
        for dg in steps:
            syn = syn.adjust(dg)
            assert syn.g_peak >= 0.0

    def test_requested_negative_weight_becomes_zero(self):
        assert Synapse(0, 1, Role.EXCITATORY, 0.2).with_weight(-3.0).g_peak == 0.0


class TestLayerNetInput:
    def test_empty(self):
        assert layer_net_input([], [], 10.0, -65.0) == 0.0

    def test_inhibition_reduces_drive(self):
        exc = spikes_to_synapse(0, 5, Role.EXCITATORY, 0.5, [1.0])
        inh = spikes_to_synapse(1, 5, Role.INHIBITORY, 0.5, [1.0])
        only_exc = -layer_net_input([exc], [], 6.0, -65.0)
        both = -layer_net_input([exc], [inh], 6.0, -65.0)
        assert both < only_exc

    def test_rejects_mixed_posts(self):
        a = Synapse(0, 5, Role.EXCITATORY, 0.5)
        b = Synapse(1, 6, Role.INHIBITORY, 0.5)
        with pytest.raises(ValueError, match="several neurons"):
            layer_net_input([a], [b], 1.0, -65.0)

    def test_rejects_wrong_roles(self):
        a = Synapse(0, 5, Role.INHIBITORY, 0.5)
        with pytest.raises(ValueError):
            layer_net_input([a], [], 1.0, -65.0)

    def test_xor_hidden_drive_monotone_in_input(self):
        net = build_network(Topology(2, 20, 2), seed=0, config=NetworkConfig())
        net.g_ih_inh[:] = 0.0  # excitatory-only

        def hidden_spikes(x):
            tr = forward_pass(net, encode_input(x, net.config.i_max))
            return int(tr.hidden_pairs.sum())

        assert hidden_spikes([1.0, 0.2]) > hidden_spikes([0.2, 0.2])
