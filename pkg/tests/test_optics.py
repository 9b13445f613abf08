import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optostdp.network import NetworkConfig, Topology, WeightInit, build_network, simulate
from optostdp.optics import (
    WAVELENGTH_NM, InvalidProtocol, LightPulse, PairingProtocol, ScheduleOverflow,
    StimulationSchedule, irradiance_at, make_pulse_train, schedule_from_pulses,
    schedule_pairings,
)
from optostdp.plasticity import PairingKind, PlasticityParams, episode_map

P = PlasticityParams()


def sequential_ideal(w0, n, kind):
    a, b = episode_map(P, kind, 0.1)
    w = w0
    for _ in range(n):
        w = max(a * w + b, 0.0)
    return w - w0


class TestPulseTrain:
    def test_empty(self):
        assert make_pulse_train(0) == []

    def test_protocol_starts(self):
        train = make_pulse_train(3, start=0.0, width=5.0, period=55.0)
        assert [p.start for p in train] == [0.0, 55.0, 110.0]
        assert all(p.width == 5.0 and p.intensity == 1.0 for p in train)
        assert all(p.wavelength == WAVELENGTH_NM == 473.0 for p in train)

    def test_period_must_exceed_width(self):
        with pytest.raises(InvalidProtocol):
            make_pulse_train(2, width=5.0, period=4.0)

    def test_pulse_validation(self):
        with pytest.raises(InvalidProtocol):
            LightPulse(0.0, width=0.0)
        with pytest.raises(InvalidProtocol):
            LightPulse(0.0, intensity=-1.0)

    def test_pulse_cover_is_half_open(self):
        p = LightPulse(10.0, 5.0)
        assert p.covers(10.0) and p.covers(14.99) and not p.covers(15.0)


class TestSchedule:
    def test_zero_pairings(self):
        s = schedule_pairings(0, 4, 0, PairingKind.POTENTIATE)
        assert len(s) == 0 and s.horizon == 0.0

    def test_potentiate_ordering(self):
        proto = PairingProtocol(dt_pair=4.0)
        s = schedule_pairings(0, 4, 1, PairingKind.POTENTIATE, proto)
        starts = {n: p.start for n, p in s.entries}
        assert starts[4] - starts[0] == pytest.approx(4.0)
        assert starts[0] == proto.lead

    def test_depress_ordering(self):
        s = schedule_pairings(0, 4, 1, PairingKind.DEPRESS)
        starts = {n: p.start for n, p in s.entries}
        assert starts[0] - starts[4] == pytest.approx(4.0)

    def test_successive_pairings_do_not_bleed(self):
        s = schedule_pairings(0, 4, 3, PairingKind.POTENTIATE)
        pre = [p.start for n, p in s.entries if n == 0]
        assert np.all(np.diff(pre) >= P.episode_duration)

    def test_pairs_can_be_lit_together(self):
        s = schedule_pairings(0, [4, 5], 2, PairingKind.POTENTIATE)
        assert s.neurons() == {0, 4, 5}
        assert len(s) == 6

    def test_no_change_is_not_schedulable(self):
        with pytest.raises(InvalidProtocol):
            schedule_pairings(0, 4, 1, PairingKind.NO_CHANGE)

    def test_pre_equals_post_rejected(self):
        with pytest.raises(InvalidProtocol):
            schedule_pairings(3, 3, 1, PairingKind.POTENTIATE)

    def test_dt_pair_must_fit_window(self):
        with pytest.raises(InvalidProtocol, match="pairing window"):
            schedule_pairings(0, 4, 1, PairingKind.POTENTIATE, PairingProtocol(dt_pair=6.0),
                              pairing_window=5.0)

    def test_overflow(self):
        with pytest.raises(ScheduleOverflow):
            schedule_pairings(0, 4, 10_000, PairingKind.POTENTIATE)

    def test_overlapping_pulses_rejected(self):
        with pytest.raises(InvalidProtocol, match="overlapping"):
            StimulationSchedule(((0, LightPulse(0.0)), (0, LightPulse(3.0))), 20.0)

    def test_pulse_past_horizon_rejected(self):
        with pytest.raises(ScheduleOverflow):
            StimulationSchedule(((0, LightPulse(18.0)),), 20.0)

    def test_protocol_validation(self):
        with pytest.raises(InvalidProtocol):
            PairingProtocol(dt_pair=0.0)
        with pytest.raises(InvalidProtocol):
            PairingProtocol(gap=8.0)

    def test_merged_offsets_second_schedule(self):
        a = schedule_from_pulses(0, make_pulse_train(1))
        b = schedule_from_pulses(1, make_pulse_train(1))
        m = a.merged(b, offset=100.0)
        assert m.horizon == 105.0
        assert irradiance_at(m, 1, 102.0) == 1.0 and irradiance_at(m, 1, 2.0) == 0.0

    def test_pulse_arrays(self):
        s = schedule_from_pulses(2, make_pulse_train(2, start=1.0, period=10.0))
        nid, s0, s1, amp = s.pulse_arrays(0.5)
        assert nid.tolist() == [2, 2]
        assert s0.tolist() == [2, 22] and s1.tolist() == [12, 32]
        assert amp.tolist() == [1.0, 1.0]

    def test_write_csv(self, tmp_path):
        s = schedule_pairings(0, 4, 2, PairingKind.POTENTIATE)
        path = tmp_path / "schedule.csv"
        s.write_csv(path)
        s.write_csv(path, append=True)
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 8
        assert rows[0] == {"neuron_id": "0", "start_ms": "5.0", "width_ms": "5.0",
                           "intensity": "1.0"}


class TestIrradiance:
    def test_examples(self):
        s = schedule_from_pulses(3, [LightPulse(10.0)], horizon=50.0)
        assert irradiance_at(s, 3, 5.0) == 0.0
        assert irradiance_at(s, 3, 12.0) == 1.0
        assert irradiance_at(s, 4, 12.0) == 0.0

    @given(st.sets(st.integers(0, 9), max_size=10), st.floats(0, 60))
    def test_single_cell_targeting(self, lit, t):
        sched = StimulationSchedule(tuple((n, LightPulse(10.0)) for n in lit), 60.0)
        for n in range(10):
            expected = 1.0 if n in lit and 10.0 <= t < 15.0 else 0.0
            assert irradiance_at(sched, n, t) == expected


class TestIsolation:
    @settings(max_examples=25, deadline=None)
    @given(st.sets(st.integers(0, 12), max_size=13))
    def test_untargeted_neurons_stay_silent(self, lit):
        # with all synapses at zero the only path to a spike is light
        topo = Topology(2, 4, 1)
        net = build_network(topo, WeightInit(0.0, 0.0), config=NetworkConfig())
        sched = StimulationSchedule(tuple((n, LightPulse(5.0)) for n in lit), 30.0)
        tr = simulate(net, np.zeros(2), 30.0, 0.5, schedule=sched)
        counts = np.concatenate([tr.spikes_input.sum(0), tr.spikes_hidden.sum(0),
                                 tr.spikes_output.sum(0)])
        for n in range(topo.n_physical):
            assert (counts[n] > 0) == (n in lit)

    def test_full_model_isolation(self):
        topo = Topology(2, 2, 1)
        net = build_network(topo, WeightInit(0.0, 0.0), config=NetworkConfig(backend="full"))
        sched = schedule_pairings(0, [4, 5], 2, PairingKind.POTENTIATE)
        tr = simulate(net, np.zeros(2), sched.horizon, 0.1, schedule=sched)
        counts = np.concatenate([tr.spikes_input.sum(0), tr.spikes_hidden.sum(0),
                                 tr.spikes_output.sum(0)])
        assert counts.tolist() == [2, 0, 0, 0, 2, 2, 0, 0, 0]

    def test_out_of_range_target_rejected(self, small_fast_net):
        sched = schedule_from_pulses(99, [LightPulse(1.0)], horizon=20.0)
        with pytest.raises(ValueError, match="outside"):
            simulate(small_fast_net, np.zeros(3), 20.0, 1.0, schedule=sched)


class TestOpticalIdealEquivalence:
    @pytest.mark.parametrize("kind", [PairingKind.POTENTIATE, PairingKind.DEPRESS])
    @pytest.mark.parametrize("which,a,b", [(0, 0, 0), (1, 1, 1), (2, 0, 0), (3, 1, 0)])
    def test_five_pairings_match_sequential_sum(self, small_full_net, which, a, b, kind):
        net = small_full_net
        topo = net.topology
        if which < 2:
            pre, post = topo.input_ids(a)[which], list(topo.hidden_ids(b))
        else:
            pre, post = topo.hidden_ids(a)[which - 2], [topo.output_id(b)]
        sched = schedule_pairings(pre, post, 5, kind, PairingProtocol(), P.pairing_window)
        weights = tuple(w.copy() for w in net.weight_arrays())
        horizon = round(sched.horizon / 0.1) * 0.1
        tr = simulate(net, np.zeros(2), horizon, 0.1, schedule=sched, plasticity=P,
                      weights=weights)
        w0 = net.weight_arrays()[which][a, b]
        realised = weights[which][a, b] - w0
        ideal = sequential_ideal(w0, 5, kind)
        assert abs(realised - ideal) / abs(ideal) < 0.10
        # one spike per pulse on every lit neuron
        lit_counts = {n: 0 for n in sched.neurons()}
        rasters = np.concatenate([tr.spikes_input, tr.spikes_hidden, tr.spikes_output], axis=1)
        for n in lit_counts:
            assert rasters[:, n].sum() == 5

    def test_network_object_untouched_by_simulation(self, small_full_net):
        before = small_full_net.copy()
        sched = schedule_pairings(0, [4, 5], 2, PairingKind.POTENTIATE)
        simulate(small_full_net, np.zeros(2), 210.0, 0.1, schedule=sched, plasticity=P)
        assert small_full_net == before
