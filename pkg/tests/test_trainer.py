import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optostdp.config import load_config
from optostdp.data import Dataset, xor_dataset
from optostdp.experiments import load_datasets, make_network
from optostdp.metrics import mse
from optostdp.network import (
    NO_PREDICTION, ForwardTrace, Topology, build_network, decode_output, encode_input,
    forward_pass,
)
from optostdp.plasticity import PairingKind, PlasticityParams
from optostdp.trainer import (
    TrainConfig, conductance_deltas, epoch_rng, evaluate, hidden_error, output_error,
    plan_pulses, route_delta, sample_xi, train, train_epoch, train_sample,
)
from oracles import deltas_bruteforce

P = PlasticityParams()


def trace_with(out_spikes, hid_spikes=None, in_spikes=None, n_out=2, n_hid=1, n_in=1):
    s_out = np.zeros((50, n_out), np.uint8)
    for col, steps in out_spikes.items():
        s_out[steps, col] = 1
    s_hid = np.zeros((50, 2 * n_hid), np.uint8)
    for col, steps in (hid_spikes or {}).items():
        s_hid[steps, 2 * col] = 1
    s_in = np.zeros((50, 2 * n_in), np.uint8)
    for col, steps in (in_spikes or {}).items():
        s_in[steps, 2 * col] = 1
    return ForwardTrace(s_in, s_hid, s_out, 50.0, 1.0)


class TestOutputError:
    def test_correct_output_has_zero_error(self):
        tr = trace_with({0: list(range(0, 50, 5))})
        assert not output_error(tr, 0, 5.0).any()

    def test_silent_target(self):
        err = output_error(trace_with({}), 1, 5.0)
        assert err.shape == (10, 2)
        assert (err[:, 1] == 1).all() and (err[:, 0] == 0).all()

    def test_spiking_non_target(self):
        tr = trace_with({0: list(range(0, 50, 5)), 1: [7]})
        err = output_error(tr, 0, 5.0)
        assert err[1, 1] == -1 and np.count_nonzero(err) == 1

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            output_error(trace_with({}), 2, 5.0)


class TestHiddenError:
    def test_zero_output_error(self):
        tr = trace_with({}, {0: [3]})
        e = hidden_error(np.array([[0.5, 0.1]]), np.array([[0.2, 0.3]]), np.zeros((10, 2)), tr)
        assert not e.any()

    def test_silent_hidden_has_zero_error(self):
        tr = trace_with({})
        out = np.ones((10, 2))
        e = hidden_error(np.array([[0.5, 0.1]]), np.array([[0.2, 0.3]]), out, tr)
        assert not e.any()

    def test_direct_formula(self):
        tr = trace_with({}, {0: [3]})
        out = np.zeros((10, 1))
        out[0, 0] = 1
        e = hidden_error(np.array([[0.5]]), np.array([[0.2]]), out, tr)
        assert e[0, 0] == pytest.approx(0.3)


class TestDeltas:
    def test_no_presynaptic_spikes(self):
        tr = trace_with({})
        d_ih, d_ho = conductance_deltas(tr, np.ones((10, 2)), np.ones((10, 1)), 0.01, 5.0)
        assert not d_ih.any() and not d_ho.any()

    def test_hand_built_two_bin_trace(self):
        # two 25 ms bins; hidden pair 0 fires 3 times in bin 0 and once in bin 1
        tr = trace_with({}, {0: [1, 5, 9, 30]}, {0: [2, 40]})
        out_err = np.array([[1, -1], [0, 1]])
        hid_err = np.array([[0.5], [-0.25]])
        d_ih, d_ho = conductance_deltas(tr, out_err, hid_err, 0.1, 25.0)
        np.testing.assert_allclose(d_ho, [[0.1 * (3 * 1 + 1 * 0), 0.1 * (3 * -1 + 1 * 1)]])
        np.testing.assert_allclose(d_ih, [[0.1 * (1 * 0.5 + 1 * -0.25)]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1e-4, 0.5))
    def test_matches_bruteforce(self, seed, mu):
        rng = np.random.default_rng(seed)
        n_in, n_hid, n_out = 3, 4, 2
        tr = ForwardTrace((rng.random((50, 2 * n_in)) < 0.2).astype(np.uint8),
                          (rng.random((50, 2 * n_hid)) < 0.2).astype(np.uint8),
                          (rng.random((50, n_out)) < 0.2).astype(np.uint8), 50.0, 1.0)
        out_err = rng.integers(-1, 2, (10, n_out))
        hid_err = rng.normal(size=(10, n_hid))
        d_ih, d_ho = conductance_deltas(tr, out_err, hid_err, mu, 5.0)
        b_in = tr.binned(tr.input_pairs, 5.0)
        b_hid = tr.binned(tr.hidden_pairs, 5.0)
        np.testing.assert_allclose(d_ho, deltas_bruteforce(b_hid, out_err, mu), rtol=1e-12,
                                   atol=1e-15)
        np.testing.assert_allclose(d_ih, deltas_bruteforce(b_in, hid_err, mu), rtol=1e-12,
                                   atol=1e-15)

    def test_doubling_mu_doubles_deltas(self):
        rng = np.random.default_rng(0)
        tr = ForwardTrace((rng.random((50, 4)) < 0.3).astype(np.uint8),
                          (rng.random((50, 6)) < 0.3).astype(np.uint8),
                          np.zeros((50, 2), np.uint8), 50.0, 1.0)
        oe, he = rng.integers(-1, 2, (10, 2)), rng.normal(size=(10, 3))
        a = conductance_deltas(tr, oe, he, 0.01, 5.0)
        b = conductance_deltas(tr, oe, he, 0.02, 5.0)
        for x, y in zip(a, b):
            assert np.array_equal(2 * x, y)


class TestRouting:
    def test_examples(self):
        assert route_delta(0.02) == ("excitatory", 0.02, PairingKind.POTENTIATE)
        assert route_delta(-0.02) == ("inhibitory", 0.02, PairingKind.POTENTIATE)
        assert route_delta(0.0) == (None, 0.0, PairingKind.NO_CHANGE)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_exactly_one_member_per_nonzero_delta(self, seed):
        rng = np.random.default_rng(seed)
        net = build_network(Topology(3, 4, 2), seed=seed)
        d_ih = rng.normal(0, 0.02, (3, 4)) * (rng.random((3, 4)) < 0.7)
        d_ho = rng.normal(0, 0.02, (4, 2)) * (rng.random((4, 2)) < 0.7)
        counts, realised = plan_pulses(net, d_ih, d_ho, TrainConfig(), P)
        for d, n_exc, n_inh in ((d_ih, counts[0], counts[1]), (d_ho, counts[2], counts[3])):
            assert not np.any((n_exc > 0) & (n_inh > 0))
            assert not np.any((n_exc > 0) & (d <= 0))
            assert not np.any((n_inh > 0) & (d >= 0))
        for w, w_new in zip(net.weight_arrays(), realised):
            assert np.all(w_new >= w)

    def test_doubling_mu_at_most_doubles_pulses(self):
        rng = np.random.default_rng(3)
        net = build_network(Topology(3, 4, 2), seed=3)
        d_ih, d_ho = rng.normal(0, 0.02, (3, 4)), rng.normal(0, 0.02, (4, 2))
        c1, _ = plan_pulses(net, d_ih, d_ho, TrainConfig(max_pulses=1000), P)
        c2, _ = plan_pulses(net, 2 * d_ih, 2 * d_ho, TrainConfig(max_pulses=1000), P)
        for a, b in zip(c1, c2):
            assert np.all(b <= 2 * a + 1)
        assert sum(int(b.sum()) for b in c2) <= 2 * sum(int(a.sum()) for a in c1) + 2 * 20


class TestTrainSample:
    def test_zero_error_sample_leaves_network_unchanged(self, trained_xor, xor):
        # 25 ms bins: the trained target fires in both halves of the window, while
        # the first 5 ms bin always precedes the input-to-output latency
        net = trained_xor.result.network.copy()
        before = net.copy()
        cfg = TrainConfig(epsilon_window=25.0)
        _, res = train_sample(net, xor.features[1], int(xor.labels[1]), cfg)
        assert res.pulses == 0 and not res.bin_errors.any()
        assert net == before

    def test_ideal_mode_never_decrements(self, xor):
        net = build_network(Topology(2, 20, 2), seed=1)
        before = [w.copy() for w in net.weight_arrays()]
        for k in range(4):
            train_sample(net, xor.features[k], int(xor.labels[k]), TrainConfig())
        for a, b in zip(before, net.weight_arrays()):
            assert np.all(b >= a)

    def test_single_step_descent_majority(self, xor):
        cfg = TrainConfig(mu=0.01)
        not_worse = 0
        for seed in range(100):
            net = build_network(Topology(2, 20, 2), seed=seed)
            k = seed % 4
            x, y = xor.features[k], int(xor.labels[k])

            def n_errors():
                tr = forward_pass(net, encode_input(x, net.config.i_max))
                return int(np.abs(output_error(tr, y, cfg.epsilon_window)).sum())

            before = n_errors()
            train_sample(net, x, y, cfg)
            not_worse += n_errors() <= before
        assert not_worse > 50

    def test_pulse_total_matches_weight_change(self, xor):
        net = build_network(Topology(2, 20, 2), seed=7)
        w0 = net.flat_weights()
        _, res = train_sample(net, xor.features[1], 1, TrainConfig())
        assert res.pulses > 0
        changed = int(np.count_nonzero(net.flat_weights() != w0))
        assert 0 < changed <= res.pulses

    def test_readout_noise_path(self, xor):
        net = build_network(Topology(2, 20, 2), seed=7)
        cfg = TrainConfig(readout_noise=0.01)
        _, res = train_sample(net, xor.features[1], 1, cfg, rng=np.random.default_rng(0))
        assert res.pulses > 0


class TestEpochs:
    def test_epoch_determinism(self, xor):
        cfg = TrainConfig(batch_per_epoch=20)
        results = []
        for _ in range(2):
            net = build_network(Topology(2, 20, 2), seed=5)
            _, m = train_epoch(net, xor, cfg, epoch_rng(0, 0))
            results.append((m, net.flat_weights()))
        assert results[0][0] == results[1][0]
        assert results[0][1].tobytes() == results[1][1].tobytes()

    def test_all_correct_gives_accuracy_one_and_zero_mse(self, trained_xor, xor):
        net = trained_xor.result.network.copy()
        clean = xor.subset([1, 2])
        _, m = train_epoch(net, clean, TrainConfig(epsilon_window=25.0), epoch_rng(0, 999))
        assert m.accuracy == 1.0 and m.mse == 0.0 and m.mean_pulses_per_sample == 0.0

    def test_first_bin_precedes_output_latency(self, trained_xor, xor):
        net = trained_xor.result.network
        for x in xor.features:
            tr = forward_pass(net, encode_input(x, net.config.i_max))
            assert tr.spikes_output[:5].sum() == 0

    def test_empty_dataset(self, small_fast_net):
        empty = Dataset(np.zeros((0, 3)), np.zeros(0, dtype=int), 2, "empty")
        with pytest.raises(ValueError, match="empty"):
            evaluate(small_fast_net, empty)
        with pytest.raises(ValueError, match="empty"):
            train_epoch(small_fast_net, empty, TrainConfig(), epoch_rng(0, 0))

    def test_train_history_length(self, xor):
        net = build_network(Topology(2, 20, 2), seed=0)
        res = train(net, xor, TrainConfig(epochs=3, batch_per_epoch=8), xor)
        assert [m.epoch for m in res.history] == [1, 2, 3]
        assert all(m.eval_accuracy is not None for m in res.history)


class TestEvaluate:
    def test_trained_xor_pattern(self, trained_xor, xor):
        net = trained_xor.result.network
        acc, confusion = evaluate(net, xor)
        assert acc == 1.0
        assert confusion[:, -1].sum() == 0
        for x, y in zip(xor.features, xor.labels):
            counts = forward_pass(net, encode_input(x, net.config.i_max)).output_counts()
            assert counts[y] > 0 and counts[y] >= 5 * counts[1 - y]

    def test_evaluate_is_pure(self, small_fast_net):
        ds = Dataset(np.full((3, 3), 0.9), np.array([0, 1, 0]), 2, "d")
        before = small_fast_net.copy()
        evaluate(small_fast_net, ds)
        assert small_fast_net == before

    def test_accuracy_matches_raw_spike_recount(self):
        net = build_network(Topology(2, 20, 2), seed=3)
        ds = xor_dataset()
        acc, _ = evaluate(net, ds)
        correct = 0
        for x, y in zip(ds.features, ds.labels):
            tr = forward_pass(net, encode_input(x, net.config.i_max))
            counts = [len(r.spike_times) for r in tr.records(net.topology)[-2:]]
            pred = NO_PREDICTION if max(counts) == 0 else int(np.argmax(counts))
            assert pred == decode_output(tr)
            correct += pred == y
        assert acc == correct / len(ds)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_untrained_ten_class_is_chance(self, seed):
        cfg = load_config(preset="mnist.desk", overrides={
            "data.classes": "", "data.n_train": "0", "data.n_test": "0",
            "train.seed": str(seed)})
        train_set, test_set = load_datasets(cfg)
        assert test_set.n_classes == 10 and len(test_set) >= 500
        acc, _ = evaluate(make_network(cfg, train_set), test_set)
        assert abs(acc - 0.1) <= 0.05


class TestMetricSoundness:
    def test_zero_bin_errors_give_zero_mse(self):
        xi = np.array([sample_xi(np.zeros((10, 3))) for _ in range(4)])
        assert mse(xi, 4, 10) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000))
    def test_same_sign_errors_give_positive_mse(self, seed):
        rng = np.random.default_rng(seed)
        errs = rng.integers(0, 2, (3, 10, 2))
        if not errs.any():
            errs[0, 0, 0] = 1
        xi = np.array([sample_xi(e) for e in errs])
        assert mse(xi, 3, 10) > 0
