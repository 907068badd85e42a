"""LSTM / attention-LSTM tests: cell semantics, attention math, window
construction, BPTT gradient checks against finite differences."""

import numpy as np
import pytest

from gridcast.errors import DataError
from gridcast.models import (AwmLstmConfig, AwmLstmModel, LstmConfig,
                             LstmModel, attention_forward, lstm_cell,
                             make_windows)
from gridcast.models.recurrent import (flatten_params, forward, init_params,
                                       loss_and_grad, unflatten_params)
from gridcast.numeric import Rng, finite_difference_gradient

from conftest import make_regression


def zero_weights(d, h):
    return (np.zeros((d, 4 * h)), np.zeros((h, 4 * h)), np.zeros(4 * h))


class TestLstmCell:
    def test_all_zero(self):
        w_x, w_h, b = zero_weights(3, 4)
        h, c = lstm_cell(np.zeros(3), np.zeros(4), np.zeros(4), w_x, w_h, b)
        np.testing.assert_allclose(h, 0.0)
        np.testing.assert_allclose(c, 0.0)

    def test_saturated_forget_gate_preserves_memory(self):
        d, hid = 3, 4
        w_x, w_h, b = zero_weights(d, hid)
        # gate order [i, f, o, g]
        b[0 * hid:1 * hid] = -20.0   # input gate shut
        b[1 * hid:2 * hid] = +20.0   # forget gate open
        c_prev = np.array([0.3, -0.1, 0.5, 0.0])
        _, c = lstm_cell(np.ones(d), np.zeros(hid), c_prev, w_x, w_h, b)
        np.testing.assert_allclose(c, c_prev, atol=1e-8)

    def test_shape_mismatch(self):
        w_x, w_h, b = zero_weights(3, 4)
        with pytest.raises(Exception):
            lstm_cell(np.zeros(5), np.zeros(4), np.zeros(4), w_x, w_h, b)


class TestAttention:
    def test_identical_hidden_states(self):
        rng = np.random.default_rng(0)
        h1 = rng.normal(0, 1, 4)
        hs = np.tile(h1, (6, 1))
        v = rng.normal(0, 1, 3)
        w_a = rng.normal(0, 1, (4, 3))
        b_a = rng.normal(0, 1, 3)
        c, alpha = attention_forward(hs, v, w_a, b_a)
        np.testing.assert_allclose(c, h1, atol=1e-12)
        assert alpha.sum() == pytest.approx(1.0, abs=1e-12)

    def test_single_step(self):
        hs = np.array([[1.0, 2.0]])
        c, alpha = attention_forward(hs, np.zeros(2), np.zeros((2, 2)),
                                     np.zeros(2))
        np.testing.assert_allclose(alpha, [1.0])
        np.testing.assert_allclose(c, hs[0])

    def test_hand_scores(self):
        # engineer scores e = [1, 2] with one-hot hidden states and a 1-d
        # attention space: e_t = v0 * tanh(w_a[t, 0])
        hs = np.array([[1.0, 0.0], [0.0, 1.0]])
        z1 = 0.3
        z2 = np.arctanh(2.0 * np.tanh(z1))  # makes e2 / e1 = 2
        w_a = np.array([[z1], [z2]])        # (H=2, A=1)
        v = np.array([1.0 / np.tanh(z1)])   # scales e1 to exactly 1
        c, alpha = attention_forward(hs, v, w_a, np.zeros(1))
        np.testing.assert_allclose(alpha, [0.26894, 0.73106], atol=1e-5)
        np.testing.assert_allclose(c, alpha[0] * hs[0] + alpha[1] * hs[1])

    def test_empty_raises(self):
        with pytest.raises(Exception):
            attention_forward(np.empty((0, 3)), np.zeros(2), np.zeros((3, 2)),
                              np.zeros(2))


class TestMakeWindows:
    def test_minimum(self):
        X = np.random.default_rng(0).normal(0, 1, (25, 2))
        y = np.arange(25.0)
        W, t = make_windows(X, y, 24)
        assert W.shape == (1, 24, 2)
        assert t.tolist() == [24.0]

    def test_thirty_rows(self):
        X = np.zeros((30, 2))
        W, t = make_windows(X, np.arange(30.0), 24)
        assert W.shape[0] == 6

    def test_window_one(self):
        X = np.arange(6.0).reshape(3, 2)
        W, t = make_windows(X, np.array([10.0, 11.0, 12.0]), 1)
        assert W.shape == (2, 1, 2)
        np.testing.assert_allclose(t, [11.0, 12.0])
        np.testing.assert_allclose(W[0, 0], X[0])

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            make_windows(np.zeros((24, 2)), np.zeros(24), 24)


def relative_gradient_error(attention, seed):
    rng = np.random.default_rng(seed)
    hid = int(rng.integers(2, 9))
    T = int(rng.integers(2, 7))
    d = int(rng.integers(1, 4))
    att = int(rng.integers(2, 6)) if attention else None
    params = init_params(Rng(seed), d, hid, att)
    Xb = rng.normal(0, 0.5, (3, T, d))
    yb = rng.normal(0, 0.5, 3)
    _, grads = loss_and_grad(params, Xb, yb, attention)
    flat, spec = flatten_params(params)
    gflat, _ = flatten_params(grads)

    def f(vec):
        return loss_and_grad(unflatten_params(vec, spec), Xb, yb,
                             attention)[0]

    numeric = finite_difference_gradient(f, flat.copy(), h=1e-5)
    denom = np.maximum(np.abs(numeric), 1e-6)
    return float(np.max(np.abs(gflat - numeric) / denom))


class TestGradients:
    @pytest.mark.parametrize("seed", range(4))
    def test_plain_lstm_gradient(self, seed):
        assert relative_gradient_error(False, seed) < 1e-4

    @pytest.mark.parametrize("seed", range(4))
    def test_attention_lstm_gradient(self, seed):
        assert relative_gradient_error(True, 100 + seed) < 1e-4


class TestModels:
    CFG = dict(hidden=8, epochs=3, window=6, batch_size=16)

    def test_warmup_predictions_absent(self):
        X, y = make_regression(80, 3, seed=1)
        model = LstmModel(LstmConfig(**self.CFG), seed=0)
        model.fit(X, y, ["f0", "f1", "f2"])
        pred = model.predict(X[:30], ["f0", "f1", "f2"])
        assert len(pred) == 30 - 6
        assert model.warmup == 6

    def test_training_loss_decreases(self):
        X, y = make_regression(200, 3, seed=2, noise=0.01)
        model = LstmModel(LstmConfig(hidden=8, epochs=10, window=6,
                                     batch_size=16), seed=42)
        model.fit(X, y, ["f0", "f1", "f2"])
        assert model.train_loss[-1] <= model.train_loss[0]

    def test_bit_identical_refit(self):
        X, y = make_regression(60, 2, seed=3)
        a = LstmModel(LstmConfig(**self.CFG), seed=7)
        b = LstmModel(LstmConfig(**self.CFG), seed=7)
        a.fit(X, y, ["f0", "f1"])
        b.fit(X, y, ["f0", "f1"])
        for k in a.params:
            np.testing.assert_array_equal(a.params[k], b.params[k])

    def test_awmlstm_attention_sums_to_one(self):
        X, y = make_regression(60, 2, seed=4)
        model = AwmLstmModel(AwmLstmConfig(hidden=8, epochs=2, window=6,
                                           batch_size=16, attention_size=5),
                             seed=1)
        model.fit(X, y, ["f0", "f1"])
        alpha = model.attention_map(X)
        np.testing.assert_allclose(alpha.sum(axis=1), 1.0, atol=1e-12)

    def test_uniform_attention_when_v_zero(self):
        X, y = make_regression(60, 2, seed=5)
        model = AwmLstmModel(AwmLstmConfig(hidden=8, epochs=1, window=6,
                                           batch_size=16, attention_size=5),
                             seed=1)
        model.fit(X, y, ["f0", "f1"])
        model.params["v_att"][:] = 0.0
        Xb, _ = make_windows(X, y, 6)
        from gridcast.models.recurrent import _forward_states, _head_forward
        hs, h_last, _ = _forward_states(model.params, Xb[:2])
        _, _, head_cache = _head_forward(model.params, hs, h_last, True)
        _, alpha, context = head_cache
        np.testing.assert_allclose(alpha, 1.0 / 6.0, atol=1e-12)
        np.testing.assert_allclose(context, hs.mean(axis=1), atol=1e-12)

    def test_too_few_rows(self):
        X, y = make_regression(20, 2, seed=6)
        model = LstmModel(LstmConfig(hidden=4, epochs=1, window=24), seed=0)
        with pytest.raises(DataError):
            model.fit(X, y, ["f0", "f1"])

    def test_predict_no_nan(self):
        X, y = make_regression(70, 3, seed=8)
        model = AwmLstmModel(AwmLstmConfig(hidden=8, epochs=2, window=6,
                                           batch_size=16, attention_size=4),
                             seed=2)
        model.fit(X, y, ["f0", "f1", "f2"])
        assert np.isfinite(model.predict(X + 3.0, ["f0", "f1", "f2"])).all()
