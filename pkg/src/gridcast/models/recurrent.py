"""LSTM and attention-weighted LSTM regressors with manual
backpropagation through time.

Sequence inputs are 24-step windows of engineered feature rows; the
target is the row immediately after the window.  The plain model's
output head reads the last hidden state; the attention variant reads the
concatenation of an attention-weighted context over all hidden states
and the last hidden state.  Training uses squared-error loss, adaptive
moment estimation (decay 0.9/0.999, stability 1e-8), and global
gradient-norm clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError
from .base import Regressor

__all__ = [
    "WINDOW",
    "make_windows",
    "lstm_cell",
    "attention_forward",
    "LstmConfig",
    "LstmModel",
    "AwmLstmConfig",
    "AwmLstmModel",
    "init_params",
    "loss_and_grad",
    "flatten_params",
    "unflatten_params",
]

WINDOW = 24


def make_windows(X: np.ndarray, y: np.ndarray, window: int = WINDOW):
    """One window per target index t in [window, n): inputs are rows
    t-window .. t-1, the target is y[t]."""
    n = X.shape[0]
    if n < window + 1:
        raise DataError(f"need at least {window + 1} rows for windows, got {n}")
    m = n - window
    idx = np.arange(window)[None, :] + np.arange(m)[:, None]
    return X[idx], y[window:]


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lstm_cell(x, h_prev, c_prev, w_x, w_h, b):
    """Single standard LSTM cell step for one input vector.

    Gate layout along the last axis of the weights is [input, forget,
    output, candidate].
    """
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = w_h.shape[0]
    if x.shape[0] != w_x.shape[0] or h_prev.shape[0] != H or c_prev.shape[0] != H:
        raise NumericError("lstm_cell: shape mismatch")
    z = x @ w_x + h_prev @ w_h + b
    i = _sigmoid(z[:H])
    f = _sigmoid(z[H:2 * H])
    o = _sigmoid(z[2 * H:3 * H])
    g = np.tanh(z[3 * H:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def attention_forward(hidden_states, v, w_a, b_a):
    """Attention over hidden states h_1..h_T.

    scores e_t = v . tanh(w_a' h_t + b_a); weights = softmax(e);
    context = sum_t weight_t * h_t.  Returns (context, weights).
    """
    hs = np.asarray(hidden_states, dtype=np.float64)
    if hs.ndim != 2 or hs.shape[0] == 0:
        raise NumericError("attention_forward: need a (T, H) state matrix with T >= 1")
    scores = np.tanh(hs @ w_a + b_a) @ v
    shifted = scores - scores.max()
    e = np.exp(shifted)
    alpha = e / e.sum()
    context = alpha @ hs
    return context, alpha


def init_params(rng, n_features: int, hidden: int, attention_size: int | None):
    """Uniform [-1/sqrt(H), 1/sqrt(H)] initialization, fixed order."""
    g = rng.derive("init").generator
    s = 1.0 / np.sqrt(hidden)
    H4 = 4 * hidden
    params = {
        "w_x": g.uniform(-s, s, (n_features, H4)),
        "w_h": g.uniform(-s, s, (hidden, H4)),
        "b": g.uniform(-s, s, H4),
    }
    if attention_size is None:
        params["w_out"] = g.uniform(-s, s, hidden)
        params["b_out"] = g.uniform(-s, s, 1)
    else:
        params["w_att"] = g.uniform(-s, s, (hidden, attention_size))
        params["b_att"] = g.uniform(-s, s, attention_size)
        params["v_att"] = g.uniform(-s, s, attention_size)
        params["w_out"] = g.uniform(-s, s, 2 * hidden)
        params["b_out"] = g.uniform(-s, s, 1)
    return params


def _forward_states(params, Xb):
    """Forward pass caching per-step activations.  Xb is (B, T, D)."""
    B, T, D = Xb.shape
    H = params["w_h"].shape[0]
    xproj = (Xb.reshape(B * T, D) @ params["w_x"]).reshape(B, T, 4 * H) + params["b"]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    cache = []
    for t in range(T):
        z = xproj[:, t] + h @ params["w_h"]
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        o = _sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        cache.append((i, f, o, g, c, tanh_c, h))
        h, c = h_new, c_new
        hs[:, t] = h
    return hs, h, cache


def _head_forward(params, hs, h_last, attention: bool):
    if attention:
        pre = np.tanh(hs @ params["w_att"] + params["b_att"])  # (B,T,A)
        scores = pre @ params["v_att"]                          # (B,T)
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        alpha = e / e.sum(axis=1, keepdims=True)
        context = np.einsum("bt,bth->bh", alpha, hs)
        u = np.concatenate([context, h_last], axis=1)
        head_cache = (pre, alpha, context)
    else:
        u = h_last
        head_cache = None
    yhat = u @ params["w_out"] + params["b_out"][0]
    return yhat, u, head_cache


def forward(params, Xb, attention: bool):
    hs, h_last, _ = _forward_states(params, Xb)
    yhat, _, head_cache = _head_forward(params, hs, h_last, attention)
    alpha = head_cache[1] if attention else None
    return yhat, alpha


def loss_and_grad(params, Xb, yb, attention: bool):
    """Mean squared error and analytic gradients for one batch."""
    B, T, D = Xb.shape
    H = params["w_h"].shape[0]
    hs, h_last, cache = _forward_states(params, Xb)
    yhat, u, head_cache = _head_forward(params, hs, h_last, attention)

    err = yhat - yb
    loss = float((err * err).mean())
    dy = 2.0 * err / B

    grads = {k: np.zeros_like(v) for k, v in params.items()}
    grads["w_out"] = u.T @ dy
    grads["b_out"] = np.array([dy.sum()])
    du = np.outer(dy, params["w_out"])

    dhs = np.zeros((B, T, H))  # per-step dL/dh_t contributions from the head
    if attention:
        pre, alpha, _context = head_cache
        dcontext = du[:, :H]
        dh_last = du[:, H:]
        dalpha = np.einsum("bh,bth->bt", dcontext, hs)
        dhs += alpha[:, :, None] * dcontext[:, None, :]
        dscores = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        grads["v_att"] = np.einsum("bta,bt->a", pre, dscores)
        dpre = dscores[:, :, None] * params["v_att"][None, None, :]
        dzatt = dpre * (1.0 - pre * pre)
        grads["w_att"] = np.einsum("bth,bta->ha", hs, dzatt)
        grads["b_att"] = dzatt.sum(axis=(0, 1))
        dhs += dzatt @ params["w_att"].T
    else:
        dh_last = du

    dh = dh_last.copy()
    dc = np.zeros((B, H))
    dz_steps = np.empty((B, T, 4 * H))
    w_h = params["w_h"]
    for t in range(T - 1, -1, -1):
        dh = dh + dhs[:, t]
        i, f, o, g, c_prev, tanh_c, h_prev = cache[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc = dc * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g * g),
            ],
            axis=1,
        )
        dz_steps[:, t] = dz
        grads["w_h"] += h_prev.T @ dz
        dh = dz @ w_h.T

    grads["w_x"] = Xb.reshape(B * T, D).T @ dz_steps.reshape(B * T, 4 * H)
    grads["b"] = dz_steps.sum(axis=(0, 1))
    return loss, grads


def flatten_params(params):
    keys = sorted(params)
    vec = np.concatenate([params[k].ravel() for k in keys])
    spec = [(k, params[k].shape) for k in keys]
    return vec, spec


def unflatten_params(vec, spec):
    params = {}
    offset = 0
    for k, shape in spec:
        size = int(np.prod(shape))
        params[k] = vec[offset:offset + size].reshape(shape).copy()
        offset += size
    return params


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            mh = self.m[k] / b1c
            vh = self.v[k] / b2c
            params[k] -= self.lr * mh / (np.sqrt(vh) + self.eps)


def _clip_global_norm(grads, clip):
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = np.sqrt(total)
    if clip > 0 and norm > clip:
        scale = clip / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return grads


@dataclass
class LstmConfig:
    hidden: int = 64
    epochs: int = 60
    learning_rate: float = 1e-3
    batch_size: int = 32
    clip: float = 1.0
    window: int = WINDOW


@dataclass
class AwmLstmConfig(LstmConfig):
    attention_size: int = 64


class LstmModel(Regressor):
    kind = "lstm"
    attention = False

    def __init__(self, config: LstmConfig | None = None, seed: int = 0):
        super().__init__(config or LstmConfig(), seed)
        self.params: dict[str, np.ndarray] = {}
        self.train_loss: list[float] = []
        self.warmup = self.config.window

    def _attention_size(self):
        return None

    def _fit(self, X, y, rng):
        cfg = self.config
        windows, targets = make_windows(X, y, cfg.window)
        m = windows.shape[0]
        self.params = init_params(rng, X.shape[1], cfg.hidden, self._attention_size())
        optimizer = _Adam(self.params, cfg.learning_rate)
        shuffle = rng.derive("shuffle")
        self.train_loss = []
        for _epoch in range(cfg.epochs):
            order = shuffle.permutation(m)
            losses = []
            for start in range(0, m, cfg.batch_size):
                batch = order[start:start + cfg.batch_size]
                loss, grads = loss_and_grad(
                    self.params, windows[batch], targets[batch], self.attention
                )
                grads = _clip_global_norm(grads, cfg.clip)
                optimizer.step(self.params, grads)
                losses.append(loss)
            self.train_loss.append(float(np.mean(losses)))

    def _predict(self, X):
        w = self.config.window
        n = X.shape[0]
        if n <= w:
            return np.empty(0)
        windows, _ = make_windows(X, np.zeros(n), w)
        out = np.empty(windows.shape[0])
        for start in range(0, windows.shape[0], 256):
            chunk = windows[start:start + 256]
            yhat, _ = forward(self.params, chunk, self.attention)
            out[start:start + chunk.shape[0]] = yhat
        return out

    def attention_map(self, X) -> np.ndarray:
        """Attention weights per window; rows sum to 1."""
        if not self.attention:
            raise NumericError("attention_map: model has no attention head")
        windows, _ = make_windows(X, np.zeros(X.shape[0]), self.config.window)
        _, alpha = forward(self.params, windows, True)
        return alpha

    def get_state(self) -> dict:
        return {"params": self.params, "train_loss": self.train_loss}

    def set_state(self, state: dict) -> None:
        self.params = state["params"]
        self.train_loss = state["train_loss"]
        self.warmup = self.config.window


class AwmLstmModel(LstmModel):
    kind = "awmlstm"
    attention = True

    def __init__(self, config: AwmLstmConfig | None = None, seed: int = 0):
        super().__init__(config or AwmLstmConfig(), seed)

    def _attention_size(self):
        return self.config.attention_size
