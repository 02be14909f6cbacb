"""Elementary dense operations: activations, LSTM cell, Adam, gradient check.

Everything is float64 and pure; adam_update returns a fresh ParamSet rather
than mutating its input.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, UsageError
from .params import LstmState, ParamSet

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def softmax(logits) -> np.ndarray:
    """Overflow-safe softmax of a non-empty finite vector."""
    x = np.asarray(logits, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise UsageError("softmax: input must be a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise NumericError("softmax: input must be finite")
    e = np.exp(x - x.max())
    return e / e.sum()


def leaky_relu(x: float, slope: float = 0.2) -> float:
    if not 0.0 < slope < 1.0:
        raise UsageError("leaky_relu: slope must be in (0, 1)")
    return x if x >= 0.0 else slope * x


def elu(x: float) -> float:
    if not np.isfinite(x):
        raise NumericError("elu: input must be finite")
    return x if x >= 0.0 else np.expm1(x)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(params: ParamSet, x, state: LstmState, prefix: str = "lstm"):
    """One LSTM cell update.

    Parameter names are ``{prefix}.wx`` (4h, d), ``{prefix}.wh`` (4h, h) and
    ``{prefix}.b`` (4h,), with gates packed in i, f, g, o order. Returns the
    new state and a cache for lstm_backward; inputs are left untouched.
    """
    wx, wh, b = params[f"{prefix}.wx"], params[f"{prefix}.wh"], params[f"{prefix}.b"]
    x = np.asarray(x, dtype=np.float64)
    h = wh.shape[1]
    if x.shape != (wx.shape[1],) or state.hidden.shape != (h,):
        raise UsageError("lstm_forward: dimension mismatch with parameters")
    pre = wx @ x + wh @ state.hidden + b
    i = _sigmoid(pre[:h])
    f = _sigmoid(pre[h : 2 * h])
    g = np.tanh(pre[2 * h : 3 * h])
    o = _sigmoid(pre[3 * h :])
    cell = f * state.cell + i * g
    hidden = o * np.tanh(cell)
    cache = (x, state.hidden.copy(), state.cell.copy(), i, f, g, o, cell)
    return LstmState(hidden, cell), cache


def lstm_step(state: LstmState, x, params: ParamSet, prefix: str = "lstm") -> LstmState:
    new_state, _ = lstm_forward(params, x, state, prefix)
    return new_state


def lstm_backward(params: ParamSet, cache, d_hidden, d_cell, prefix: str = "lstm"):
    """Backward pass of lstm_forward.

    Takes dL/d(new hidden) and dL/d(new cell); returns a gradient dict for
    the three parameters plus dL/d(previous hidden), dL/d(previous cell) and
    dL/dx.
    """
    wx, wh = params[f"{prefix}.wx"], params[f"{prefix}.wh"]
    x, h_prev, c_prev, i, f, g, o, cell = cache
    tc = np.tanh(cell)
    do = d_hidden * tc
    dct = d_cell + d_hidden * o * (1.0 - tc * tc)
    di = dct * g
    df = dct * c_prev
    dg = dct * i
    dc_prev = dct * f
    dpre = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g * g), do * o * (1.0 - o)]
    )
    grads = {
        f"{prefix}.wx": np.outer(dpre, x),
        f"{prefix}.wh": np.outer(dpre, h_prev),
        f"{prefix}.b": dpre,
    }
    return grads, wh.T @ dpre, dc_prev, wx.T @ dpre


def adam_update(params: ParamSet, grads, lr: float) -> ParamSet:
    """Adaptive-moment update; pure, deterministic, shape-checked."""
    if lr <= 0.0:
        raise UsageError("adam_update: learning rate must be positive")
    out = params.copy()
    out.step = params.step + 1
    t = out.step
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for name in out.names():
        if name not in grads:
            raise UsageError(f"adam_update: missing gradient for {name!r}")
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != out[name].shape:
            raise UsageError(f"adam_update: gradient shape mismatch for {name!r}")
        m, v = out.moment_buffers(name)
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        out._params[name] = out[name] - lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return out


def grad_check(f, params: ParamSet, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``f(params)`` must return ``(value, grads)`` where grads maps parameter
    names to arrays; f is re-evaluated at +/- step per entry (the returned
    grads of those calls are ignored). Relative error for one entry is
    |analytic - fd| / max(1, |analytic|).
    """
    value, grads = f(params)
    if not np.isfinite(value):
        raise NumericError("grad_check: objective is not finite")
    worst = 0.0
    for name in params.names():
        base = params[name]
        analytic = np.asarray(grads[name], dtype=np.float64)
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            probe = params.copy()
            bumped = base.copy()
            bumped[idx] += step
            probe.set(name, bumped)
            f_hi, _ = f(probe)
            bumped[idx] -= 2.0 * step
            probe.set(name, bumped)
            f_lo, _ = f(probe)
            if not (np.isfinite(f_hi) and np.isfinite(f_lo)):
                raise NumericError("grad_check: objective is not finite near params")
            fd = (f_hi - f_lo) / (2.0 * step)
            err = abs(analytic[idx] - fd) / max(1.0, abs(analytic[idx]))
            worst = max(worst, err)
    return worst
