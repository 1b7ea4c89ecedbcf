"""Reference LSTM time-step kernels in plain numpy.

Semantics match the compiled backend exactly (same gate order i, f, g, o
and the same update equations); this module is the fallback when the
extension is unavailable and the ground truth the extension is tested
against.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(
    xg: np.ndarray, wh: np.ndarray, h0: np.ndarray, c0: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run the recurrence over pre-computed input pre-activations.

    xg[t] already holds Wx @ x_t + b; returns per-step hidden states h,
    cell states c, and post-activation gate values (T, 4H).
    """
    steps, four_h = xg.shape
    hidden = four_h // 4
    h = np.empty((steps, hidden))
    c = np.empty((steps, hidden))
    gates = np.empty((steps, four_h))
    h_prev, c_prev = h0, c0
    for t in range(steps):
        z = xg[t] + wh @ h_prev
        i = _sigmoid(z[:hidden])
        f = _sigmoid(z[hidden : 2 * hidden])
        g = np.tanh(z[2 * hidden : 3 * hidden])
        o = _sigmoid(z[3 * hidden :])
        c_t = f * c_prev + i * g
        h_t = o * np.tanh(c_t)
        gates[t, :hidden] = i
        gates[t, hidden : 2 * hidden] = f
        gates[t, 2 * hidden : 3 * hidden] = g
        gates[t, 3 * hidden :] = o
        c[t] = c_t
        h[t] = h_t
        h_prev, c_prev = h_t, c_t
    return h, c, gates


def lstm_backward(
    wh: np.ndarray,
    gates: np.ndarray,
    h: np.ndarray,
    c: np.ndarray,
    h0: np.ndarray,
    c0: np.ndarray,
    dh_out: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagation through time; dh_out holds dL/dh_t per step.

    Returns gradients for the input pre-activations, the recurrent weight
    matrix, and the initial states.
    """
    steps, four_h = gates.shape
    hidden = four_h // 4
    d_xg = np.empty((steps, four_h))
    d_wh = np.zeros_like(wh)
    if steps == 0:
        return d_xg, d_wh, np.zeros(hidden), np.zeros(hidden)
    dh = dh_out[steps - 1].copy()
    dc = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        i = gates[t, :hidden]
        f = gates[t, hidden : 2 * hidden]
        g = gates[t, 2 * hidden : 3 * hidden]
        o = gates[t, 3 * hidden :]
        c_prev = c[t - 1] if t > 0 else c0
        h_prev = h[t - 1] if t > 0 else h0
        tc = np.tanh(c[t])
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        d_xg[t] = dz
        d_wh += np.outer(dz, h_prev)
        dh_prev = wh.T @ dz
        dc = dc * f
        if t > 0:
            dh = dh_out[t - 1] + dh_prev
    return d_xg, d_wh, dh_prev, dc
