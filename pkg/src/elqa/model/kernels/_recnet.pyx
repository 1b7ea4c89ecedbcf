# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM time-step kernels.

Drop-in replacement for the numpy reference backend (same gate order and
update equations); only the serial per-step recurrence lives here, bulk
input projections stay in BLAS-backed numpy.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


def lstm_forward(double[:, ::1] xg, double[:, ::1] wh, double[::1] h0, double[::1] c0):
    cdef Py_ssize_t steps = xg.shape[0]
    cdef Py_ssize_t four_h = xg.shape[1]
    cdef Py_ssize_t hidden = four_h // 4
    h_arr = np.empty((steps, hidden))
    c_arr = np.empty((steps, hidden))
    gates_arr = np.empty((steps, four_h))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] gates = gates_arr
    z_arr = np.empty(four_h)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t t, j, k
    cdef double acc, i_g, f_g, g_g, o_g, c_t
    cdef double hp
    with nogil:
        for t in range(steps):
            for j in range(four_h):
                acc = xg[t, j]
                if t > 0:
                    for k in range(hidden):
                        acc += wh[j, k] * h[t - 1, k]
                else:
                    for k in range(hidden):
                        acc += wh[j, k] * h0[k]
                z[j] = acc
            for k in range(hidden):
                i_g = sigmoid(z[k])
                f_g = sigmoid(z[hidden + k])
                g_g = tanh(z[2 * hidden + k])
                o_g = sigmoid(z[3 * hidden + k])
                if t > 0:
                    c_t = f_g * c[t - 1, k] + i_g * g_g
                else:
                    c_t = f_g * c0[k] + i_g * g_g
                gates[t, k] = i_g
                gates[t, hidden + k] = f_g
                gates[t, 2 * hidden + k] = g_g
                gates[t, 3 * hidden + k] = o_g
                c[t, k] = c_t
                h[t, k] = o_g * tanh(c_t)
    return h_arr, c_arr, gates_arr


def lstm_backward(
    double[:, ::1] wh,
    double[:, ::1] gates,
    double[:, ::1] h,
    double[:, ::1] c,
    double[::1] h0,
    double[::1] c0,
    double[:, ::1] dh_out,
):
    cdef Py_ssize_t steps = gates.shape[0]
    cdef Py_ssize_t four_h = gates.shape[1]
    cdef Py_ssize_t hidden = four_h // 4
    d_xg_arr = np.empty((steps, four_h))
    d_wh_arr = np.zeros((four_h, hidden))
    dh_arr = np.zeros(hidden)
    dc_arr = np.zeros(hidden)
    dh_prev_arr = np.zeros(hidden)
    cdef double[:, ::1] d_xg = d_xg_arr
    cdef double[:, ::1] d_wh = d_wh_arr
    cdef double[::1] dh = dh_arr
    cdef double[::1] dc = dc_arr
    cdef double[::1] dh_prev = dh_prev_arr
    if steps == 0:
        return d_xg_arr, d_wh_arr, dh_prev_arr, dc_arr
    cdef Py_ssize_t t, j, k
    cdef double i_g, f_g, g_g, o_g, tc, do, di, dg, df, hp, cp, acc
    with nogil:
        for k in range(hidden):
            dh[k] = dh_out[steps - 1, k]
        for t in range(steps - 1, -1, -1):
            for k in range(hidden):
                i_g = gates[t, k]
                f_g = gates[t, hidden + k]
                g_g = gates[t, 2 * hidden + k]
                o_g = gates[t, 3 * hidden + k]
                cp = c[t - 1, k] if t > 0 else c0[k]
                tc = tanh(c[t, k])
                do = dh[k] * tc
                dc[k] = dc[k] + dh[k] * o_g * (1.0 - tc * tc)
                di = dc[k] * g_g
                dg = dc[k] * i_g
                df = dc[k] * cp
                d_xg[t, k] = di * i_g * (1.0 - i_g)
                d_xg[t, hidden + k] = df * f_g * (1.0 - f_g)
                d_xg[t, 2 * hidden + k] = dg * (1.0 - g_g * g_g)
                d_xg[t, 3 * hidden + k] = do * o_g * (1.0 - o_g)
                dc[k] = dc[k] * f_g
            for j in range(four_h):
                for k in range(hidden):
                    hp = h[t - 1, k] if t > 0 else h0[k]
                    d_wh[j, k] += d_xg[t, j] * hp
            for k in range(hidden):
                acc = 0.0
                for j in range(four_h):
                    acc += wh[j, k] * d_xg[t, j]
                dh_prev[k] = acc
            if t > 0:
                for k in range(hidden):
                    dh[k] = dh_out[t - 1, k] + dh_prev[k]
    return d_xg_arr, d_wh_arr, dh_prev_arr, dc_arr
