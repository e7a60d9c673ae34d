"""Bidirectional LSTM forward/backward kernels.

Two implementations of every kernel live here: ``*_np`` functions written
with vectorized numpy, and ``*_nb`` functions with the gate arithmetic fused
into explicit loops for numba. The public names are bound to the numba set
unless ``MELODYGA_DISABLE_NUMBA`` is set or numba is missing (see
``melodyga._jit``). The numpy set is always importable for cross-checking.

Shapes, with H hidden units and I input features:

    Wx : (2, 4H, I)   input-to-hidden, gate rows stacked [input, forget, modulation, output]
    Wh : (2, 4H, H)   hidden-to-hidden
    b  : (2, 4H)
    w_out : (2H,)     readout over [forward final h, backward final h]
    b_out : (1,)

Direction 0 reads t = 0..T-1; direction 1 reads the reversed sequence, so its
final state is the one after consuming t = 0. A forward cache is the tuple
``(Xr, acts_f, cells_f, tanh_cells_f, hiddens_f, acts_b, cells_b, tanh_cells_b, hiddens_b)``.
"""

import math

import numpy as np

from .._jit import USE_NUMBA, maybe_njit

# ---------------------------------------------------------------------------
# numpy implementation


def _sigmoid_np(z):
    return 1.0 / (1.0 + np.exp(-z))


def direction_forward_np(Wx, Wh, b, X):
    T = X.shape[0]
    H = Wh.shape[1]
    Zx = X @ Wx.T + b
    acts = np.empty((T, 4 * H))
    cells = np.empty((T, H))
    h = np.zeros(H)
    c = np.zeros(H)
    hiddens = np.empty((T, H))
    for t in range(T):
        z = Zx[t] + Wh @ h
        acts[t, : 2 * H] = _sigmoid_np(z[: 2 * H])
        acts[t, 2 * H : 3 * H] = np.tanh(z[2 * H : 3 * H])
        acts[t, 3 * H :] = _sigmoid_np(z[3 * H :])
        i, f, g, o = acts[t, :H], acts[t, H : 2 * H], acts[t, 2 * H : 3 * H], acts[t, 3 * H :]
        c = f * c + i * g
        h = o * np.tanh(c)
        cells[t] = c
        hiddens[t] = h
    return acts, cells, np.tanh(cells), hiddens


def direction_backward_np(Wh, X, acts, cells, tcells, hiddens, dh_final, gWx, gWh, gb):
    T = X.shape[0]
    H = Wh.shape[1]
    DZ = np.empty((T, 4 * H))
    dh = dh_final.copy()
    dc = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o = acts[t, :H], acts[t, H : 2 * H], acts[t, 2 * H : 3 * H], acts[t, 3 * H :]
        tc = tcells[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        c_prev = cells[t - 1] if t > 0 else np.zeros(H)
        DZ[t, :H] = dc * g * i * (1.0 - i)
        DZ[t, H : 2 * H] = dc * c_prev * f * (1.0 - f)
        DZ[t, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        DZ[t, 3 * H :] = dh * tc * o * (1.0 - o)
        dc = dc * f
        dh = DZ[t] @ Wh
    gWx[...] = DZ.T @ X
    gb[...] = DZ.sum(axis=0)
    gWh[...] = DZ[1:].T @ hiddens[:-1] if T > 1 else 0.0


def bilstm_forward_np(Wx, Wh, b, w_out, b_out, X):
    H = Wh.shape[2]
    Xr = np.ascontiguousarray(X[::-1])
    af, cf, tf, hf = direction_forward_np(Wx[0], Wh[0], b[0], X)
    ab, cb, tb, hb = direction_forward_np(Wx[1], Wh[1], b[1], Xr)
    score = w_out[:H] @ hf[-1] + w_out[H:] @ hb[-1] + b_out[0]
    return float(score), (Xr, af, cf, tf, hf, ab, cb, tb, hb)


def bilstm_score_np(Wx, Wh, b, w_out, b_out, X):
    return bilstm_forward_np(Wx, Wh, b, w_out, b_out, X)[0]


def bilstm_backward_np(Wh, w_out, X, cache, d_score, gWx, gWh, gb, gw_out, gb_out):
    H = Wh.shape[2]
    Xr, af, cf, tf, hf, ab, cb, tb, hb = cache
    gw_out[:H] = d_score * hf[-1]
    gw_out[H:] = d_score * hb[-1]
    gb_out[0] = d_score
    direction_backward_np(Wh[0], X, af, cf, tf, hf, d_score * w_out[:H], gWx[0], gWh[0], gb[0])
    direction_backward_np(Wh[1], Xr, ab, cb, tb, hb, d_score * w_out[H:], gWx[1], gWh[1], gb[1])


def clip_global_norm_np(grad, threshold):
    norm = float(np.sqrt(grad @ grad))
    if norm > threshold:
        grad *= threshold / norm
    return norm


def adam_update_np(theta, grad, m, v, lr, beta1, beta2, eps, step):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    c1 = 1.0 / (1.0 - beta1**step)
    c2 = 1.0 / (1.0 - beta2**step)
    theta -= lr * (m * c1) / (np.sqrt(v * c2) + eps)


# ---------------------------------------------------------------------------
# numba implementation
#
# libm tanh is ~3x slower than exp on the target hardware, so both
# nonlinearities go through exp; absolute error stays below 3e-16.


@maybe_njit
def _tanh_nb(x):
    e = math.exp(-2.0 * abs(x))
    t = (1.0 - e) / (1.0 + e)
    return t if x >= 0.0 else -t


@maybe_njit
def _sigmoid_nb(x):
    return 1.0 / (1.0 + math.exp(-x))


@maybe_njit
def _direction_forward_nb(Wx, Wh, b, X, acts, cells, tcells, hiddens, store):
    T = X.shape[0]
    I = X.shape[1]
    H = Wh.shape[1]
    G = 4 * H
    WhT = np.ascontiguousarray(Wh.T)
    WxT = np.ascontiguousarray(Wx.T)
    z = np.empty(G)
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        # z = b + Wx x_t + Wh h, accumulated column by column
        for r in range(G):
            z[r] = b[r]
        for k in range(I):
            xk = X[t, k]
            for r in range(G):
                z[r] += WxT[k, r] * xk
        for j in range(H):
            hj = h[j]
            for r in range(G):
                z[r] += WhT[j, r] * hj
        for j in range(H):
            ig = _sigmoid_nb(z[j])
            fg = _sigmoid_nb(z[H + j])
            gg = _tanh_nb(z[2 * H + j])
            og = _sigmoid_nb(z[3 * H + j])
            cj = fg * c[j] + ig * gg
            tc = _tanh_nb(cj)
            c[j] = cj
            h[j] = og * tc
            if store:
                acts[t, j] = ig
                acts[t, H + j] = fg
                acts[t, 2 * H + j] = gg
                acts[t, 3 * H + j] = og
                cells[t, j] = cj
                tcells[t, j] = tc
                hiddens[t, j] = og * tc
    return h


@maybe_njit
def direction_forward_nb(Wx, Wh, b, X):
    T = X.shape[0]
    H = Wh.shape[1]
    acts = np.empty((T, 4 * H))
    cells = np.empty((T, H))
    tcells = np.empty((T, H))
    hiddens = np.empty((T, H))
    _direction_forward_nb(Wx, Wh, b, X, acts, cells, tcells, hiddens, True)
    return acts, cells, tcells, hiddens


@maybe_njit
def direction_backward_nb(Wh, X, acts, cells, tcells, hiddens, dh_final, gWx, gWh, gb):
    T = X.shape[0]
    H = Wh.shape[1]
    DZ = np.empty((T, 4 * H))
    dh = dh_final.copy()
    dc = np.zeros(H)
    for t in range(T - 1, -1, -1):
        for j in range(H):
            ig = acts[t, j]
            fg = acts[t, H + j]
            gg = acts[t, 2 * H + j]
            og = acts[t, 3 * H + j]
            tc = tcells[t, j]
            dcj = dc[j] + dh[j] * og * (1.0 - tc * tc)
            c_prev = cells[t - 1, j] if t > 0 else 0.0
            DZ[t, j] = dcj * gg * ig * (1.0 - ig)
            DZ[t, H + j] = dcj * c_prev * fg * (1.0 - fg)
            DZ[t, 2 * H + j] = dcj * ig * (1.0 - gg * gg)
            DZ[t, 3 * H + j] = dh[j] * tc * og * (1.0 - og)
            dc[j] = dcj * fg
        # dh = Wh^T dz, accumulated row by row
        for j in range(H):
            dh[j] = 0.0
        for r in range(4 * H):
            dzr = DZ[t, r]
            for j in range(H):
                dh[j] += Wh[r, j] * dzr
    gWx[:, :] = np.dot(DZ.T, X)
    for r in range(4 * H):
        s = 0.0
        for t in range(T):
            s += DZ[t, r]
        gb[r] = s
    if T > 1:
        gWh[:, :] = np.dot(DZ[1:].T, hiddens[:-1])
    else:
        gWh[:, :] = 0.0


@maybe_njit
def bilstm_forward_nb(Wx, Wh, b, w_out, b_out, X):
    H = Wh.shape[2]
    T = X.shape[0]
    Xr = np.ascontiguousarray(X[::-1])
    af, cf, tf, hf = direction_forward_nb(Wx[0], Wh[0], b[0], X)
    ab, cb, tb, hb = direction_forward_nb(Wx[1], Wh[1], b[1], Xr)
    score = np.dot(w_out[:H], hf[T - 1]) + np.dot(w_out[H:], hb[T - 1]) + b_out[0]
    return score, (Xr, af, cf, tf, hf, ab, cb, tb, hb)


@maybe_njit
def bilstm_score_nb(Wx, Wh, b, w_out, b_out, X):
    H = Wh.shape[2]
    dummy = np.empty((1, 1))
    hf = _direction_forward_nb(Wx[0], Wh[0], b[0], X, dummy, dummy, dummy, dummy, False)
    Xr = np.ascontiguousarray(X[::-1])
    hb = _direction_forward_nb(Wx[1], Wh[1], b[1], Xr, dummy, dummy, dummy, dummy, False)
    return np.dot(w_out[:H], hf) + np.dot(w_out[H:], hb) + b_out[0]


@maybe_njit
def bilstm_backward_nb(Wh, w_out, X, cache, d_score, gWx, gWh, gb, gw_out, gb_out):
    H = Wh.shape[2]
    T = X.shape[0]
    Xr, af, cf, tf, hf, ab, cb, tb, hb = cache
    for j in range(H):
        gw_out[j] = d_score * hf[T - 1, j]
        gw_out[H + j] = d_score * hb[T - 1, j]
    gb_out[0] = d_score
    direction_backward_nb(Wh[0], X, af, cf, tf, hf, d_score * w_out[:H], gWx[0], gWh[0], gb[0])
    direction_backward_nb(Wh[1], Xr, ab, cb, tb, hb, d_score * w_out[H:], gWx[1], gWh[1], gb[1])


@maybe_njit
def clip_global_norm_nb(grad, threshold):
    s = 0.0
    for k in range(grad.shape[0]):
        s += grad[k] * grad[k]
    norm = math.sqrt(s)
    if norm > threshold:
        scale = threshold / norm
        for k in range(grad.shape[0]):
            grad[k] *= scale
    return norm


@maybe_njit
def adam_update_nb(theta, grad, m, v, lr, beta1, beta2, eps, step):
    c1 = 1.0 / (1.0 - beta1**step)
    c2 = 1.0 / (1.0 - beta2**step)
    for k in range(theta.shape[0]):
        gk = grad[k]
        mk = beta1 * m[k] + (1.0 - beta1) * gk
        vk = beta2 * v[k] + (1.0 - beta2) * gk * gk
        m[k] = mk
        v[k] = vk
        theta[k] -= lr * (mk * c1) / (math.sqrt(vk * c2) + eps)


# ---------------------------------------------------------------------------
# public bindings

if USE_NUMBA:
    direction_forward = direction_forward_nb
    direction_backward = direction_backward_nb
    bilstm_forward = bilstm_forward_nb
    bilstm_score = bilstm_score_nb
    bilstm_backward = bilstm_backward_nb
    clip_global_norm = clip_global_norm_nb
    adam_update = adam_update_nb
else:
    direction_forward = direction_forward_np
    direction_backward = direction_backward_np
    bilstm_forward = bilstm_forward_np
    bilstm_score = bilstm_score_np
    bilstm_backward = bilstm_backward_np
    clip_global_norm = clip_global_norm_np
    adam_update = adam_update_np
