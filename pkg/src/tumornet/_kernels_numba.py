"""Numba implementations of the hot inner loops.

Same call signatures as ``_kernels_numpy``; see that module for the
reference semantics. Networks travel through these kernels in a packed
form: one flat float64 parameter vector plus int64 offset tables
(weights first, then bias blocks), with activation/pre-activation
scratch buffers laid out layer by layer. ``tumornet.network`` owns the
packing.

Transfer ids: 0 = sigmoid, 1 = hypertan, 2 = gaussian.
"""

import math

import numpy as np
from numba import njit

SIGMOID = 0
HYPERTAN = 1
GAUSSIAN = 2


# ---------------------------------------------------------------------------
# growth-map kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def orbit_fill(masses, r, k, eta):
    """Iterate the noisy clamped logistic map in place.

    masses[0] must hold the initial mass; eta holds one multiplicative
    noise term per step. Each new mass is clamped into [0, k].
    """
    x = masses[0]
    for t in range(eta.shape[0]):
        x = r * x * (1.0 - x / k) * (1.0 + eta[t])
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
        masses[t + 1] = x


@njit(cache=True)
def orbit_fill_ramped(masses, rs, k, eta):
    """Like orbit_fill but with a per-step growth rate rs[t]."""
    x = masses[0]
    for t in range(eta.shape[0]):
        x = rs[t] * x * (1.0 - x / k) * (1.0 + eta[t])
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
        masses[t + 1] = x


@njit(cache=True)
def orbit_tail(r, k, x0, burn_in, count):
    """Return `count` consecutive noise-free orbit points after burn_in."""
    x = x0
    for _ in range(burn_in):
        x = r * x * (1.0 - x / k)
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
    out = np.empty(count)
    for t in range(count):
        out[t] = x
        x = r * x * (1.0 - x / k)
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
    return out

@njit(cache=True)
def lyapunov_sum(r, k, x0, burn_in, n):
    """Sum ln|r(1 - 2x/k)| along the noise-free orbit.

    Exact zero derivatives are skipped. Returns (sum, terms_counted).
    """
    x = x0
    for _ in range(burn_in):
        x = r * x * (1.0 - x / k)
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
    total = 0.0
    count = 0
    for _ in range(n):
        d = r * (1.0 - 2.0 * x / k)
        if d != 0.0:
            total += math.log(abs(d))
            count += 1
        x = r * x * (1.0 - x / k)
        if x < 0.0:
            x = 0.0
        elif x > k:
            x = k
    return total, count


# ---------------------------------------------------------------------------
# network kernels
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _activate(kind, s):
    if kind == SIGMOID:
        if s >= 0.0:
            return 1.0 / (1.0 + math.exp(-s))
        e = math.exp(s)
        return e / (1.0 + e)
    elif kind == HYPERTAN:
        return math.tanh(s)
    else:
        return math.exp(-s * s)


@njit(cache=True, inline="always")
def _activate_deriv(kind, out, z):
    if kind == SIGMOID:
        return out * (1.0 - out)
    elif kind == HYPERTAN:
        return 1.0 - out * out
    else:
        return -2.0 * z * out


@njit(cache=True)
def net_forward(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                x, act, z):
    for i in range(sizes[0]):
        act[i] = x[i]
    n_layers = sizes.shape[0] - 1
    for l in range(n_layers):
        nin = sizes[l]
        nout = sizes[l + 1]
        wo = w_off[l]
        ai = a_off[l]
        ao = a_off[l + 1]
        zo = z_off[l]
        kind = tkinds[l]
        for j in range(nout):
            s = 0.0
            for i in range(nin):
                s += flat[wo + i * nout + j] * act[ai + i]
            if use_bias:
                s += flat[b_off[l] + j]
            z[zo + j] = s
            act[ao + j] = _activate(kind, s)


@njit(cache=True)
def net_backward(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                 act, z, target, grad, d_cur, d_prev):
    """Fill `grad` with the exact SSE gradient for one sample.

    Requires act/z filled by net_forward for the same sample. d_cur and
    d_prev are scratch vectors of width >= max(sizes).
    """
    n_layers = sizes.shape[0] - 1
    last = n_layers - 1
    n_out = sizes[n_layers]
    ao = a_off[n_layers]
    zo = z_off[last]
    kind = tkinds[last]
    for j in range(n_out):
        o = act[ao + j]
        d_cur[j] = 2.0 * (o - target[j]) * _activate_deriv(kind, o, z[zo + j])
    for l in range(last, -1, -1):
        nin = sizes[l]
        nout = sizes[l + 1]
        wo = w_off[l]
        ai = a_off[l]
        for j in range(nout):
            dj = d_cur[j]
            for i in range(nin):
                grad[wo + i * nout + j] = dj * act[ai + i]
            if use_bias:
                grad[b_off[l] + j] = dj
        if l > 0:
            kind = tkinds[l - 1]
            zo = z_off[l - 1]
            for i in range(nin):
                s = 0.0
                for j in range(nout):
                    s += flat[wo + i * nout + j] * d_cur[j]
                o = act[ai + i]
                d_prev[i] = s * _activate_deriv(kind, o, z[zo + i])
            d_cur, d_prev = d_prev, d_cur


@njit(cache=True)
def net_outputs(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                X, out):
    n_layers = sizes.shape[0] - 1
    a_total = 0
    for l in range(sizes.shape[0]):
        a_total += sizes[l]
    act = np.empty(a_total)
    z = np.empty(a_total - sizes[0])
    ao = a_off[n_layers]
    for row in range(X.shape[0]):
        net_forward(flat, sizes, w_off, b_off, a_off, z_off, use_bias,
                    tkinds, X[row], act, z)
        for j in range(sizes[n_layers]):
            out[row, j] = act[ao + j]


@njit(cache=True)
def net_sse(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds, X, Y):
    n_layers = sizes.shape[0] - 1
    a_total = 0
    for l in range(sizes.shape[0]):
        a_total += sizes[l]
    act = np.empty(a_total)
    z = np.empty(a_total - sizes[0])
    ao = a_off[n_layers]
    total = 0.0
    for row in range(X.shape[0]):
        net_forward(flat, sizes, w_off, b_off, a_off, z_off, use_bias,
                    tkinds, X[row], act, z)
        for j in range(sizes[n_layers]):
            d = act[ao + j] - Y[row, j]
            total += d * d
    return total


@njit(cache=True)
def net_train(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
              X, Y, orders, lr, Xv, Yv, train_hist, val_hist):
    """Online SGD, one weight update per sample, in the given visit order.

    orders has shape (epochs, n_samples). After each epoch the mean SSE
    per sample over X (and Xv when nonempty) is recorded. Returns -1 on
    success or the epoch index at which the loss became non-finite.
    """
    n_samples = X.shape[0]
    epochs = orders.shape[0]
    a_total = 0
    maxw = 0
    for l in range(sizes.shape[0]):
        a_total += sizes[l]
        if sizes[l] > maxw:
            maxw = sizes[l]
    act = np.empty(a_total)
    z = np.empty(a_total - sizes[0])
    grad = np.empty(flat.shape[0])
    d_cur = np.empty(maxw)
    d_prev = np.empty(maxw)
    for e in range(epochs):
        for s in range(n_samples):
            idx = orders[e, s]
            net_forward(flat, sizes, w_off, b_off, a_off, z_off, use_bias,
                        tkinds, X[idx], act, z)
            net_backward(flat, sizes, w_off, b_off, a_off, z_off, use_bias,
                         tkinds, act, z, Y[idx], grad, d_cur, d_prev)
            for p in range(flat.shape[0]):
                flat[p] -= lr * grad[p]
        tl = net_sse(flat, sizes, w_off, b_off, a_off, z_off, use_bias,
                     tkinds, X, Y) / n_samples
        train_hist[e] = tl
        if Xv.shape[0] > 0:
            val_hist[e] = net_sse(flat, sizes, w_off, b_off, a_off, z_off,
                                  use_bias, tkinds, Xv, Yv) / Xv.shape[0]
        else:
            val_hist[e] = np.nan
        if not np.isfinite(tl):
            return e
    return -1
