"""Pure-numpy fallback for the hot inner loops.

Reference semantics for both kernel backends. Orbit kernels iterate the
map with scalar Python arithmetic (the recurrence is inherently
sequential); network kernels vectorize each per-sample update with BLAS
dots over views into the packed parameter vector, so in-place updates
write straight through to the flat buffer.

Transfer ids: 0 = sigmoid, 1 = hypertan, 2 = gaussian.
"""

import math

import numpy as np

SIGMOID = 0
HYPERTAN = 1
GAUSSIAN = 2


# ---------------------------------------------------------------------------
# growth-map kernels
# ---------------------------------------------------------------------------

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

def _layer_views(buf, sizes, w_off, b_off, use_bias):
    weights = []
    biases = []
    for l in range(len(sizes) - 1):
        nin = int(sizes[l])
        nout = int(sizes[l + 1])
        wo = int(w_off[l])
        weights.append(buf[wo:wo + nin * nout].reshape(nin, nout))
        if use_bias:
            bo = int(b_off[l])
            biases.append(buf[bo:bo + nout])
        else:
            biases.append(None)
    return weights, biases


def _activate(kind, s):
    if kind == SIGMOID:
        out = np.empty_like(s)
        pos = s >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
        e = np.exp(s[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    elif kind == HYPERTAN:
        return np.tanh(s)
    else:
        return np.exp(-s * s)


def _activate_deriv(kind, out, z):
    if kind == SIGMOID:
        return out * (1.0 - out)
    elif kind == HYPERTAN:
        return 1.0 - out * out
    else:
        return -2.0 * z * out


def net_forward(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                x, act, z):
    weights, biases = _layer_views(flat, sizes, w_off, b_off, use_bias)
    n_layers = len(sizes) - 1
    act[:sizes[0]] = x
    a = np.asarray(x, dtype=np.float64)
    for l in range(n_layers):
        s = a @ weights[l]
        if use_bias:
            s = s + biases[l]
        a = _activate(int(tkinds[l]), s)
        zo = int(z_off[l])
        z[zo:zo + sizes[l + 1]] = s
        ao = int(a_off[l + 1])
        act[ao:ao + sizes[l + 1]] = a


def net_backward(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                 act, z, target, grad, d_cur, d_prev):
    """Fill `grad` with the exact SSE gradient for one sample.

    Requires act/z filled by net_forward for the same sample. The d_cur
    and d_prev scratch vectors exist for kernel-signature parity; this
    path allocates the per-layer deltas it needs.
    """
    weights, _ = _layer_views(flat, sizes, w_off, b_off, use_bias)
    g_weights, g_biases = _layer_views(grad, sizes, w_off, b_off, use_bias)
    n_layers = len(sizes) - 1
    last = n_layers - 1
    ao = int(a_off[n_layers])
    zo = int(z_off[last])
    o = act[ao:ao + sizes[n_layers]]
    zl = z[zo:zo + sizes[n_layers]]
    delta = 2.0 * (o - target) * _activate_deriv(int(tkinds[last]), o, zl)
    for l in range(last, -1, -1):
        ai = int(a_off[l])
        a_in = act[ai:ai + sizes[l]]
        g_weights[l][:] = np.outer(a_in, delta)
        if use_bias:
            g_biases[l][:] = delta
        if l > 0:
            back = weights[l] @ delta
            zo = int(z_off[l - 1])
            o_in = a_in
            zl = z[zo:zo + sizes[l]]
            delta = back * _activate_deriv(int(tkinds[l - 1]), o_in, zl)


def net_outputs(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                X, out):
    weights, biases = _layer_views(flat, sizes, w_off, b_off, use_bias)
    a = X
    for l in range(len(sizes) - 1):
        s = a @ weights[l]
        if use_bias:
            s = s + biases[l]
        a = _activate(int(tkinds[l]), s)
    out[:] = a


def net_sse(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds, X, Y):
    out = np.empty((X.shape[0], int(sizes[-1])))
    net_outputs(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
                X, out)
    return float(np.sum((out - Y) ** 2))


def net_train(flat, sizes, w_off, b_off, a_off, z_off, use_bias, tkinds,
              X, Y, orders, lr, Xv, Yv, train_hist, val_hist):
    """Online SGD, one weight update per sample, in the given visit order.

    orders has shape (epochs, n_samples). After each epoch the mean SSE
    per sample over X (and Xv when nonempty) is recorded. Returns -1 on
    success or the epoch index at which the loss became non-finite.
    """
    weights, biases = _layer_views(flat, sizes, w_off, b_off, use_bias)
    n_layers = len(sizes) - 1
    last = n_layers - 1
    n_samples = X.shape[0]
    epochs = orders.shape[0]
    acts = [None] * (n_layers + 1)
    zs = [None] * n_layers
    for e in range(epochs):
        for s in range(n_samples):
            idx = orders[e, s]
            a = X[idx]
            acts[0] = a
            for l in range(n_layers):
                sl = a @ weights[l]
                if use_bias:
                    sl = sl + biases[l]
                a = _activate(int(tkinds[l]), sl)
                zs[l] = sl
                acts[l + 1] = a
            delta = (2.0 * (acts[n_layers] - Y[idx])
                     * _activate_deriv(int(tkinds[last]), acts[n_layers],
                                       zs[last]))
            for l in range(last, -1, -1):
                back = weights[l] @ delta if l > 0 else None
                weights[l] -= lr * np.outer(acts[l], delta)
                if use_bias:
                    biases[l] -= lr * delta
                if l > 0:
                    delta = back * _activate_deriv(int(tkinds[l - 1]),
                                                   acts[l], zs[l - 1])
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
