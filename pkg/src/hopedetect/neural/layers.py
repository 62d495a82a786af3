"""Forward/backward primitives for the convolution, pooling and LSTM layers.

Arrays are batch-major: ``(batch, time, channels)``.
"""
import numpy as np
from scipy.special import expit


def conv1d_forward(X, W, b):
    """Valid 1-D convolution; ``W`` has shape ``(width, in_channels, filters)``."""
    k, E, F = W.shape
    B, T, _ = X.shape
    L = T - k + 1
    cols = np.concatenate([X[:, j:j + L] for j in range(k)], axis=2)  # (B, L, k*E)
    Z = cols @ W.reshape(k * E, F) + b
    return Z, cols


def conv1d_backward(dZ, cols, W, input_len):
    k, E, F = W.shape
    B, L, _ = dZ.shape
    dW = (cols.reshape(B * L, k * E).T @ dZ.reshape(B * L, F)).reshape(k, E, F)
    db = dZ.sum(axis=(0, 1))
    dcols = (dZ @ W.reshape(k * E, F).T).reshape(B, L, k, E)
    dX = np.zeros((B, input_len, E))
    for j in range(k):
        dX[:, j:j + L] += dcols[:, :, j]
    return dX, dW, db


def maxpool_forward(A, window):
    """Non-overlapping max-pool with stride ``window``; a ragged tail is dropped."""
    B, L, F = A.shape
    T = L // window
    blocks = A[:, : T * window].reshape(B, T, window, F)
    arg = blocks.argmax(axis=2)
    out = np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, arg


def maxpool_backward(dP, arg, window, input_len):
    B, T, F = dP.shape
    blocks = np.zeros((B, T, window, F))
    np.put_along_axis(blocks, arg[:, :, None, :], dP[:, :, None, :], axis=2)
    dA = np.zeros((B, input_len, F))
    dA[:, : T * window] = blocks.reshape(B, T * window, F)
    return dA


def lstm_forward(X, Wx, Wh, b):
    """Run an LSTM over ``X``; gate order in the packed weights is i, f, g, o."""
    B, T, _ = X.shape
    H = Wh.shape[0]
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.zeros((B, T, H))
    cache = []
    for t in range(T):
        z = X[:, t] @ Wx + h @ Wh + b
        i = expit(z[:, :H])
        f = expit(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = expit(z[:, 3 * H:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        cache.append((i, f, g, o, c_prev, h_prev, tc))
    return hs, cache


def lstm_backward(dH, X, Wx, Wh, cache):
    """Gradients given ``dH``, the loss gradient w.r.t. every output ``h_t``."""
    B, T, _ = X.shape
    H = Wh.shape[0]
    dX = np.zeros_like(X)
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        i, f, g, o, c_prev, h_prev, tc = cache[t]
        dh = dH[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)
        dWx += X[:, t].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dX[:, t] = dz @ Wx.T
        dh_next = dz @ Wh.T
        dc_next = dc * f
    return dX, dWx, dWh, db
