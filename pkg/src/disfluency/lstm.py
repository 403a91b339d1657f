"""Batched LSTM recurrence with exact backpropagation through time.

Gate layout along the last axis of ``W``, ``U`` and ``b`` is
``[input, forget, output, candidate]``, each ``hidden`` wide. Sequences are
right-padded; padded steps run but their outputs are never used, so they
cannot influence real positions of a left-to-right pass.
"""
from __future__ import annotations

import numpy as np


def sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def lstm_forward(X, W, U, b):
    """Run the recurrence over ``X [B, T, D]``; return hidden states and a cache."""
    B, T, _ = X.shape
    H = U.shape[0]
    XW = X @ W + b
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.zeros((B, T + 1, H))  # hs[:, t + 1] is the state after step t
    cs = np.zeros((B, T + 1, H))
    gates = np.zeros((B, T, 4 * H))
    for t in range(T):
        z = XW[:, t] + h @ U
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[:, t] = np.concatenate([i, f, o, g], axis=1)
        hs[:, t + 1] = h
        cs[:, t + 1] = c
    return hs[:, 1:], (X, hs, cs, gates)


def lstm_backward(dH, cache, W, U):
    """Gradients of a scalar loss given ``dH = dL/dH [B, T, H]``."""
    X, hs, cs, gates = cache
    B, T, H = dH.shape
    dZ = np.zeros((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dU = np.zeros_like(U)
    for t in reversed(range(T)):
        i = gates[:, t, :H]
        f = gates[:, t, H:2 * H]
        o = gates[:, t, 2 * H:3 * H]
        g = gates[:, t, 3 * H:]
        tc = np.tanh(cs[:, t + 1])
        dh = dH[:, t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * cs[:, t] * f * (1.0 - f),
            dh * tc * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ], axis=1)
        dZ[:, t] = dz
        dU += hs[:, t].T @ dz
        dh_next = dz @ U.T
        dc_next = dc * f
    D = X.shape[2]
    flat = dZ.reshape(-1, 4 * H)
    dW = X.reshape(-1, D).T @ flat
    db = flat.sum(axis=0)
    dX = dZ @ W.T
    return dX, dW, dU, db


def reverse_index(lengths, T):
    """Index that reverses each row's first ``length`` steps and leaves padding."""
    t = np.arange(T)[None, :]
    L = np.asarray(lengths)[:, None]
    return np.where(t < L, L - 1 - t, t)


def reverse_within(X, lengths):
    B, T = X.shape[:2]
    return X[np.arange(B)[:, None], reverse_index(lengths, T)]


def log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)
