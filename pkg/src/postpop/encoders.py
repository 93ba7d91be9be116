"""Recurrent caption encoder and the image-region projection layer.

The encoder is a single unidirectional LSTM whose hidden size matches the
embedding dimension, so its stacked hidden states feed the attention stage
directly. Masked (padding) steps copy the previous state forward and emit a
zero row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numeric import ParamStore, ShapeError


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def init_lstm_params(store: ParamStore, rng, d_in: int, d_hidden: int,
                     scale: float = 1.0, prefix: str = "lstm",
                     dtype=np.float64):
    """Fused 4-gate weights in i|f|g|o order."""
    store.add(f"{prefix}.Wx", (d_in, 4 * d_hidden), rng, scale, dtype)
    store.add(f"{prefix}.Wh", (d_hidden, 4 * d_hidden), rng, scale, dtype)
    store.add(f"{prefix}.b", (4 * d_hidden,), rng, scale, dtype)


@dataclass
class LstmCache:
    tokens: np.ndarray
    mask: np.ndarray
    gates: list  # per live step: (t, x_t, h_prev, c_prev, i, f, g, o, c_t)


def lstm_encode(tokens: np.ndarray, mask: np.ndarray, params: ParamStore,
                prefix: str = "lstm") -> tuple[np.ndarray, LstmCache]:
    """Encode an M x D_in token matrix into M x D_hidden stacked hidden states."""
    wx, wh, b = params[f"{prefix}.Wx"], params[f"{prefix}.Wh"], params[f"{prefix}.b"]
    m_steps, d_in = tokens.shape
    if wx.shape[0] != d_in:
        raise ShapeError(f"lstm input dim {d_in} != Wx rows {wx.shape[0]}")
    d_hidden = wh.shape[0]
    h = np.zeros(d_hidden)
    c = np.zeros(d_hidden)
    out = np.zeros((m_steps, d_hidden))
    cache = LstmCache(tokens=tokens, mask=mask, gates=[])
    for t in range(m_steps):
        if mask[t] == 0:
            continue  # state carried forward, output row stays zero
        x_t = tokens[t]
        z = x_t @ wx + h @ wh + b
        zi, zf, zg, zo = np.split(z, 4)
        gi, gf, go = _sigmoid(zi), _sigmoid(zf), _sigmoid(zo)
        gg = np.tanh(zg)
        c_new = gf * c + gi * gg
        h_new = go * np.tanh(c_new)
        cache.gates.append((t, x_t, h, c, gi, gf, gg, go, c_new))
        h, c = h_new, c_new
        out[t] = h_new
    return out, cache


def lstm_backward(d_out: np.ndarray, cache: LstmCache, params: ParamStore,
                  prefix: str = "lstm") -> dict[str, np.ndarray]:
    """Backpropagation through time for the fused-gate LSTM."""
    wx, wh = params[f"{prefix}.Wx"], params[f"{prefix}.Wh"]
    d_wx = np.zeros_like(wx)
    d_wh = np.zeros_like(wh)
    d_b = np.zeros(wx.shape[1])
    d_hidden = wh.shape[0]
    dh_next = np.zeros(d_hidden)
    dc_next = np.zeros(d_hidden)
    for (t, x_t, h_prev, c_prev, gi, gf, gg, go, c_new) in reversed(cache.gates):
        dh = d_out[t] + dh_next
        tanh_c = np.tanh(c_new)
        dgo = dh * tanh_c
        dc = dh * go * (1.0 - tanh_c ** 2) + dc_next
        dgi = dc * gg
        dgf = dc * c_prev
        dgg = dc * gi
        dz = np.concatenate([
            dgi * gi * (1.0 - gi),
            dgf * gf * (1.0 - gf),
            dgg * (1.0 - gg ** 2),
            dgo * go * (1.0 - go),
        ])
        d_wx += np.outer(x_t, dz)
        d_wh += np.outer(h_prev, dz)
        d_b += dz
        dh_next = wh @ dz
        dc_next = dc * gf
    return {f"{prefix}.Wx": d_wx, f"{prefix}.Wh": d_wh, f"{prefix}.b": d_b}


def init_projection_params(store: ParamStore, rng, n_in: int, d_out: int,
                           scale: float = 1.0, prefix: str = "proj",
                           dtype=np.float64):
    store.add(f"{prefix}.W", (n_in, d_out), rng, scale, dtype)
    store.add(f"{prefix}.b", (d_out,), rng, scale, dtype)


def project_regions(regions: np.ndarray, params: ParamStore,
                    prefix: str = "proj") -> np.ndarray:
    """Map each of the K regional rows through one shared affine layer."""
    w, b = params[f"{prefix}.W"], params[f"{prefix}.b"]
    if regions.shape[1] != w.shape[0]:
        raise ShapeError(f"region dim {regions.shape[1]} != projection rows {w.shape[0]}")
    return regions @ w + b


def project_regions_backward(regions: np.ndarray, d_out: np.ndarray,
                             prefix: str = "proj") -> dict[str, np.ndarray]:
    return {
        f"{prefix}.W": regions.T @ d_out,
        f"{prefix}.b": d_out.sum(axis=0),
    }
