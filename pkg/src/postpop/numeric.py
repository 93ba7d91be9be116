"""Dense-layer primitives, parameter storage, and a finite-difference gradient oracle.

Everything trainable in the model is built from the forward/backward pairs in
this module. Backward passes are hand-derived per layer (the model graph is
static); `finite_difference_grad` is the independent check they are verified
against.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


class ParamStore:
    """Named collection of parameter arrays with fixed shapes.

    Initialization draws uniform values in [-scale, scale]; the default
    scale of 1.0 gives the wide [-1, 1] init the model trains from.
    """

    def __init__(self):
        self._params: dict[str, np.ndarray] = {}

    def add(self, name: str, shape, rng: np.random.Generator,
            scale: float = 1.0, dtype=np.float64) -> np.ndarray:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        if dtype == np.float32:
            # draw in float32 directly so huge layers never materialize in f8
            arr = (rng.random(size=shape, dtype=np.float32) * 2.0 - 1.0) \
                * np.float32(scale)
        else:
            arr = rng.uniform(-scale, scale, size=shape).astype(dtype)
        self._params[name] = arr
        return arr

    def add_array(self, name: str, arr: np.ndarray) -> np.ndarray:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        self._params[name] = np.asarray(arr)
        return self._params[name]

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __setitem__(self, name: str, value: np.ndarray):
        if name not in self._params:
            raise KeyError(f"unknown parameter: {name}")
        if self._params[name].shape != np.shape(value):
            raise ShapeError(
                f"parameter {name}: shape {np.shape(value)} does not match "
                f"fixed shape {self._params[name].shape}")
        self._params[name] = np.asarray(value)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self._params.items()}

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for k, v in self._params.items():
            out._params[k] = v.copy()
        return out

    def astype(self, dtype) -> "ParamStore":
        out = ParamStore()
        for k, v in self._params.items():
            out._params[k] = v.astype(dtype)
        return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with explicit conformance check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def softmax(scores: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Masked softmax over a 1-D score vector.

    Masked positions get weight exactly 0; unmasked weights are shifted by
    the unmasked max before exponentiation. Raises on an all-masked input.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if mask is None:
        mask = np.ones_like(scores)
    mask = np.asarray(mask)
    if mask.shape != scores.shape:
        raise ShapeError(f"mask shape {mask.shape} != scores shape {scores.shape}")
    live = mask > 0
    if not live.any():
        raise ValueError("softmax over a fully masked vector")
    out = np.zeros_like(scores)
    shifted = scores[live] - scores[live].max()
    e = np.exp(shifted)
    out[live] = e / e.sum()
    return out


def softmax_backward(alpha: np.ndarray, d_alpha: np.ndarray,
                     mask: np.ndarray | None = None) -> np.ndarray:
    """Gradient of masked softmax: ds_i = a_i * (da_i - sum_j a_j da_j)."""
    inner = float(np.dot(alpha, d_alpha))
    ds = alpha * (d_alpha - inner)
    if mask is not None:
        ds = ds * (np.asarray(mask) > 0)
    return ds


def conv1d_forward(x: np.ndarray, filters: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid (no padding) stride-1 cross-correlation.

    x: (length, ch_in); filters: (ch_out, width, ch_in); bias: (ch_out,).
    Returns (length - width + 1, ch_out) pre-activations; the caller applies
    any nonlinearity.
    """
    x = np.asarray(x)
    filters = np.asarray(filters)
    length, ch_in = x.shape
    ch_out, width, f_ch_in = filters.shape
    if f_ch_in != ch_in:
        raise ShapeError(f"conv1d channel mismatch: input {ch_in}, filters {f_ch_in}")
    if width > length:
        raise ShapeError(f"conv1d width {width} exceeds input length {length}")
    out_len = length - width + 1
    # windows: (out_len, width, ch_in) view, contracted against filters
    windows = np.lib.stride_tricks.sliding_window_view(x, width, axis=0)
    # sliding_window_view yields (out_len, ch_in, width); align to (out_len, width, ch_in)
    windows = windows.transpose(0, 2, 1)
    out = np.tensordot(windows, filters, axes=([1, 2], [1, 2])) + bias
    assert out.shape == (out_len, ch_out)
    return out


def conv1d_backward(x: np.ndarray, filters: np.ndarray, d_out: np.ndarray):
    """Gradients of conv1d_forward. Returns (d_x, d_filters, d_bias)."""
    length, ch_in = x.shape
    ch_out, width, _ = filters.shape
    out_len = length - width + 1
    d_filters = np.zeros_like(filters)
    d_x = np.zeros_like(x)
    windows = np.lib.stride_tricks.sliding_window_view(x, width, axis=0).transpose(0, 2, 1)
    # d_filters[o,w,c] = sum_t d_out[t,o] * x[t+w,c]
    d_filters += np.tensordot(d_out, windows, axes=([0], [0]))
    d_bias = d_out.sum(axis=0)
    # d_x[t+w,c] += sum_o d_out[t,o] * filters[o,w,c]
    contrib = np.tensordot(d_out, filters, axes=([1], [0]))  # (out_len, width, ch_in)
    for w in range(width):
        d_x[w:w + out_len] += contrib[:, w, :]
    return d_x, d_filters, d_bias


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map y = x @ W + b for a 1-D input."""
    x = np.asarray(x)
    if x.ndim != 1 or weight.ndim != 2 or x.shape[0] != weight.shape[0]:
        raise ShapeError(f"dense shape mismatch: x {x.shape}, W {weight.shape}")
    return x @ weight + bias


def dense_backward(x: np.ndarray, weight: np.ndarray, d_out: np.ndarray):
    """Gradients of dense_forward. Returns (d_x, d_weight, d_bias)."""
    d_weight = np.outer(x, d_out)
    d_bias = d_out.copy()
    d_x = weight @ d_out
    return d_x, d_weight, d_bias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    return d_out * (x > 0)


def tanh_elementwise(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def dropout(x: np.ndarray, rate: float, mode: str, rng: np.random.Generator | None = None):
    """Inverted dropout. Returns (output, keep_mask).

    Training mode zeroes entries with probability `rate` and scales the
    survivors by 1/(1-rate); inference mode is the identity (mask of ones).
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"dropout mode must be 'train' or 'infer', got {mode!r}")
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "infer" or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("training-mode dropout requires an rng")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    return x * keep / (1.0 - rate), keep


def dropout_backward(d_out: np.ndarray, keep_mask: np.ndarray, rate: float) -> np.ndarray:
    if rate == 0.0:
        return d_out
    return d_out * keep_mask / (1.0 - rate)


def finite_difference_grad(f, store: ParamStore, eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Central-difference gradient of a scalar function of a ParamStore.

    Perturbs one coordinate at a time: (f(p+eps) - f(p-eps)) / (2 eps).
    Intended as the independent oracle for every analytic backward pass.
    """
    grads = {}
    for name, arr in store.items():
        g = np.zeros_like(arr, dtype=np.float64)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = f(store)
            flat[i] = orig - eps
            down = f(store)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * eps)
        grads[name] = g
    return grads


def relative_error(g_analytic: np.ndarray, g_numeric: np.ndarray) -> float:
    """max-norm relative error used by all gradient checks."""
    ga = np.asarray(g_analytic, dtype=np.float64)
    gn = np.asarray(g_numeric, dtype=np.float64)
    num = np.max(np.abs(ga - gn)) if ga.size else 0.0
    den = max(1e-8, (np.max(np.abs(ga)) if ga.size else 0.0)
              + (np.max(np.abs(gn)) if gn.size else 0.0))
    return float(num / den)
