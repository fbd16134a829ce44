"""Small array helpers shared by the estimators."""

from __future__ import annotations

import numpy as np


def shift(x: np.ndarray, k: int, axis: int) -> np.ndarray:
    """``out[i] = x[i - k]`` along ``axis``; indices outside the array read as zero."""
    out = np.zeros_like(x)
    n = x.shape[axis]
    if abs(k) >= n:
        return out
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    if k >= 0:
        src[axis] = slice(0, n - k)
        dst[axis] = slice(k, n)
    else:
        src[axis] = slice(-k, n)
        dst[axis] = slice(0, n + k)
    out[tuple(dst)] = x[tuple(src)]
    return out


def convolve_axis(x: np.ndarray, kernel, axis: int) -> np.ndarray:
    """Centred 1-D convolution along ``axis`` with zero padding (odd-length kernel)."""
    kernel = np.asarray(kernel)
    half = kernel.size // 2
    out = np.zeros(x.shape, dtype=np.result_type(x, kernel))
    for j, w in enumerate(kernel):
        out += w * shift(x, j - half, axis)
    return out


def clamp(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)
