"""Sparse-delay OMP denoising followed by Kalman/RTS tracking across symbols.

Pipeline: OMP on pilot symbols -> Doppler estimate -> adaptive time FIR on the
pilot sequence -> scalar Kalman filter and RTS smoother per (antenna, subcarrier)
-> time FIR and B-spline frequency smoothing over the full grid.
"""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .config import OmpConfig
from .errors import DimensionError, ParameterOutOfRange
from .grid import Estimate, PilotMask
from .ops import convolve_axis


class OmpResult(NamedTuple):
    h: np.ndarray
    err: np.ndarray
    singular: bool
    support: np.ndarray | None = None


class ForwardPass(NamedTuple):
    h_fwd: np.ndarray
    p_fwd: np.ndarray
    h_pred: np.ndarray  # h_pred[t] is the prediction for symbol t (t >= 1)
    p_pred: np.ndarray
    gain: np.ndarray  # zero where no update happened


def dft_dictionary(m: int, l_max: int) -> np.ndarray:
    """``A[m', l] = exp(-2j*pi*m'*l/m)`` for ``l < l_max``."""
    if not 1 <= l_max <= m:
        raise DimensionError(f"need 1 <= l_max <= m, got l_max={l_max}, m={m}")
    rows = np.arange(m)[:, None]
    cols = np.arange(l_max)[None, :]
    return np.exp(-2j * np.pi * rows * cols / m)


def omp_denoise(h_ls: np.ndarray, a: np.ndarray, k: int, rcond: float = 1e-12) -> OmpResult:
    """Single-shot support selection plus least squares on the support.

    The ``k`` dictionary columns with the largest correlation magnitude form
    the support; ties keep the lower index. If the support Gram matrix is
    numerically singular the input is returned unchanged with zero error and
    ``singular=True``.
    """
    h_ls = np.asarray(h_ls, dtype=complex)
    if k > a.shape[1]:
        raise DimensionError(f"k={k} exceeds dictionary width {a.shape[1]}")
    c = a.conj().T @ h_ls
    support = np.sort(np.argsort(-np.abs(c), kind="stable")[:k])
    a_sup = a[:, support]
    gram = a_sup.conj().T @ a_sup
    if np.linalg.cond(gram) * rcond > 1.0:
        return OmpResult(h_ls.copy(), np.zeros(h_ls.shape), True, support)
    x = np.linalg.solve(gram, a_sup.conj().T @ h_ls)
    h = a_sup @ x
    return OmpResult(h, np.abs(h_ls - h) ** 2, False, support)


def estimate_doppler(h_pilot: np.ndarray, cfg: OmpConfig = OmpConfig()) -> tuple[float, bool]:
    """Lag-one correlation over consecutive entries of the pilot sequence.

    ``h_pilot`` has the pilot-sequence index on axis -2 and subcarriers on
    axis -1 (any leading axes are averaged as well). Returns ``(a_est, fallback)``
    where ``fallback`` is True when fewer than two pilot symbols exist.
    """
    h_pilot = np.asarray(h_pilot)
    lo, hi = cfg.doppler_clamp
    if h_pilot.shape[-2] < 2:
        warnings.warn("fewer than two pilot symbols; using fallback Doppler coefficient")
        return cfg.doppler_fallback, True
    cur = h_pilot[..., :-1, :]
    nxt = h_pilot[..., 1:, :]
    num = np.mean(np.real(cur * nxt.conj()))
    den = np.mean(np.abs(cur) ** 2) + cfg.eps
    return float(np.clip(num / den, lo, hi)), False


def fir_kernel(a: float, l_fir: int) -> np.ndarray:
    """Symmetric kernel ``a**|tau| / sum_i a**|i|`` for ``|tau| <= (l_fir - 1) / 2``."""
    if not 0.0 < a <= 1.0:
        raise ParameterOutOfRange(f"FIR decay a={a} outside (0, 1]")
    if l_fir < 1 or l_fir % 2 == 0:
        raise ParameterOutOfRange("l_fir must be a positive odd integer")
    tau = np.abs(np.arange(l_fir) - l_fir // 2)
    w = a ** tau.astype(float)
    return w / w.sum()


def kalman_forward(
    h_pilot: np.ndarray,
    e_pilot: np.ndarray,
    h_ls: np.ndarray,
    var_ls: np.ndarray,
    pilot_times,
    a_k: float,
    eps: float = 1e-12,
) -> ForwardPass:
    """Scalar AR(1) Kalman filter run independently for every element.

    Time is axis 0 of ``h_ls`` / ``var_ls`` (shape ``(T, ...)``); ``h_pilot`` and
    ``e_pilot`` hold one row per entry of ``pilot_times`` (shape ``(P, ...)``).
    """
    pilot_times = [int(t) for t in pilot_times]
    n_t = h_ls.shape[0]
    if h_pilot.shape[0] != len(pilot_times) or e_pilot.shape != h_pilot.shape:
        raise DimensionError("pilot rows do not match pilot_times")
    row = {t: i for i, t in enumerate(pilot_times)}
    q = 1.0 - a_k**2
    h_fwd = np.zeros(h_ls.shape, dtype=complex)
    p_fwd = np.zeros(h_ls.shape)
    h_pred = np.zeros_like(h_fwd)
    p_pred = np.zeros_like(p_fwd)
    gain = np.zeros_like(p_fwd)
    if 0 in row:
        h_fwd[0] = h_pilot[row[0]]
        p_fwd[0] = e_pilot[row[0]]
    else:
        h_fwd[0] = h_ls[0]
        p_fwd[0] = var_ls[0]
    for t in range(1, n_t):
        h_pred[t] = a_k * h_fwd[t - 1]
        pp = a_k**2 * p_fwd[t - 1] + q
        if np.any(pp <= 0):
            warnings.warn("nonpositive predicted variance clamped")
            pp = np.maximum(pp, eps)
        p_pred[t] = pp
        if t in row:
            k = pp / (pp + e_pilot[row[t]])
            gain[t] = k
            # convex form is exact when k == 1 (noiseless pilots)
            h_fwd[t] = (1.0 - k) * h_pred[t] + k * h_pilot[row[t]]
            p_fwd[t] = (1.0 - k) * pp
        else:
            h_fwd[t] = h_pred[t]
            p_fwd[t] = pp
    return ForwardPass(h_fwd, p_fwd, h_pred, p_pred, gain)


def rts_smooth(fwd: ForwardPass, a_k: float) -> tuple[np.ndarray, np.ndarray]:
    """Backward Rauch-Tung-Striebel pass over a :class:`ForwardPass`."""
    h_sm = fwd.h_fwd.copy()
    p_sm = fwd.p_fwd.copy()
    for t in range(h_sm.shape[0] - 2, -1, -1):
        c = fwd.p_fwd[t] * a_k / fwd.p_pred[t + 1]
        h_sm[t] = fwd.h_fwd[t] + c * (h_sm[t + 1] - fwd.h_pred[t + 1])
        p_sm[t] = fwd.p_fwd[t] + c**2 * (p_sm[t + 1] - fwd.p_pred[t + 1])
    return h_sm, p_sm


def kalman_rts(h_pilot, e_pilot, h_ls, var_ls, pilot_times, a_k, eps=1e-12):
    """Forward filter then RTS smoother; returns ``(h_sm, p_sm)``."""
    fwd = kalman_forward(h_pilot, e_pilot, h_ls, var_ls, pilot_times, a_k, eps)
    return rts_smooth(fwd, a_k)


def smooth_time_freq(h, p, w_time, spline, time_axis: int = -2, freq_axis: int = -1):
    """Time FIR then frequency spline convolution, both zero padded, on ``h`` and ``p``.

    The spline kernel is applied as given (its taps sum to 1.5).
    """
    h_time = convolve_axis(h, w_time, time_axis)
    p_time = convolve_axis(p, w_time, time_axis)
    return convolve_axis(h_time, spline, freq_axis), convolve_axis(p_time, spline, freq_axis)


def estimate_agnostic_omp(ls: Estimate, mask: PilotMask, cfg: OmpConfig = OmpConfig()) -> Estimate:
    n_s, n_t, n_f = ls.dims
    if n_f < cfg.l_max:
        raise DimensionError(f"need n_f >= l_max ({n_f} < {cfg.l_max})")
    pilots = mask.pilot_symbols
    a = dft_dictionary(n_f, cfg.l_max)

    # OMP on each pilot symbol of each antenna
    h_omp = np.empty((n_s, pilots.size, n_f), dtype=complex)
    e_omp = np.empty((n_s, pilots.size, n_f))
    for s in range(n_s):
        for i, t in enumerate(pilots):
            res = omp_denoise(ls.h[s, t], a, cfg.k_sparsity)
            h_omp[s, i], e_omp[s, i] = res.h, res.err

    a_est, _ = estimate_doppler(h_omp, cfg)
    w_t = fir_kernel(a_est, cfg.l_fir)
    h_tilde = convolve_axis(h_omp, w_t, axis=1)
    e_tilde = convolve_axis(e_omp, w_t, axis=1)

    # time on axis 0 for the scalar filters
    h_sm, p_sm = kalman_rts(
        np.moveaxis(h_tilde, 1, 0),
        np.moveaxis(e_tilde, 1, 0),
        np.moveaxis(ls.h, 1, 0),
        np.moveaxis(ls.var, 1, 0),
        pilots,
        cfg.a_kalman,
        cfg.eps,
    )
    h_sm = np.moveaxis(h_sm, 0, 1)
    p_sm = np.moveaxis(p_sm, 0, 1)
    h_final, p_final = smooth_time_freq(h_sm, p_sm, w_t, cfg.spline_kernel, time_axis=1, freq_axis=2)
    return Estimate(h=h_final, var=np.maximum(p_final, 0.0))
