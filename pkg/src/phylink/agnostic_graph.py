"""Graph message-passing channel estimator on the (time, frequency) grid.

All per-antenna routines take 2-D ``(n_t, n_f)`` arrays; pilot REs act as
anchored observation nodes. Nodes outside the grid do not exist: in the
iterative update a missing neighbour contributes neither value nor weight,
while the fixed blur / smoothing kernels use zero padding.
"""

from __future__ import annotations

import numpy as np

from .config import GraphConfig
from .grid import DistanceMaps, Estimate, PilotMask, Region, distance_maps, region_partition
from .ops import clamp, shift

_T, _F = 0, 1


def _cross_filter(x: np.ndarray, centre: float, freq: float, time: float) -> np.ndarray:
    return (
        centre * x
        + freq * (shift(x, 1, _F) + shift(x, -1, _F))
        + time * (shift(x, 1, _T) + shift(x, -1, _T))
    )


def support_density(mask: PilotMask, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    """Local pilot density: repeated cross blur of the mask, floored."""
    s = mask.mask.astype(float)
    for _ in range(cfg.density_passes):
        s = _cross_filter(s, *cfg.density_weights)
    return np.maximum(s, cfg.density_floor)


def _nearest_index(n: int, positions: np.ndarray) -> np.ndarray:
    # argmin returns the first minimum, i.e. the lower pilot index on ties
    d = np.abs(np.arange(n)[:, None] - positions[None, :])
    return positions[np.argmin(d, axis=1)]


def nearest_pilot_values(h_ls: np.ndarray, mask: PilotMask) -> tuple[np.ndarray, np.ndarray]:
    """LS values at the temporally and the spectrally nearest pilot coordinate.

    ``H_t(t, f) = H_LS(t*, f)`` with ``t*`` the nearest pilot symbol and
    ``H_f(t, f) = H_LS(t, f*)`` with ``f*`` the nearest pilot subcarrier.
    """
    n_t, n_f = mask.shape
    t_star = _nearest_index(n_t, mask.pilot_symbols)
    f_star = _nearest_index(n_f, mask.pilot_subcarriers)
    return h_ls[t_star, :], h_ls[:, f_star]


def initial_state(h_ls: np.ndarray, mask: PilotMask, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    h_t, h_f = nearest_pilot_values(h_ls, mask)
    w_f, w_t = cfg.init_blend
    base = w_f * h_f + w_t * h_t
    for _ in range(cfg.init_smooth_passes):
        base = _cross_filter(base, *cfg.init_smooth_weights)
    return np.where(mask.mask, h_ls, base)


def phase_mismatch(a: np.ndarray, b: np.ndarray, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    c = a * np.conj(b)
    phi = c / np.maximum(np.abs(c), cfg.phase_floor)
    return np.abs(a - phi * b) / (0.5 * np.maximum(np.abs(a) + np.abs(b), cfg.mismatch_floor))


def phase_gates(h_ls: np.ndarray, mask: PilotMask, cfg: GraphConfig = GraphConfig()):
    """Transmission gates ``(g_t, g_f)``; mismatch only counts between two pilots.

    ``g_t[t, f]`` gates the edge (t-1, f)-(t, f) and ``g_f[t, f]`` the edge (t, f-1)-(t, f).
    """
    m = mask.mask
    m_t = np.zeros(m.shape)
    m_f = np.zeros(m.shape)
    both_t = m[1:, :] & m[:-1, :]
    both_f = m[:, 1:] & m[:, :-1]
    m_t[1:, :] = np.where(both_t, phase_mismatch(h_ls[1:, :], h_ls[:-1, :], cfg), 0.0)
    m_f[:, 1:] = np.where(both_f, phase_mismatch(h_ls[:, 1:], h_ls[:, :-1], cfg), 0.0)
    kt, lo_t, hi_t = cfg.gate_time
    kf, lo_f, hi_f = cfg.gate_freq
    return clamp(1.0 - kt * m_t, lo_t, hi_t), clamp(1.0 - kf * m_f, lo_f, hi_f)


def observation_weight(mask: PilotMask, n0: float, cfg: GraphConfig = GraphConfig()) -> np.ndarray:
    base, slope = cfg.obs_weight
    w = clamp(base + slope / max(n0, cfg.noise_floor), 0.0, cfg.obs_weight_max)
    return mask.mask * w


def edge_weights(g_t: np.ndarray, g_f: np.ndarray, cfg: GraphConfig = GraphConfig()):
    """``(W_L, W_R, W_U, W_D)``; edges that leave the grid get weight zero."""
    n_t, n_f = g_t.shape
    w_l = cfg.freq_edge_weight * g_f
    w_r = cfg.freq_edge_weight * shift(g_f, -1, _F)  # g_f(t, f+1)
    w_u = cfg.time_edge_weight * g_t
    w_d = cfg.time_edge_weight * shift(g_t, -1, _T)  # g_t(t+1, f)
    w_l[:, 0] = 0.0
    w_u[0, :] = 0.0
    return w_l, w_r, w_u, w_d


def graph_step(h, h_ls, mask, w_obs, weights, beta, cfg: GraphConfig = GraphConfig()):
    """One weighted-neighbour update with momentum and pilot re-anchoring."""
    w_l, w_r, w_u, w_d = weights
    num = (
        w_obs * h_ls
        + w_l * shift(h, 1, _F)
        + w_r * shift(h, -1, _F)
        + w_u * shift(h, 1, _T)
        + w_d * shift(h, -1, _T)
    )
    den = w_obs + w_l + w_r + w_u + w_d + cfg.denominator_eps
    h_new = num / den
    return np.where(mask.mask, h_ls, beta * h_new + (1.0 - beta) * h)


def graph_iterate(h0, h_ls, mask, gates, n0, cfg: GraphConfig = GraphConfig()):
    """Run all iterations; returns the final state and the one before it."""
    w_obs = observation_weight(mask, n0, cfg)
    weights = edge_weights(*gates, cfg)
    h = h0
    prev = h0
    for i in range(cfg.n_iterations):
        beta = cfg.momentum[0] if i < cfg.momentum_switch else cfg.momentum[1]
        prev, h = h, graph_step(h, h_ls, mask, w_obs, weights, beta, cfg)
    return h, prev


def graph_final_smooth(h_last, h_ls, mask, cfg: GraphConfig = GraphConfig()):
    centre, side = cfg.final_freq_weights
    h_freq = centre * h_last + side * (shift(h_last, 1, _F) + shift(h_last, -1, _F))
    return np.where(mask.mask, h_ls, h_freq)


def graph_variance(
    var_ls: np.ndarray,
    h_ls: np.ndarray,
    h_prev: np.ndarray,
    h_last: np.ndarray,
    mask: PilotMask,
    d: DistanceMaps,
    support: np.ndarray,
    n0: float,
    cfg: GraphConfig = GraphConfig(),
) -> np.ndarray:
    """Region-dependent error variance from distance, pilot quality and convergence."""
    m = mask.mask
    mse_p = float(np.mean(np.abs(h_ls[m] - h_last[m]) ** 2))
    e0 = float(np.mean(var_ls))
    conv = clamp(np.abs(h_last - h_prev) / np.maximum(np.abs(h_last), cfg.conv_floor), 0.0, cfg.conv_max)
    s_exc = np.maximum(1.0 / np.maximum(support, cfg.support_floor) - 1.0, 0.0)
    q_p = float(clamp(mse_p / (cfg.quality_scale * e0 + cfg.quality_eps), 0.0, cfg.quality_max))
    ds = d.d_score

    def penalty(coef, extra=0.0):
        return coef[0] + coef[1] * ds + coef[2] * s_exc + extra

    p_near = penalty(cfg.penalty_near)
    p_mid = penalty(cfg.penalty_mid)
    p_far = penalty(cfg.penalty_far, cfg.penalty_far[3] * q_p)

    def regional(coef, pen):
        return coef[0] * var_ls + coef[1] * mse_p + pen + coef[2] * conv

    labels = region_partition(d, mask, cfg.near_threshold, cfg.mid_threshold)
    a, b = cfg.var_pilot
    e_var = np.select(
        [labels == Region.PILOT, labels == Region.NEAR, labels == Region.MID],
        [
            np.maximum(a * var_ls + b * n0, cfg.var_floor),
            regional(cfg.var_near, p_near),
            regional(cfg.var_mid, p_mid),
        ],
        regional(cfg.var_far, p_far),
    )
    return np.maximum(e_var, cfg.var_floor)


def estimate_agnostic_graph(ls: Estimate, mask: PilotMask, n0: float, cfg: GraphConfig = GraphConfig()) -> Estimate:
    """Run the graph estimator independently for every receive antenna."""
    d = distance_maps(mask, cfg.time_distance_weight)
    support = support_density(mask, cfg)
    h_out = np.empty_like(ls.h)
    v_out = np.empty(ls.h.shape)
    for s in range(ls.h.shape[0]):
        h_ls = ls.h[s]
        h0 = initial_state(h_ls, mask, cfg)
        gates = phase_gates(h_ls, mask, cfg)
        h_last, h_prev = graph_iterate(h0, h_ls, mask, gates, n0, cfg)
        h_out[s] = graph_final_smooth(h_last, h_ls, mask, cfg)
        v_out[s] = graph_variance(ls.var[s], h_ls, h_prev, h_last, mask, d, support, n0, cfg)
    return Estimate(h=h_out, var=v_out)
