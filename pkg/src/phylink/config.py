"""Frozen configuration records.

Every tuning constant used by the estimators and controllers lives here and
nowhere else; algorithm modules receive a config instance and read from it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterOutOfRange


@dataclass(frozen=True)
class OmpConfig:
    """OMP denoising, Doppler-adaptive FIR and Kalman/RTS tracking."""

    k_sparsity: int = 4
    l_max: int = 16
    l_fir: int = 7
    a_kalman: float = 0.99
    eps: float = 1e-12
    doppler_clamp: tuple[float, float] = (0.5, 0.99)
    doppler_fallback: float = 0.9
    spline_kernel: tuple[float, ...] = (0.125, 0.375, 0.5, 0.375, 0.125)

    def __post_init__(self):
        if not 1 <= self.k_sparsity <= self.l_max:
            raise ParameterOutOfRange("need 1 <= k_sparsity <= l_max")
        if self.l_fir < 1 or self.l_fir % 2 == 0:
            raise ParameterOutOfRange("l_fir must be a positive odd integer")
        if not 0.0 < self.a_kalman < 1.0:
            raise ParameterOutOfRange("a_kalman must lie in (0, 1)")


@dataclass(frozen=True)
class GraphConfig:
    """Constants of the graph message-passing estimator.

    Tuples of penalty / variance coefficients are ordered as
    ``(constant, d_score, S_exc[, Q_p])`` and ``(sigma2_ls, MSE_p, C)``.
    """

    # distance score and region thresholds
    time_distance_weight: float = 1.55
    near_threshold: float = 1.7
    mid_threshold: float = 3.55
    # pilot support density blur: centre, frequency neighbours, time neighbours
    density_weights: tuple[float, float, float] = (0.30, 0.27, 0.08)
    density_passes: int = 2
    density_floor: float = 1e-3
    # initial state
    init_blend: tuple[float, float] = (0.66, 0.34)  # (H_f, H_t)
    init_smooth_weights: tuple[float, float, float] = (0.28, 0.31, 0.05)
    init_smooth_passes: int = 2
    # phase mismatch and transmission gates
    phase_floor: float = 1e-4
    mismatch_floor: float = 2e-3
    gate_time: tuple[float, float, float] = (0.08, 0.92, 0.985)  # slope, lo, hi
    gate_freq: tuple[float, float, float] = (0.14, 0.94, 0.997)
    # iterative smoothing
    obs_weight: tuple[float, float] = (0.16, 0.56)
    obs_weight_max: float = 8.0
    noise_floor: float = 1e-4
    freq_edge_weight: float = 1.235
    time_edge_weight: float = 0.055
    denominator_eps: float = 1e-6
    momentum: tuple[float, float] = (0.972, 0.982)
    momentum_switch: int = 5
    n_iterations: int = 7
    final_freq_weights: tuple[float, float] = (0.16, 0.42)  # centre, each side
    # error variance assignment
    conv_floor: float = 3e-3
    conv_max: float = 0.5
    support_floor: float = 0.28
    quality_scale: float = 0.25
    quality_eps: float = 1e-4
    quality_max: float = 4.0
    penalty_near: tuple[float, float, float] = (0.0013, 0.0028, 0.0018)
    penalty_mid: tuple[float, float, float] = (0.0048, 0.0055, 0.0042)
    penalty_far: tuple[float, float, float, float] = (0.0092, 0.0080, 0.0070, 0.0038)
    var_pilot: tuple[float, float] = (0.26, 0.006)
    var_near: tuple[float, float, float] = (0.070, 0.060, 0.0095)
    var_mid: tuple[float, float, float] = (0.092, 0.235, 0.0160)
    var_far: tuple[float, float, float] = (0.125, 0.545, 0.0240)
    var_floor: float = 1e-4


@dataclass(frozen=True)
class KronConfig:
    """Iterative eigen-domain Kronecker Wiener filter."""

    damping: float = 0.5
    tol: float = 1e-4
    max_iters: int = 4
    eps: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ParameterOutOfRange("damping must lie in (0, 1]")
        if self.tol < 0 or self.max_iters < 1:
            raise ParameterOutOfRange("tol must be >= 0 and max_iters >= 1")


@dataclass(frozen=True)
class SeqConfig:
    """Sequential separable LMMSE; alpha pairs are (offset, slope in N0)."""

    alpha_f: tuple[float, float] = (0.0077, 0.094)
    alpha_t: tuple[float, float] = (0.0057, 0.053)
    alpha_s: tuple[float, float] = (0.0027, 0.021)
    blend: tuple[float, float, float, float] = (0.08, 0.12, 0.19, 0.61)  # LS, f, t, s
    variance_scale: float = 0.553
    alpha_floor: float = 1e-6
    trace_floor: float = 1e-6
    variance_floor: float = 1e-6


@dataclass(frozen=True)
class ParticleConfig:
    """Particle-filter MCS controller with one-step look-ahead."""

    n_particles: int = 100
    rw_std: float = 0.5
    eps: float = 1e-12
    p_cons: float = 0.2
    margin_db: float = 0.5
    resample_ratio: float = 0.5
    snr_min: float = -12.0
    snr_max: float = 30.0
    # reward uses rate_table[c]; True restores the literal index c
    reward_uses_index: bool = False

    def __post_init__(self):
        if self.n_particles < 1 or self.snr_min >= self.snr_max:
            raise ParameterOutOfRange("invalid particle configuration")


@dataclass(frozen=True)
class GridFilterConfig:
    """Histogram-filter controller with asymmetric OLLA offset."""

    n_grid: int = 169
    snr_lo: float = -12.0
    snr_hi: float = 30.0
    spacing: float = 0.25
    prior_mean: float = 9.0
    prior_std: float = 6.5
    rw_std: float = 0.52
    kernel_halfwidth_std: float = 4.0  # kernel truncated at this many rw_std
    forget: float = 0.006
    likelihood_clamp: float = 1e-7
    trim: tuple[float, float] = (0.15, 0.85)
    step_up: float = 0.0237
    target_floor: float = 1e-9
    offset_clamp: tuple[float, float] = (-2.94, 0.25)
    warmup: tuple[tuple[int, float], ...] = ((5, -0.95), (10, -0.35))
    window: int = 64
    cold_start_snr: float = 7.0


@dataclass(frozen=True)
class OllaConfig:
    """Classical OLLA baseline around a static SNR anchor."""

    step_up: float = 0.01
    anchor_snr: float = 10.0


@dataclass(frozen=True)
class ChannelModelConfig:
    """Synthetic Kronecker-separable channel: AR(1) time/space, exponential PDP."""

    n_s: int = 4
    n_t: int = 14
    n_f: int = 72
    rho_t: float = 0.999
    tau_rms: float = 0.02
    rho_s: float = 0.5

    def __post_init__(self):
        if min(self.n_s, self.n_t, self.n_f) < 1:
            raise ParameterOutOfRange("grid dimensions must be positive")
        for name in ("rho_t", "rho_s"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ParameterOutOfRange(f"{name}={v} outside [0, 1)")
        if self.tau_rms < 0:
            raise ParameterOutOfRange("tau_rms must be nonnegative")


@dataclass(frozen=True)
class LinkDefaults:
    """Evaluation-loop constants shared by every link-adaptation scenario."""

    target: float = 0.1
    batch: int = 5
