"""MCS controllers driven by HARQ ACK/NACK feedback, and the replay loop.

Controllers expose ``select(history) -> mcs`` where ``history`` is the list of
:class:`Feedback` records visible so far. The replay loop hands every
controller the full visible history; stateful controllers keep track of what
they have already consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy.special import expit

from .config import GridFilterConfig, LinkDefaults, OllaConfig, ParticleConfig
from .errors import IndexOutOfRange, ParameterOutOfRange

_LINK = LinkDefaults()

# 256QAM CQI/MCS-style spectral efficiencies (bit/s/Hz), strictly increasing
DEFAULT_RATES = (
    0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.6953, 1.9141,
    2.1602, 2.4063, 2.5703, 2.7305, 3.0293, 3.3223, 3.6094, 3.9023,
    4.2129, 4.5234, 4.8164, 5.1152, 5.3320, 5.5547, 5.8906, 6.2266,
    6.5703, 6.9141, 7.1602, 7.4063,
)


@dataclass(frozen=True)
class BlerModel:
    """Logistic BLER curves ``1 / (1 + exp(alpha (snr - theta_m)))`` per MCS."""

    alpha: float
    theta: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if th.size != r.size or th.size == 0:
            raise ParameterOutOfRange("theta and rates need equal, nonzero length")
        if np.any(np.diff(th) <= 0) or np.any(np.diff(r) <= 0):
            raise ParameterOutOfRange("theta and rates must be strictly increasing")
        if self.alpha < 0:
            raise ParameterOutOfRange("alpha must be nonnegative")
        object.__setattr__(self, "theta", tuple(float(x) for x in th))
        object.__setattr__(self, "rates", tuple(float(x) for x in r))

    @classmethod
    def default(cls, alpha: float = 2.0, first: float = -9.0, spacing: float = 1.8) -> "BlerModel":
        n = len(DEFAULT_RATES)
        return cls(alpha=alpha, theta=tuple(first + spacing * np.arange(n)), rates=DEFAULT_RATES)

    @property
    def n_mcs(self) -> int:
        return len(self.theta)

    @property
    def rate_array(self) -> np.ndarray:
        return np.asarray(self.rates)

    def table(self, snr_db) -> np.ndarray:
        """BLER for every SNR in ``snr_db`` (any shape) and every MCS (last axis)."""
        s = np.asarray(snr_db, dtype=float)[..., None]
        return expit(-self.alpha * (s - np.asarray(self.theta)))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "theta": list(self.theta), "rates": list(self.rates)}

    @classmethod
    def from_dict(cls, d: dict) -> "BlerModel":
        return cls(alpha=float(d["alpha"]), theta=tuple(d["theta"]), rates=tuple(d["rates"]))


def bler(model: BlerModel, snr_db, mcs: int):
    if not 0 <= mcs < model.n_mcs:
        raise IndexOutOfRange(f"mcs {mcs} outside [0, {model.n_mcs})")
    s = np.asarray(snr_db, dtype=float)
    return expit(-model.alpha * (s - model.theta[mcs]))


def highest_feasible_mcs(model: BlerModel, snr_db: float, target: float) -> int:
    """Largest MCS whose BLER at ``snr_db`` is within ``target`` (0 if none)."""
    ok = np.flatnonzero(model.table(snr_db) <= target)
    return int(ok[-1]) if ok.size else 0


@dataclass(frozen=True)
class Feedback:
    nack: int  # 1 = NACK, 0 = ACK
    mcs: int


class Controller(Protocol):
    def select(self, history: Sequence[Feedback]) -> int: ...


# ---------------------------------------------------------------- particle filter


@dataclass(frozen=True)
class ParticleState:
    snr: np.ndarray
    weights: np.ndarray
    ess: float = float("nan")  # effective sample size before the last resampling check
    resampled: bool = False

    @classmethod
    def uniform(cls, cfg: ParticleConfig = ParticleConfig()) -> "ParticleState":
        n = cfg.n_particles
        return cls(np.linspace(cfg.snr_min, cfg.snr_max, n), np.full(n, 1.0 / n))


def bayes_update(weights: np.ndarray, likelihood: np.ndarray) -> np.ndarray:
    """Multiply and renormalise; a zero or non-finite total resets to uniform."""
    w = weights * likelihood
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        return np.full(weights.shape, 1.0 / weights.size)
    return w / total


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(weights**2))


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices drawn with one uniform offset and ``n`` evenly spaced pointers."""
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, positions, side="right")


def pf_observe(
    state: ParticleState,
    fb: Feedback,
    model: BlerModel,
    rng: np.random.Generator,
    cfg: ParticleConfig = ParticleConfig(),
) -> ParticleState:
    """Random-walk prediction, Bayes update on one feedback, conditional resampling."""
    snr = np.clip(state.snr + rng.normal(0.0, cfg.rw_std, state.snr.size), cfg.snr_min, cfg.snr_max)
    b = bler(model, snr, fb.mcs)
    lik = np.maximum(b if fb.nack else 1.0 - b, cfg.eps)
    w = bayes_update(state.weights, lik)
    ess = effective_sample_size(w)
    if ess < cfg.resample_ratio * w.size:
        idx = systematic_resample(w, rng)
        return ParticleState(snr[idx], np.full(w.size, 1.0 / w.size), ess, True)
    return ParticleState(snr, w, ess, False)


def weighted_percentile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Smallest value whose cumulative weight (sorted by value) reaches ``q``."""
    order = np.argsort(values, kind="stable")
    cdf = np.cumsum(weights[order])
    k = min(int(np.searchsorted(cdf, q * cdf[-1], side="left")), values.size - 1)
    return float(values[order][k])


def pf_fallback(snr, weights, model, target, cfg: ParticleConfig = ParticleConfig()) -> int:
    pessimistic = weighted_percentile(snr, weights, cfg.p_cons) - cfg.margin_db
    return highest_feasible_mcs(model, pessimistic, target)


def _reward_values(model: BlerModel, cfg: ParticleConfig) -> np.ndarray:
    return np.arange(model.n_mcs, dtype=float) if cfg.reward_uses_index else model.rate_array


def pf_rewards(state: ParticleState, model: BlerModel, target: float, cfg: ParticleConfig = ParticleConfig()):
    """Expected BLER and look-ahead reward for every candidate MCS.

    Returns ``(expected_bler, reward)``; ``reward`` is ``-inf`` for infeasible
    candidates.
    """
    w, snr = state.weights, state.snr
    table = model.table(snr)  # (particles, mcs)
    val = _reward_values(model, cfg)
    exp_bler = w @ table
    reward = np.full(model.n_mcs, -np.inf)
    for c in np.flatnonzero(exp_bler <= target):
        ack = 1.0 - table[:, c]
        r_now = float(np.sum(w * val[c] * ack))
        p_ack = float(np.sum(w * ack))
        p_nack = 1.0 - p_ack
        total = r_now
        for p_branch, lik in ((p_ack, ack), (p_nack, table[:, c])):
            if p_branch <= 0:
                continue
            wb = w * lik / p_branch
            m_safe = pf_fallback(snr, wb, model, target, cfg)
            total += p_branch * float(np.sum(wb * val[m_safe] * (1.0 - table[:, m_safe])))
        reward[c] = total
    return exp_bler, reward


def pf_select(state: ParticleState, model: BlerModel, target: float, cfg: ParticleConfig = ParticleConfig()) -> int:
    _, reward = pf_rewards(state, model, target, cfg)
    if np.all(np.isneginf(reward)):
        return pf_fallback(state.snr, state.weights, model, target, cfg)
    return int(np.argmax(reward))


class ParticleController:
    def __init__(
        self,
        model: BlerModel,
        target: float = _LINK.target,
        rng: np.random.Generator | None = None,
        cfg: ParticleConfig = ParticleConfig(),
    ):
        self.model, self.target, self.cfg = model, target, cfg
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.state = ParticleState.uniform(cfg)
        self._seen = 0

    def select(self, history: Sequence[Feedback]) -> int:
        for fb in history[self._seen:]:
            self.state = pf_observe(self.state, fb, self.model, self.rng, self.cfg)
        self._seen = len(history)
        return pf_select(self.state, self.model, self.target, self.cfg)


# ---------------------------------------------------------------- histogram filter


class GridFilter:
    """Discrete SNR grid, prior, random-walk kernel and BLER lookup table."""

    def __init__(self, model: BlerModel, cfg: GridFilterConfig = GridFilterConfig()):
        self.cfg = cfg
        self.model = model
        self.grid = np.linspace(cfg.snr_lo, cfg.snr_hi, cfg.n_grid)
        p0 = np.exp(-0.5 * ((self.grid - cfg.prior_mean) / cfg.prior_std) ** 2)
        self.prior = p0 / p0.sum()
        half = int(np.ceil(cfg.kernel_halfwidth_std * cfg.rw_std / cfg.spacing))
        off = np.arange(-half, half + 1)
        k = np.exp(-0.5 * (off * cfg.spacing / cfg.rw_std) ** 2)
        self.kernel = k / k.sum()
        # banded matrix so that P @ conv == zero-padded 'same' convolution
        n = cfg.n_grid
        i = np.arange(n)
        d = i[None, :] - i[:, None]
        self.conv = np.where(np.abs(d) <= half, self.kernel[np.clip(d + half, 0, 2 * half)], 0.0)
        self.table = model.table(self.grid)  # (grid, mcs)

    def predict(self, p: np.ndarray) -> np.ndarray:
        return p @ self.conv

    def forget(self, p: np.ndarray) -> np.ndarray:
        a = self.cfg.forget
        return (1.0 - a) * p + a / self.cfg.n_grid

    def likelihood(self, fb: Feedback) -> np.ndarray:
        b = self.table[:, fb.mcs]
        eps = self.cfg.likelihood_clamp
        return np.clip(b if fb.nack else 1.0 - b, eps, 1.0 - eps)

    def normalize(self, p: np.ndarray) -> np.ndarray:
        total = p.sum()
        if not np.isfinite(total) or total <= 0:
            return self.prior.copy()
        return p / total

    def cycle(self, p: np.ndarray, fb: Feedback) -> np.ndarray:
        return self.normalize(self.forget(self.predict(p)) * self.likelihood(fb))

    def posterior(self, records: Sequence[Feedback]) -> np.ndarray:
        p = self.prior.copy()
        for fb in records:
            p = self.cycle(p, fb)
        return p

    def trimmed_mean(self, p: np.ndarray) -> float:
        lo, hi = self.cfg.trim
        cdf = np.cumsum(p)
        k_lo = int(np.searchsorted(cdf, lo * cdf[-1], side="left"))
        k_hi = int(np.searchsorted(cdf, hi * cdf[-1], side="left"))
        k_hi = min(k_hi, p.size - 1)
        mass = p[k_lo:k_hi + 1]
        total = mass.sum()
        if not np.isfinite(total) or total <= 0:
            k_med = min(int(np.searchsorted(cdf, 0.5 * cdf[-1], side="left")), p.size - 1)
            return float(self.grid[k_med])
        return float(np.sum(mass * self.grid[k_lo:k_hi + 1]) / total)


def olla_offset(history: Sequence[Feedback], target: float, cfg: GridFilterConfig = GridFilterConfig()) -> float:
    """Clamped asymmetric offset accumulated over the entire history."""
    n_nack = sum(fb.nack for fb in history)
    n_ack = len(history) - n_nack
    step_down = cfg.step_up * (1.0 - target) / max(target, cfg.target_floor)
    lo, hi = cfg.offset_clamp
    return float(np.clip(cfg.step_up * n_ack - step_down * n_nack, lo, hi))


def warmup_margin(n: int, cfg: GridFilterConfig = GridFilterConfig()) -> float:
    for limit, margin in cfg.warmup:
        if n < limit:
            return margin
    return 0.0


def grid_snr_estimate(history: Sequence[Feedback], filt: GridFilter, target: float) -> float:
    cfg = filt.cfg
    p = filt.posterior(history[-cfg.window:])
    s = filt.trimmed_mean(p) + olla_offset(history, target, cfg) + warmup_margin(len(history), cfg)
    return float(np.clip(s, cfg.snr_lo, cfg.snr_hi))


def grid_select(
    history: Sequence[Feedback],
    model: BlerModel,
    target: float = _LINK.target,
    cfg: GridFilterConfig = GridFilterConfig(),
    filt: GridFilter | None = None,
) -> int:
    """Pure function of the history: window posterior + OLLA offset + warm-up margin."""
    if not history:
        return highest_feasible_mcs(model, cfg.cold_start_snr, target)
    filt = filt or GridFilter(model, cfg)
    return highest_feasible_mcs(model, grid_snr_estimate(history, filt, target), target)


class GridController:
    def __init__(self, model: BlerModel, target: float = _LINK.target, cfg: GridFilterConfig = GridFilterConfig()):
        self.model, self.target, self.cfg = model, target, cfg
        self.filt = GridFilter(model, cfg)

    def select(self, history: Sequence[Feedback]) -> int:
        return grid_select(history, self.model, self.target, self.cfg, self.filt)


# ---------------------------------------------------------------- baselines


def olla_baseline_select(
    history: Sequence[Feedback],
    model: BlerModel,
    target: float = _LINK.target,
    cfg: OllaConfig = OllaConfig(),
) -> int:
    """Static SNR anchor plus an unclamped OLLA offset over the whole history."""
    n_nack = sum(fb.nack for fb in history)
    n_ack = len(history) - n_nack
    offset = cfg.step_up * n_ack - cfg.step_up * (1.0 - target) / target * n_nack
    return highest_feasible_mcs(model, cfg.anchor_snr + offset, target)


class OllaController:
    def __init__(self, model: BlerModel, target: float = _LINK.target, cfg: OllaConfig = OllaConfig()):
        self.model, self.target, self.cfg = model, target, cfg
        self._seen = 0
        self._offset = 0.0

    def select(self, history: Sequence[Feedback]) -> int:
        # incremental form of olla_baseline_select
        for fb in history[self._seen:]:
            if fb.nack:
                self._offset -= self.cfg.step_up * (1.0 - self.target) / self.target
            else:
                self._offset += self.cfg.step_up
        self._seen = len(history)
        return highest_feasible_mcs(self.model, self.cfg.anchor_snr + self._offset, self.target)


class FixedController:
    def __init__(self, mcs: int):
        self.mcs = mcs

    def select(self, history: Sequence[Feedback]) -> int:
        return self.mcs


# ---------------------------------------------------------------- replay loop


@dataclass(frozen=True)
class LinkScenario:
    snr_db: np.ndarray
    model: BlerModel
    target: float = _LINK.target
    batch: int = _LINK.batch

    def __post_init__(self):
        if self.batch < 1:
            raise ParameterOutOfRange("batch must be >= 1")
        if not 0.0 < self.target < 1.0:
            raise ParameterOutOfRange("target must lie in (0, 1)")
        object.__setattr__(self, "snr_db", np.asarray(self.snr_db, dtype=float))

    def to_dict(self) -> dict:
        return {
            "snr_db": [float(x) for x in self.snr_db],
            "target": self.target,
            "batch": self.batch,
            "bler_model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkScenario":
        return cls(
            snr_db=np.asarray(d["snr_db"], dtype=float),
            model=BlerModel.from_dict(d["bler_model"]),
            target=float(d.get("target", _LINK.target)),
            batch=int(d.get("batch", _LINK.batch)),
        )


@dataclass
class HarqResult:
    avg_se: float
    bler: float
    mcs: np.ndarray
    nack: np.ndarray
    snr_db: np.ndarray
    rates: np.ndarray = field(repr=False)

    @property
    def n_slots(self) -> int:
        return self.mcs.size

    def trace_rows(self):
        """Rows of ``(slot, snr_db, mcs, nack, cum_bler, cum_se)``."""
        n = np.arange(1, self.n_slots + 1)
        cum_bler = np.cumsum(self.nack) / n
        cum_se = np.cumsum(self.rates[self.mcs] * (1 - self.nack)) / n
        for i in range(self.n_slots):
            yield i, float(self.snr_db[i]), int(self.mcs[i]), int(self.nack[i]), float(cum_bler[i]), float(cum_se[i])


def run_harq_loop(scenario: LinkScenario, controller: Controller, rng: np.random.Generator) -> HarqResult:
    """Replay a trajectory in batches; decisions see only completed batches."""
    n = scenario.snr_db.size
    model = scenario.model
    mcs = np.zeros(n, dtype=int)
    nack = np.zeros(n, dtype=int)
    history: list[Feedback] = []
    for start in range(0, n, scenario.batch):
        stop = min(start + scenario.batch, n)
        m = int(controller.select(history))
        if not 0 <= m < model.n_mcs:
            raise IndexOutOfRange(f"controller chose mcs {m}")
        p = bler(model, scenario.snr_db[start:stop], m)
        drawn = (rng.random(stop - start) < p).astype(int)
        mcs[start:stop] = m
        nack[start:stop] = drawn
        history.extend(Feedback(int(x), m) for x in drawn)
    rates = model.rate_array
    avg_se = float(np.sum(rates[mcs] * (1 - nack)) / n)
    return HarqResult(avg_se=avg_se, bler=float(nack.mean()), mcs=mcs, nack=nack, snr_db=scenario.snr_db, rates=rates)


def make_snr_trajectory(kind: str, params: dict, length: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """SNR trajectory in dB.

    ``static``: ``{"snr"}``; ``ramp``: ``{"start", "stop"}``;
    ``ou``: ``{"mean", "std", "theta"}`` where ``std`` is the stationary standard
    deviation and ``theta`` in (0, 1] the per-slot mean-reversion rate.
    """
    if length < 1:
        raise ParameterOutOfRange("length must be >= 1")
    if kind == "static":
        return np.full(length, float(params["snr"]))
    if kind == "ramp":
        return np.linspace(float(params["start"]), float(params["stop"]), length)
    if kind == "ou":
        mu, sd, theta = float(params["mean"]), float(params["std"]), float(params["theta"])
        if sd < 0 or not 0.0 < theta <= 1.0:
            raise ParameterOutOfRange("ou needs std >= 0 and theta in (0, 1]")
        if rng is None:
            raise ParameterOutOfRange("ou trajectories need an rng")
        a = 1.0 - theta
        innov = sd * np.sqrt(1.0 - a * a)
        z = rng.standard_normal(length)
        x = np.empty(length)
        x[0] = mu + sd * z[0]
        for i in range(1, length):
            x[i] = mu + a * (x[i - 1] - mu) + innov * z[i]
        return x
    raise ParameterOutOfRange(f"unknown trajectory kind {kind!r}")
