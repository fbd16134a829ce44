"""Monte Carlo BLER on a simplified uncoded-QPSK link, NVE, and the LA score.

The link: sample a channel, observe pilots at noise ``n0 = 10**(-snr_db/10)``,
run the estimator, combine a single QPSK stream across receive antennas with
``h_hat^H y / (h_hat^H h_hat + n0)`` and hard-decide every data RE. A block is
in error if any bit is wrong. Agent and reference share random numbers per
SNR point so that identical estimators give identical BLERs.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel import CovarianceSet, sample_channel
from .errors import DegenerateReference, EvaluationFailure
from .grid import Estimate, PilotMask, cn_noise, ls_estimate
from .link import Controller, LinkScenario, run_harq_loop

log = logging.getLogger(__name__)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def snr_to_n0(snr_db: float) -> float:
    return float(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class Problem:
    """Everything an estimator may look at for one trial."""

    ls: Estimate
    mask: PilotMask
    n0: float
    cov: CovarianceSet
    h_true: np.ndarray  # only the perfect-CSI reference may read this


Estimator = Callable[[Problem], Estimate]


@dataclass(frozen=True)
class BlerResult:
    bler: float
    block_errors: int
    trials: int
    failures: int


def qpsk(bits: np.ndarray) -> np.ndarray:
    return ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2.0)


def detect(y: np.ndarray, h_hat: np.ndarray, n0: float) -> np.ndarray:
    """Combine over antennas (axis 0) and hard-decide QPSK bits."""
    x_hat = np.sum(np.conj(h_hat) * y, axis=0) / (np.sum(np.abs(h_hat) ** 2, axis=0) + n0)
    return np.stack([x_hat.real < 0, x_hat.imag < 0], axis=-1).astype(np.int8)


def simulate_trial(cov, mask, n0, rng):
    """Draw channel, LS observation, payload bits and received data symbols."""
    h = sample_channel(cov, rng)
    ls = ls_estimate(h, mask, n0, rng)
    data = ~mask.mask
    bits = rng.integers(0, 2, size=(int(data.sum()), 2), dtype=np.int8)
    y = h[:, data] * qpsk(bits)[None, :] + cn_noise(rng, (h.shape[0], int(data.sum())), n0)
    return h, ls, bits, y


def mc_bler(
    estimator: Estimator,
    cov: CovarianceSet,
    mask: PilotMask,
    snr_db: float,
    trials: int,
    rng: np.random.Generator,
) -> BlerResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n0 = snr_to_n0(snr_db)
    data = ~mask.mask
    errors = failures = 0
    for _ in range(trials):
        h, ls, bits, y = simulate_trial(cov, mask, n0, rng)
        try:
            est = estimator(Problem(ls, mask, n0, cov, h))
            h_hat = est.h[:, data]
        except Exception as exc:  # an estimator crash is an evaluation failure
            log.warning("estimator failed: %s", exc)
            failures += 1
            continue
        errors += int(np.any(detect(y, h_hat, n0) != bits))
    ok = trials - failures
    return BlerResult(errors / ok if ok else float("nan"), errors, trials, failures)


def mc_mse(estimator: Estimator, cov, mask, snr_db, trials, rng) -> tuple[float, float]:
    """Mean squared estimation error over the grid, and the raw LS error at pilots."""
    n0 = snr_to_n0(snr_db)
    se = se_pilot = 0.0
    for _ in range(trials):
        h, ls, _, _ = simulate_trial(cov, mask, n0, rng)
        est = estimator(Problem(ls, mask, n0, cov, h))
        se += float(np.mean(np.abs(est.h - h) ** 2))
        se_pilot += float(np.mean(np.abs(ls.h[:, mask.mask] - h[:, mask.mask]) ** 2))
    return se / trials, se_pilot / trials


@dataclass
class NveReport:
    snr_points: list[float]
    bler_agent: list[float]
    bler_pcsi: list[float]
    nve: float
    failures: int = 0

    def to_dict(self) -> dict:
        return {
            "snr_points": self.snr_points,
            "bler_agent": self.bler_agent,
            "bler_pcsi": self.bler_pcsi,
            "nve": self.nve,
            "failures": self.failures,
        }

    def csv_rows(self):
        yield ("snr_db", "bler_agent", "bler_pcsi", "ratio")
        for s, a, r in zip(self.snr_points, self.bler_agent, self.bler_pcsi):
            yield (s, a, r, a / r if r > 0 else float("nan"))


def nve_from_blers(bler_agent: Sequence[float], bler_pcsi: Sequence[float]) -> float:
    ref = np.asarray(bler_pcsi, dtype=float)
    if np.any(ref <= 0):
        raise DegenerateReference("perfect-CSI BLER is zero at some SNR point; shrink the SNR range")
    return float(np.mean(np.asarray(bler_agent, dtype=float) / ref))


def _bler_point(args):
    estimator, cov, mask, snr, trials, seed, index = args
    return mc_bler(estimator, cov, mask, snr, trials, stream(seed, index))


def _map(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def nve(
    estimator: Estimator,
    reference: Estimator,
    cov: CovarianceSet,
    mask: PilotMask,
    snr_points: Sequence[float],
    trials: int,
    seed: int,
    workers: int = 1,
) -> NveReport:
    """Mean BLER ratio against the reference, common random numbers per SNR point."""
    snr_points = [float(s) for s in snr_points]
    tasks = []
    for i, snr in enumerate(snr_points):
        tasks.append((estimator, cov, mask, snr, trials, seed, i))
        tasks.append((reference, cov, mask, snr, trials, seed, i))
    results = _map(_bler_point, tasks, workers)
    agent, ref = results[0::2], results[1::2]
    if any(r.failures for r in ref):
        raise EvaluationFailure("reference estimator failed")
    report = NveReport(
        snr_points=snr_points,
        bler_agent=[r.bler for r in agent],
        bler_pcsi=[r.bler for r in ref],
        nve=float("nan"),
        failures=sum(r.failures for r in agent),
    )
    report.nve = nve_from_blers(report.bler_agent, report.bler_pcsi)
    return report


@dataclass
class LaScore:
    mean_se: float
    per_scenario_bler: list[float]
    per_scenario_se: list[float]
    target: float
    success: bool = field(init=False)
    violations: int = field(init=False)

    def __post_init__(self):
        self.violations = int(sum(b > self.target for b in self.per_scenario_bler))
        self.success = self.violations == 0

    @property
    def bler_stats(self) -> dict:
        b = np.asarray(self.per_scenario_bler)
        return {"min": float(b.min()), "mean": float(b.mean()), "max": float(b.max())}

    def to_dict(self) -> dict:
        return {
            "mean_se": self.mean_se,
            "per_scenario_bler": self.per_scenario_bler,
            "per_scenario_se": self.per_scenario_se,
            "success": self.success,
            "violations": self.violations,
            "bler_stats": self.bler_stats,
        }

    def csv_rows(self):
        yield ("scenario", "avg_se", "bler", "violated")
        for i, (se, b) in enumerate(zip(self.per_scenario_se, self.per_scenario_bler)):
            yield (i, se, b, int(b > self.target))


ControllerFactory = Callable[[LinkScenario, np.random.Generator], Controller]


def _la_one(args):
    factory, scenario, seed, index = args
    ctrl_rng = stream(seed, index, 0)
    link_rng = stream(seed, index, 1)
    return run_harq_loop(scenario, factory(scenario, ctrl_rng), link_rng)


def la_score(
    factory: ControllerFactory,
    scenarios: Sequence[LinkScenario],
    seed: int,
    workers: int = 1,
) -> LaScore:
    """Replay every scenario with a fresh controller; success iff no BLER violation."""
    if not scenarios:
        raise ValueError("need at least one scenario")
    targets = {sc.target for sc in scenarios}
    if len(targets) != 1:
        raise ValueError("all scenarios must share one BLER target")
    tasks = [(factory, sc, seed, i) for i, sc in enumerate(scenarios)]
    results = _map(_la_one, tasks, workers)
    return LaScore(
        mean_se=float(np.mean([r.avg_se for r in results])),
        per_scenario_bler=[r.bler for r in results],
        per_scenario_se=[r.avg_se for r in results],
        target=targets.pop(),
    )
