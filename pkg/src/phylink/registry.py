"""Named estimators and controllers usable from experiment configs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .agnostic_graph import estimate_agnostic_graph
from .agnostic_omp import estimate_agnostic_omp
from .covariance_est import estimate_cov_kron, estimate_cov_seq, lmmse_baseline
from .grid import Estimate
from .harness import Problem
from .link import FixedController, GridController, LinkScenario, OllaController, ParticleController


def perfect_csi(p: Problem) -> Estimate:
    return Estimate(h=p.h_true.copy(), var=np.zeros(p.h_true.shape))


def ls_linear(p: Problem) -> Estimate:
    return p.ls


def lmmse(p: Problem) -> Estimate:
    return lmmse_baseline(p.ls, p.mask, p.cov, p.n0)


def agnostic_omp(p: Problem) -> Estimate:
    return estimate_agnostic_omp(p.ls, p.mask)


def agnostic_graph(p: Problem) -> Estimate:
    return estimate_agnostic_graph(p.ls, p.mask, p.n0)


def cov_kron(p: Problem) -> Estimate:
    return estimate_cov_kron(p.ls, p.cov)


def cov_seq(p: Problem) -> Estimate:
    return estimate_cov_seq(p.ls, p.cov, p.n0)


def la_particle(sc: LinkScenario, rng: np.random.Generator) -> ParticleController:
    return ParticleController(sc.model, sc.target, rng)


def la_grid(sc: LinkScenario, rng: np.random.Generator) -> GridController:
    return GridController(sc.model, sc.target)


def la_olla(sc: LinkScenario, rng: np.random.Generator) -> OllaController:
    return OllaController(sc.model, sc.target)


def la_fixed_lowest(sc: LinkScenario, rng: np.random.Generator) -> FixedController:
    return FixedController(0)


@dataclass(frozen=True)
class Entry:
    id: str
    kind: str  # "estimator" or "controller"
    tasks: tuple[str, ...]
    description: str
    factory: Callable


CE_TASKS = ("ce-agnostic", "ce-cov")

REGISTRY: dict[str, Entry] = {
    e.id: e
    for e in [
        Entry("ls-linear", "estimator", CE_TASKS,
              "baseline: pilot LS with linear time interpolation", ls_linear),
        Entry("lmmse-baseline", "estimator", ("ce-cov",),
              "baseline: per-axis Wiener interpolation (time, frequency, space)", lmmse),
        Entry("agnostic-omp", "estimator", ("ce-agnostic",),
              "statistics-agnostic: OMP delay sparsification + Kalman/RTS + FIR/B-spline smoothing", agnostic_omp),
        Entry("agnostic-graph", "estimator", ("ce-agnostic",),
              "statistics-agnostic: graph message passing with phase-mismatch gates", agnostic_graph),
        Entry("cov-kron", "estimator", ("ce-cov",),
              "known covariance: iterative eigen-domain Kronecker two-pass Wiener filter", cov_kron),
        Entry("cov-seq", "estimator", ("ce-cov",),
              "known covariance: sequential separable LMMSE with fixed state blend", cov_seq),
        Entry("perfect-csi", "estimator", CE_TASKS,
              "reference: true channel (perfect CSI)", perfect_csi),
        Entry("la-particle", "controller", ("link-adapt",),
              "link adaptation: particle filter with one-step look-ahead reward", la_particle),
        Entry("la-grid", "controller", ("link-adapt",),
              "link adaptation: histogram filter with asymmetric OLLA offset", la_grid),
        Entry("la-olla", "controller", ("link-adapt",),
              "baseline: classical OLLA around a static SNR anchor", la_olla),
    ]
}


def list_algorithms() -> list[Entry]:
    return list(REGISTRY.values())
