"""Resource-grid geometry, pilot masks and the LS channel estimate.

Channel grids are complex ``numpy`` arrays of shape ``(n_s, n_t, n_f)``
(antenna, OFDM symbol, subcarrier). Pilot masks are boolean ``(n_t, n_f)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable

import numpy as np

from .config import GraphConfig
from .errors import (
    DimensionError,
    EmptyPilotSet,
    IndexOutOfRange,
    NegativeNoise,
)

_GRAPH = GraphConfig()


@dataclass(frozen=True)
class Estimate:
    """A channel estimate paired with its per-element error variance."""

    h: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        if self.h.shape != self.var.shape:
            raise DimensionError(
                f"estimate shape {self.h.shape} != variance shape {self.var.shape}"
            )
        if self.h.ndim != 3:
            raise DimensionError("estimates are (n_s, n_t, n_f) grids")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.h.shape


@dataclass(frozen=True)
class PilotMask:
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise DimensionError("pilot mask must be 2-D (n_t, n_f)")
        if not m.any():
            raise EmptyPilotSet("pilot mask has no pilots")
        object.__setattr__(self, "mask", m)

    @property
    def pilot_count(self) -> int:
        return int(self.mask.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def pilot_symbols(self) -> np.ndarray:
        """Sorted time indices that carry at least one pilot."""
        return np.flatnonzero(self.mask.any(axis=1))

    @property
    def pilot_subcarriers(self) -> np.ndarray:
        return np.flatnonzero(self.mask.any(axis=0))


@dataclass(frozen=True)
class DistanceMaps:
    d_t: np.ndarray
    d_f: np.ndarray
    d_score: np.ndarray


class Region(IntEnum):
    PILOT = 0
    NEAR = 1
    MID = 2
    FAR = 3


def make_pilot_mask(n_t: int, n_f: int, pilot_symbols: Iterable[int]) -> PilotMask:
    """Full-band pilot mask: every subcarrier of each listed symbol is a pilot."""
    symbols = sorted(set(int(t) for t in pilot_symbols))
    if not symbols:
        raise EmptyPilotSet("pilot_symbols is empty")
    if symbols[0] < 0 or symbols[-1] >= n_t:
        raise IndexOutOfRange(f"pilot symbols {symbols} outside [0, {n_t})")
    mask = np.zeros((n_t, n_f), dtype=bool)
    mask[symbols, :] = True
    return PilotMask(mask)


def _axis_distance(n: int, positions: np.ndarray) -> np.ndarray:
    idx = np.arange(n)
    return np.abs(idx[:, None] - positions[None, :]).min(axis=1)


def distance_maps(mask: PilotMask, time_weight: float = _GRAPH.time_distance_weight) -> DistanceMaps:
    """Per-axis distances to the nearest pilot coordinate and the composite score.

    ``d_t`` is the distance to the nearest pilot *symbol index* and ``d_f`` the
    distance to the nearest pilot *subcarrier index*, each taken over the whole
    pilot coordinate set.
    """
    n_t, n_f = mask.shape
    dt = _axis_distance(n_t, mask.pilot_symbols)
    df = _axis_distance(n_f, mask.pilot_subcarriers)
    d_t = np.broadcast_to(dt[:, None], (n_t, n_f)).copy()
    d_f = np.broadcast_to(df[None, :], (n_t, n_f)).copy()
    d_t[mask.mask] = 0
    d_f[mask.mask] = 0
    d_score = d_f + time_weight * d_t
    return DistanceMaps(d_t=d_t, d_f=d_f, d_score=d_score)


def region_partition(
    d: DistanceMaps,
    mask: PilotMask,
    near: float = _GRAPH.near_threshold,
    mid: float = _GRAPH.mid_threshold,
) -> np.ndarray:
    """Label every node as pilot / near / mid / far (``Region`` codes)."""
    if d.d_score.shape != mask.shape:
        raise DimensionError("distance maps and mask disagree on shape")
    labels = np.full(mask.shape, Region.FAR, dtype=np.int8)
    labels[d.d_score <= mid] = Region.MID
    labels[d.d_score <= near] = Region.NEAR
    labels[mask.mask] = Region.PILOT
    return labels


def cn_noise(rng: np.random.Generator, shape, n0: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance ``n0``."""
    scale = np.sqrt(n0 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def interpolate_time(values: np.ndarray, mask: PilotMask) -> np.ndarray:
    """Fill non-pilot REs by linear interpolation along time.

    Values beyond the outermost pilots are held constant. Subcarriers with no
    pilot at all are filled by interpolating across frequency afterwards.
    """
    n_s, n_t, n_f = values.shape
    out = np.zeros_like(values)
    have = mask.mask.any(axis=0)
    patterns: dict[bytes, list[int]] = {}
    for f in np.flatnonzero(have):
        patterns.setdefault(mask.mask[:, f].tobytes(), []).append(f)
    for cols in patterns.values():
        pt = np.flatnonzero(mask.mask[:, cols[0]])
        w = interpolation_matrix(n_t, pt)
        out[:, :, cols] = np.einsum("tp,spf->stf", w, values[:, pt][:, :, cols])
    if not have.all():
        w = interpolation_matrix(n_f, np.flatnonzero(have))
        out = np.einsum("gk,stk->stg", w, out[:, :, have])
    return out


def interpolation_matrix(n: int, positions: np.ndarray) -> np.ndarray:
    """Matrix mapping samples at sorted ``positions`` to linear interpolants on ``range(n)``."""
    positions = np.asarray(positions)
    w = np.zeros((n, positions.size))
    eye = np.eye(positions.size)
    idx = np.arange(n)
    for k in range(positions.size):
        w[:, k] = np.interp(idx, positions, eye[k])
    return w


def ls_estimate(
    h_true: np.ndarray,
    mask: PilotMask,
    n0: float,
    rng: np.random.Generator,
) -> Estimate:
    """Noisy pilot observations, linearly interpolated over time.

    The noise is drawn for the whole grid so that the random stream consumed
    does not depend on the pilot pattern. The variance grid is ``n0`` everywhere.
    """
    if n0 < 0:
        raise NegativeNoise(f"n0={n0} < 0")
    h_true = np.asarray(h_true, dtype=complex)
    if h_true.ndim != 3 or h_true.shape[1:] != mask.shape:
        raise DimensionError(f"channel {h_true.shape} does not match mask {mask.shape}")
    noisy = h_true + cn_noise(rng, h_true.shape, n0)
    h = interpolate_time(noisy, mask)
    h[:, mask.mask] = noisy[:, mask.mask]
    return Estimate(h=h, var=np.full(h.shape, float(n0)))
