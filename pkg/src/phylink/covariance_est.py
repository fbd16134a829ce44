"""LMMSE channel estimators that exploit known separable covariances."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .channel import CovarianceSet, unvec, vec
from .config import KronConfig, SeqConfig
from .errors import DimensionError, GridTooLarge
from .grid import Estimate, PilotMask

AXES = {"s": 0, "t": 1, "f": 2}
MAX_ORACLE_SIZE = 4096


def mode_product(x: np.ndarray, w: np.ndarray, axis) -> np.ndarray:
    """Multiply ``w`` into ``x`` along one axis: ``y[.., i, ..] = sum_j w[i, j] x[.., j, ..]``."""
    ax = AXES.get(axis, axis)
    if w.ndim != 2 or w.shape[1] != x.shape[ax]:
        raise DimensionError(f"matrix {w.shape} does not act on axis of length {x.shape[ax]}")
    return np.moveaxis(np.tensordot(w, x, axes=(1, ax)), 0, ax)


def _check_dims(ls: Estimate, cov: CovarianceSet):
    if ls.dims != cov.dims:
        raise DimensionError(f"grid {ls.dims} does not match covariances {cov.dims}")


def _safe_ratio(num, den, where_zero=0.0):
    out = np.full(np.broadcast(num, den).shape, where_zero, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


class KronStep(NamedTuple):
    h_ref: np.ndarray  # after the eigen-domain pass, back in the element domain
    h_ref2: np.ndarray  # after the element-domain pass
    v_post: np.ndarray
    v_final: np.ndarray
    change: float


class KronPrior:
    """Eigen-domain quantities shared by every iteration."""

    def __init__(self, cov: CovarianceSet):
        self.u = (cov.eig_s.vectors, cov.eig_t.vectors, cov.eig_f.vectors)
        self.u2 = tuple(np.abs(u) ** 2 for u in self.u)
        lam = (cov.eig_s.values, cov.eig_t.values, cov.eig_f.values)
        self.lam_prod = np.einsum("i,j,k->ijk", *lam)
        marg = [u2 @ l for u2, l in zip(self.u2, lam)]
        self.var_elem = np.einsum("i,j,k->ijk", *marg)

    def to_eigen(self, h):
        for ax, u in enumerate(self.u):
            h = mode_product(h, u.conj().T, ax)
        return h

    def to_element(self, h):
        for ax, u in enumerate(self.u):
            h = mode_product(h, u, ax)
        return h

    def var_to_eigen(self, v):
        # diagonal of U^H diag(v) U, i.e. contraction with |U|^2 transposed
        for ax, u2 in enumerate(self.u2):
            v = mode_product(v, u2.T, ax)
        return v

    def var_to_element(self, v):
        for ax, u2 in enumerate(self.u2):
            v = mode_product(v, u2, ax)
        return v


def kron_step(h: np.ndarray, v_eig: np.ndarray, prior: KronPrior, eps: float) -> KronStep:
    lam = prior.lam_prod
    den = lam + v_eig
    w1 = _safe_ratio(lam, den, where_zero=1.0)
    v_post = _safe_ratio(lam * v_eig, den)
    h_ref = prior.to_element(prior.to_eigen(h) * w1)
    v_post_el = prior.var_to_element(v_post)
    w2 = prior.var_elem / (prior.var_elem + v_post_el + eps)
    h_ref2 = h_ref * w2
    v_final = v_post * _safe_ratio(lam, lam + v_post + eps)
    change = float(np.mean(np.abs(h - h_ref2)) / max(np.mean(np.abs(h)), eps))
    return KronStep(h_ref, h_ref2, v_post, v_final, change)


def estimate_cov_kron(ls: Estimate, cov: CovarianceSet, cfg: KronConfig = KronConfig()) -> Estimate:
    """Iterative two-pass Wiener filter in the Kronecker eigen-domain.

    Each iteration shrinks the eigen-coefficients, returns to the element
    domain for a second per-element shrinkage, and blends the result into the
    state with the damping factor. Iteration stops once the relative mean
    absolute change falls below ``cfg.tol`` or after ``cfg.max_iters`` steps.
    """
    est, _ = kron_iterations(ls, cov, cfg)
    return est


def kron_iterations(ls: Estimate, cov: CovarianceSet, cfg: KronConfig = KronConfig()):
    """Like :func:`estimate_cov_kron` but also returns the list of steps taken."""
    _check_dims(ls, cov)
    prior = KronPrior(cov)
    d = cfg.damping
    h = ls.h.astype(complex)
    v_eig = prior.var_to_eigen(ls.var.astype(float))
    steps = []
    for _ in range(cfg.max_iters):
        st = kron_step(h, v_eig, prior, cfg.eps)
        steps.append(st)
        h = d * st.h_ref2 + (1.0 - d) * h
        v_eig = d * st.v_final + (1.0 - d) * v_eig
        if st.change < cfg.tol:
            break
    v_out = prior.var_to_element(steps[-1].v_final)
    return Estimate(h=h, var=v_out), steps


def seq_alphas(n0: float, cfg: SeqConfig = SeqConfig()) -> tuple[float, float, float]:
    return tuple(a + b * n0 for a, b in (cfg.alpha_f, cfg.alpha_t, cfg.alpha_s))


def seq_filter(c: np.ndarray, alpha: float, cfg: SeqConfig = SeqConfig()) -> np.ndarray:
    """``C~ (C~ + alpha I)^-1`` with ``C~`` normalised by its mean real diagonal."""
    a = max(alpha, cfg.alpha_floor)
    tau = max(float(np.mean(np.real(np.diag(c)))), cfg.trace_floor)
    ct = c / tau
    n = c.shape[0]
    # W = C (C + aI)^-1  <=>  (C + aI)^T W^T = C^T
    return np.linalg.solve((ct + a * np.eye(n)).T, ct.T).T


def estimate_cov_seq(ls: Estimate, cov: CovarianceSet, n0: float | None = None, cfg: SeqConfig = SeqConfig()) -> Estimate:
    """Frequency, then time, then space LMMSE filtering and a fixed blend.

    ``n0`` defaults to the mean of the LS variance grid.
    """
    _check_dims(ls, cov)
    if n0 is None:
        n0 = float(np.mean(np.real(ls.var)))
    a_f, a_t, a_s = seq_alphas(n0, cfg)
    w_f = seq_filter(cov.r_f, a_f, cfg)
    w_t = seq_filter(cov.r_t, a_t, cfg)
    w_s = seq_filter(cov.r_s, a_s, cfg)
    h_f = mode_product(ls.h, w_f, "f")
    h_t = mode_product(h_f, w_t, "t")
    h_s = mode_product(h_t, w_s, "s")
    b_ls, b_f, b_t, b_s = cfg.blend
    h = b_ls * ls.h + b_f * h_f + b_t * h_t + b_s * h_s
    var = np.maximum(cfg.variance_scale * ls.var, cfg.variance_floor)
    return Estimate(h=h, var=var)


def wiener_matrix(r: np.ndarray, n0: float) -> np.ndarray:
    """``R (R + n0 I)^-1``, falling back to the pseudo-inverse when singular."""
    n = r.shape[0]
    a = r + n0 * np.eye(n)
    try:
        return np.linalg.solve(a.T, r.T).T
    except np.linalg.LinAlgError:
        return r @ np.linalg.pinv(a)


def lmmse_time_matrix(r_t: np.ndarray, pilots, n0: float) -> np.ndarray:
    """``R_t[:, P] (R_t[P, P] + n0 I)^-1``: all symbols from the pilot symbols."""
    pilots = np.asarray(pilots)
    r_pp = r_t[np.ix_(pilots, pilots)] + n0 * np.eye(pilots.size)
    return np.linalg.solve(r_pp.T, r_t[:, pilots].T).T


def lmmse_baseline(ls: Estimate, mask: PilotMask, cov: CovarianceSet, n0: float) -> Estimate:
    """Per-axis Wiener interpolation from the pilot symbols.

    Time: ``R_t[:, P] (R_t[P, P] + n0 I)^-1`` applied to the pilot symbols.
    Frequency and space: ``R (R + n0 I)^-1`` smoothing. The variance is the
    time-axis posterior variance scaled by the marginal space/frequency powers.
    """
    _check_dims(ls, cov)
    pilots = mask.pilot_symbols
    r_t = cov.r_t
    r_tp = r_t[:, pilots]
    w_t = lmmse_time_matrix(r_t, pilots, n0)
    h = mode_product(ls.h[:, pilots, :], w_t, "t")
    h = mode_product(h, wiener_matrix(cov.r_f, n0), "f")
    h = mode_product(h, wiener_matrix(cov.r_s, n0), "s")
    post_t = np.real(np.diag(r_t) - np.einsum("tp,tp->t", w_t, r_tp.conj()))
    var = np.einsum(
        "i,j,k->ijk",
        np.real(np.diag(cov.r_s)),
        np.maximum(post_t, 0.0),
        np.real(np.diag(cov.r_f)),
    )
    return Estimate(h=h, var=var)


def joint_lmmse_oracle(h_ls: np.ndarray, cov: CovarianceSet, n0: float) -> np.ndarray:
    """Dense ``R (R + n0 I)^-1 vec(h_ls)`` with ``R = R_f (x) R_t (x) R_s``."""
    dims = cov.dims
    size = int(np.prod(dims))
    if size > MAX_ORACLE_SIZE:
        raise GridTooLarge(f"grid of {size} elements exceeds dense oracle limit {MAX_ORACLE_SIZE}")
    if tuple(h_ls.shape) != dims:
        raise DimensionError(f"grid {h_ls.shape} does not match covariances {dims}")
    r = cov.kron()
    x = np.linalg.solve(r + n0 * np.eye(size), vec(h_ls))
    return unvec(r @ x, dims)
