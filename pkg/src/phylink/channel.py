"""Synthetic Kronecker-separable OFDM channels and their covariance files."""

from __future__ import annotations

import base64
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ChannelModelConfig
from .errors import DimensionError, FormatError, NonHermitianCovariance

MAGIC = b"COV1"
_HEADER = struct.Struct("<4sqqq")


@dataclass(frozen=True)
class Eigen:
    """Eigendecomposition with eigenvalues sorted descending and clipped at zero.

    Eigenvalues within round-off of zero (relative to the largest) are set to
    zero so that rank-deficient covariances colour noise exactly.
    """

    values: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, r: np.ndarray) -> "Eigen":
        lam, u = np.linalg.eigh(r)
        order = np.argsort(lam)[::-1]
        lam = lam[order]
        tiny = r.shape[0] * np.finfo(float).eps * max(abs(lam[0]), 1.0) if lam.size else 0.0
        lam = np.where(lam > tiny, lam, 0.0)
        return cls(values=lam, vectors=u[:, order])

    def sqrtm(self) -> np.ndarray:
        u = self.vectors
        return (u * np.sqrt(self.values)) @ u.conj().T


@dataclass(frozen=True)
class CovarianceSet:
    """Space / time / frequency covariances plus cached eigendecompositions."""

    r_s: np.ndarray
    r_t: np.ndarray
    r_f: np.ndarray
    eig_s: Eigen
    eig_t: Eigen
    eig_f: Eigen

    @classmethod
    def from_matrices(cls, r_s, r_t, r_f, atol: float = 1e-10) -> "CovarianceSet":
        mats = []
        for name, r in (("r_s", r_s), ("r_t", r_t), ("r_f", r_f)):
            r = np.asarray(r, dtype=complex)
            if r.ndim != 2 or r.shape[0] != r.shape[1]:
                raise DimensionError(f"{name} must be square, got {r.shape}")
            if not np.allclose(r, r.conj().T, atol=atol):
                raise NonHermitianCovariance(f"{name} is not Hermitian")
            mats.append(r)
        return cls(*mats, *(Eigen.of(r) for r in mats))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.r_s.shape[0], self.r_t.shape[0], self.r_f.shape[0])

    def kron(self) -> np.ndarray:
        """Full covariance of ``vec(H)`` with the antenna index running fastest."""
        return np.kron(self.r_f, np.kron(self.r_t, self.r_s))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-major vectorisation matching ``CovarianceSet.kron``."""
    return x.reshape(-1, order="F")


def unvec(v: np.ndarray, dims) -> np.ndarray:
    return v.reshape(dims, order="F")


def _toeplitz_power(n: int, rho: float) -> np.ndarray:
    k = np.arange(n)
    return rho ** np.abs(k[:, None] - k[None, :]).astype(float)


def build_covariances(cfg: ChannelModelConfig) -> CovarianceSet:
    """AR(1) correlation in time and space, exponential power-delay profile in frequency."""
    r_t = _toeplitz_power(cfg.n_t, cfg.rho_t)
    r_s = _toeplitz_power(cfg.n_s, cfg.rho_s)
    k = np.arange(cfg.n_f)
    r_f = 1.0 / (1.0 + 1j * 2 * np.pi * cfg.tau_rms * (k[:, None] - k[None, :]))
    return CovarianceSet.from_matrices(r_s.astype(complex), r_t.astype(complex), r_f)


def sample_channel(cov: CovarianceSet, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Draw ``H = g x_s R_s^1/2 x_t R_t^1/2 x_f R_f^1/2`` from white CN(0, 1) ``g``.

    With ``n`` given, returns a stack of ``n`` independent draws.
    """
    dims = cov.dims
    shape = dims if n is None else (n, *dims)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    a_s, a_t, a_f = cov.eig_s.sqrtm(), cov.eig_t.sqrtm(), cov.eig_f.sqrtm()
    return np.einsum("ai,bj,ck,...ijk->...abc", a_s, a_t, a_f, g, optimize=True)


def _payload(cov: CovarianceSet) -> bytes:
    parts = []
    for r in (cov.r_s, cov.r_t, cov.r_f):
        inter = np.empty(r.shape + (2,), dtype="<f8")
        inter[..., 0] = r.real
        inter[..., 1] = r.imag
        parts.append(inter.tobytes(order="C"))
    return b"".join(parts)


def _parse_payload(dims, payload: bytes) -> CovarianceSet:
    mats = []
    offset = 0
    for n in dims:
        nbytes = n * n * 2 * 8
        if offset + nbytes > len(payload):
            raise FormatError("covariance payload truncated")
        arr = np.frombuffer(payload[offset:offset + nbytes], dtype="<f8").reshape(n, n, 2)
        mats.append(arr[..., 0] + 1j * arr[..., 1])
        offset += nbytes
    if offset != len(payload):
        raise FormatError("trailing bytes after covariance payload")
    return CovarianceSet.from_matrices(*mats)


def export_covariances(cov: CovarianceSet, path, fmt: str | None = None) -> Path:
    """Write the covariance file.

    Binary layout (little endian): ``b"COV1"``, three int64 dimensions
    ``(n_s, n_t, n_f)``, then ``r_s, r_t, r_f`` row-major with interleaved
    (real, imag) float64. ``fmt="json"`` (or a ``.json`` suffix) writes the
    JSON mirror ``{"magic", "dims", "r_s", "r_t", "r_f"}`` with base64 payloads.
    """
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "bin")
    if fmt == "json":
        doc = {"magic": MAGIC.decode(), "dims": list(cov.dims)}
        for name, r in (("r_s", cov.r_s), ("r_t", cov.r_t), ("r_f", cov.r_f)):
            inter = np.stack([r.real, r.imag], axis=-1).astype("<f8")
            doc[name] = base64.b64encode(inter.tobytes(order="C")).decode("ascii")
        path.write_text(json.dumps(doc, indent=1))
    elif fmt == "bin":
        path.write_bytes(_HEADER.pack(MAGIC, *cov.dims) + _payload(cov))
    else:
        raise ValueError(f"unknown covariance format {fmt!r}")
    return path


def load_covariances(path) -> CovarianceSet:
    """Read either layout written by :func:`export_covariances`."""
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        if len(raw) < _HEADER.size:
            raise FormatError("covariance header truncated")
        _, *dims = _HEADER.unpack_from(raw)
        if min(dims) < 1:
            raise FormatError(f"invalid dimensions {dims}")
        return _parse_payload(dims, raw[_HEADER.size:])
    try:
        doc = json.loads(raw.decode("utf-8"))
        if doc.get("magic") != MAGIC.decode():
            raise FormatError("bad magic in covariance JSON")
        dims = [int(n) for n in doc["dims"]]
        payload = b"".join(base64.b64decode(doc[k]) for k in ("r_s", "r_t", "r_f"))
    except FormatError:
        raise
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"unrecognised covariance file: {exc}") from exc
    if len(dims) != 3 or min(dims) < 1:
        raise FormatError(f"invalid dimensions {dims}")
    return _parse_payload(dims, payload)
