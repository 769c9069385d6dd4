"""Linear whitening: fit mean/covariance statistics, map data to zero mean
and identity covariance.

The fitted transform stores the mean, the orthogonal eigenvector matrix of
the unbiased covariance, and its eigenvalues (ascending). Applying maps
x -> (x - mean) @ rotation @ diag(eigenvalues)^{-1/2}.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorpusFormatError, InsufficientDataError, ShapeError
from .store import as_matrix

MAGIC = b"WHT1"
FORMAT_VERSION = 1

_ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class WhiteningTransform:
    mu: np.ndarray
    rotation: np.ndarray
    eigenvalues: np.ndarray
    eps_rel: float
    fitted_on: int
    floor_mask: np.ndarray  # True where the eigenvalue was raised to the floor

    def __post_init__(self):
        dim = self.mu.shape[0]
        identity_gap = np.abs(self.rotation.T @ self.rotation - np.eye(dim)).max()
        if identity_gap > _ORTHONORMALITY_TOL:
            raise ValueError(f"rotation is not orthogonal (max deviation {identity_gap:.2e})")
        if np.any(self.eigenvalues <= 0):
            raise ValueError("eigenvalues must be positive after flooring")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be stored ascending")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def fit_whitening(matrix, eps_rel: float = 1e-8) -> WhiteningTransform:
    """Fit mean and unbiased covariance (divisor N-1), eigendecompose.

    Eigenvalues are floored at eps_rel * max(eigenvalue) before storage so
    the transform stays invertible when the data is rank deficient; for an
    exactly zero covariance the floor falls back to eps_rel itself.
    """
    w = as_matrix(matrix)
    n = w.shape[0]
    if n < 2:
        raise InsufficientDataError(f"whitening fit needs >= 2 rows, got {n}")
    mu = w.mean(axis=0)
    centered = w - mu
    sigma = (centered.T @ centered) / (n - 1)
    if not np.isfinite(sigma).all():
        raise ValueError("covariance is not finite")
    eigenvalues, rotation = np.linalg.eigh(sigma)
    lam_max = float(eigenvalues[-1])
    floor = eps_rel * lam_max if lam_max > 0 else eps_rel
    floor_mask = eigenvalues < floor
    return WhiteningTransform(
        mu=mu,
        rotation=rotation,
        eigenvalues=np.maximum(eigenvalues, floor),
        eps_rel=eps_rel,
        fitted_on=n,
        floor_mask=floor_mask,
    )


def apply_whitening(transform: WhiteningTransform, matrix) -> np.ndarray:
    """Map each row x to (x - mu) @ rotation @ eigenvalues^{-1/2}."""
    w = as_matrix(matrix)
    if w.shape[1] != transform.dim:
        raise ShapeError(
            f"matrix dim {w.shape[1]} does not match transform dim {transform.dim}"
        )
    scale = 1.0 / np.sqrt(transform.eigenvalues)
    return (w - transform.mu) @ (transform.rotation * scale)


# ---------------------------------------------------------------------------
# WHT1 binary format (little-endian):
#   magic "WHT1" | version u32 | dim u32 | eps_rel f64 | fitted_on u64
#   | mu f64[D] | eigenvalues f64[D] | rotation f64[D*D] row-major
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIdQ")


def save_whitening(transform: WhiteningTransform, path) -> None:
    blob = b"".join(
        (
            _HEADER.pack(
                MAGIC,
                FORMAT_VERSION,
                transform.dim,
                transform.eps_rel,
                transform.fitted_on,
            ),
            transform.mu.astype("<f8").tobytes(),
            transform.eigenvalues.astype("<f8").tobytes(),
            transform.rotation.astype("<f8").tobytes(order="C"),
        )
    )
    with open(path, "wb") as fh:
        fh.write(blob)


def load_whitening(path) -> WhiteningTransform:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise CorpusFormatError(f"{path}: truncated whitening file")
    magic, version, dim, eps_rel, fitted_on = _HEADER.unpack(data[: _HEADER.size])
    if magic != MAGIC:
        raise CorpusFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * (dim + dim + dim * dim)
    if len(data) != expected:
        raise CorpusFormatError(
            f"{path}: expected {expected} bytes for dim {dim}, got {len(data)}"
        )
    pos = _HEADER.size
    mu = np.frombuffer(data, dtype="<f8", count=dim, offset=pos).copy()
    pos += 8 * dim
    eigenvalues = np.frombuffer(data, dtype="<f8", count=dim, offset=pos).copy()
    pos += 8 * dim
    rotation = (
        np.frombuffer(data, dtype="<f8", count=dim * dim, offset=pos)
        .reshape(dim, dim)
        .copy()
    )
    lam_max = float(eigenvalues[-1]) if dim else 0.0
    floor = eps_rel * lam_max if lam_max > 0 else eps_rel
    return WhiteningTransform(
        mu=mu,
        rotation=rotation,
        eigenvalues=eigenvalues,
        eps_rel=eps_rel,
        fitted_on=fitted_on,
        floor_mask=eigenvalues <= floor,
    )
