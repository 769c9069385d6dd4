"""Isotropy measurement for embedding matrices.

Two complementary metrics:

* ``partition_ratio``: ratio of the smallest to the largest partition
  function value over the eigenvectors of the row-gram matrix. Equals 1
  for perfectly isotropic data and approaches 0 as one direction dominates.
* ``avg_pairwise_cosine``: mean cosine similarity over row pairs; near 0
  for directionally uniform data, near 1 for a narrow cone.

Both are evaluated in log space where needed so that rows with large norms
cannot overflow the partition function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import EmptyInputError
from .rng import PinnedRng
from .store import as_matrix

FULL_BATCH = "full"


@dataclass(frozen=True)
class IsotropyReport:
    i_w: float
    avg_cos: float
    n_rows: int
    dim: int
    batch_size: int | str
    batches_averaged: int

    def __post_init__(self):
        if not 0.0 <= self.i_w <= 1.0:
            raise ValueError(f"i_w out of [0, 1]: {self.i_w}")
        if not -1.0 <= self.avg_cos <= 1.0:
            raise ValueError(f"avg_cos out of [-1, 1]: {self.avg_cos}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class DimensionProfile:
    """Per-dimension statistics of a matrix, with spiky-dimension flags."""

    mean: np.ndarray
    std: np.ndarray
    max_abs: np.ndarray
    outlier_flags: np.ndarray
    outlier_factor: float


def _logsumexp(values: np.ndarray) -> float:
    top = np.max(values)
    if not np.isfinite(top):  # all -inf only when values is empty of mass
        return float(top)
    return float(top + np.log(np.exp(values - top).sum()))


def partition_ratio(matrix) -> float:
    """Min/max partition-function ratio over the gram-matrix eigenvectors.

    The partition function q(a) = sum_i exp(w_i . a) is evaluated at +v and
    -v for every eigenvector v of W^T W, which removes the eigenvector sign
    ambiguity: the result is the same whichever sign convention the
    eigensolver uses. Eigenvectors of exactly repeated eigenvalues remain
    basis-ambiguous; the deterministic ascending-order symmetric solver
    output is used, and fully symmetric inputs yield 1 under any convention.
    """
    w = as_matrix(matrix)
    if w.shape[0] == 0:
        raise EmptyInputError("partition_ratio needs at least one row")
    gram = w.T @ w
    _, vectors = np.linalg.eigh(gram)
    # projections: row i, eigenvector k -> w_i . v_k
    projections = w @ vectors
    log_q = np.empty(2 * vectors.shape[1])
    for k in range(vectors.shape[1]):
        log_q[2 * k] = _logsumexp(projections[:, k])
        log_q[2 * k + 1] = _logsumexp(-projections[:, k])
    ratio = float(np.exp(log_q.min() - log_q.max()))
    return min(ratio, 1.0)


def avg_pairwise_cosine(
    matrix,
    mode: str = "exact",
    pairs: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Mean cosine similarity over distinct row pairs.

    ``mode="exact"`` averages all n(n-1)/2 unordered pairs; ``"sampled"``
    averages ``pairs`` random pairs (i != j) drawn from the pinned stream,
    for matrices too large for the quadratic exact path.
    """
    w = as_matrix(matrix)
    n = w.shape[0]
    if n < 2:
        raise EmptyInputError("avg_pairwise_cosine needs at least two rows")
    norms = np.linalg.norm(w, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"row {zero[0]} has zero norm; cosine undefined")
    unit = w / norms[:, None]
    if mode == "exact":
        # sum over i<j of u_i . u_j == (|sum u|^2 - n) / 2
        total = np.linalg.norm(unit.sum(axis=0)) ** 2 - n
        return float(total / (n * (n - 1)))
    if mode == "sampled":
        i, j = PinnedRng(seed).index_pairs(pairs, n)
        return float(np.einsum("ij,ij->i", unit[i], unit[j]).mean())
    raise ValueError(f"unknown mode {mode!r}")


EXACT_COSINE_LIMIT = 20_000
SAMPLED_COSINE_PAIRS = 1_000_000


def measure(
    matrix,
    batch_size: int | str = FULL_BATCH,
    cosine_mode: str = "exact",
    seed: int = 0,
) -> IsotropyReport:
    """Both metrics averaged over consecutive row batches.

    The matrix is split into consecutive blocks of ``batch_size`` rows; a
    trailing block is kept only if it has at least 2 rows. Metrics are
    computed per block and arithmetically averaged.

    ``cosine_mode`` may be "exact", "sampled", or "auto"; auto switches a
    block to sampling (10^6 pinned-stream pairs) once the quadratic exact
    path would exceed 20000 rows.
    """
    w = as_matrix(matrix)
    n = w.shape[0]
    if batch_size == FULL_BATCH:
        blocks = [w]
    else:
        if batch_size < 2:
            raise ValueError("batch_size must be >= 2 or 'full'")
        blocks = [w[start : start + batch_size] for start in range(0, n, batch_size)]
        if len(blocks) > 1 and blocks[-1].shape[0] < 2:
            blocks.pop()
    if not blocks or blocks[0].shape[0] == 0:
        raise EmptyInputError("measure needs at least one non-empty batch")
    if cosine_mode not in ("exact", "sampled", "auto"):
        raise ValueError(f"unknown cosine_mode {cosine_mode!r}")

    def block_cosine(block):
        mode = cosine_mode
        if mode == "auto":
            mode = "exact" if block.shape[0] <= EXACT_COSINE_LIMIT else "sampled"
        if mode == "exact":
            return avg_pairwise_cosine(block)
        return avg_pairwise_cosine(block, mode="sampled", pairs=SAMPLED_COSINE_PAIRS, seed=seed)

    ratios = [partition_ratio(block) for block in blocks]
    cosines = [block_cosine(block) for block in blocks]
    return IsotropyReport(
        i_w=float(np.mean(ratios)),
        avg_cos=float(np.mean(cosines)),
        n_rows=n,
        dim=w.shape[1],
        batch_size=batch_size,
        batches_averaged=len(blocks),
    )


def dimension_profile(matrix, outlier_factor: float = 5.0) -> DimensionProfile:
    """Per-dimension mean/std/max-abs with spiky-dimension flags.

    A dimension is flagged when its max |value| exceeds ``outlier_factor``
    times the median of the per-dimension max |value|.
    """
    w = as_matrix(matrix)
    if w.shape[0] == 0:
        raise EmptyInputError("dimension_profile needs at least one row")
    max_abs = np.abs(w).max(axis=0)
    threshold = outlier_factor * np.median(max_abs)
    return DimensionProfile(
        mean=w.mean(axis=0),
        std=w.std(axis=0),
        max_abs=max_abs,
        outlier_flags=max_abs > threshold,
        outlier_factor=outlier_factor,
    )
