"""Finite-dimensional Hilbert space primitives.

Vectors live in R^N equipped with the inner product ``<u, v> = u^T M v`` for
a symmetric positive-definite metric ``M`` (identity when omitted).  Frames
bundle metric-orthonormal columns with their ambient space.  All routines are
pure functions of their inputs; returned arrays are fresh and may be shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RANK_TOL",
    "AmbientSpace",
    "OrthonormalFrame",
    "RankDeficient",
    "orthonormalize",
    "project",
    "complement_frame",
]

# A pivot below RANK_TOL times the largest input norm is treated as zero.
RANK_TOL = 1e-10

_METRIC_SYM_TOL = 1e-12


class RankDeficient(ValueError):
    """The supplied vectors are numerically linearly dependent."""


@dataclass(eq=False)
class AmbientSpace:
    """R^dim with inner product ``<u, v> = u^T metric v``.

    ``metric`` is a symmetric positive-definite matrix; ``None`` means the
    Euclidean inner product.
    """

    dim: int
    metric: np.ndarray | None = None

    def __post_init__(self) -> None:
        if int(self.dim) < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = int(self.dim)
        if self.metric is not None:
            M = np.asarray(self.metric, dtype=float)
            if M.shape != (self.dim, self.dim):
                raise ValueError(f"metric must be {self.dim}x{self.dim}, got {M.shape}")
            scale = np.max(np.abs(M))
            if scale == 0.0 or np.max(np.abs(M - M.T)) > _METRIC_SYM_TOL * scale:
                raise ValueError("metric must be symmetric")
            M = 0.5 * (M + M.T)
            if np.linalg.eigvalsh(M).min() <= 0.0:
                raise ValueError("metric must be positive definite")
            self.metric = M

    @property
    def euclidean(self) -> bool:
        return self.metric is None

    def apply_metric(self, arr: np.ndarray) -> np.ndarray:
        """Return ``metric @ arr`` (``arr`` itself for the Euclidean case)."""
        if self.metric is None:
            return arr
        return self.metric @ arr

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        if self.metric is None:
            return float(u @ v)
        return float(u @ self.metric @ v)

    def norm(self, v: np.ndarray) -> float:
        if self.metric is None:
            return float(np.linalg.norm(v))
        return float(np.sqrt(max(v @ self.metric @ v, 0.0)))


@dataclass(eq=False)
class OrthonormalFrame:
    """Metric-orthonormal columns spanning a subspace of an ambient space."""

    space: AmbientSpace
    columns: np.ndarray

    def __post_init__(self) -> None:
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2 or cols.shape[0] != self.space.dim:
            raise ValueError(
                f"columns must have shape ({self.space.dim}, k), got {cols.shape}"
            )
        self.columns = cols

    @property
    def n_columns(self) -> int:
        return self.columns.shape[1]

    def prefix(self, k: int) -> "OrthonormalFrame":
        """Frame made of the first ``k`` columns."""
        if not 0 <= k <= self.n_columns:
            raise ValueError(f"prefix length {k} out of range")
        return OrthonormalFrame(self.space, self.columns[:, :k])


def _as_columns(vectors) -> np.ndarray:
    """Coerce a sequence of vectors (or an (N, k) array of columns) to a matrix."""
    if isinstance(vectors, np.ndarray):
        arr = np.array(vectors, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("expected vectors or a 2-d array of columns")
        return arr
    return np.column_stack([np.asarray(v, dtype=float) for v in vectors])


def orthonormalize(vectors, space: AmbientSpace) -> OrthonormalFrame:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Processes vectors in the given order and raises :class:`RankDeficient`
    when a pivot norm falls below ``RANK_TOL`` times the largest input norm.
    """
    V = _as_columns(vectors)
    if V.shape[0] != space.dim:
        raise ValueError(f"vectors live in R^{V.shape[0]}, space has dim {space.dim}")
    k = V.shape[1]
    input_norms = [space.norm(V[:, j]) for j in range(k)]
    tol = RANK_TOL * max(input_norms, default=0.0)
    basis: list[np.ndarray] = []
    for j in range(k):
        v = V[:, j].copy()
        for _ in range(2):
            for q in basis:
                v -= space.inner(q, v) * q
        nrm = space.norm(v)
        if nrm <= tol:
            raise RankDeficient(
                f"input vector {j} is numerically dependent on its predecessors "
                f"(pivot norm {nrm:.3e}, tolerance {tol:.3e})"
            )
        basis.append(v / nrm)
    cols = np.column_stack(basis) if basis else np.zeros((space.dim, 0))
    return OrthonormalFrame(space, cols)


def project(v, frame: OrthonormalFrame) -> tuple[np.ndarray, float]:
    """Orthogonal projection onto the frame's span.

    Returns ``(inside, residual_norm)`` where ``inside`` is the projection and
    ``residual_norm = ||v - inside||`` is the distance to the span.
    """
    v = np.asarray(v, dtype=float)
    space = frame.space
    if v.shape != (space.dim,):
        raise ValueError(f"vector must have shape ({space.dim},), got {v.shape}")
    coeffs = frame.columns.T @ space.apply_metric(v)
    inside = frame.columns @ coeffs
    return inside, space.norm(v - inside)


def complement_frame(frame: OrthonormalFrame) -> OrthonormalFrame:
    """Orthonormal basis of the metric-orthogonal complement of the span.

    Completes the frame with standard basis vectors in index order, so the
    result is deterministic.  A frame that already spans the whole space
    yields an empty frame (zero columns); that is a valid answer, not an
    error.
    """
    space = frame.space
    N, k = space.dim, frame.n_columns
    if k >= N:
        return OrthonormalFrame(space, np.zeros((N, 0)))
    existing = [frame.columns[:, j] for j in range(k)]
    out: list[np.ndarray] = []
    for i in range(N):
        v = np.zeros(N)
        v[i] = 1.0
        base = space.norm(v)
        for _ in range(2):
            for q in existing:
                v -= space.inner(q, v) * q
            for q in out:
                v -= space.inner(q, v) * q
        nrm = space.norm(v)
        if nrm > RANK_TOL * base:
            out.append(v / nrm)
            if len(out) == N - k:
                break
    if len(out) != N - k:
        raise RankDeficient("failed to complete the frame to a full basis")
    return OrthonormalFrame(space, np.column_stack(out))
