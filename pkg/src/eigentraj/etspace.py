"""Low-rank trajectory descriptor.

A stacked trajectory matrix ``A`` (one flattened trajectory per column) is
decomposed through the eigenvectors of its Gram matrix ``A Aᵀ``. The leading
``k`` left singular vectors span the descriptor space; any trajectory maps to
a ``k``-vector of coefficients by ``c = U_kᵀ x`` and back by ``x ≈ U_k c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import (
    INTERLEAVED, OBSERVATION, PREDICTION, Tracklet, TrajectoryMatrix, flatten, to_matrix, unflatten,
)
from .errors import ConfigError, NumericError, ShapeError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-9
EIGEN_CLAMP = 1e-12
RELATIVE_EPS = 4.0 * np.finfo(np.float64).eps


def symmetric_eigendecomposition(G, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigen-decompose a real symmetric matrix with cyclic Jacobi rotations.

    Args:
        G: ``(L, L)`` symmetric matrix.
        tol: Convergence threshold on the off-diagonal Frobenius norm,
            relative to ``||G||_F``.
        max_sweeps: Sweep cap before giving up.

    Once the Frobenius test passes, sweeps continue while any entry is
    significant next to its diagonal pair (``|a_pq| > 4 eps sqrt(|a_pp a_qq|)``).
    The Frobenius test alone can leave off-diagonal entries as large as
    ``tol * ||G||`` next to eigenvalues far smaller than ``||G||``, which tilts
    the trailing eigenvectors; the relative test polishes them to working
    precision, usually within one extra sweep.

    Returns:
        ``(eigenvalues, eigenvectors)`` with eigenvalues in descending order
        (ties keep the order the rotations left them in) and eigenvectors as
        orthonormal columns.

    Raises:
        ConfigError: ``G`` is not square or not symmetric to 1e-9.
        NumericError: No convergence within ``max_sweeps``.
    """
    a = np.array(G, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix has non-finite entries")
    n = a.shape[0]
    scale = np.abs(a).max() if a.size else 0.0
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * max(scale, 1.0):
        raise ConfigError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v

    target = tol * norm
    offdiag = ~np.eye(n, dtype=bool)
    rotated = True
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[offdiag])
        if off < target and not rotated:
            break
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= RELATIVE_EPS * math.sqrt(abs(a[p, p] * a[q, q])):
                    continue
                rotated = True
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        off = np.linalg.norm(a[offdiag])
        if off >= target:
            raise NumericError(f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off:.3e})")

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def canonical_signs(u: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    u = np.array(u, dtype=np.float64)
    if u.size == 0:
        return u
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[idx, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    return u * signs


@dataclass(frozen=True, eq=False)
class ETBasis:
    """Rank-``k`` basis for one trajectory segment.

    ``U`` has shape ``(L, k)`` with ``L = 2T``. ``mean`` is ``None`` unless the
    basis was fitted on mean-centered data.
    """

    U: np.ndarray
    singular_values: np.ndarray
    segment: str
    layout: str = INTERLEAVED
    mean: np.ndarray | None = None

    def __post_init__(self):
        U = np.array(self.U, dtype=np.float64)
        sv = np.array(self.singular_values, dtype=np.float64)
        if U.ndim != 2 or U.shape[0] % 2 or not 1 <= U.shape[1] <= U.shape[0]:
            raise ShapeError(f"basis must be (2T, k) with 1 <= k <= 2T, got {U.shape}")
        if self.segment not in (OBSERVATION, PREDICTION):
            raise ConfigError(f"unknown segment {self.segment!r}")
        U.setflags(write=False)
        sv.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "singular_values", sv)
        if self.mean is not None:
            mean = np.array(self.mean, dtype=np.float64)
            if mean.shape != (U.shape[0],):
                raise ShapeError(f"mean must have length {U.shape[0]}, got {mean.shape}")
            mean.setflags(write=False)
            object.__setattr__(self, "mean", mean)

    @property
    def k(self) -> int:
        return self.U.shape[1]

    @property
    def L(self) -> int:
        return self.U.shape[0]

    @property
    def T(self) -> int:
        return self.U.shape[0] // 2

    def truncate(self, k: int) -> "ETBasis":
        if not 1 <= k <= self.k:
            raise ConfigError(f"cannot truncate a rank-{self.k} basis to k={k}")
        return ETBasis(self.U[:, :k], self.singular_values, self.segment, self.layout, self.mean)


@dataclass(frozen=True, eq=False)
class DescriptorPair:
    obs: ETBasis
    pred: ETBasis
    provenance: str = ""

    def __post_init__(self):
        if self.obs.segment != OBSERVATION or self.pred.segment != PREDICTION:
            raise ConfigError("descriptor pair needs an observation basis and a prediction basis")


def fit_descriptor(matrix: TrajectoryMatrix, k: int, center: bool = False) -> ETBasis:
    """Fit the top-``k`` left singular vectors of a trajectory matrix.

    Singular values are the square roots of the Gram eigenvalues; eigenvalues
    below ``1e-12 * λ_max`` are clamped to zero first. Pass ``center=True`` to
    subtract the column mean before decomposing.
    """
    A = matrix.data
    L, N = A.shape
    if not 1 <= k <= min(L, N):
        raise ConfigError(f"k must lie in [1, min(L, N)] = [1, {min(L, N)}], got {k}")
    if not np.all(np.isfinite(A)):
        raise NumericError("trajectory matrix has non-finite entries")
    mean = None
    if center:
        mean = A.mean(axis=1)
        A = A - mean[:, None]
    G = A @ A.T
    G = 0.5 * (G + G.T)
    w, V = symmetric_eigendecomposition(G)
    lam_max = max(w[0], 0.0)
    w = np.where(w < EIGEN_CLAMP * lam_max, 0.0, w)
    sv = np.sqrt(w[: min(L, N)])
    U = canonical_signs(V[:, :k])
    return ETBasis(U, sv, matrix.segment, matrix.layout, mean)


def fit_pair(tracklets: Sequence[Tracklet], k: int, layout: str = INTERLEAVED,
             center: bool = False, provenance: str = "") -> DescriptorPair:
    return DescriptorPair(
        fit_descriptor(to_matrix(tracklets, OBSERVATION, layout), k, center),
        fit_descriptor(to_matrix(tracklets, PREDICTION, layout), k, center),
        provenance,
    )


def project(basis: ETBasis, segment) -> np.ndarray:
    """Coefficients ``U_kᵀ x`` of a flattened segment (or a batch ``(..., L)``)."""
    x = np.asarray(segment, dtype=np.float64)
    if x.ndim < 1 or x.shape[-1] != basis.L:
        raise ShapeError(f"segment length {x.shape[-1:]} does not match basis L={basis.L}")
    if basis.mean is not None:
        x = x - basis.mean
    return x @ basis.U


def reconstruct(basis: ETBasis, c) -> np.ndarray:
    """Flattened trajectory ``U_k c`` (or a batch ``(..., L)`` for ``(..., k)``)."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim < 1 or c.shape[-1] != basis.k:
        raise ShapeError(f"coefficient length {c.shape[-1:]} does not match basis k={basis.k}")
    x = c @ basis.U.T
    if basis.mean is not None:
        x = x + basis.mean
    return x


def project_points(basis: ETBasis, points) -> np.ndarray:
    """Like :func:`project` but takes ``(..., T, 2)`` points."""
    return project(basis, flatten(points, basis.layout))


def reconstruct_points(basis: ETBasis, c) -> np.ndarray:
    return unflatten(reconstruct(basis, c), basis.layout)


def mean_point_distance(a, b) -> np.ndarray:
    """Per-trajectory mean Euclidean distance between ``(..., T, 2)`` point sets."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return np.sqrt(np.sum(d * d, axis=-1)).mean(axis=-1)


def segment_error(basis: ETBasis, points) -> np.ndarray:
    """Per-trajectory rank-k approximation error in meters for ``(N, T, 2)`` points."""
    points = np.asarray(points, dtype=np.float64)
    approx = reconstruct_points(basis, project_points(basis, points))
    return mean_point_distance(approx, points)


def approximation_error(pair: DescriptorPair, tracklets: Sequence[Tracklet]) -> tuple[float, float]:
    """Mean reconstruction error of observations and futures, in millimeters."""
    if not tracklets:
        raise ConfigError("approximation_error needs at least one tracklet")
    obs = np.stack([t.obs for t in tracklets])
    fut = np.stack([t.fut for t in tracklets])
    return (
        float(segment_error(pair.obs, obs).mean() * 1000.0),
        float(segment_error(pair.pred, fut).mean() * 1000.0),
    )
