"""Data-driven trajectory anchors.

Training futures are brought into a canonical frame (last observed point at
the origin, observed heading along +x, unit mean step), projected onto the
prediction basis and clustered. The centroids are coefficient anchors; a
prediction adds a correction to each anchor, reconstructs it and maps it back
through the query's own similarity transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import PREDICTION, Tracklet, flatten
from .errors import ConfigError, ShapeError
from .etspace import ETBasis, project, reconstruct, reconstruct_points

STATIONARY_STEP = 1e-6


@dataclass(frozen=True)
class NormalizationParams:
    translation: tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    scale: float = 1.0

    def rotation_matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([[c, -s], [s, c]])


def normalization_params(obs) -> NormalizationParams:
    """Similarity transform that canonicalizes an observed path.

    Heading is the net displacement ``obs[-1] - obs[0]``; speed is the mean
    step length. Near-stationary observations (mean step below 1e-6 m) keep
    rotation 0 and scale 1.
    """
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[1] != 2 or obs.shape[0] < 2:
        raise ShapeError(f"observation must be (T>=2, 2), got {obs.shape}")
    last = obs[-1]
    step = float(np.mean(np.sqrt(np.sum(np.diff(obs, axis=0) ** 2, axis=1))))
    if step < STATIONARY_STEP:
        return NormalizationParams((float(last[0]), float(last[1])), 0.0, 1.0)
    net = obs[-1] - obs[0]
    rotation = math.atan2(net[1], net[0]) if math.hypot(*net) >= STATIONARY_STEP else 0.0
    return NormalizationParams((float(last[0]), float(last[1])), rotation, step)


def normalize_points(points, params: NormalizationParams) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64) - np.asarray(params.translation)
    # row vectors: p @ R equals R(-θ) applied to each point
    return (p @ params.rotation_matrix()) / params.scale


def denormalize_points(points, params: NormalizationParams) -> np.ndarray:
    if not params.scale > 0:
        raise ConfigError(f"normalization scale must be positive, got {params.scale}")
    p = np.asarray(points, dtype=np.float64) * params.scale
    return p @ params.rotation_matrix().T + np.asarray(params.translation)


def normalize_tracklet(t: Tracklet) -> tuple[Tracklet, NormalizationParams]:
    params = normalization_params(t.obs)
    return t.replace(obs=normalize_points(t.obs, params), fut=normalize_points(t.fut, params)), params


def denormalize(t: Tracklet, params: NormalizationParams) -> Tracklet:
    return t.replace(obs=denormalize_points(t.obs, params), fut=denormalize_points(t.fut, params))


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AnchorSet:
    """``s`` coefficient centroids of shape ``(s, k)`` plus clustering metadata."""

    centroids: np.ndarray
    inertia: float
    seed: int
    labels: np.ndarray | None = None
    n_iter: int = 0
    inertia_history: tuple = field(default=())
    provenance: str = ""

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ShapeError(f"centroids must be (s>=1, k), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ConfigError("centroids must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def s(self) -> int:
        return self.centroids.shape[0]

    @property
    def k(self) -> int:
        return self.centroids.shape[1]


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = X[:, None, :] - C[None, :, :]
    return np.sum(d * d, axis=-1)


def _kmeans_pp(X: np.ndarray, s: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(X, X[chosen])[:, 0]
    for _ in range(1, s):
        total = float(d2.sum())
        if total > 0.0:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
            while d2[idx] == 0.0:  # r landed on the right edge of a zero-weight run
                idx -= 1
        else:
            # every point coincides with a chosen centre: take unused indices in order
            idx = next(i for i in range(n) if i not in chosen)
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dist(X, X[idx:idx + 1])[:, 0])
    return X[chosen].copy()


def kmeans(points, s: int, seed: int = 0, max_iter: int = 300, init=None) -> AnchorSet:
    """Lloyd's k-means with k-means++ seeding.

    Iterates until the assignment stops changing or ``max_iter`` updates have
    run. An empty cluster is re-seeded at the point farthest from its current
    centroid. Results are bit-for-bit reproducible for a fixed ``seed``.

    Args:
        points: ``(n, d)`` array.
        s: Number of clusters, ``1 <= s <= n``.
        seed: Seed for the k-means++ draw.
        max_iter: Cap on centroid updates.
        init: Optional ``(s, d)`` initial centroids; skips k-means++.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"points must be (n, d), got {X.shape}")
    n = len(X)
    if not 1 <= s <= n:
        raise ConfigError(f"need 1 <= s <= n, got s={s}, n={n}")
    if init is None:
        C = _kmeans_pp(X, s, np.random.default_rng(seed))
    else:
        C = np.array(init, dtype=np.float64)
        if C.shape != (s, X.shape[1]):
            raise ShapeError(f"init must be ({s}, {X.shape[1]}), got {C.shape}")

    D = _sq_dist(X, C)
    labels = np.argmin(D, axis=1)
    history = [float(D[np.arange(n), labels].sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for j in range(s):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(D[np.arange(n), labels]))
                C[j] = X[far]
                labels[far] = j
                D[far, j] = 0.0
        D = _sq_dist(X, C)
        new_labels = np.argmin(D, axis=1)
        history.append(float(D[np.arange(n), new_labels].sum()))
        converged = np.array_equal(new_labels, labels)
        labels = new_labels
        if converged:
            break
    return AnchorSet(C, history[-1], seed, labels, n_iter, tuple(history))


# ---------------------------------------------------------------------------
# Anchors and prediction
# ---------------------------------------------------------------------------

def normalized_future_coefficients(train: Sequence[Tracklet], pred_basis: ETBasis) -> np.ndarray:
    futs = np.stack([normalize_points(t.fut, normalization_params(t.obs)) for t in train])
    return project(pred_basis, flatten(futs, pred_basis.layout))


def generate_anchors(train: Sequence[Tracklet], pred_basis: ETBasis, s: int = 20, seed: int = 0,
                     max_iter: int = 300, space: str = "et", provenance: str = "") -> AnchorSet:
    """Cluster normalized training futures into ``s`` coefficient anchors.

    ``space="et"`` clusters the projected coefficients. ``space="euclidean"``
    clusters their rank-k reconstructions (flattened, in meters) and projects
    the resulting centroids back; since ``U_k`` is an isometry on its span the
    two give the same partition.
    """
    if not train:
        raise ConfigError("anchor generation needs at least one training tracklet")
    if pred_basis.segment != PREDICTION:
        raise ConfigError("anchors must be generated with a prediction basis")
    coeffs = normalized_future_coefficients(train, pred_basis)
    if space == "et":
        result = kmeans(coeffs, s, seed, max_iter)
        centroids = result.centroids
    elif space == "euclidean":
        result = kmeans(reconstruct(pred_basis, coeffs), s, seed, max_iter)
        centroids = project(pred_basis, result.centroids)
    else:
        raise ConfigError(f"unknown clustering space {space!r}")
    return AnchorSet(centroids, result.inertia, seed, result.labels, result.n_iter,
                     result.inertia_history, provenance)


def refine(anchors: AnchorSet, f) -> np.ndarray:
    """Candidate coefficients ``anchor + correction``, shape ``(s, k)``."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != anchors.centroids.shape:
        raise ShapeError(f"correction shape {f.shape} does not match anchors {anchors.centroids.shape}")
    return anchors.centroids + f


def anchor_predict(obs, anchors: AnchorSet, pred_basis: ETBasis, f=None) -> np.ndarray:
    """``s`` future trajectories ``(s, T_fut, 2)`` in the observation's world frame."""
    if anchors.k != pred_basis.k:
        raise ConfigError(f"anchors have k={anchors.k} but the prediction basis has k={pred_basis.k}")
    params = normalization_params(obs)
    c = anchors.centroids if f is None else refine(anchors, f)
    return denormalize_points(reconstruct_points(pred_basis, c), params)
