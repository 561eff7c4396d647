"""Best-of-s prediction metrics, training losses and non-linearity test.

Per-trajectory averages use ``math.fsum`` so results do not depend on the
summation order numpy happens to pick.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeError

COL_THRESHOLD = 0.1
NONLINEAR_TOL = 0.02


def _check(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.ndim == 2:
        pred = pred[None]
    if pred.ndim != 3 or gt.ndim != 2 or pred.shape[1:] != gt.shape or gt.shape[1] != 2:
        raise ShapeError(f"prediction {pred.shape} does not match ground truth {gt.shape}")
    return pred, gt


def point_distances(pred, gt) -> np.ndarray:
    """``(s, T)`` Euclidean distances between every sample and the ground truth."""
    pred, gt = _check(pred, gt)
    d = pred - gt
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])


def sample_ade(pred, gt) -> np.ndarray:
    d = point_distances(pred, gt)
    return np.array([math.fsum(row) / d.shape[1] for row in d])


def best_sample(pred, gt) -> int:
    """Index of the lowest-ADE sample (first one on ties)."""
    return int(np.argmin(sample_ade(pred, gt)))


def ade(pred, gt) -> float:
    return float(sample_ade(pred, gt).min())


def fde(pred, gt) -> float:
    return float(point_distances(pred, gt)[:, -1].min())


def pearson(a, b) -> float:
    """Two-pass Pearson correlation; 0 when either series is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return 0.0
    n = len(a)
    da = a - math.fsum(a) / n
    db = b - math.fsum(b) / n
    r = math.fsum(da * db) / math.sqrt(math.fsum(da * da) * math.fsum(db * db))
    return max(-1.0, min(1.0, r))


def tcc(pred, gt) -> float:
    """Temporal correlation of the best-ADE sample, averaged over x and y."""
    pred, gt = _check(pred, gt)
    if gt.shape[0] < 2:
        raise ConfigError("TCC needs at least two future steps")
    p = pred[best_sample(pred, gt)]
    return 0.5 * (pearson(p[:, 0], gt[:, 0]) + pearson(p[:, 1], gt[:, 1]))


def _collides(a: np.ndarray, b: np.ndarray, threshold: float) -> bool:
    d = a - b
    return bool(np.any(np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]) < threshold))


def collision_counts(preds: Sequence, gts: Sequence | None = None, threshold: float = COL_THRESHOLD,
                     mode: str = "best") -> tuple[int, int]:
    """``(colliding cases, total cases)`` for the pedestrians of one time window.

    ``mode="best"`` pairs every pedestrian's best-ADE sample (ground truth
    required unless ``s == 1``); one case per pedestrian pair. ``mode="all"``
    counts every sample pairing of every pedestrian pair as its own case.
    """
    preds = [np.asarray(p, dtype=np.float64) for p in preds]
    preds = [p[None] if p.ndim == 2 else p for p in preds]
    if mode == "best":
        if gts is None:
            if any(p.shape[0] != 1 for p in preds):
                raise ConfigError("best-sample collision counting needs ground truth")
            paths = [p[0] for p in preds]
        else:
            paths = [p[best_sample(p, g)] for p, g in zip(preds, gts, strict=True)]
        hits = sum(_collides(a, b, threshold) for a, b in combinations(paths, 2))
        return hits, len(paths) * (len(paths) - 1) // 2
    if mode == "all":
        hits = cases = 0
        for a, b in combinations(preds, 2):
            for pa in a:
                for pb in b:
                    hits += _collides(pa, pb, threshold)
                    cases += 1
        return hits, cases
    raise ConfigError(f"unknown collision mode {mode!r}")


def col(preds: Sequence, gts: Sequence | None = None, threshold: float = COL_THRESHOLD,
        mode: str = "best") -> float | None:
    """Collision percentage among pedestrians sharing a window; ``None`` below two pedestrians."""
    if len(preds) < 2:
        return None
    hits, cases = collision_counts(preds, gts, threshold, mode)
    return 100.0 * hits / cases


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _batch_mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def loss_coeff(candidates, gt_c) -> float:
    """Winner-takes-all coefficient loss, batch ``(B, s, k)`` / ``(B, k)`` or single ``(s, k)`` / ``(k,)``."""
    C = np.asarray(candidates, dtype=np.float64)
    g = np.asarray(gt_c, dtype=np.float64)
    if C.ndim == 2:
        C, g = C[None], g[None]
    if C.ndim != 3 or g.shape != (C.shape[0], C.shape[2]):
        raise ShapeError(f"candidates {C.shape} do not match ground-truth coefficients {g.shape}")
    return _batch_mean(float(np.sqrt(np.sum((Ci - gi) ** 2, axis=1)).min()) for Ci, gi in zip(C, g))


def _batched(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if gt.ndim == 2:
        return [pred], [gt]
    if pred.ndim != 4 or len(pred) != len(gt):
        raise ShapeError(f"batched predictions {pred.shape} do not match ground truth {gt.shape}")
    return list(pred), list(gt)


def loss_dist(pred, gt) -> float:
    """Batch mean of the best-sample time-averaged point distance."""
    return _batch_mean(ade(p, g) for p, g in zip(*_batched(pred, gt)))


def loss_end(pred, gt) -> float:
    return _batch_mean(fde(p, g) for p, g in zip(*_batched(pred, gt)))


@dataclass(frozen=True)
class LossReport:
    l_coeff: float
    l_dist: float
    l_end: float
    alpha: float = 1.0
    beta: float = 1.0

    @property
    def total(self) -> float:
        return self.l_coeff + self.alpha * self.l_dist + self.beta * self.l_end


def losses(candidates, gt_c, pred, gt, alpha: float = 1.0, beta: float = 1.0) -> LossReport:
    return LossReport(loss_coeff(candidates, gt_c), loss_dist(pred, gt), loss_end(pred, gt), alpha, beta)


# ---------------------------------------------------------------------------
# Non-linearity
# ---------------------------------------------------------------------------

def linear_fit_error(segment) -> float:
    """Mean point distance to the least-squares constant-velocity fit."""
    S = np.asarray(segment, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != 2 or S.shape[0] < 2:
        raise ShapeError(f"segment must be (T>=2, 2), got {S.shape}")
    t = np.arange(S.shape[0], dtype=np.float64)
    X = np.stack([np.ones_like(t), t], axis=1)
    coef, *_ = np.linalg.lstsq(X, S, rcond=None)
    r = X @ coef - S
    return math.fsum(np.sqrt(np.sum(r * r, axis=1))) / S.shape[0]


def classify_nonlinear(segment, tol: float = NONLINEAR_TOL) -> bool:
    return linear_fit_error(segment) > tol


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    ade: float
    fde: float
    tcc: float
    col: float | None
    count: int
    col_cases: int = 0
    per_scene: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _summary(rows, col_hits, col_cases) -> dict:
    return dict(
        ade=_batch_mean(r[0] for r in rows),
        fde=_batch_mean(r[1] for r in rows),
        tcc=_batch_mean(r[2] for r in rows),
        col=100.0 * col_hits / col_cases if col_cases else None,
        count=len(rows),
        col_cases=col_cases,
    )


def evaluate(tracklets: Sequence, predictions: Sequence, threshold: float = COL_THRESHOLD,
             col_mode: str = "best") -> MetricsReport:
    """Aggregate best-of-s metrics over tracklets.

    ``predictions[i]`` is the ``(s, T_fut, 2)`` sample set for ``tracklets[i]``.
    Collisions are counted among tracklets that share scene, source file and
    start frame.
    """
    if len(tracklets) != len(predictions):
        raise ShapeError(f"{len(tracklets)} tracklets but {len(predictions)} prediction sets")
    if not tracklets:
        raise ConfigError("nothing to evaluate")
    rows: dict[str, list] = {}
    windows: dict[tuple, list] = {}
    for t, p in zip(tracklets, predictions):
        rows.setdefault(t.scene, []).append((ade(p, t.fut), fde(p, t.fut), tcc(p, t.fut)))
        windows.setdefault((t.scene, t.source, t.start_frame), []).append((p, t.fut))
    col_stats: dict[str, list] = {scene: [0, 0] for scene in rows}
    for (scene, _, _), members in windows.items():
        if len(members) < 2:
            continue
        hits, cases = collision_counts([m[0] for m in members], [m[1] for m in members], threshold, col_mode)
        col_stats[scene][0] += hits
        col_stats[scene][1] += cases
    per_scene = {scene: _summary(rows[scene], *col_stats[scene]) for scene in sorted(rows)}
    overall = _summary([r for scene in sorted(rows) for r in rows[scene]],
                       sum(v[0] for v in col_stats.values()), sum(v[1] for v in col_stats.values()))
    return MetricsReport(per_scene=per_scene, **overall)
