"""Parametric-curve trajectory descriptors used as comparison baselines.

All three families share one form: ``T`` points are ``M @ P`` for a ``(T, p)``
basis matrix ``M`` sampled at uniform ``τ = t / (T - 1)`` and ``p`` control
points ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

COND_FALLBACK = 1e10


@dataclass(frozen=True, eq=False)
class ParametricBasis:
    kind: str  # "linear" | "bezier" | "bspline"
    order: int
    M: np.ndarray
    knots: np.ndarray | None = None

    @property
    def T(self) -> int:
        return self.M.shape[0]

    @property
    def num_ctrl(self) -> int:
        return self.M.shape[1]

    @property
    def dim(self) -> int:
        """Descriptor dimension: two coordinates per control point."""
        return 2 * self.num_ctrl


def _tau(T: int) -> np.ndarray:
    if T < 2:
        raise ConfigError(f"need at least 2 frames, got {T}")
    return np.arange(T, dtype=np.float64) / (T - 1)


def bernstein_basis(order: int, T: int) -> ParametricBasis:
    """Bernstein polynomials of degree ``order`` sampled at ``T`` uniform times."""
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    tau = _tau(T)[:, None]
    i = np.arange(order + 1)
    binom = np.array([comb(order, j) for j in i], dtype=np.float64)
    M = binom * tau ** i * (1.0 - tau) ** (order - i)
    return ParametricBasis("bezier", order, M)


def clamped_uniform_knots(order: int, num_ctrl: int) -> np.ndarray:
    interior = np.linspace(0.0, 1.0, num_ctrl - order + 1)[1:-1]
    return np.concatenate([np.zeros(order + 1), interior, np.ones(order + 1)])


def cox_de_boor(knots: np.ndarray, order: int, tau: float) -> np.ndarray:
    """All ``len(knots) - order - 1`` B-spline basis values of degree ``order`` at ``tau``."""
    knots = np.asarray(knots, dtype=np.float64)
    n = len(knots) - order - 1
    # degree 0: indicator of the half-open span; the right end of the domain
    # belongs to the last non-empty span
    N = np.zeros(len(knots) - 1)
    if tau >= knots[-1]:
        last = np.nonzero(knots[:-1] < knots[1:])[0][-1]
        N[last] = 1.0
    else:
        N[(knots[:-1] <= tau) & (tau < knots[1:])] = 1.0
    for d in range(1, order + 1):
        nxt = np.zeros(len(knots) - 1 - d)
        for i in range(len(nxt)):
            left = knots[i + d] - knots[i]
            right = knots[i + d + 1] - knots[i + 1]
            a = (tau - knots[i]) / left * N[i] if left > 0 else 0.0
            b = (knots[i + d + 1] - tau) / right * N[i + 1] if right > 0 else 0.0
            nxt[i] = a + b
        N = nxt
    return N[:n]


def bspline_basis(order: int, num_ctrl: int, T: int, knots=None) -> ParametricBasis:
    """Degree-``order`` B-spline basis on a clamped uniform knot vector.

    ``num_ctrl = order + 1`` leaves no interior knots, so the result coincides
    with :func:`bernstein_basis`.
    """
    if order < 1 or num_ctrl < order + 1:
        raise ConfigError(f"need order >= 1 and num_ctrl >= order + 1, got {order}, {num_ctrl}")
    if knots is None:
        knots = clamped_uniform_knots(order, num_ctrl)
    knots = np.asarray(knots, dtype=np.float64)
    if len(knots) != num_ctrl + order + 1 or np.any(np.diff(knots) < 0):
        raise ConfigError("knot vector must be non-decreasing with num_ctrl + order + 1 entries")
    if knots[order] != 0.0 or knots[num_ctrl] != 1.0:
        raise ConfigError("knot vector must span the parameter domain [0, 1]")
    M = np.stack([cox_de_boor(knots, order, t) for t in _tau(T)])
    return ParametricBasis("bspline", order, M, knots)


def linear_basis(T: int) -> ParametricBasis:
    b = bernstein_basis(1, T)
    return ParametricBasis("linear", 1, b.M)


def make_basis(kind: str, T: int, order: int = 5, num_ctrl: int | None = None) -> ParametricBasis:
    if kind == "linear":
        return linear_basis(T)
    if kind == "bezier":
        return bernstein_basis(order, T)
    if kind == "bspline":
        return bspline_basis(order, num_ctrl or order + 1, T)
    raise ConfigError(f"unknown descriptor kind {kind!r}")


def fit_controls(basis: ParametricBasis, segment) -> np.ndarray:
    """Least-squares control points ``argmin ||M P - segment||_F``.

    Solved through the normal equations; an SVD-based solve takes over when
    ``MᵀM`` is badly conditioned.

    Raises:
        ShapeError: ``segment`` is not ``(T, 2)``.
        NumericError: ``M`` does not have full column rank.
    """
    S = np.asarray(segment, dtype=np.float64)
    if S.shape[-2:] != (basis.T, 2):
        raise ShapeError(f"segment must be (..., {basis.T}, 2), got {S.shape}")
    M = basis.M
    MtM = M.T @ M
    cond = np.linalg.cond(MtM)
    if not np.isfinite(cond) or cond > COND_FALLBACK:
        if np.linalg.matrix_rank(M) < M.shape[1]:
            raise NumericError(f"{basis.kind} basis is rank deficient ({basis.T} frames, {basis.num_ctrl} controls)")
        return np.linalg.pinv(M) @ S
    return np.linalg.solve(MtM, M.T @ S)


def reconstruct_controls(basis: ParametricBasis, points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.shape[-2:] != (basis.num_ctrl, 2):
        raise ShapeError(f"control points must be (..., {basis.num_ctrl}, 2), got {P.shape}")
    return basis.M @ P


def linear_descriptor(segment) -> tuple[np.ndarray, np.ndarray]:
    """First and last point of a segment: the 4-dimensional linear descriptor."""
    S = np.asarray(segment, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != 2 or S.shape[0] < 2:
        raise ShapeError(f"segment must be (T>=2, 2), got {S.shape}")
    return S[0].copy(), S[-1].copy()


def linear_expand(first, last, T: int) -> np.ndarray:
    """``T`` equally spaced points from ``first`` to ``last``."""
    tau = _tau(T)[:, None]
    return (1.0 - tau) * np.asarray(first, dtype=np.float64) + tau * np.asarray(last, dtype=np.float64)


def curve_reconstruction(kind: str, segments, order: int = 5, num_ctrl: int | None = None) -> np.ndarray:
    """Fit and re-evaluate a batch ``(N, T, 2)`` of segments with one curve family."""
    S = np.asarray(segments, dtype=np.float64)
    T = S.shape[-2]
    if kind == "linear":
        tau = _tau(T)[:, None]
        return (1.0 - tau) * S[..., :1, :] + tau * S[..., -1:, :]
    basis = make_basis(kind, T, order, num_ctrl)
    return reconstruct_controls(basis, fit_controls(basis, S))


def curve_approximation_error(kind: str, tracklets: Sequence, order: int = 5,
                              num_ctrl: int | None = None) -> tuple[float, float]:
    """Mean reconstruction error (mm) of observations and futures for one family."""
    if not tracklets:
        raise ConfigError("need at least one tracklet")
    out = []
    for seg in ("obs", "fut"):
        S = np.stack([getattr(t, seg) for t in tracklets])
        R = curve_reconstruction(kind, S, order, num_ctrl)
        d = np.sqrt(np.sum((R - S) ** 2, axis=-1)).mean(axis=-1)
        out.append(float(d.mean() * 1000.0))
    return out[0], out[1]
