"""Synthetic pedestrian corpora in the ETH/UCY annotation format.

Walkers move at roughly 1.3 m/s with slowly drifting heading and speed plus
tracking jitter, sampled every 0.4 s. This is for exercising the pipeline end
to end when the real datasets are not at hand; its numbers say nothing about
the benchmarks.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import ETH_UCY_SCENES

DT = 0.4
FRAME_STEP = 10


def simulate_tracks(rng: np.random.Generator, n_peds: int = 60, min_len: int = 12, max_len: int = 45,
                    duration: int = 400, turn_rate: float = 0.3, jitter: float = 0.005):
    """Yield ``(pedestrian_id, first_sample_index, (n, 2) positions)``."""
    for ped in range(1, n_peds + 1):
        n = int(rng.integers(min_len, max_len + 1))
        start = int(rng.integers(0, duration))
        pos = rng.uniform(-10.0, 10.0, size=2)
        heading = rng.uniform(-np.pi, np.pi)
        speed = max(0.2, rng.normal(1.3, 0.25))
        # walkers differ in how much they wander: many go nearly straight
        wander = turn_rate * rng.uniform(0.0, 1.0) ** 3
        yaw = 0.0
        pts = []
        for _ in range(n):
            pts.append(pos.copy())
            yaw = 0.8 * yaw + rng.normal(0.0, wander)
            heading += yaw * DT
            speed = float(np.clip(speed + rng.normal(0.0, 0.02), 0.1, 2.5))
            pos = pos + DT * speed * np.array([np.cos(heading), np.sin(heading)])
        pts = np.array(pts) + rng.normal(0.0, jitter, size=(n, 2))
        yield ped, start, pts


def scene_text(seed: int, n_peds: int = 60, **kwargs) -> str:
    rng = np.random.default_rng(seed)
    rows = []
    for ped, start, pts in simulate_tracks(rng, n_peds, **kwargs):
        for i, (x, y) in enumerate(pts):
            rows.append(((start + i) * FRAME_STEP, ped, x, y))
    rows.sort(key=lambda r: (r[0], r[1]))
    return "".join(f"{f:.1f}\t{p:.1f}\t{x:.4f}\t{y:.4f}\n" for f, p, x, y in rows)


def write_corpus(root, scenes: Sequence[str] = ETH_UCY_SCENES, seed: int = 0, n_peds: int = 60, **kwargs):
    """Write ``root/<scene>/<scene>.txt`` for every scene; returns the paths."""
    root = Path(root)
    paths = []
    for i, scene in enumerate(scenes):
        path = root / scene / f"{scene}.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(scene_text(seed * 1000 + i, n_peds, **kwargs))
        paths.append(path)
    return paths
