"""Small trajectory builders shared by the tests."""

from __future__ import annotations

import numpy as np

from eigentraj.dataset import Tracklet


def straight_tracklet(start=(0.0, 0.0), velocity=(0.4, 0.0), t_obs=8, t_fut=12, ped=1, scene="s",
                      start_frame=0) -> Tracklet:
    t = np.arange(t_obs + t_fut, dtype=np.float64)[:, None]
    pts = np.asarray(start) + t * np.asarray(velocity)
    return Tracklet(ped, scene, pts[:t_obs], pts[t_obs:], "f.txt", start_frame)


def random_tracklet(rng, t_obs=8, t_fut=12, ped=1, scene="s") -> Tracklet:
    steps = rng.normal(0.0, 0.3, size=(t_obs + t_fut, 2)) + rng.normal(0.0, 1.0, size=2)
    pts = np.cumsum(steps, axis=0) + rng.uniform(-5, 5, size=2)
    return Tracklet(ped, scene, pts[:t_obs], pts[t_obs:], "f.txt", 0)
