"""Annotation parsing, tracklet windowing and trajectory-matrix assembly.

Annotation files follow the common ETH/UCY text layout: one record per line,
whitespace separated ``frame pedestrian_id x y``. Lines starting with ``#`` are
comments.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, ParseError, ShapeError

log = logging.getLogger(__name__)

OBSERVATION = "observation"
PREDICTION = "prediction"
SEGMENTS = (OBSERVATION, PREDICTION)

INTERLEAVED = "interleaved"
BLOCKED = "blocked"
LAYOUTS = (INTERLEAVED, BLOCKED)

DEFAULT_FIELD_ORDER = ("frame", "ped", "x", "y")
ETH_UCY_SCENES = ("eth", "hotel", "univ", "zara1", "zara2")


@dataclass(frozen=True)
class AnnotationRecord:
    frame_id: int
    pedestrian_id: int
    x: float
    y: float


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Tracklet:
    """One pedestrian's observation/future pair.

    ``obs`` is ``(t_obs, 2)`` and ``fut`` is ``(t_fut, 2)``, both in meters.
    ``source`` names the annotation file and ``start_frame`` the first frame of
    the window, so tracklets sharing a time window can be grouped again.
    """

    pedestrian_id: int
    scene: str
    obs: np.ndarray
    fut: np.ndarray
    source: str = ""
    start_frame: int = 0

    def __post_init__(self):
        obs, fut = _frozen(self.obs), _frozen(self.fut)
        if obs.ndim != 2 or obs.shape[1] != 2 or fut.ndim != 2 or fut.shape[1] != 2:
            raise ShapeError(f"tracklet segments must be (T, 2), got {obs.shape} and {fut.shape}")
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "fut", fut)

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.source, self.pedestrian_id, self.start_frame)

    def segment(self, which: str) -> np.ndarray:
        if which == OBSERVATION:
            return self.obs
        if which == PREDICTION:
            return self.fut
        raise ConfigError(f"unknown segment {which!r}")

    def replace(self, **changes) -> "Tracklet":
        fields = dict(
            pedestrian_id=self.pedestrian_id, scene=self.scene, obs=self.obs,
            fut=self.fut, source=self.source, start_frame=self.start_frame,
        )
        fields.update(changes)
        return Tracklet(**fields)


@dataclass(frozen=True, eq=False)
class TrajectoryMatrix:
    """Column-stacked flattened segments, shape ``(2T, N)``."""

    data: np.ndarray
    segment: str
    layout: str = INTERLEAVED

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] % 2 or data.shape[1] < 1:
            raise ShapeError(f"trajectory matrix must be (2T, N>=1), got {data.shape}")
        if self.segment not in SEGMENTS:
            raise ConfigError(f"unknown segment {self.segment!r}")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"unknown layout {self.layout!r}")
        object.__setattr__(self, "data", data)

    @property
    def frames(self) -> int:
        return self.data.shape[0] // 2


@dataclass(frozen=True)
class SplitSpec:
    held_out_scene: str
    train_scenes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "train_scenes", frozenset(self.train_scenes))
        if self.held_out_scene in self.train_scenes:
            raise ConfigError(f"held-out scene {self.held_out_scene!r} is also a training scene")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _as_int(value: float, name: str, lineno: int) -> int:
    if not value.is_integer() or value < 0:
        raise ParseError(f"{name} must be a non-negative integer, got {value!r}", lineno)
    return int(value)


def parse_annotations(
    text: str | Iterable[str],
    unit_scale: float = 1.0,
    field_order: Sequence[str] = DEFAULT_FIELD_ORDER,
) -> list[AnnotationRecord]:
    """Parse annotation text into records sorted by ``(pedestrian_id, frame_id)``.

    Args:
        text: File contents, or any iterable of lines.
        unit_scale: Meters per raw coordinate unit.
        field_order: Column names; a permutation of ``frame, ped, x, y``.

    Raises:
        ParseError: A line does not hold four numeric fields.
        DataError: A pedestrian's frames do not strictly increase in file order.
    """
    if sorted(field_order) != sorted(DEFAULT_FIELD_ORDER):
        raise ConfigError(f"field_order must be a permutation of {DEFAULT_FIELD_ORDER}")
    if not unit_scale > 0:
        raise ConfigError(f"unit_scale must be positive, got {unit_scale}")
    lines = text.splitlines() if isinstance(text, str) else text
    column = {name: i for i, name in enumerate(field_order)}

    records = []
    last_frame: dict[int, int] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, found {len(parts)}", lineno)
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        if not all(np.isfinite(values)):
            raise ParseError("non-finite value", lineno)
        frame = _as_int(values[column["frame"]], "frame", lineno)
        ped = _as_int(values[column["ped"]], "pedestrian id", lineno)
        prev = last_frame.get(ped)
        if prev is not None and frame <= prev:
            raise DataError(f"line {lineno}: pedestrian {ped} frame {frame} does not follow frame {prev}")
        last_frame[ped] = frame
        records.append(AnnotationRecord(
            frame, ped, values[column["x"]] * unit_scale, values[column["y"]] * unit_scale,
        ))
    records.sort(key=lambda r: (r.pedestrian_id, r.frame_id))
    return records


def load_annotation_file(path, unit_scale: float = 1.0, field_order=DEFAULT_FIELD_ORDER):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read annotation file {path}: {exc}") from exc
    try:
        return parse_annotations(text, unit_scale, field_order)
    except DataError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Windowing
# ---------------------------------------------------------------------------

def _group_by_pedestrian(records: Sequence[AnnotationRecord]):
    tracks: dict[int, list[AnnotationRecord]] = {}
    for r in records:
        tracks.setdefault(r.pedestrian_id, []).append(r)
    for ped in sorted(tracks):
        track = sorted(tracks[ped], key=lambda r: r.frame_id)
        frames = np.array([r.frame_id for r in track], dtype=np.int64)
        xy = np.array([(r.x, r.y) for r in track], dtype=np.float64)
        yield ped, frames, xy


def infer_frame_step(records: Sequence[AnnotationRecord]) -> int:
    """Most common frame gap between consecutive samples of one pedestrian."""
    gaps = Counter()
    for _, frames, _ in _group_by_pedestrian(records):
        gaps.update(np.diff(frames).tolist())
    if not gaps:
        return 1
    # ties go to the smaller gap
    return min(gaps.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def extract_tracklets(
    records: Sequence[AnnotationRecord],
    t_obs: int = 8,
    t_fut: int = 12,
    stride: int = 1,
    frame_step: int | None = None,
    scene: str = "",
    source: str = "",
    stats: dict | None = None,
) -> list[Tracklet]:
    """Slide a ``t_obs + t_fut`` window over every pedestrian track.

    Windows advance by ``stride`` samples. A window is kept only if every pair
    of consecutive samples is exactly ``frame_step`` frames apart (inferred
    from the data when omitted). Pedestrians with too few samples and gapped
    windows are skipped; counts go to the log and, if given, ``stats``.
    """
    if t_obs < 2 or t_fut < 1 or stride < 1:
        raise ConfigError(f"need t_obs >= 2, t_fut >= 1, stride >= 1 (got {t_obs}, {t_fut}, {stride})")
    if frame_step is None:
        frame_step = infer_frame_step(records)
    width = t_obs + t_fut
    out = []
    short = gapped = pedestrians = 0
    for ped, frames, xy in _group_by_pedestrian(records):
        pedestrians += 1
        if len(frames) < width:
            short += 1
            continue
        regular = np.diff(frames) == frame_step
        for start in range(0, len(frames) - width + 1, stride):
            if not regular[start:start + width - 1].all():
                gapped += 1
                continue
            window = xy[start:start + width]
            out.append(Tracklet(
                ped, scene, window[:t_obs], window[t_obs:], source, int(frames[start]),
            ))
    counts = dict(
        pedestrians=pedestrians, tracklets=len(out), skipped_short=short,
        skipped_gapped=gapped, frame_step=frame_step,
    )
    log.info("extract scene=%s source=%s %s", scene, source,
             " ".join(f"{k}={v}" for k, v in counts.items()))
    if stats is not None:
        for k, v in counts.items():
            stats[k] = stats.get(k, 0) + v if k != "frame_step" else v
    return out


# ---------------------------------------------------------------------------
# Flattening and matrices
# ---------------------------------------------------------------------------

def flatten(points: np.ndarray, layout: str = INTERLEAVED) -> np.ndarray:
    """``(T, 2)`` points -> length ``2T`` vector (``(..., T, 2)`` batches allowed)."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim < 2 or points.shape[-1] != 2:
        raise ShapeError(f"expected (..., T, 2) points, got {points.shape}")
    if layout == INTERLEAVED:
        return points.reshape(*points.shape[:-2], -1)
    if layout == BLOCKED:
        return np.swapaxes(points, -1, -2).reshape(*points.shape[:-2], -1)
    raise ConfigError(f"unknown layout {layout!r}")


def unflatten(vec: np.ndarray, layout: str = INTERLEAVED) -> np.ndarray:
    """Inverse of :func:`flatten`."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim < 1 or vec.shape[-1] % 2:
        raise ShapeError(f"flattened trajectory must have even length, got {vec.shape}")
    T = vec.shape[-1] // 2
    if layout == INTERLEAVED:
        return vec.reshape(*vec.shape[:-1], T, 2)
    if layout == BLOCKED:
        return np.swapaxes(vec.reshape(*vec.shape[:-1], 2, T), -1, -2)
    raise ConfigError(f"unknown layout {layout!r}")


def to_matrix(tracklets: Sequence[Tracklet], segment: str, layout: str = INTERLEAVED) -> TrajectoryMatrix:
    if not tracklets:
        raise ConfigError("cannot build a trajectory matrix from zero tracklets")
    segs = [t.segment(segment) for t in tracklets]
    lengths = {s.shape[0] for s in segs}
    if len(lengths) != 1:
        raise ShapeError(f"mixed {segment} lengths: {sorted(lengths)}")
    return TrajectoryMatrix(flatten(np.stack(segs), layout).T, segment, layout)


# ---------------------------------------------------------------------------
# Splits and perturbation
# ---------------------------------------------------------------------------

def leave_one_out(scenes: dict[str, list[Tracklet]], spec: SplitSpec):
    """Return ``(train, test)``; training defaults to every other scene."""
    if spec.held_out_scene not in scenes:
        raise ConfigError(f"unknown held-out scene {spec.held_out_scene!r}; have {sorted(scenes)}")
    train_names = spec.train_scenes or (set(scenes) - {spec.held_out_scene})
    unknown = set(train_names) - set(scenes)
    if unknown:
        raise ConfigError(f"unknown training scenes {sorted(unknown)}")
    train = [t for name in sorted(train_names) for t in scenes[name]]
    return train, list(scenes[spec.held_out_scene])


def perturb_observation(tracklet: Tracklet, sigma: float, seed: int) -> Tracklet:
    """Add i.i.d. Gaussian noise of std ``sigma`` to the observation only."""
    if sigma < 0:
        raise ConfigError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return tracklet
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=tracklet.obs.shape)
    return tracklet.replace(obs=tracklet.obs + noise)


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------

def scene_files(root, scenes: Sequence[str], explicit: dict | None = None) -> dict[str, list[Path]]:
    """Resolve annotation files per scene.

    ``explicit`` maps scene -> list of paths (relative to ``root``). Otherwise a
    scene is either ``root/<scene>.txt`` or every ``*.txt`` in ``root/<scene>/``.
    """
    root = Path(root)
    out = {}
    for scene in scenes:
        if explicit and scene in explicit:
            files = [root / p for p in explicit[scene]]
        elif (root / scene).is_dir():
            files = sorted((root / scene).glob("*.txt"))
        elif (root / f"{scene}.txt").is_file():
            files = [root / f"{scene}.txt"]
        else:
            files = []
        if not files:
            raise ConfigError(f"no annotation files for scene {scene!r} under {root}")
        out[scene] = files
    return out


def load_scenes(
    root,
    scenes: Sequence[str] = ETH_UCY_SCENES,
    t_obs: int = 8,
    t_fut: int = 12,
    stride: int = 1,
    unit_scale: float = 1.0,
    frame_step: int | None = None,
    explicit: dict | None = None,
) -> dict[str, list[Tracklet]]:
    out = {}
    for scene, files in scene_files(root, scenes, explicit).items():
        tracklets = []
        for path in files:
            records = load_annotation_file(path, unit_scale)
            tracklets += extract_tracklets(
                records, t_obs, t_fut, stride, frame_step, scene=scene, source=path.name,
            )
        out[scene] = tracklets
    return out
