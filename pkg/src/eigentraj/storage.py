"""Versioned JSON containers for descriptors, anchors and prediction sets.

Floats are written with ``repr`` precision, so a save/load round trip is exact
and identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .anchors import AnchorSet
from .errors import ConfigError, DataError
from .etspace import DescriptorPair, ETBasis

FORMAT_VERSION = 1
DESCRIPTOR_FORMAT = "eigentraj/descriptor"
ANCHOR_FORMAT = "eigentraj/anchors"
PREDICTION_FORMAT = "eigentraj/predictions"


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")
    return path


def _read(path, fmt: str) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"missing artifact {path}")
    try:
        obj = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if obj.get("format") != fmt:
        raise DataError(f"{path} is not a {fmt} file (format={obj.get('format')!r})")
    if obj.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported {fmt} version {obj.get('version')!r}")
    return obj


def _basis_to_dict(b: ETBasis) -> dict:
    return {
        "segment": b.segment,
        "T": b.T,
        "k": b.k,
        "layout": b.layout,
        "U": b.U.tolist(),
        "singular_values": b.singular_values.tolist(),
        "mean": None if b.mean is None else b.mean.tolist(),
    }


def _basis_from_dict(d: dict) -> ETBasis:
    try:
        U = np.array(d["U"], dtype=np.float64)
        if U.shape != (2 * d["T"], d["k"]):
            raise DataError(f"basis matrix shape {U.shape} disagrees with T={d['T']}, k={d['k']}")
        return ETBasis(U, d["singular_values"], d["segment"], d["layout"], d.get("mean"))
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed basis record: {exc}") from exc


def descriptor_to_dict(pair: DescriptorPair, meta: dict | None = None) -> dict:
    return {
        "format": DESCRIPTOR_FORMAT,
        "version": FORMAT_VERSION,
        "provenance": pair.provenance,
        "observation": _basis_to_dict(pair.obs),
        "prediction": _basis_to_dict(pair.pred),
        "meta": meta or {},
    }


def save_descriptor(pair: DescriptorPair, path, meta: dict | None = None) -> Path:
    return dump_json(descriptor_to_dict(pair, meta), path)


def load_descriptor(path, with_meta: bool = False):
    obj = _read(path, DESCRIPTOR_FORMAT)
    pair = DescriptorPair(
        _basis_from_dict(obj["observation"]), _basis_from_dict(obj["prediction"]), obj.get("provenance", ""),
    )
    return (pair, obj.get("meta", {})) if with_meta else pair


def save_anchors(anchors: AnchorSet, path, meta: dict | None = None) -> Path:
    return dump_json({
        "format": ANCHOR_FORMAT,
        "version": FORMAT_VERSION,
        "s": anchors.s,
        "k": anchors.k,
        "seed": anchors.seed,
        "inertia": anchors.inertia,
        "n_iter": anchors.n_iter,
        "centroids": anchors.centroids.tolist(),
        "provenance": anchors.provenance,
        "meta": meta or {},
    }, path)


def load_anchors(path) -> AnchorSet:
    obj = _read(path, ANCHOR_FORMAT)
    c = np.array(obj["centroids"], dtype=np.float64)
    if c.shape != (obj["s"], obj["k"]):
        raise DataError(f"{path}: centroid shape {c.shape} disagrees with s={obj['s']}, k={obj['k']}")
    return AnchorSet(c, obj["inertia"], obj["seed"], n_iter=obj.get("n_iter", 0),
                     provenance=obj.get("provenance", ""))


def save_predictions(items: list[dict], path, meta: dict | None = None) -> Path:
    """``items``: dicts with ``source``, ``pedestrian_id``, ``start_frame`` and ``samples`` (s, T, 2)."""
    return dump_json({
        "format": PREDICTION_FORMAT,
        "version": FORMAT_VERSION,
        "meta": meta or {},
        "items": [
            {**{k: v for k, v in it.items() if k != "samples"}, "samples": np.asarray(it["samples"]).tolist()}
            for it in items
        ],
    }, path)


def load_predictions(path) -> tuple[dict, dict]:
    """Return ``({(source, pedestrian_id, start_frame): samples}, meta)``."""
    obj = _read(path, PREDICTION_FORMAT)
    out = {}
    for it in obj["items"]:
        out[(it["source"], it["pedestrian_id"], it["start_frame"])] = np.array(it["samples"], dtype=np.float64)
    return out, obj.get("meta", {})
