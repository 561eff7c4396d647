"""SVG rendering of basis vectors: the 2D path plus x(t) and y(t) traces."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import unflatten
from .etspace import ETBasis

PANEL = 200
PAD = 20


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _polyline(xs, ys, box, color: str, equal_aspect: bool) -> str:
    x0, y0, w, h = box
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if equal_aspect:
        span = max(np.ptp(xs), np.ptp(ys), 1e-12) * 1.1
        sx = sy = span
    else:
        sx = max(np.ptp(xs), 1e-12) * 1.1
        sy = max(np.ptp(ys), 1e-12) * 1.1
    cx, cy = (xs.min() + xs.max()) / 2, (ys.min() + ys.max()) / 2
    px = x0 + w / 2 + (xs - cx) / sx * w
    py = y0 + h / 2 - (ys - cy) / sy * h
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    marks = "".join(
        f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2" fill="{color}"/>' for a, b in zip(px, py)
    )
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>{marks}'


def basis_svg(path_xy: np.ndarray, title: str) -> str:
    T = len(path_xy)
    t = np.arange(T, dtype=np.float64)
    panels = [
        ("2D path", (PAD, 2 * PAD, PANEL, PANEL), path_xy[:, 0], path_xy[:, 1], "#1f77b4", True),
        ("x(t)", (2 * PAD + PANEL, 2 * PAD, PANEL, PANEL), t, path_xy[:, 0], "#d62728", False),
        ("y(t)", (3 * PAD + 2 * PANEL, 2 * PAD, PANEL, PANEL), t, path_xy[:, 1], "#2ca02c", False),
    ]
    width = 4 * PAD + 3 * PANEL
    height = 3 * PAD + PANEL
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{PAD}" y="{PAD}" font-family="sans-serif" font-size="12">{title}</text>',
    ]
    for label, box, xs, ys, color, equal in panels:
        x0, y0, w, h = box
        body.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>')
        body.append(f'<text x="{x0 + 4}" y="{y0 + 12}" font-family="sans-serif" font-size="10">{label}</text>')
        body.append(_polyline(xs, ys, box, color, equal))
    body.append("</svg>")
    return "\n".join(body) + "\n"


def plot_basis(basis: ETBasis, out_dir, prefix: str = "basis") -> list[Path]:
    """Write one SVG per basis vector; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(basis.k):
        xy = unflatten(basis.U[:, i], basis.layout)
        sv = basis.singular_values[i] if i < len(basis.singular_values) else 0.0
        path = out_dir / f"{prefix}_{basis.segment}_u{i + 1}.svg"
        path.write_text(basis_svg(xy, f"{basis.segment} u{i + 1} (sigma={sv:.4g})"))
        paths.append(path)
    return paths
