"""File output helpers: atomic writes, stable JSON, SVG confusion heatmaps."""
from __future__ import annotations

import json
import os
import tempfile
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np


def write_atomic(path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj) -> str:
    """JSON with sorted keys and full float precision; newline-terminated."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_jsonable) + "\n"


def matrix_csv(m) -> str:
    return "".join(",".join(f"{float(x):.6f}" for x in row) + "\n" for row in np.asarray(m))


def _cell_colour(v: float) -> str:
    # white (0) to dark blue (1)
    v = min(max(float(v), 0.0), 1.0)
    r = int(round(255 - v * (255 - 8)))
    g = int(round(255 - v * (255 - 48)))
    b = int(round(255 - v * (255 - 107)))
    return f"#{r:02x}{g:02x}{b:02x}"


def confusion_svg(m, labels: Sequence[str], title: str = "", cell: int = 64) -> str:
    """Normalized confusion matrix as a heatmap: rows true, columns predicted."""
    m = np.asarray(m, dtype=float)
    n_rows, n_cols = m.shape
    left, top = 90, 60 if title else 40
    width = left + n_cols * cell + 20
    height = top + n_rows * cell + 40
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for j in range(n_cols):
        x = left + j * cell + cell / 2
        out.append(f'<text x="{x:.1f}" y="{top - 8}" text-anchor="middle">{escape(str(labels[j]))}</text>')
    for i in range(n_rows):
        y = top + i * cell
        out.append(f'<text x="{left - 8}" y="{y + cell / 2 + 4:.1f}" text-anchor="end">{escape(str(labels[i]))}</text>')
        for j in range(n_cols):
            x = left + j * cell
            v = m[i, j]
            fg = "#ffffff" if v > 0.5 else "#000000"
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_cell_colour(v)}" stroke="#888888"/>')
            out.append(f'<text x="{x + cell / 2:.1f}" y="{y + cell / 2 + 4:.1f}" text-anchor="middle" fill="{fg}">{v:.2f}</text>')
    out.append(
        f'<text x="{left + n_cols * cell / 2:.1f}" y="{top + n_rows * cell + 25}" text-anchor="middle">predicted</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
