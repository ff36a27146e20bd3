"""Comparison metrics and report serialization."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from numpy.polynomial import Polynomial

DEFAULT_BINS = 40


def rmse(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("rmse of empty vectors")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def fit_poly(xs: Sequence[float], ys: Sequence[float], degree: int = 7) -> Polynomial:
    """Least-squares polynomial fit; exact interpolation when points <= degree + 1.

    The degree is capped at ``len(xs) - 1`` so the system is never underdetermined.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least two points to fit")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("x values must be strictly increasing")
    return Polynomial.fit(xs, ys, deg=min(degree, xs.size - 1))


@dataclass
class Crossing:
    x: float | None
    method: str  # "poly", "linear" or "absent"
    coeffs: list[float] = field(default_factory=list)


def _bisect(f, lo: float, hi: float, tol: float = 1e-14) -> float:
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_crossing(
    xs: Sequence[float],
    ys: Sequence[float],
    level: float,
    degree: int = 7,
    method: str = "poly",
) -> Crossing:
    """Smallest x inside the sampled range where y rises through ``level``.

    The bracket comes from the samples.  Inside it the degree-``degree`` fit
    is used when it is monotone there; otherwise (or with ``method="linear"``)
    the crossing is linearly interpolated between the bracketing samples.
    Crossings outside the sampled range are reported as absent.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    coeffs: list[float] = []
    poly = None
    if method == "poly":
        poly = fit_poly(xs, ys, degree)
        coeffs = poly.convert().coef.tolist()
    bracket = next((k for k in range(xs.size - 1) if ys[k] <= level < ys[k + 1]), None)
    if bracket is None:
        return Crossing(None, "absent", coeffs)
    x0, x1 = xs[bracket], xs[bracket + 1]
    if poly is not None:
        dense = np.linspace(x0, x1, 257)
        vals = poly(dense)
        if np.all(np.diff(vals) >= 0) and vals[0] <= level < vals[-1] + 1e-15:
            return Crossing(_bisect(lambda x: poly(x) - level, x0, x1), "poly", coeffs)
    y0, y1 = ys[bracket], ys[bracket + 1]
    x = x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    return Crossing(float(x), "linear", coeffs)


def rmg_histogram(values: Sequence[float], bins: int = DEFAULT_BINS) -> tuple[list[int], list[float]]:
    """Equal-width histogram over ``[min, max]``; returns (counts, edges)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return [0] * bins, [0.0] * (bins + 1)
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        counts = [0] * bins
        counts[0] = int(v.size)
        return counts, [lo] * (bins + 1)
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    return counts.tolist(), edges.tolist()


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else float("inf")


# ---------------------------------------------------------------- serialization


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    return obj


def dumps(doc: Any) -> str:
    """Canonical JSON: sorted keys, NaN as null, trailing newline."""
    return json.dumps(_clean(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"


def spec_hash(spec: dict) -> str:
    return hashlib.sha256(json.dumps(_clean(spec), sort_keys=True).encode()).hexdigest()[:16]


def write_atomic(path: str | Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


NODE_COLUMNS = ("node", "degree", "power_share", "ew", "mr_sim", "rmg_ana", "rmg_sim")
CURVE_COLUMNS = ("alpha", "gamma_ana", "revenue_ana", "rmg_ana", "gamma_sim", "rmg_sim")


def node_table(
    degrees, power_share, ew, rmg_ana, mr_sim=None, rmg_sim=None
) -> str:
    n = len(degrees)
    mr_sim = mr_sim if mr_sim is not None else [None] * n
    rmg_sim = rmg_sim if rmg_sim is not None else [None] * n
    rows = [
        (i, degrees[i], power_share[i], ew[i], mr_sim[i], rmg_ana[i], rmg_sim[i]) for i in range(n)
    ]
    return csv_text(NODE_COLUMNS, rows)


def curve_table(points: Sequence[dict]) -> str:
    rows = [
        (
            p["alpha"],
            p["gamma_sm"],
            p["revenue_share"],
            p["rmg"],
            p.get("gamma_sim"),
            p.get("rmg_sim"),
        )
        for p in points
    ]
    has_sim = any(r[4] is not None or r[5] is not None for r in rows)
    header = CURVE_COLUMNS if has_sim else CURVE_COLUMNS[:4]
    return csv_text(header, [r[: len(header)] for r in rows])


# ---------------------------------------------------------------- svg


def _svg_frame(width: int, height: int, body: list[str], title: str) -> str:
    return "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2:.1f}" y="16" font-size="13" text-anchor="middle">{title}</text>',
            *body,
            "</svg>",
            "",
        ]
    )


def histogram_svg(counts: Sequence[int], edges: Sequence[float], title: str = "RMG") -> str:
    width, height, pad = 480, 300, 40
    top = max(max(counts), 1)
    bw = (width - 2 * pad) / max(len(counts), 1)
    body = []
    for k, c in enumerate(counts):
        h = (height - 2 * pad) * c / top
        body.append(
            f'<rect x="{pad + k * bw:.2f}" y="{height - pad - h:.2f}" width="{bw:.2f}" '
            f'height="{h:.2f}" fill="steelblue"/>'
        )
    body.append(
        f'<text x="{pad}" y="{height - 10}" font-size="11">{edges[0]:.4g}</text>'
        f'<text x="{width - pad}" y="{height - 10}" font-size="11" text-anchor="end">{edges[-1]:.4g}</text>'
    )
    return _svg_frame(width, height, body, title)


def line_svg(series: dict[str, tuple[Sequence[float], Sequence[float]]], title: str = "") -> str:
    width, height, pad = 480, 300, 40
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys if y is not None]
    if not xs_all or not ys_all:
        return _svg_frame(width, height, [], title)
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    colors = ("steelblue", "firebrick", "seagreen", "darkorange")

    def px(x, y):
        return (
            pad + (x - x0) / (x1 - x0) * (width - 2 * pad),
            height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad),
        )

    body = []
    for k, (name, (xs, ys)) in enumerate(series.items()):
        pts = " ".join("%.2f,%.2f" % px(x, y) for x, y in zip(xs, ys) if y is not None)
        color = colors[k % len(colors)]
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{width - pad}" y="{30 + 14 * k}" font-size="11" fill="{color}" '
                    f'text-anchor="end">{name}</text>')
    return _svg_frame(width, height, body, title)
