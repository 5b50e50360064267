"""CSV and SVG emission for result tables."""

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

CSV_HEADER = ("scheme", "n_tx", "n_rx", "snr_db", "metric", "value", "trials", "stderr")

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.17g}"


def write_csv(rows, path):
    if not rows:
        raise ValueError("refusing to write an empty result table")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r.scheme, r.n_tx, r.n_rx, _fmt(r.snr_db), r.metric, _fmt(r.value), r.trials, _fmt(r.stderr)])
    return path


def _series(rows, x_attr, label):
    series = {}
    for r in rows:
        x = getattr(r, x_attr)
        if x is None:
            continue
        series.setdefault(label(r), []).append((float(x), float(r.value)))
    return {k: sorted(v) for k, v in series.items()}


def write_svg(rows, path, x_attr, x_label, y_label, label, title=""):
    """Log-y line plot, one polyline per series; nonpositive values are left out."""
    if not rows:
        raise ValueError("refusing to plot an empty result table")
    series = _series(rows, x_attr, label)
    pts = [(x, y) for s in series.values() for x, y in s if y > 0]
    width, height = 640, 440
    left, right, top, bottom = 80, 190, 40, 60
    pw, ph = width - left - right, height - top - bottom
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if pts:
        xs = [p[0] for p in pts]
        ly = [math.log10(p[1]) for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y1 = y0 + 1

        def sx(x):
            return left + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return top + (y1 - math.log10(y)) / (y1 - y0) * ph

        for e in range(y0, y1 + 1):
            yy = top + (y1 - e) / (y1 - y0) * ph
            out.append(f'<line x1="{left}" y1="{yy:.1f}" x2="{left + pw}" y2="{yy:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 6}" y="{yy + 4:.1f}" text-anchor="end">1e{e}</text>')
        for x in sorted(set(xs)):
            out.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
        for i, (name, s) in enumerate(sorted(series.items())):
            colour = _PALETTE[i % len(_PALETTE)]
            coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s if y > 0)
            if coords:
                out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
            ly_ = top + 14 + 16 * i
            out.append(f'<line x1="{left + pw + 10}" y1="{ly_}" x2="{left + pw + 30}" y2="{ly_}" stroke="{colour}" stroke-width="2"/>')
            suffix = "" if coords else " (0, not shown)"
            out.append(f'<text x="{left + pw + 34}" y="{ly_ + 4}">{escape(name + suffix)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 20}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(y_label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
