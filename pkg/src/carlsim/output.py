"""CSV rendering and a minimal SVG line-plot writer."""

from __future__ import annotations

import csv
import io
import math
from xml.sax.saxutils import escape

EVOLVE_COLUMNS = (
    "tau,I_a,I_minus,I_plus,g2_a,g2_minus,g2_plus,g2_aminus,g2_aplus,g2_minusplus,"
    "cs_aminus,qb_aminus,cs_minusplus,qb_minusplus,cs_aplus,qb_aplus,"
    "dl_a,dphi_a,dl_minus,dphi_minus,dl_plus,dphi_plus,B_re,B_im,BdagB,depletion"
).split(",")
VIOLATION_COLUMNS = ["viol_aminus", "viol_aplus", "viol_minusplus"]

_RECORD_FIELD = {
    "I_a": "intensity_a",
    "I_minus": "intensity_minus",
    "I_plus": "intensity_plus",
    "BdagB": "bunching_intensity",
    "depletion": "depletion_fraction",
}


def format_value(value) -> str:
    """17 significant digits; None renders as an empty field."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def record_row(rec) -> dict:
    row = {}
    for col in EVOLVE_COLUMNS:
        if col == "B_re":
            row[col] = rec.bunching_mean.real
        elif col == "B_im":
            row[col] = rec.bunching_mean.imag
        else:
            row[col] = getattr(rec, _RECORD_FIELD.get(col, col))
    for col in VIOLATION_COLUMNS:
        row[col] = getattr(rec, col.replace("viol_", "violates_"))
    return row


def write_csv(rows, columns, stream=None) -> str:
    """Write dict rows in ``columns`` order; returns the text as well."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c)) for c in columns])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def svg_line_plot(x, series: dict, title="", width=640, height=400, logy=False) -> str:
    """Self-contained SVG with one polyline per named series."""
    margin = 50
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

    def ty(v):
        if v is None:
            return None
        if logy:
            return math.log10(v) if v > 0 else None
        return v

    ys = [ty(v) for vals in series.values() for v in vals]
    ys = [v for v in ys if v is not None and math.isfinite(v)]
    if not x or not ys:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>'
    x0, x1 = min(x), max(x)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return margin + (v - x0) / (x1 - x0) * (width - 2 * margin)

    def py(v):
        return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 15}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 15}" font-size="10" text-anchor="end">{x1:.3g}</text>',
        f'<text x="{margin - 5}" y="{height - margin}" font-size="10" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{margin - 5}" y="{margin}" font-size="10" text-anchor="end">{y1:.3g}</text>',
    ]
    for k, (name, vals) in enumerate(series.items()):
        color = colors[k % len(colors)]
        pts = [
            f"{px(xv):.2f},{py(ty(v)):.2f}"
            for xv, v in zip(x, vals)
            if ty(v) is not None and math.isfinite(ty(v))
        ]
        if pts:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>'
            )
        parts.append(
            f'<text x="{width - margin + 5}" y="{margin + 14 * k}" font-size="10" fill="{color}">{escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
