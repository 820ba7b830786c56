"""Hand-rolled SVG log-log plot for sweep reports.

No plotting dependency: axes, decade ticks, the measured points, the fitted
line and a theoretical guide line are emitted as a deterministic SVG string
so rerunning a sweep writes byte-identical output.
"""

import numpy as np

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 72, 24, 40, 56


def _decades(lo, hi):
    start = int(np.floor(lo))
    stop = int(np.ceil(hi))
    return list(range(start, stop + 1))


def _fmt(v):
    return f"{v:.2f}"


def sweep_svg(report):
    """Render a SweepReport as an SVG log-log plot with fit and guide."""
    pts = [(e, v) for e, v in zip(report.eps, np.asarray(report.E_total))
           if np.isfinite(v) and v > 0]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
    ]
    title = (f"relaxation gap vs eps (regime {report.regime}, "
             f"threshold {report.threshold:.3f})")
    parts.append(f'<text x="{_W // 2}" y="24" text-anchor="middle" '
                 f'font-family="monospace" font-size="14">{title}</text>')
    if len(pts) < 2:
        parts.append(f'<text x="{_W // 2}" y="{_H // 2}" text-anchor="middle" '
                     f'font-family="monospace" font-size="14">insufficient points</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    lx = np.log10([p[0] for p in pts])
    ly = np.log10([p[1] for p in pts])
    guide_slope = report.threshold + 0.05  # the theoretical exponent
    x_lo, x_hi = lx.min(), lx.max()
    y_candidates = list(ly)
    if np.isfinite(report.slope):
        y_candidates += [np.log10(report.constant) + report.slope * x
                         for x in (x_lo, x_hi)]
    y_lo, y_hi = min(y_candidates), max(y_candidates)
    pad_x = 0.15 * max(x_hi - x_lo, 0.5)
    pad_y = 0.15 * max(y_hi - y_lo, 0.5)
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    def sx(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(y):
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    # frame
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>')
    # decade ticks
    for d in _decades(x_lo, x_hi):
        if x_lo <= d <= x_hi:
            X = sx(d)
            parts.append(f'<line x1="{_fmt(X)}" y1="{_H - _MB}" x2="{_fmt(X)}" '
                         f'y2="{_H - _MB + 6}" stroke="black"/>')
            parts.append(f'<text x="{_fmt(X)}" y="{_H - _MB + 20}" '
                         f'text-anchor="middle" font-family="monospace" '
                         f'font-size="12">1e{d}</text>')
    for d in _decades(y_lo, y_hi):
        if y_lo <= d <= y_hi:
            Y = sy(d)
            parts.append(f'<line x1="{_ML - 6}" y1="{_fmt(Y)}" x2="{_ML}" '
                         f'y2="{_fmt(Y)}" stroke="black"/>')
            parts.append(f'<text x="{_ML - 10}" y="{_fmt(Y + 4)}" '
                         f'text-anchor="end" font-family="monospace" '
                         f'font-size="12">1e{d}</text>')
    parts.append(f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" '
                 f'font-family="monospace" font-size="13">eps</text>')
    parts.append(f'<text x="18" y="{_H // 2}" text-anchor="middle" '
                 f'font-family="monospace" font-size="13" '
                 f'transform="rotate(-90 18 {_H // 2})">E1 + E2</text>')

    # guide line with the theoretical slope, anchored at the first point
    gx = np.array([lx.min(), lx.max()])
    gy = ly[0] + guide_slope * (gx - lx[0])
    parts.append(f'<line x1="{_fmt(sx(gx[0]))}" y1="{_fmt(sy(gy[0]))}" '
                 f'x2="{_fmt(sx(gx[1]))}" y2="{_fmt(sy(gy[1]))}" '
                 f'stroke="gray" stroke-dasharray="3,3"/>')
    parts.append(f'<text x="{_fmt(sx(gx[1]) - 4)}" y="{_fmt(sy(gy[1]) - 6)}" '
                 f'text-anchor="end" font-family="monospace" font-size="12" '
                 f'fill="gray">guide slope {guide_slope:.3f}</text>')

    # fitted line
    if np.isfinite(report.slope):
        fy = np.log10(report.constant) + report.slope * gx
        parts.append(f'<line x1="{_fmt(sx(gx[0]))}" y1="{_fmt(sy(fy[0]))}" '
                     f'x2="{_fmt(sx(gx[1]))}" y2="{_fmt(sy(fy[1]))}" '
                     f'stroke="firebrick" stroke-dasharray="6,3"/>')
        parts.append(f'<text x="{_fmt(sx(gx[0]) + 4)}" y="{_fmt(sy(fy[0]) - 6)}" '
                     f'font-family="monospace" font-size="12" '
                     f'fill="firebrick">fit slope {report.slope:.3f}</text>')

    # measured points and polyline
    path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(lx, ly))
    parts.append(f'<polyline points="{path}" fill="none" stroke="steelblue"/>')
    for x, y in zip(lx, ly):
        parts.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3.5" '
                     f'fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
