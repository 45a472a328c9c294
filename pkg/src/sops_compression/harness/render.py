"""SVG pictures of configurations.

Particles are unit-diameter circles at the standard embedding; every lattice
edge between two particles is drawn as a segment.
"""

from __future__ import annotations

from ..configuration import cells_of
from ..lattice import to_cartesian

SCALE = 20.0


def render_svg(sigma, title: str = "") -> str:
    cells = sorted(cells_of(sigma))
    pts = {c: to_cartesian(c) for c in cells}
    xs = [p[0] for p in pts.values()]
    ys = [p[1] for p in pts.values()]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    w = (x1 - x0) * SCALE
    h = (y1 - y0) * SCALE

    def sx(x):
        return (x - x0) * SCALE

    def sy(y):  # flip so that y grows upward
        return (y1 - y) * SCALE

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1f}" height="{h:.1f}" '
        f'viewBox="0 0 {w:.1f} {h:.1f}">'
    ]
    if title:
        out.append(f"<title>{title}</title>")
    out.append('<g stroke="#333" stroke-width="2">')
    cellset = set(cells)
    for q, r in cells:
        for dq, dr in ((1, 0), (0, 1), (-1, 1)):
            other = (q + dq, r + dr)
            if other in cellset:
                a, b = pts[(q, r)], pts[other]
                out.append(
                    f'<line x1="{sx(a[0]):.1f}" y1="{sy(a[1]):.1f}" x2="{sx(b[0]):.1f}" y2="{sy(b[1]):.1f}"/>'
                )
    out.append("</g>")
    out.append('<g fill="#2b6cb0" stroke="#1a365d">')
    for c in cells:
        x, y = pts[c]
        out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="{0.5 * SCALE * 0.9:.1f}"/>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"


def write_svg(path, sigma, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(render_svg(sigma, title))
