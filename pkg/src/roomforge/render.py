"""Overhead SVG plans of layouts."""

from __future__ import annotations

import hashlib
import math
from xml.sax.saxutils import escape

from .geometry import opening_segment
from .scene import Category, Layout, ModelCatalog

MARGIN = 20.0
LEGEND_ROW = 16.0
CATEGORY_COLORS = {
    Category.FURNITURE: "#c8a27a",
    Category.WALL_OBJECT: "#7a9cc8",
    Category.CEILING_OBJECT: "#e6d36e",
    Category.SMALL_OBJECT: "#8fc87a",
}
DRAW_ORDER = (Category.FURNITURE, Category.SMALL_OBJECT, Category.WALL_OBJECT, Category.CEILING_OBJECT)


def _num(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def class_color(category: Category, cls: str) -> str:
    """Category hue, nudged in lightness by a stable hash of the class name."""
    base = CATEGORY_COLORS.get(category, "#aaaaaa")
    shift = int(hashlib.sha1(cls.encode()).hexdigest()[:2], 16) % 41 - 20
    rgb = [min(255, max(0, int(base[i:i + 2], 16) + shift)) for i in (1, 3, 5)]
    return "#" + "".join(f"{c:02x}" for c in rgb)


def render_svg(layout: Layout, catalog: ModelCatalog, scale: float = 50.0) -> str:
    """SVG text for ``layout`` at ``scale`` pixels per meter.

    Every instance becomes one ``rect`` centered on the origin and moved by a
    ``translate(...) rotate(...)`` transform; doors are drawn as swing arcs
    and windows as double lines.
    """
    if scale <= 0:
        raise ValueError("scale must be > 0")
    x0, z0, x1, z1 = layout.bbox()

    def px(x: float) -> float:
        return MARGIN + (x - x0) * scale

    def pz(z: float) -> float:
        return MARGIN + (z - z0) * scale

    width = (x1 - x0) * scale + 2 * MARGIN
    used = sorted({catalog.category_of(i.model_id) for i in layout.instances}, key=DRAW_ORDER.index)
    legend_h = LEGEND_ROW * (len(used) + 1)
    height = (z1 - z0) * scale + 2 * MARGIN + legend_h
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}">',
        f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>',
    ]
    pts = " ".join(f"{_num(px(x))},{_num(pz(z))}" for x, z in layout.boundary)
    out.append(f'<polygon class="boundary" points="{pts}" fill="#f4f1ea" stroke="#333333" stroke-width="3"/>')

    for op in layout.openings:
        p, q, (nx, nz) = opening_segment(layout.boundary, op.wall, op.offset, op.width)
        seg = f'x1="{_num(px(p[0]))}" y1="{_num(pz(p[1]))}" x2="{_num(px(q[0]))}" y2="{_num(pz(q[1]))}"'
        if op.kind == "door":
            out.append(f'<line class="door" {seg} stroke="#f4f1ea" stroke-width="4"/>')
            r = op.width * scale
            ex, ez = px(p[0] + nx * op.width), pz(p[1] + nz * op.width)
            out.append(
                f'<path class="door-swing" d="M {_num(px(q[0]))} {_num(pz(q[1]))} '
                f'A {_num(r)} {_num(r)} 0 0 {1 if _sweep(p, q, nx, nz) else 0} {_num(ex)} {_num(ez)} '
                f'L {_num(px(p[0]))} {_num(pz(p[1]))}" fill="none" stroke="#8a5a2b" stroke-width="1"/>'
            )
        else:
            out.append(f'<line class="window" {seg} stroke="#4a90d9" stroke-width="5"/>')
            out.append(f'<line class="window" {seg} stroke="#ffffff" stroke-width="1.5"/>')

    order = sorted(range(len(layout.instances)),
                   key=lambda k: (DRAW_ORDER.index(catalog.category_of(layout.instances[k].model_id)), k))
    for k in order:
        inst = layout.instances[k]
        rec = catalog[inst.model_id]
        cat = rec.category
        w, h = rec.depth * scale, rec.width * scale
        fill = class_color(cat, rec.cls)
        opacity = ' fill-opacity="0.5"' if cat == Category.CEILING_OBJECT else ""
        out.append(
            f'<rect class="instance" data-model="{escape(inst.model_id)}" '
            f'x="{_num(-w / 2)}" y="{_num(-h / 2)}" width="{_num(w)}" height="{_num(h)}" '
            f'transform="translate({_num(px(inst.x))} {_num(pz(inst.z))}) rotate({_num(math.degrees(inst.yaw))})" '
            f'fill="{fill}"{opacity} stroke="#333333" stroke-width="0.75"/>'
        )

    ly = (z1 - z0) * scale + 2 * MARGIN
    out.append(f'<text x="{_num(MARGIN)}" y="{_num(ly + 11)}" font-family="sans-serif" font-size="11">'
               f'{escape(layout.room_type.value)}</text>')
    for n, cat in enumerate(used, start=1):
        y = ly + n * LEGEND_ROW
        out.append(f'<rect class="legend" x="{_num(MARGIN)}" y="{_num(y)}" width="10" height="10" '
                   f'fill="{CATEGORY_COLORS[cat]}" stroke="#333333" stroke-width="0.5"/>')
        out.append(f'<text x="{_num(MARGIN + 16)}" y="{_num(y + 9)}" font-family="sans-serif" font-size="11">'
                   f'{escape(cat.value)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _sweep(p, q, nx: float, nz: float) -> bool:
    # arc from the free jamb into the room; SVG's y axis matches z
    tx, tz = q[0] - p[0], q[1] - p[1]
    return tx * nz - tz * nx < 0
