"""Class maps and stacked mosaic plots as deterministic SVG.

Layout functions return plain specs (geometry in data or unit coordinates);
:func:`render_svg` turns a spec into an SVG 1.1 document.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .data import ConfusionSummary, DiagnosticTable

# Paul Tol's muted scheme plus his dark brown
DEFAULT_PALETTE = (
    "#332288", "#88CCEE", "#44AA99", "#117733", "#999933",
    "#DDCC77", "#CC6677", "#882255", "#AA4499", "#661100",
)
OUTLIER_GREY = "#4D4D4D"
ZONE_GREY = "#E3E3E3"


@dataclass(frozen=True)
class PlotOptions:
    width: float = 640.0
    height: float = 480.0
    palette: tuple[str, ...] = DEFAULT_PALETTE
    show_outliers: bool = False
    x_max: float | None = None
    cutoff_line: float = 1.0
    annotations: dict[int, str] = field(default_factory=dict)
    marker_radius: float = 4.0
    column_gap: float = 6.0
    segment_gap: float = 1.0

    def color(self, label: int) -> str:
        return self.palette[(label - 1) % len(self.palette)]


@dataclass(frozen=True)
class MapPoint:
    index: int
    x: float
    y: float
    predicted: int
    border: bool
    clipped: bool
    note: str = ""


@dataclass(frozen=True)
class ClassMapSpec:
    class_id: int
    class_name: str
    class_names: tuple[str, ...]
    points: tuple[MapPoint, ...]
    x_range: tuple[float, float]
    y_range: tuple[float, float] = (0.0, 1.0)
    grey_zone: tuple[float, float] = (0.0, 0.5)
    cutoff_line: float = 1.0


@dataclass(frozen=True)
class MosaicRect:
    given: int
    predicted: int  # 0 marks the overall-outlier segment
    count: int
    x: float
    y: float
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class MosaicSpec:
    class_names: tuple[str, ...]
    column_widths: tuple[float, ...]
    rects: tuple[MosaicRect, ...]
    show_outliers: bool
    n: int


def layout_classmap(table: DiagnosticTable, g: int, options: PlotOptions = PlotOptions()) -> ClassMapSpec:
    """Points (farness to g, LD) for the objects whose given label is g."""
    members = np.flatnonzero(table.given == g)
    if members.size == 0:
        raise ValueError(f"class {g} has no objects")
    fx = table.farness[members, g - 1]
    x_max = options.x_max if options.x_max is not None else max(1.2, 1.05 * float(fx.max()))
    points = tuple(
        MapPoint(
            index=int(i),
            x=float(min(f, x_max)),
            y=float(table.ld[i]),
            predicted=int(table.predicted[i]),
            border=bool(table.is_outlier[i]),
            clipped=bool(f > x_max),
            note=options.annotations.get(int(i), ""),
        )
        for i, f in zip(members, fx)
    )
    return ClassMapSpec(g, table.class_names[g - 1], table.class_names, points,
                        (0.0, float(x_max)), cutoff_line=options.cutoff_line)


def layout_mosaic(confusion: ConfusionSummary, show_outliers: bool = False) -> MosaicSpec:
    """Unit-square mosaic: column widths n_g / n, stacked own class first.

    Within a column the remaining predicted classes follow in their original
    order; with ``show_outliers`` the overall outliers leave their predicted
    segment and form a top segment of their own.
    """
    counts = np.asarray(confusion.counts, dtype=int)
    G = counts.shape[0]
    sizes = counts.sum(axis=1)
    n = int(sizes.sum())
    widths = sizes / n
    rects = []
    x = 0.0
    for a in range(G):
        col = counts[a].copy()
        if show_outliers:
            col -= confusion.outlier_cells[a]
        order = [a] + [b for b in range(G) if b != a]
        y = 0.0
        segments = [(b + 1, int(col[b])) for b in order]
        if show_outliers:
            segments.append((0, int(confusion.outlier_cells[a].sum())))
        for pred, c in segments:
            if c == 0:
                continue
            h = c / sizes[a]
            rects.append(MosaicRect(a + 1, pred, c, x, y, float(widths[a]), float(h)))
            y += h
        x += float(widths[a])
    return MosaicSpec(tuple(confusion.class_names), tuple(float(w) for w in widths),
                      tuple(rects), show_outliers, n)


def _num(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _spec_hash(spec) -> str:
    payload = json.dumps(asdict(spec), sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** np.floor(np.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= raw:
            return float(m * mag)
    return float(10 * mag)


class _Svg:
    def __init__(self, width: float, height: float, kind: str, digest: str):
        meta = json.dumps({"generator": "classmap", "kind": kind, "spec_sha256": digest}, sort_keys=True)
        self.lines = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f"<!-- {meta} -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(width)}" '
            f'height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}" '
            'font-family="Helvetica, Arial, sans-serif">',
        ]

    def el(self, tag: str, text: str | None = None, **attrs) -> None:
        parts = []
        for key, value in attrs.items():
            if value is None:
                continue
            name = key.rstrip("_").replace("_", "-")
            if isinstance(value, float):
                value = _num(value)
            parts.append(f"{name}={quoteattr(str(value))}")
        head = f"<{tag} {' '.join(parts)}"
        self.lines.append(f"{head}/>" if text is None else f"{head}>{escape(text)}</{tag}>")

    def raw(self, line: str) -> None:
        self.lines.append(line)

    def close(self) -> str:
        self.lines.append("</svg>")
        return "\n".join(self.lines) + "\n"


def _render_classmap(spec: ClassMapSpec, options: PlotOptions) -> str:
    W, H = float(options.width), float(options.height)
    left, right, top, bottom = 64.0, 120.0, 40.0, 52.0
    pw, ph = W - left - right, H - top - bottom
    x0, x1 = spec.x_range
    y0, y1 = spec.y_range

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    svg = _Svg(W, H, "classmap", _spec_hash(spec))
    svg.el("rect", x=0.0, y=0.0, width=W, height=H, fill="#FFFFFF")
    svg.el("rect", class_="grey-zone", x=px(x0), y=py(spec.grey_zone[1]), width=pw,
           height=py(spec.grey_zone[0]) - py(spec.grey_zone[1]), fill=ZONE_GREY)
    svg.el("rect", x=left, y=top, width=pw, height=ph, fill="none", stroke="#000000", stroke_width=1.0)
    for t in np.arange(0.0, 1.0 + 1e-9, 0.25):
        svg.el("line", x1=left - 4, y1=py(t), x2=left, y2=py(t), stroke="#000000")
        svg.el("text", _num(t)[:4], x=left - 8, y=py(t) + 4, font_size=11.0, text_anchor="end")
    step = _nice_step(x1 - x0)
    for t in np.arange(x0, x1 + 1e-9, step):
        svg.el("line", x1=px(t), y1=top + ph, x2=px(t), y2=top + ph + 4, stroke="#000000")
        svg.el("text", f"{t:g}", x=px(t), y=top + ph + 18, font_size=11.0, text_anchor="middle")
    if x0 <= spec.cutoff_line <= x1:
        svg.el("line", class_="cutoff", x1=px(spec.cutoff_line), y1=top, x2=px(spec.cutoff_line),
               y2=top + ph, stroke="#000000", stroke_dasharray="6,4", stroke_width=1.0)
    svg.el("text", f"Class map of {spec.class_name}", x=left + pw / 2, y=top - 14,
           font_size=14.0, text_anchor="middle")
    svg.el("text", "farness from given class", x=left + pw / 2, y=H - 12, font_size=12.0,
           text_anchor="middle")
    svg.el("text", "label dissimilarity", x=16.0, y=top + ph / 2, font_size=12.0,
           text_anchor="middle", transform=f"rotate(-90 16.000000 {_num(top + ph / 2)})")
    r = options.marker_radius
    for p in spec.points:
        cx, cy = px(p.x), py(p.y)
        color = options.color(p.predicted)
        stroke = "#000000" if p.border else None
        sw = 1.5 if p.border else None
        if p.clipped:
            pts = f"{_num(cx - r)},{_num(cy - r)} {_num(cx + r)},{_num(cy)} {_num(cx - r)},{_num(cy + r)}"
            svg.el("polygon", class_="clipped", points=pts, fill=color, stroke=stroke, stroke_width=sw,
                   data_index=str(p.index))
        else:
            svg.el("circle", cx=cx, cy=cy, r=r, fill=color, stroke=stroke, stroke_width=sw,
                   data_index=str(p.index))
        if p.note:
            svg.el("text", p.note, x=cx + r + 2, y=cy - r, font_size=11.0)
    present = sorted({p.predicted for p in spec.points})
    for k, label in enumerate(present):
        ly = top + 10 + 18 * k
        svg.el("circle", cx=left + pw + 18, cy=ly, r=r, fill=options.color(label))
        svg.el("text", spec.class_names[label - 1], x=left + pw + 28, y=ly + 4, font_size=11.0)
    return svg.close()


def _render_mosaic(spec: MosaicSpec, options: PlotOptions) -> str:
    W, H = float(options.width), float(options.height)
    left, right, top, bottom = 56.0, 130.0, 40.0, 52.0
    pw, ph = W - left - right, H - top - bottom
    svg = _Svg(W, H, "mosaic", _spec_hash(spec))
    svg.el("rect", x=0.0, y=0.0, width=W, height=H, fill="#FFFFFF")
    cg, sg = options.column_gap, options.segment_gap
    for rect in spec.rects:
        x = left + rect.x * pw + cg / 2
        w = max(rect.width * pw - cg, 0.5)
        y = top + (1.0 - rect.y - rect.height) * ph + sg / 2
        h = max(rect.height * ph - sg, 0.5)
        fill = OUTLIER_GREY if rect.predicted == 0 else options.color(rect.predicted)
        svg.el("rect", x=x, y=y, width=w, height=h, fill=fill,
               data_given=str(rect.given), data_predicted=str(rect.predicted), data_count=str(rect.count))
    x = 0.0
    for a, width in enumerate(spec.column_widths):
        svg.el("text", spec.class_names[a], x=left + (x + width / 2) * pw, y=top + ph + 18,
               font_size=11.0, text_anchor="middle")
        x += width
    svg.el("text", "Stacked mosaic plot", x=left + pw / 2, y=top - 14, font_size=14.0, text_anchor="middle")
    svg.el("text", "given class", x=left + pw / 2, y=H - 12, font_size=12.0, text_anchor="middle")
    svg.el("text", "predicted class", x=20.0, y=top + ph / 2, font_size=12.0, text_anchor="middle",
           transform=f"rotate(-90 20.000000 {_num(top + ph / 2)})")
    legend = [(options.color(g), name) for g, name in enumerate(spec.class_names, start=1)]
    if spec.show_outliers:
        legend.append((OUTLIER_GREY, "overall outlier"))
    for k, (color, name) in enumerate(legend):
        ly = top + 6 + 18 * k
        svg.el("rect", x=left + pw + 12, y=ly - 6, width=12.0, height=12.0, fill=color)
        svg.el("text", name, x=left + pw + 30, y=ly + 4, font_size=11.0)
    return svg.close()


def render_svg(spec, options: PlotOptions = PlotOptions()) -> str:
    if isinstance(spec, ClassMapSpec):
        return _render_classmap(spec, options)
    if isinstance(spec, MosaicSpec):
        return _render_mosaic(spec, options)
    raise TypeError(f"cannot render {type(spec).__name__}")
