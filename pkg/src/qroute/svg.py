"""Route plots as standalone SVG documents (one line per arc)."""
from __future__ import annotations

import xml.etree.ElementTree as ET

from .instance_io import Instance

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def render_routes_svg(routes: list[list[list[int]]], inst: Instance, size: int = 640) -> str:
    """Draw customers, the depot, and per-vehicle arcs.

    `routes` uses global node ids (0 and num_customers + 1 are depots), as
    stored in solution JSON documents.
    """
    coords = [inst.depot_coord, *inst.customer_coords, inst.depot_coord]
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    margin = 0.05 * span

    def sx(x):
        return (x - x0 + margin) / (span + 2 * margin) * size

    def sy(y):
        # flip: SVG y grows downward
        return size - (y - y0 + margin) / (span + 2 * margin) * size

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(size),
        height=str(size),
        viewBox=f"0 0 {size} {size}",
    )
    for v, route in enumerate(routes):
        color = PALETTE[v % len(PALETTE)]
        for arc in route:
            i, j = int(arc[0]), int(arc[1])
            if not (0 <= i < len(coords) and 0 <= j < len(coords)):
                continue
            ET.SubElement(
                svg,
                "line",
                x1=f"{sx(coords[i][0]):.2f}",
                y1=f"{sy(coords[i][1]):.2f}",
                x2=f"{sx(coords[j][0]):.2f}",
                y2=f"{sy(coords[j][1]):.2f}",
                stroke=color,
                attrib={"stroke-width": "1.5"},
            )
    for idx, (x, y) in enumerate(inst.customer_coords, start=1):
        ET.SubElement(
            svg,
            "circle",
            cx=f"{sx(x):.2f}",
            cy=f"{sy(y):.2f}",
            r="3",
            fill="#333333",
        )
    dx, dy = inst.depot_coord
    ET.SubElement(
        svg,
        "rect",
        x=f"{sx(dx) - 5:.2f}",
        y=f"{sy(dy) - 5:.2f}",
        width="10",
        height="10",
        fill="#000000",
    )
    return ET.tostring(svg, encoding="unicode")
