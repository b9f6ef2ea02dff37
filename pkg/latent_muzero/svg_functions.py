"""Standalone SVG plots of projected latent states and of learning curves.

Coordinates with three columns are flattened by a fixed isometric orthographic projection before they
are mapped to the viewport; two-column coordinates are drawn directly.
"""

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from latent_muzero.custom_errors import EmptyPlotInputError, ShapeMismatchError
from latent_muzero.enums.TrajectorySource import TrajectorySource

SVG_NAMESPACE: str = "http://www.w3.org/2000/svg"
ISOMETRIC_ANGLE: float = math.pi / 6
AXIS_COLOR: str = "#333333"
CURVE_PALETTE: tuple[str, ...] = (
    "#1F77B4", "#FF7F0E", "#2CA02C", "#D62728", "#9467BD", "#8C564B", "#E377C2", "#7F7F7F", "#BCBD22", "#17BECF",
)


@dataclass
class PlotSeries:
    """One trajectory drawn as a polyline."""

    coordinates: NDArray[np.float64]
    source: TrajectorySource
    label: str = ""


@dataclass
class CurveSeries:
    """One learning curve: a metric over self-play iterations."""

    iterations: NDArray[np.float64]
    values: NDArray[np.float64]
    label: str
    color: Optional[str] = None


@dataclass
class PlotStyle:
    """Size and look of a plot.

    Attributes:
        width (int): Document width in pixels.
        height (int): Document height in pixels.
        margin (dict[str, int]): Space reserved around the plot area.
        title (str): Drawn centred above the plot area.
        pixels_per_unit (Optional[float]): Fixed scale with the data origin at the plot centre. When None
            the data bounds are fitted into the plot area, keeping the aspect ratio.
        stroke_width (float): Polyline width.
        point_radius (float): Scatter marker radius.
        scatter_color (str): Fill of the scatter markers.
        scatter_label (str): Legend entry of the scatter layer.
        axis_labels (tuple[str, str, str]): Names of the plotted coordinates.
    """

    width: int = 640
    height: int = 480
    margin: dict[str, int] = field(default_factory=lambda: {"top": 40, "right": 150, "bottom": 40, "left": 40})
    title: str = ""
    pixels_per_unit: Optional[float] = None
    stroke_width: float = 1.5
    point_radius: float = 2.5
    scatter_color: str = "#1F77B4"
    scatter_label: str = "latent states"
    axis_labels: tuple[str, str, str] = ("pc1", "pc2", "pc3")


def isometric_projection(coordinates: NDArray[np.float64]) -> NDArray[np.float64]:
    """Maps (x, y, z) to plane coordinates (u, v), with v pointing up."""
    x, y, z = coordinates[:, 0], coordinates[:, 1], coordinates[:, 2]
    u = (x - y) * math.cos(ISOMETRIC_ANGLE)
    v = (x + y) * math.sin(ISOMETRIC_ANGLE) + z
    return np.stack([u, v], axis=1)


def _to_plane(coordinates: NDArray[np.float64], dimension: int) -> NDArray[np.float64]:
    return isometric_projection(coordinates) if dimension == 3 else coordinates


@dataclass
class _Viewport:
    scale_x: float
    scale_y: float
    offset_x: float
    offset_y: float

    def map(self, plane: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.stack([self.offset_x + self.scale_x * plane[:, 0], self.offset_y - self.scale_y * plane[:, 1]], axis=1)


def _make_viewport(plane_points: NDArray[np.float64], style: PlotStyle, keep_aspect: bool = True) -> _Viewport:
    left = style.margin["left"]
    top = style.margin["top"]
    plot_width = style.width - left - style.margin["right"]
    plot_height = style.height - top - style.margin["bottom"]
    if style.pixels_per_unit is not None:
        return _Viewport(
            scale_x=style.pixels_per_unit, scale_y=style.pixels_per_unit,
            offset_x=left + plot_width / 2, offset_y=top + plot_height / 2,
        )

    low = plane_points.min(axis=0)
    high = plane_points.max(axis=0)
    flat = high - low < 1e-12
    if keep_aspect:
        span = np.maximum(high - low, 1e-12)
        scale = float(min(plot_width / span[0], plot_height / span[1]))
        if not np.isfinite(scale) or np.all(flat):
            scale = 1.0
        scale_x = scale_y = scale
    else:
        # A flat axis is drawn through the middle of the plot area.
        scale_x = 1.0 if flat[0] else plot_width / float(high[0] - low[0])
        scale_y = 1.0 if flat[1] else plot_height / float(high[1] - low[1])
    centre = (low + high) / 2
    return _Viewport(
        scale_x=scale_x,
        scale_y=scale_y,
        offset_x=left + plot_width / 2 - scale_x * float(centre[0]),
        offset_y=top + plot_height / 2 + scale_y * float(centre[1]),
    )


def _format_points(pixels: NDArray[np.float64]) -> str:
    return " ".join(f"{x:.3f},{y:.3f}" for x, y in pixels)


def _check_dimension(arrays: Sequence[NDArray[np.float64]]) -> int:
    dimensions = {array.shape[1] for array in arrays}
    if len(dimensions) != 1 or not dimensions <= {2, 3}:
        raise ShapeMismatchError(operation="render_plot", expected="2 or 3 columns", received=sorted(dimensions))
    return dimensions.pop()


def _draw_axes(
    parent: ET.Element, viewport: _Viewport, plane_points: NDArray[np.float64], dimension: int, style: PlotStyle
) -> None:
    axes = ET.SubElement(parent, "g", {"id": "axes", "stroke": AXIS_COLOR, "stroke-width": "1"})
    if dimension == 3:
        length = float(np.abs(plane_points).max()) if plane_points.size else 1.0
        length = length if length > 0 else 1.0
        origin = viewport.map(np.zeros((1, 2)))[0]
        unit_axes = isometric_projection(np.eye(3) * length)
        for label, end in zip(style.axis_labels, viewport.map(unit_axes)):
            ET.SubElement(axes, "line", {
                "x1": f"{origin[0]:.3f}", "y1": f"{origin[1]:.3f}", "x2": f"{end[0]:.3f}", "y2": f"{end[1]:.3f}",
            })
            text = ET.SubElement(axes, "text", {
                "x": f"{end[0]:.3f}", "y": f"{end[1]:.3f}", "font-size": "11", "fill": AXIS_COLOR, "stroke": "none",
            })
            text.text = label
        return

    left = style.margin["left"]
    top = style.margin["top"]
    right = style.width - style.margin["right"]
    bottom = style.height - style.margin["bottom"]
    ET.SubElement(axes, "line", {"x1": str(left), "y1": str(bottom), "x2": str(right), "y2": str(bottom)})
    ET.SubElement(axes, "line", {"x1": str(left), "y1": str(top), "x2": str(left), "y2": str(bottom)})
    for label, (x, y, anchor) in zip(
        style.axis_labels[:2], ((right, bottom + 28, "end"), (left - 8, top - 8, "start"))
    ):
        text = ET.SubElement(axes, "text", {
            "x": str(x), "y": str(y), "font-size": "11", "fill": AXIS_COLOR, "stroke": "none", "text-anchor": anchor,
        })
        text.text = label


def _draw_legend(parent: ET.Element, entries: list[tuple[str, str]], style: PlotStyle) -> None:
    legend = ET.SubElement(parent, "g", {"id": "legend"})
    legend_x = style.width - style.margin["right"] + 16
    for index, (label, color) in enumerate(entries):
        y = style.margin["top"] + 18 * index
        ET.SubElement(legend, "rect", {"x": str(legend_x), "y": str(y), "width": "12", "height": "12", "fill": color})
        text = ET.SubElement(legend, "text", {"x": str(legend_x + 18), "y": str(y + 10), "font-size": "11", "fill": AXIS_COLOR})
        text.text = label


def _new_document(style: PlotStyle) -> ET.Element:
    root = ET.Element("svg", {
        "xmlns": SVG_NAMESPACE,
        "width": str(style.width),
        "height": str(style.height),
        "viewBox": f"0 0 {style.width} {style.height}",
    })
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": str(style.width), "height": str(style.height), "fill": "white"})
    if style.title:
        title = ET.SubElement(root, "text", {
            "x": str(style.width / 2), "y": "22", "text-anchor": "middle", "font-size": "16", "font-weight": "bold",
        })
        title.text = style.title
    return root


def render_plot(
    trajectories: Sequence[PlotSeries] = (),
    points: Optional[NDArray[np.float64]] = None,
    style: Optional[PlotStyle] = None,
) -> str:
    """Renders a standalone SVG document.

    Each trajectory becomes exactly one polyline coloured by its source (embedded_h blue, unrolled_g
    green); `points` become a layer of circles. Axes and a legend are always drawn.

    Args:
        trajectories: Polylines to draw.
        points: Scatter coordinates, shape (n, 2) or (n, 3).
        style: Size, scale and labels; defaults to PlotStyle().

    Returns:
        str: The SVG document.

    Raises:
        EmptyPlotInputError: If there is neither a trajectory nor a point.
        ShapeMismatchError: If the inputs do not share one dimension of 2 or 3.
    """
    style = PlotStyle() if style is None else style
    scatter = np.zeros((0, 2)) if points is None else np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points is not None and scatter.size == 0:
        scatter = np.zeros((0, 2))
    series = [np.atleast_2d(np.asarray(trajectory.coordinates, dtype=np.float64)) for trajectory in trajectories]
    series = [coordinates for coordinates in series if coordinates.size > 0]
    if not series and len(scatter) == 0:
        raise EmptyPlotInputError()
    dimension = _check_dimension(arrays=series + ([scatter] if len(scatter) else []))

    plane_series = [_to_plane(coordinates, dimension) for coordinates in series]
    plane_scatter = _to_plane(scatter, dimension) if len(scatter) else np.zeros((0, 2))
    plane_points = np.concatenate(plane_series + [plane_scatter], axis=0)
    viewport = _make_viewport(plane_points=plane_points, style=style)

    root = _new_document(style=style)
    _draw_axes(parent=root, viewport=viewport, plane_points=plane_points, dimension=dimension, style=style)

    colors = TrajectorySource.get_plot_colors_dict()
    legend_entries: list[tuple[str, str]] = []
    if len(plane_scatter):
        layer = ET.SubElement(root, "g", {"id": "scatter", "fill": style.scatter_color, "fill-opacity": "0.6"})
        for x, y in viewport.map(plane_scatter):
            ET.SubElement(layer, "circle", {"cx": f"{x:.3f}", "cy": f"{y:.3f}", "r": str(style.point_radius)})
        legend_entries.append((style.scatter_label, style.scatter_color))

    if plane_series:
        layer = ET.SubElement(root, "g", {"id": "trajectories", "fill": "none", "stroke-width": str(style.stroke_width)})
        for trajectory, plane in zip((t for t in trajectories if np.size(t.coordinates) > 0), plane_series):
            color = colors[trajectory.source.value]
            polyline = ET.SubElement(layer, "polyline", {"points": _format_points(viewport.map(plane)), "stroke": color})
            if trajectory.label:
                ET.SubElement(polyline, "title").text = trajectory.label
            if (str(trajectory.source), color) not in legend_entries:
                legend_entries.append((str(trajectory.source), color))
    _draw_legend(parent=root, entries=legend_entries, style=style)
    return ET.tostring(root, encoding="unicode")


def _draw_ticks(
    parent: ET.Element, viewport: _Viewport, plane_points: NDArray[np.float64], style: PlotStyle, count: int = 5
) -> None:
    ticks = ET.SubElement(parent, "g", {"id": "ticks", "font-size": "10", "fill": AXIS_COLOR})
    low = plane_points.min(axis=0)
    high = plane_points.max(axis=0)
    bottom = style.height - style.margin["bottom"]
    left = style.margin["left"]
    for value in np.unique(np.round(np.linspace(low[0], high[0], count))):
        x = viewport.map(np.array([[value, 0.0]]))[0, 0]
        text = ET.SubElement(ticks, "text", {"x": f"{x:.3f}", "y": str(bottom + 14), "text-anchor": "middle"})
        text.text = f"{value:.0f}"
    for value in np.unique(np.linspace(low[1], high[1], count)):
        y = viewport.map(np.array([[0.0, value]]))[0, 1]
        text = ET.SubElement(ticks, "text", {"x": str(left - 4), "y": f"{y + 3:.3f}", "text-anchor": "end"})
        text.text = f"{value:.4g}"


def render_learning_curves(curves: Sequence[CurveSeries], style: Optional[PlotStyle] = None) -> str:
    """Renders learning curves as one labelled polyline per curve.

    Unlike `render_plot`, both axes are scaled independently to fill the plot area. Curves without an
    explicit color take the next palette entry; curves without points are skipped.

    Args:
        curves: The curves to draw, in legend order.
        style: Size and labels; defaults to axis labels ("iteration", "mean_return").

    Returns:
        str: The SVG document.

    Raises:
        EmptyPlotInputError: If no curve has a point.
        ShapeMismatchError: If a curve has different numbers of iterations and values.
    """
    style = PlotStyle(axis_labels=("iteration", "mean_return", "")) if style is None else style
    drawn: list[tuple[CurveSeries, NDArray[np.float64]]] = []
    for curve in curves:
        iterations = np.asarray(curve.iterations, dtype=np.float64).reshape(-1)
        values = np.asarray(curve.values, dtype=np.float64).reshape(-1)
        if len(iterations) != len(values):
            raise ShapeMismatchError(operation="render_learning_curves", expected=len(iterations), received=len(values))
        if len(iterations):
            drawn.append((curve, np.stack([iterations, values], axis=1)))
    if not drawn:
        raise EmptyPlotInputError(message="Nothing to plot: every learning curve is empty")

    plane_points = np.concatenate([plane for _, plane in drawn], axis=0)
    viewport = _make_viewport(plane_points=plane_points, style=style, keep_aspect=False)
    root = _new_document(style=style)
    _draw_axes(parent=root, viewport=viewport, plane_points=plane_points, dimension=2, style=style)
    _draw_ticks(parent=root, viewport=viewport, plane_points=plane_points, style=style)

    layer = ET.SubElement(root, "g", {"id": "curves", "fill": "none", "stroke-width": str(style.stroke_width)})
    legend_entries: list[tuple[str, str]] = []
    for index, (curve, plane) in enumerate(drawn):
        color = curve.color if curve.color is not None else CURVE_PALETTE[index % len(CURVE_PALETTE)]
        polyline = ET.SubElement(layer, "polyline", {"points": _format_points(viewport.map(plane)), "stroke": color})
        ET.SubElement(polyline, "title").text = curve.label
        legend_entries.append((curve.label, color))
    _draw_legend(parent=root, entries=legend_entries, style=style)
    return ET.tostring(root, encoding="unicode")


def write_svg(document: str, file_path: str | Path) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file=file_path, mode="w", encoding="utf-8") as file:
        file.write(document)
    return file_path
