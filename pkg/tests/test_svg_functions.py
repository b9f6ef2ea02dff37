import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from latent_muzero.custom_errors import EmptyPlotInputError, ShapeMismatchError
from latent_muzero.enums.TrajectorySource import TrajectorySource
from latent_muzero.svg_functions import (
    CURVE_PALETTE,
    SVG_NAMESPACE,
    CurveSeries,
    PlotSeries,
    PlotStyle,
    isometric_projection,
    render_learning_curves,
    render_plot,
    write_svg,
)


def _elements(document: str, tag: str) -> list[ET.Element]:
    return list(ET.fromstring(document).iter(f"{{{SVG_NAMESPACE}}}{tag}"))


def test_scatter_draws_one_circle_per_point():
    points = np.random.default_rng(seed=0).normal(size=(17, 3))
    document = render_plot(points=points, style=PlotStyle(title="CartPole muzero"))
    assert len(_elements(document, "circle")) == 17, "Every point must become one circle"
    assert "CartPole muzero" in [text.text for text in _elements(document, "text")], "The title must be drawn"
    group_ids = {group.get("id") for group in _elements(document, "g")}
    assert {"axes", "scatter", "legend"} <= group_ids, f"Missing layers, found {group_ids}"


def test_each_trajectory_is_one_coloured_polyline():
    rng = np.random.default_rng(seed=1)
    series = [
        PlotSeries(coordinates=rng.normal(size=(6, 2)), source=TrajectorySource.EMBEDDED_H, label="trajectory 0 (embedded_h)"),
        PlotSeries(coordinates=rng.normal(size=(6, 2)), source=TrajectorySource.UNROLLED_G, label="trajectory 0 (unrolled_g)"),
        PlotSeries(coordinates=rng.normal(size=(4, 2)), source=TrajectorySource.EMBEDDED_H),
    ]
    polylines = _elements(render_plot(trajectories=series), "polyline")
    assert len(polylines) == 3, f"Expected 3 polylines, got {len(polylines)}"
    assert [polyline.get("stroke") for polyline in polylines] == ["#1F77B4", "#2CA02C", "#1F77B4"]
    assert [len(polyline.get("points").split()) for polyline in polylines] == [6, 6, 4]
    titles = [polyline.find(f"{{{SVG_NAMESPACE}}}title") for polyline in polylines]
    assert titles[0].text == "trajectory 0 (embedded_h)" and titles[2] is None, "Only labelled polylines carry a title"


def test_render_errors():
    with pytest.raises(EmptyPlotInputError):
        render_plot()
    with pytest.raises(EmptyPlotInputError):
        render_plot(points=np.zeros((0, 3)))
    with pytest.raises(ShapeMismatchError):
        render_plot(points=np.zeros((5, 4)))
    with pytest.raises(ShapeMismatchError):
        render_plot(
            points=np.zeros((5, 2)),
            trajectories=[PlotSeries(coordinates=np.zeros((3, 3)), source=TrajectorySource.UNROLLED_G)],
        )


def test_fixed_scale_places_origin_at_plot_centre():
    document = render_plot(points=np.array([[0.0, 0.0], [1.0, 0.0]]), style=PlotStyle(pixels_per_unit=10.0))
    circles = _elements(document, "circle")
    assert [(circle.get("cx"), circle.get("cy")) for circle in circles] == [("265.000", "240.000"), ("275.000", "240.000")], (
        f"Circle centres are {[(circle.get('cx'), circle.get('cy')) for circle in circles]}"
    )


def test_isometric_projection_values():
    plane = isometric_projection(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]))
    half_root_three = math.sqrt(3.0) / 2
    expected = np.array([[half_root_three, 0.5], [-half_root_three, 0.5], [0.0, 1.0], [0.0, 2.0]])
    assert np.allclose(plane, expected, atol=1e-12), f"Isometric projection gave {plane}"


def test_write_svg_creates_parent_directories(tmp_path):
    document = render_plot(points=np.array([[0.0, 1.0, 2.0], [1.0, 0.0, -1.0]]))
    file_path = write_svg(document=document, file_path=tmp_path / "nested" / "plot.svg")
    assert file_path.exists()
    root = ET.parse(file_path).getroot()
    assert root.tag == f"{{{SVG_NAMESPACE}}}svg" and root.get("width") == "640" and root.get("height") == "480"


def test_fixed_scale_mapping_is_affine():
    points = np.array([[0.0, 0.0], [1.0, 2.0], [-0.5, 1.0]])
    style = PlotStyle(pixels_per_unit=20.0)

    def spans(document):
        circles = _elements(document, "circle")
        x = np.array([float(circle.get("cx")) for circle in circles])
        y = np.array([float(circle.get("cy")) for circle in circles])
        return np.ptp(x), np.ptp(y)

    single = spans(render_plot(points=points, style=style))
    double = spans(render_plot(points=2 * points, style=style))
    assert np.allclose(np.array(double), 2 * np.array(single), atol=1e-2), f"Spans {single} became {double}"


def test_learning_curves_fill_the_plot_area():
    curves = [
        CurveSeries(iterations=np.array([1, 3]), values=np.array([0.0, 10.0]), label="muzero L=3"),
        CurveSeries(iterations=np.array([1, 2, 3]), values=np.array([5.0, 5.0, 5.0]), label="alphazero L=3"),
        CurveSeries(iterations=np.array([]), values=np.array([]), label="not started"),
    ]
    document = render_learning_curves(curves=curves)
    polylines = _elements(document, "polyline")
    assert len(polylines) == 2, "Curves without points must be skipped"
    # Both axes are scaled independently: x spans 40..490 and y spans 440..40 with the default margins.
    assert polylines[0].get("points") == "40.000,440.000 490.000,40.000", f"Points are {polylines[0].get('points')}"
    assert [polyline.get("stroke") for polyline in polylines] == list(CURVE_PALETTE[:2])
    legend = [text.text for text in _elements(document, "text")]
    assert "muzero L=3" in legend and "alphazero L=3" in legend and "not started" not in legend
    assert {"axes", "ticks", "curves", "legend"} <= {group.get("id") for group in _elements(document, "g")}


def test_learning_curve_errors():
    with pytest.raises(EmptyPlotInputError):
        render_learning_curves(curves=[])
    with pytest.raises(ShapeMismatchError):
        render_learning_curves(curves=[CurveSeries(iterations=np.array([1, 2]), values=np.array([1.0]), label="broken")])
