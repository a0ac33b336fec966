"""Deterministic SVG chart rendering."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from latinbox.svgplot import Band, Series, curve_chart, render_line_chart, trajectory_chart

CURVE_ROWS = [
    {"p": "0.1", "phat": "0.05", "lo": "0.01", "hi": "0.12"},
    {"p": "0.3", "phat": "0.40", "lo": "0.30", "hi": "0.50"},
    {"p": "0.5", "phat": "0.90", "lo": "0.82", "hi": "0.95"},
]

TRAJ_ROWS = [
    {"x": "0.0", "y_meas": "1.0", "z_meas": "1.0", "y_pred": "1.0", "z_pred": "1.0"},
    {"x": "0.5", "y_meas": "0.70", "z_meas": "0.52", "y_pred": "0.7071", "z_pred": "0.5"},
    {"x": "1.0", "y_meas": "0.58", "z_meas": "0.33", "y_pred": "0.5774", "z_pred": "0.3333"},
]


def _parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


class TestCharts:
    def test_curve_chart_well_formed(self):
        svg = curve_chart(CURVE_ROWS)
        root = _parse(svg)
        assert root.tag.endswith("svg")
        body = ET.tostring(root, encoding="unicode")
        assert "polyline" in body
        assert "polygon" in body  # interval band
        assert "containment probability" in svg

    def test_trajectory_chart_well_formed(self):
        svg = trajectory_chart(TRAJ_ROWS)
        _parse(svg)
        # four series: measured and predicted, degree and codegree
        assert svg.count("<polyline") == 4
        assert "packing trajectory" in svg

    def test_deterministic(self):
        assert curve_chart(CURVE_ROWS) == curve_chart(CURVE_ROWS)
        assert trajectory_chart(TRAJ_ROWS) == trajectory_chart(TRAJ_ROWS)

    def test_empty_inputs_render(self):
        for svg in (curve_chart([]), trajectory_chart([])):
            _parse(svg)

    def test_render_line_chart_escapes_text(self):
        svg = render_line_chart(
            [Series("a<b&c", [0.0, 1.0], [0.0, 1.0], 0)],
            title="x<y>&",
            xlabel="t",
            ylabel="v",
        )
        _parse(svg)
        assert "a<b&c" not in svg and "a&lt;b&amp;c" in svg

    def test_degenerate_ranges(self):
        svg = render_line_chart(
            [Series("flat", [0.5, 0.5], [0.3, 0.3], 0)],
            title="flat",
            xlabel="x",
            ylabel="y",
        )
        _parse(svg)

    def test_band_only(self):
        svg = render_line_chart(
            [],
            bands=[Band([0.0, 1.0], [0.1, 0.2], [0.3, 0.4], 1)],
            title="band",
            xlabel="x",
            ylabel="y",
        )
        _parse(svg)
        assert "polygon" in svg
