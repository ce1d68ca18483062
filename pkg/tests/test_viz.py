"""SVG rendering and lossless CSV export of analysis artifacts."""

import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from distdyn import (
    DegenerateSurface,
    DensityCurve,
    DensitySurface,
    EmptyPlot,
    Grid,
    GridMismatch,
    NTPCurve,
    PlotStyle,
    StochasticKernel,
    TransitionPairs,
    export_csv,
    render_contour,
    render_curves,
    render_surface,
)

from conftest import gaussian


def density(grid, mu=1.0, sd=0.3):
    return DensityCurve.from_values(grid, gaussian(grid.points, mu, sd))


def small_kernel(grid, sd=0.15):
    rows = np.stack([gaussian(grid.points, 0.3 + 0.7 * x, sd) for x in grid.points])
    return StochasticKernel.from_rows(grid, grid, rows)


def parse_svg(text: str) -> ET.Element:
    return ET.fromstring(text)


class TestRenderCurves:
    def test_deterministic(self):
        g = Grid.uniform(0.0, 2.0, 64)
        curves = [("a", density(g, 0.8)), ("b", density(g, 1.2))]
        assert render_curves(curves) == render_curves(curves)

    def test_well_formed_xml(self):
        g = Grid.uniform(0.0, 2.0, 64)
        root = parse_svg(render_curves([("f", density(g))]))
        assert root.tag.endswith("svg")

    def test_accepts_bare_curve(self):
        g = Grid.uniform(0.0, 2.0, 64)
        text = render_curves(density(g))
        assert "<path" in text

    def test_legend_lists_every_label(self):
        g = Grid.uniform(0.0, 2.0, 64)
        text = render_curves([("first", density(g, 0.8)), ("second", density(g, 1.2))])
        assert ">first<" in text
        assert ">second<" in text

    def test_series_alternate_solid_and_dashed(self):
        g = Grid.uniform(0.0, 2.0, 64)
        text = render_curves([("a", density(g, 0.8)), ("b", density(g, 1.2))])
        paths = [ln for ln in text.splitlines() if "<path" in ln and "stroke-dasharray" not in ln]
        dashed = [ln for ln in text.splitlines() if "<path" in ln and "stroke-dasharray" in ln]
        assert len(paths) >= 1
        assert len(dashed) >= 1

    def test_ntp_curve_draws_zero_line(self):
        g = Grid.uniform(0.0, 2.0, 64)
        values = np.clip(1.0 - g.points, -1.0, 1.0)
        ntp = NTPCurve(grid=g, values=values, supported=np.ones(64, dtype=bool))
        text = render_curves([("ntp", ntp)])
        assert 'class="zero-line"' in text or "zero" in text

    def test_density_only_plot_has_no_zero_line(self):
        g = Grid.uniform(0.0, 2.0, 64)
        with_zero = render_curves(
            [("n", NTPCurve(grid=g, values=np.zeros(64), supported=np.ones(64, dtype=bool)))]
        )
        without = render_curves([("d", density(g))])
        def zero_lines(t):
            return t.count("zero")
        assert zero_lines(with_zero) > zero_lines(without)

    def test_nan_gap_splits_path(self):
        g = Grid.uniform(0.0, 2.0, 64)
        values = np.full(64, 0.25)
        values[30:34] = np.nan
        ntp = NTPCurve(grid=g, values=values, supported=np.isfinite(values))
        text = render_curves([("gap", ntp)])
        data = [
            ln for ln in text.splitlines()
            if "<path" in ln and "stroke-dasharray" not in ln and 'd="' in ln
        ]
        series = max(data, key=len)
        assert series.count("M") == 2

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyPlot):
            render_curves([])

    def test_mixed_grids_rejected(self):
        a = Grid.uniform(0.0, 2.0, 64)
        b = Grid.uniform(0.0, 2.0, 65)
        with pytest.raises(GridMismatch):
            render_curves([("a", density(a)), ("b", density(b))])

    def test_axis_labels_present(self):
        g = Grid.uniform(0.0, 2.0, 64)
        text = render_curves([("d", density(g))], x_label="relative income", y_label="density")
        assert "relative income" in text
        assert "density" in text


class TestRenderContour:
    def test_deterministic(self):
        g = Grid.uniform(0.0, 2.0, 48)
        kern = small_kernel(g)
        assert render_contour(kern) == render_contour(kern)

    def test_well_formed_xml(self):
        g = Grid.uniform(0.0, 2.0, 48)
        parse_svg(render_contour(small_kernel(g)))

    def test_constant_surface_rejected(self):
        g = Grid.uniform(0.0, 2.0, 32)
        with pytest.raises(DegenerateSurface):
            render_contour((g.points, g.points, np.ones((32, 32))))

    def test_default_level_count(self):
        g = Grid.uniform(0.0, 2.0, 48)
        text = render_contour(small_kernel(g))
        level_paths = [ln for ln in text.splitlines() if 'class="level"' in ln]
        assert 1 <= len(level_paths) <= 9

    def test_diagonal_reference_line(self):
        g = Grid.uniform(0.0, 2.0, 48)
        text = render_contour(small_kernel(g))
        assert "diagonal" in text

    def test_accepts_raw_triple(self):
        x = np.linspace(0.0, 1.0, 12)
        y = np.linspace(0.0, 1.0, 10)
        v = np.add.outer(np.sin(3 * x), np.cos(3 * y)) + 2.0
        text = render_contour((x, y, v))
        assert "<svg" in text

    def test_rejects_tiny_axes(self):
        with pytest.raises(ValueError):
            render_contour((np.array([0.0]), np.array([0.0, 1.0]), np.ones((1, 2))))

    def test_symmetric_input_symmetric_output(self):
        # a surface symmetric under (x, y) swap has a symmetric contour set:
        # rendering the transpose with swapped labels gives identical paths
        g = Grid.uniform(0.0, 2.0, 40)
        v = np.add.outer(gaussian(g.points, 1.0, 0.4), gaussian(g.points, 1.0, 0.4))
        a = render_contour((g.points, g.points, v))
        b = render_contour((g.points, g.points, v.T))
        assert a == b

    def test_custom_levels_respected(self):
        g = Grid.uniform(0.0, 2.0, 48)
        kern = small_kernel(g)
        one = render_contour(kern, style=PlotStyle(levels=1))
        nine = render_contour(kern, style=PlotStyle(levels=9))
        def n_levels(t):
            return len([ln for ln in t.splitlines() if 'class="level"' in ln])
        assert n_levels(one) == 1
        assert n_levels(one) < n_levels(nine)


class TestRenderSurface:
    def test_deterministic(self):
        g = Grid.uniform(0.0, 2.0, 40)
        kern = small_kernel(g)
        assert render_surface(kern) == render_surface(kern)

    def test_well_formed_xml(self):
        g = Grid.uniform(0.0, 2.0, 40)
        parse_svg(render_surface(small_kernel(g)))

    def test_two_by_two_renders_single_cell(self):
        x = np.array([0.0, 1.0])
        y = np.array([0.0, 1.0])
        v = np.array([[0.0, 0.5], [0.5, 1.0]])
        text = render_surface((x, y, v))
        cells = [ln for ln in text.splitlines() if 'class="cell"' in ln]
        assert len(cells) == 1

    def test_mesh_thinning_caps_cell_count(self):
        g = Grid.uniform(0.0, 2.0, 200)
        kern = small_kernel(g)
        text = render_surface(kern, style=PlotStyle(mesh_limit=16))
        cells = [ln for ln in text.splitlines() if 'class="cell"' in ln]
        assert len(cells) <= 16 * 16

    def test_peak_cell_darkest(self):
        # one sharp central bump: the unique darkest fill must be used by
        # exactly one cell (the one under the peak)
        g = Grid.uniform(0.0, 2.0, 24)
        v = np.outer(gaussian(g.points, 1.0, 0.18), gaussian(g.points, 1.0, 0.18))
        text = render_surface((g.points, g.points, v))
        fills = [
            ln.split('fill="')[1].split('"')[0]
            for ln in text.splitlines()
            if 'class="cell"' in ln
        ]
        import collections
        darkest = min(fills, key=lambda c: int(c[1:3], 16) + int(c[3:5], 16) + int(c[5:7], 16))
        assert collections.Counter(fills)[darkest] == 1

    def test_constant_surface_rejected(self):
        g = Grid.uniform(0.0, 2.0, 24)
        with pytest.raises(DegenerateSurface):
            render_surface((g.points, g.points, np.full((24, 24), 2.0)))


class TestPlotStyle:
    def test_rejects_tiny_canvas(self):
        with pytest.raises(ValueError):
            PlotStyle(width=32)

    def test_rejects_unknown_ramp(self):
        with pytest.raises(ValueError):
            PlotStyle(ramp="viridis")

    def test_rejects_zero_levels(self):
        with pytest.raises(ValueError):
            PlotStyle(levels=0)

    def test_rejects_margin_wider_than_canvas(self):
        with pytest.raises(ValueError):
            PlotStyle(width=100, height=100, margin=60)


class TestExportCsv:
    def test_density_curve_round_trip(self):
        g = Grid.uniform(0.0, 2.0, 64)
        curve = density(g, 0.9, 0.21)
        raw = export_csv(curve).decode()
        lines = raw.strip().split("\n")
        assert lines[0] == "x,density"
        assert len(lines) == 65
        xs, vs = zip(*(map(float, ln.split(",")) for ln in lines[1:]))
        assert np.array_equal(np.array(xs), g.points)
        assert np.array_equal(np.array(vs), curve.values)

    def test_ntp_curve_with_nan(self):
        g = Grid.uniform(0.0, 2.0, 64)
        values = np.full(64, 0.5)
        values[:5] = np.nan
        ntp = NTPCurve(grid=g, values=values, supported=np.isfinite(values))
        raw = export_csv(ntp).decode()
        lines = raw.strip().split("\n")
        assert lines[0] == "x,ntp"
        assert lines[1].endswith("nan")
        back = float(lines[1].split(",")[1])
        assert math.isnan(back)

    def test_kernel_matrix_layout(self):
        g = Grid.uniform(0.0, 2.0, 32)
        kern = small_kernel(g)
        raw = export_csv(kern).decode()
        lines = raw.strip().split("\n")
        assert lines[0].startswith("x\\y,")
        assert len(lines) == 33
        assert len(lines[0].split(",")) == 33
        row3 = np.array([float(c) for c in lines[3].split(",")[1:]])
        assert np.array_equal(row3, kern.rows[2])

    def test_surface_matrix_round_trip(self):
        g = Grid.uniform(0.0, 2.0, 32)
        v = np.outer(gaussian(g.points, 1.0, 0.3), gaussian(g.points, 1.1, 0.4))
        surf = DensitySurface.from_values(g, g, v)
        raw = export_csv(surf).decode()
        lines = raw.strip().split("\n")
        got = np.array([[float(c) for c in ln.split(",")[1:]] for ln in lines[1:]])
        assert np.array_equal(got, surf.values)

    def test_pairs_export(self):
        pairs = TransitionPairs(
            x=np.array([0.5, 1.5, 2.5]), y=np.array([0.6, 1.4, 2.7]), tau=1
        )
        raw = export_csv(pairs).decode()
        lines = raw.strip().split("\n")
        assert lines[0] == "x,y"
        assert lines[2] == "1.5,1.3999999999999999"

    def test_labeled_curve_collection(self):
        g = Grid.uniform(0.0, 2.0, 64)
        raw = export_csv([("urban 1999", density(g, 0.8)), ("urban 2013", density(g, 1.2))])
        lines = raw.decode().strip().split("\n")
        assert lines[0] == "x,urban 1999,urban 2013"
        assert len(lines[1].split(",")) == 3

    def test_lf_endings(self):
        g = Grid.uniform(0.0, 2.0, 64)
        raw = export_csv(density(g))
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_empty_collection_rejected(self):
        with pytest.raises(EmptyPlot):
            export_csv([])

    def test_mismatched_collection_rejected(self):
        a = Grid.uniform(0.0, 2.0, 64)
        b = Grid.uniform(0.0, 2.0, 65)
        with pytest.raises(GridMismatch):
            export_csv([("a", density(a)), ("b", density(b))])
