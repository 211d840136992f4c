#!/usr/bin/env python3
"""Tests for the report writers and their readers"""

import os

import numpy as np
import pandas as pd
import pytest

from algorithms.analysis import histogram, occupancy_heatmap, synth_camera_stream
from algorithms.sampler import iter_sequences
from modules.exporters import (
    heatmap_csv_text, heatmap_svg_text, load_map_outline, read_heatmap_csv, read_histogram_csv,
    read_sequence_lines, sequence_json_line, write_heatmap_csv, write_heatmap_svg,
    write_histogram_csv, write_summary_xlsx, write_table_csv,
)
from modules.synthetic import synth_replay

EXAMPLE_OUTLINE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "example_outline.txt")


def _grid():
    pts = [(10.0, 10.0)] * 300 + [(70.0, 10.0)] * 2 + [(10.0, 140.0)] * 50
    return occupancy_heatmap(pts, cell_size=64, width=3, height=3, mask_threshold=0.05)


def test_heatmap_csv_layout():
    lines = heatmap_csv_text(_grid()).splitlines()
    assert lines[0] == "y\\x,0,1,2"
    assert lines[1] == "0,300,0,0"
    assert lines[3] == "2,50,0,0"


def test_heatmap_csv_readback(tmp_path):
    grid = _grid()
    path = write_heatmap_csv(grid, str(tmp_path / "heat.csv"))
    np.testing.assert_array_equal(read_heatmap_csv(path), grid.masked())
    raw = write_heatmap_csv(grid, str(tmp_path / "raw.csv"), masked=False)
    np.testing.assert_array_equal(read_heatmap_csv(raw), grid.counts)


def test_heatmap_svg(tmp_path):
    grid = _grid()
    outline = load_map_outline(EXAMPLE_OUTLINE)
    text = heatmap_svg_text(grid, outline)
    assert text.startswith('<svg xmlns="http://www.w3.org/2000/svg"')
    assert text.rstrip().endswith('</svg>')
    assert text.count('<polyline') == len(outline) == 2
    # darkest cell is the busiest one, drawn with y pointing up
    assert '<rect x="0" y="2" width="1" height="1" fill="rgb(0,0,0)"/>' in text
    path = write_heatmap_svg(grid, str(tmp_path / "heat.svg"))
    with open(path, encoding='utf-8') as f:
        assert f.read() == heatmap_svg_text(grid)


def test_map_outline(tmp_path):
    outline = load_map_outline(EXAMPLE_OUTLINE)
    assert outline[0].shape == (5, 2)
    assert outline[0][1].tolist() == [2048.0, 0.0]
    bad = tmp_path / "bad.txt"
    bad.write_text("0,0\n", encoding='utf-8')
    with pytest.raises(ValueError, match="two points"):
        load_map_outline(str(bad))
    bad.write_text("0,0 x,1\n", encoding='utf-8')
    with pytest.raises(ValueError, match="bad.txt:1"):
        load_map_outline(str(bad))


def test_histogram_csv_readback(tmp_path):
    hist = histogram(synth_camera_stream("rl_like", 5000, seed=1), 61, (-15, 15))
    restored = read_histogram_csv(write_histogram_csv(hist, str(tmp_path / "hist.csv")))
    np.testing.assert_array_equal(restored.counts, hist.counts)
    np.testing.assert_allclose(restored.edges, hist.edges, rtol=1e-15)


def test_histogram_csv_missing_columns(tmp_path):
    path = tmp_path / "hist.csv"
    path.write_text("lo,count\n0,1\n", encoding='utf-8')
    with pytest.raises(ValueError, match="missing histogram columns"):
        read_histogram_csv(str(path))


def test_sequence_lines_readback():
    replay = synth_replay("p", "m", 60, seed=2)
    samples = list(iter_sequences(replay, stride=5))
    restored = read_sequence_lines(sequence_json_line(s) + "\n" for s in samples)
    assert [s.frame_indices for s in restored] == [s.frame_indices for s in samples]
    assert [s.target for s in restored] == [s.target for s in samples]
    with pytest.raises(ValueError, match="line 2"):
        read_sequence_lines([sequence_json_line(samples[0]), "{}"])


def test_table_csv(tmp_path):
    frame = pd.DataFrame({'a': ["x", "y"], 'w1': [0.5, 1.25]})
    path = write_table_csv(frame, str(tmp_path / "t.csv"))
    pd.testing.assert_frame_equal(pd.read_csv(path), frame)


def test_summary_workbook(tmp_path):
    pytest.importorskip("openpyxl")
    sheets = {'players': pd.DataFrame({'player_id': ["a"], 'kd_ratio': [1.5]})}
    path = write_summary_xlsx(sheets, str(tmp_path / "summary.xlsx"))
    restored = pd.read_excel(path, sheet_name='players')
    pd.testing.assert_frame_equal(restored, sheets['players'])
