"""
Report writers and readers: heatmap grids (CSV, SVG), histograms and
tables (CSV), sequence dumps (JSON lines) and the optional XLSX workbook.
"""

import csv
import io
import json
import logging
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from algorithms.analysis import Histogram, OccupancyGrid
from algorithms.sampler import SequenceSample

logger = logging.getLogger(__name__)

SVG_CELL_PX = 8


# ---------- HEATMAP CSV ----------
def heatmap_csv_text(grid: OccupancyGrid, masked: bool = True) -> str:
    """One row per y cell, one column per x cell"""
    counts = grid.masked() if masked else grid.counts
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(['y\\x'] + list(range(grid.width)))
    for iy in range(grid.height):
        writer.writerow([iy] + [int(c) for c in counts[:, iy]])
    return output.getvalue()


def write_heatmap_csv(grid: OccupancyGrid, path: str, masked: bool = True) -> str:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(heatmap_csv_text(grid, masked))
    return path


def read_heatmap_csv(path: str) -> np.ndarray:
    """Counts array indexed [ix, iy]"""
    with open(path, encoding='utf-8', newline='') as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ValueError(f"{path}: empty heatmap file")
    width = len(rows[0]) - 1
    grid = np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64).reshape(-1, width)
    return grid.T


# ---------- HEATMAP SVG ----------
def load_map_outline(path: str) -> List[np.ndarray]:
    """
    Wall polylines, one per line as space-separated "x,y" points.
    Blank lines and lines starting with '#' are ignored.
    """
    polylines = []
    with open(path, encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            try:
                points = [tuple(float(v) for v in token.split(',')) for token in line.split()]
                arr = np.array(points, dtype=np.float64).reshape(-1, 2)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: expected space-separated x,y points")
            if len(arr) < 2:
                raise ValueError(f"{path}:{line_no}: a polyline needs at least two points")
            polylines.append(arr)
    return polylines


def heatmap_svg_text(grid: OccupancyGrid, outline: Optional[List[np.ndarray]] = None,
                     masked: bool = True) -> str:
    """Grayscale cells (darker = more visits) with y pointing up, plus wall overlay"""
    counts = grid.masked() if masked else grid.counts
    peak = counts.max() if counts.size else 0
    w, h = grid.width, grid.height
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * SVG_CELL_PX}" height="{h * SVG_CELL_PX}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    if peak > 0:
        for ix, iy in zip(*np.nonzero(counts)):
            shade = int(round(255 * (1.0 - counts[ix, iy] / peak)))
            parts.append(
                f'<rect x="{ix}" y="{h - 1 - iy}" width="1" height="1" '
                f'fill="rgb({shade},{shade},{shade})"/>'
            )
    for line in outline or []:
        gx = (line[:, 0] - grid.origin[0]) / grid.cell_size
        gy = h - (line[:, 1] - grid.origin[1]) / grid.cell_size
        points = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(gx, gy))
        parts.append(f'<polyline points="{points}" fill="none" stroke="red" stroke-width="0.15"/>')
    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def write_heatmap_svg(grid: OccupancyGrid, path: str, outline: Optional[List[np.ndarray]] = None,
                      masked: bool = True) -> str:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(heatmap_svg_text(grid, outline, masked))
    return path


# ---------- HISTOGRAMS / TABLES ----------
def histogram_csv_text(hist: Histogram) -> str:
    return hist.to_frame().to_csv(index=False, lineterminator='\n')


def write_histogram_csv(hist: Histogram, path: str) -> str:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(histogram_csv_text(hist))
    return path


def read_histogram_csv(path: str) -> Histogram:
    frame = pd.read_csv(path)
    missing = {'bin_lo', 'bin_hi', 'count'} - set(frame.columns)
    if missing:
        raise ValueError(f"{path}: missing histogram columns {sorted(missing)}")
    edges = np.append(frame['bin_lo'].to_numpy(dtype=np.float64), frame['bin_hi'].iloc[-1])
    return Histogram(edges=edges, counts=frame['count'].to_numpy(dtype=np.int64))


def write_table_csv(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False, lineterminator='\n')
    return path


def write_summary_xlsx(sheets: Dict[str, pd.DataFrame], path: str) -> Optional[str]:
    """Workbook with one sheet per table; skipped when openpyxl is unavailable"""
    try:
        import openpyxl  # noqa: F401
    except ImportError:
        logger.warning(f"openpyxl not installed, skipping {path}")
        return None
    with pd.ExcelWriter(path, engine='openpyxl') as writer:
        for name, frame in sheets.items():
            frame.to_excel(writer, sheet_name=name[:31], index=False)
    return path


# ---------- SEQUENCE DUMPS ----------
def sequence_json_line(sample: SequenceSample) -> str:
    return json.dumps(sample.to_dict(), sort_keys=True)


def read_sequence_lines(lines: Iterable[str]) -> List[SequenceSample]:
    samples = []
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            samples.append(SequenceSample.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ValueError(f"line {line_no}: malformed sequence record ({e})")
    return samples
