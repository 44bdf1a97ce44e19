"""CSV writers/readers for grids, tables and telemetry. Floats are written with repr()
so a parse gives back the exact binary value."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..progress.measures import TournamentGrid


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def normalized(cells: np.ndarray) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant grid maps to all zeros."""
    lo, hi = float(cells.min()), float(cells.max())
    if hi == lo:
        return np.zeros_like(cells)
    return (cells - lo) / (hi - lo)


def export_grid_csv(grid: TournamentGrid, path, normalize: bool = False):
    cells = normalized(grid.cells) if normalize else grid.cells
    header = ["predator_gen\\prey_gen"] + [str(g) for g in grid.prey_generations]
    rows = [[str(g)] + [fmt(float(v)) for v in row] for g, row in zip(grid.predator_generations, cells)]
    write_rows(path, header, rows)


def read_grid_csv(path, replication: int = 0) -> TournamentGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    prey_gens = [int(v) for v in rows[0][1:]]
    pred_gens = [int(r[0]) for r in rows[1:]]
    cells = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(len(pred_gens), len(prey_gens))
    return TournamentGrid(pred_gens, prey_gens, cells, replication)


def truncate_rows(path, rows: int):
    """Keep the header and the first ``rows`` data lines of a CSV file."""
    path = Path(path)
    if not path.exists():
        return
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:rows + 1]))
