"""
CSV exports of grid functions, dense kernels and sparse transport plans
"""

import csv
import io
import logging
from pathlib import Path

import numpy as np

from .persistence import atomic_write, csv_text

logger = logging.getLogger(__name__)


def export_grid_function(path: str, nodes: np.ndarray, values: np.ndarray) -> Path:
    """node,value rows"""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.shape != values.shape:
        raise ValueError(f"nodes {nodes.shape} and values {values.shape} differ in shape")
    rows = ({'node': float(n), 'value': float(v)} for n, v in zip(nodes, values))
    return atomic_write(Path(path), csv_text(['node', 'value'], rows))


def export_matrix(path: str, matrix: np.ndarray) -> Path:
    """Dense matrix, one CSV row per matrix row"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    for row in np.asarray(matrix, dtype=float):
        writer.writerow([repr(float(v)) for v in row])
    out = atomic_write(Path(path), buffer.getvalue())
    logger.debug(f"Exported {np.shape(matrix)} matrix to {out}")
    return out


def export_plan(path: str, plan: np.ndarray, threshold: float = 0.0) -> Path:
    """Sparse i,j,mass triples of the cells carrying more than ``threshold``"""
    plan = np.asarray(plan, dtype=float)
    i, j = np.nonzero(plan > threshold)
    rows = ({'i': int(a), 'j': int(b), 'mass': float(plan[a, b])} for a, b in zip(i, j))
    return atomic_write(Path(path), csv_text(['i', 'j', 'mass'], rows))


def read_grid_function(path: str):
    """Inverse of export_grid_function"""
    with open(path, 'r', encoding='utf-8') as f:
        rows = list(csv.DictReader(f))
    return np.array([float(r['node']) for r in rows]), np.array([float(r['value']) for r in rows])
