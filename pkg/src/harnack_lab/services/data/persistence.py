"""
Report persistence: reports.json, summary.csv and the plot-data CSVs
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from ...models.results import VerificationReport

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['name', 'verdict', 'lhs', 'rhs', 'slack', 'tolerance']
SLACK_COLUMNS = ['name', 't', 'x', 'y', 'f', 'slack', 'tolerance']
GALERKIN_COLUMNS = ['name', 'level', 'D', 'stderr', 'tail']
FELLER_COLUMNS = ['name', 'distance', 'actual_gap', 'gap_lower', 'lower_excess', 'modulus', 'eps_star']


def atomic_write(path: Path, text: str) -> Path:
    """Write through a temporary file in the same directory and rename it into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except Exception as e:
        logger.error(f"Failed to write {path}: {e}")
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def csv_text(columns: Sequence[str], rows: Iterable[Dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction='ignore', lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def _point(value):
    if isinstance(value, list) and len(value) == 1:
        return value[0]
    return value


class ReportStore:
    """Writes and reads the result files of one suite run"""

    def __init__(self, out_dir: str):
        """Initialize the store and its directory"""
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _sorted(reports: Sequence[VerificationReport]) -> List[VerificationReport]:
        return sorted(reports, key=lambda r: r.name)

    def save_reports(self, reports: Sequence[VerificationReport]) -> Path:
        """reports.json: one object per verification, sorted by name"""
        payload = [r.to_dict() for r in self._sorted(reports)]
        path = atomic_write(self.out_dir / 'reports.json', json.dumps(payload, indent=2, sort_keys=True) + '\n')
        logger.info(f"Saved {len(payload)} reports to {path}")
        return path

    def load_reports(self) -> List[VerificationReport]:
        """Read reports.json back"""
        path = self.out_dir / 'reports.json'
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except Exception as e:
            logger.error(f"Failed to load reports from {path}: {e}")
            raise
        return [VerificationReport.from_dict(item) for item in data]

    def save_summary(self, reports: Sequence[VerificationReport]) -> Path:
        rows = [{k: r.to_dict()[k] for k in SUMMARY_COLUMNS} for r in self._sorted(reports)]
        return atomic_write(self.out_dir / 'summary.csv', csv_text(SUMMARY_COLUMNS, rows))

    @staticmethod
    def slack_rows(reports: Sequence[VerificationReport]) -> List[Dict]:
        rows = []
        for r in reports:
            meta = r.metadata
            if 'harnack_term' in meta and 't' in meta:
                rows.append({'name': r.name, 't': meta['t'], 'x': _point(meta.get('x')), 'y': _point(meta.get('y')),
                             'f': meta.get('f', {}).get('kind', ''), 'slack': r.slack, 'tolerance': r.tolerance})
        return rows

    @staticmethod
    def galerkin_rows(reports: Sequence[VerificationReport]) -> List[Dict]:
        return [{'name': r.name, **row} for r in reports for row in r.metadata.get('distances', [])]

    @staticmethod
    def feller_rows(reports: Sequence[VerificationReport]) -> List[Dict]:
        return [{'name': r.name, **row} for r in reports
                for row in r.metadata.get('modulus', [])]

    def save_plot_data(self, reports: Sequence[VerificationReport]) -> List[Path]:
        """slack_vs_t.csv, galerkin_D.csv and feller_modulus.csv, each only when it has rows"""
        ordered = self._sorted(reports)
        written = []
        for filename, columns, rows in (
            ('slack_vs_t.csv', SLACK_COLUMNS, self.slack_rows(ordered)),
            ('galerkin_D.csv', GALERKIN_COLUMNS, self.galerkin_rows(ordered)),
            ('feller_modulus.csv', FELLER_COLUMNS, self.feller_rows(ordered)),
        ):
            if rows:
                written.append(atomic_write(self.out_dir / filename, csv_text(columns, rows)))
        return written

    def write_all(self, reports: Sequence[VerificationReport]) -> List[Path]:
        """Every result file of a run"""
        paths = [self.save_reports(reports), self.save_summary(reports)]
        paths.extend(self.save_plot_data(reports))
        return paths
