"""Study tables and the console reports printed for them."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

STAT_COLUMNS = ("median_error", "p90_error")


@dataclass
class StudyTable:
    """One sweep axis: a row per sweep point plus run metadata (seeds, config hash)."""

    name: str
    frame: pd.DataFrame
    metadata: Dict = field(default_factory=dict)

    def ok_rows(self) -> pd.DataFrame:
        if "status" not in self.frame.columns:
            return self.frame
        return self.frame[self.frame["status"] == "ok"]


def count_inversions(values: Sequence[float], direction: str = "decreasing") -> int:
    """Number of adjacent pairs breaking the expected monotone trend.

    Args:
        values: Sequence in sweep order
        direction: 'decreasing' or 'increasing'

    Returns:
        Count of adjacent violations (ties are not violations)
    """
    if direction not in ("decreasing", "increasing"):
        raise ValueError(f"unknown direction {direction!r}")
    arr = np.asarray(values, dtype=float)
    steps = np.diff(arr)
    if direction == "decreasing":
        return int(np.sum(steps > 0))
    return int(np.sum(steps < 0))


class ReportGenerator:
    """Build study tables from row dicts and print their summaries."""

    def __init__(self, metadata: Optional[Dict] = None):
        """Initialize the report generator.

        Args:
            metadata: Run metadata attached to every table (seeds, config hash)
        """
        self.metadata = dict(metadata or {})

    def build_table(self, name: str, rows: List[Dict], sort_by: Optional[List[str]] = None) -> StudyTable:
        """Assemble rows into a StudyTable.

        Rows marked 'ok' must carry finite statistics.

        Args:
            name: Sweep axis name
            rows: One dict per sweep point
            sort_by: Columns giving the row order

        Returns:
            StudyTable with a fresh index
        """
        df = pd.DataFrame(rows)
        if sort_by:
            df = df.sort_values(sort_by, kind="mergesort").reset_index(drop=True)
        table = StudyTable(name, df, dict(self.metadata))
        ok = table.ok_rows()
        for col in STAT_COLUMNS:
            if col in ok.columns and not np.all(np.isfinite(ok[col].to_numpy(dtype=float))):
                raise ValueError(f"table {name}: non-finite {col} in a row marked ok")
        return table

    def trend_summary(self, table: StudyTable, column: str, group_by: str, direction: str) -> Dict:
        """Per-group inversion counts of a statistic along the sweep order."""
        ok = table.ok_rows()
        summary = {}
        for key, group in ok.groupby(group_by, sort=True):
            summary[key] = count_inversions(group[column].to_numpy(dtype=float), direction)
        return summary

    def print_text_report(self, table: StudyTable, columns: Optional[List[str]] = None, top_n: int = 40):
        """Print a study table to the console.

        Args:
            table: Table to display
            columns: Columns to show (all by default)
            top_n: Maximum number of rows
        """
        print(f"\n{'='*80}")
        print(f"STUDY: {table.name}")
        if "config_hash" in table.metadata:
            print(f"Config hash: {table.metadata['config_hash'][:16]}")
        print(f"Rows: {len(table.frame)}")
        print(f"{'='*80}\n")

        shown = table.frame[columns] if columns else table.frame
        with pd.option_context("display.max_columns", None, "display.width", 120):
            print(shown.head(top_n).to_string(index=False, float_format=lambda v: f"{v:.4e}"))

        failed = len(table.frame) - len(table.ok_rows())
        if failed:
            print(f"\n{failed} row(s) failed; see the status column")
        print(f"\n{'='*80}")
