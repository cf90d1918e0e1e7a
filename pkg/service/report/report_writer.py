"""CSV reports over pair tables and evaluation results."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from service.aggregate.pair_table import PairTable
from service.detector.evaluation import EvalReport, SweepPoint

logger = logging.getLogger(__name__)

CDF_FILE = "users_per_pair_cdf.csv"
USER_COUNT_FILE = "false_by_user_count.csv"
PI_TYPE_FILE = "false_by_pi_type.csv"
HISTOGRAM_FILE = "probability_histogram.csv"
SWEEP_FILE = "threshold_sweep.csv"


class CdfPoint(BaseModel):
    """Share of pairs used by at most `users` users."""

    users: int
    pairs: int
    cumulative_fraction: float


def users_per_pair_cdf(table: PairTable) -> list[CdfPoint]:
    """Return the empirical CDF of the number of users per pair."""
    counts = np.array([len(stats.users()) for stats in table.pairs.values()], dtype=int)
    if counts.size == 0:
        return []
    users, pairs = np.unique(counts, return_counts=True)
    cumulative = np.cumsum(pairs) / counts.size
    return [
        CdfPoint(users=int(u), pairs=int(p), cumulative_fraction=float(c))
        for u, p, c in zip(users, pairs, cumulative, strict=True)
    ]


def _write(rows: list[BaseModel], columns: list[str], path: Path) -> None:
    pd.DataFrame([row.model_dump() for row in rows], columns=columns).to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
    )


def write_cdf_csv(points: list[CdfPoint], path: Path) -> None:
    """Write CDF points with columns users, pairs, cumulative_fraction."""
    _write(points, ["users", "pairs", "cumulative_fraction"], path)


def write_sweep_csv(points: list[SweepPoint], path: Path) -> None:
    """Write threshold sweep points with columns threshold, coverage, precision, recall."""
    _write(points, ["threshold", "coverage", "precision", "recall"], path)


def write_report_csvs(
    output_dir: Path,
    table: PairTable | None = None,
    report: EvalReport | None = None,
) -> list[Path]:
    """Write every report the inputs allow and return the written paths.

    Args:
        output_dir (Path): Directory receiving the CSV files.
        table (PairTable | None): Source of the users-per-pair CDF.
        report (EvalReport | None): Source of the breakdowns and the histogram.

    Returns:
        list[Path]: Paths of the files written.

    """
    written: list[Path] = []
    if table is not None:
        path = output_dir / CDF_FILE
        write_cdf_csv(users_per_pair_cdf(table), path)
        written.append(path)
    if report is not None:
        breakdown_columns = ["group", "accepted", "false"]
        for rows, name in (
            (report.false_by_user_count, USER_COUNT_FILE),
            (report.false_by_pi_type, PI_TYPE_FILE),
        ):
            _write(rows, breakdown_columns, output_dir / name)
            written.append(output_dir / name)
        _write(
            report.probability_histogram,
            ["bin_low", "bin_high", "correct", "false"],
            output_dir / HISTOGRAM_FILE,
        )
        written.append(output_dir / HISTOGRAM_FILE)
    logger.info("✓ Wrote %d report files to %s", len(written), output_dir)
    return written
