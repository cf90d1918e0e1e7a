"""Report outputs."""

from service.report.report_writer import (
    CdfPoint,
    users_per_pair_cdf,
    write_cdf_csv,
    write_report_csvs,
    write_sweep_csv,
)

__all__ = [
    "CdfPoint",
    "users_per_pair_cdf",
    "write_cdf_csv",
    "write_report_csvs",
    "write_sweep_csv",
]
