import pandas as pd
import pytest
from conftest import record

from service.aggregate import build_table
from service.detector import EvalReport
from service.detector.evaluation import BreakdownRow, ConfusionCounts, HistogramRow
from service.errors import ArtifactError, MissingInputError
from service.file import Artifact, ArtifactRepository
from service.report import users_per_pair_cdf, write_report_csvs
from service.report.report_writer import CDF_FILE, HISTOGRAM_FILE, PI_TYPE_FILE, USER_COUNT_FILE


def test_users_per_pair_cdf() -> None:
    table = build_table(
        [
            record("u1", "A", [("k", "1")]),
            record("u2", "A", [("k", "2")]),
            record("u1", "B", [("q", "1"), ("z", "2")]),
            record("u2", "B", [("q", "3")]),
        ],
    )

    points = users_per_pair_cdf(table)

    assert [(p.users, p.pairs) for p in points] == [(1, 1), (2, 2)]
    assert points[0].cumulative_fraction == pytest.approx(1 / 3)
    assert points[-1].cumulative_fraction == 1.0


def test_report_files_follow_the_inputs(tmp_path, table_t1) -> None:  # noqa: ANN001
    report = EvalReport(
        threshold=0.75,
        evaluated=3,
        coverage=2 / 3,
        confusion=ConfusionCounts(true_positive=1, false_positive=1, rejected=1),
        false_by_user_count=[BreakdownRow(group="2", accepted=2, false=1)],
        false_by_pi_type=[
            BreakdownRow(group="Device Identifier", accepted=1, false=0),
            BreakdownRow(group="neg", accepted=1, false=1),
        ],
        probability_histogram=[HistogramRow(bin_low=0.95, bin_high=1.0, correct=1, false=1)],
    )

    (tmp_path / "table_only").mkdir()
    only_table = write_report_csvs(tmp_path / "table_only", table=table_t1)
    written = write_report_csvs(tmp_path, table=table_t1, report=report)

    assert [path.name for path in only_table] == [CDF_FILE]
    assert [path.name for path in written] == [
        CDF_FILE,
        USER_COUNT_FILE,
        PI_TYPE_FILE,
        HISTOGRAM_FILE,
    ]
    frame = pd.read_csv(tmp_path / PI_TYPE_FILE)
    assert frame.to_dict(orient="records") == [
        {"group": "Device Identifier", "accepted": 1, "false": 0},
        {"group": "neg", "accepted": 1, "false": 1},
    ]


def test_artifact_repository_round_trip(tmp_path) -> None:  # noqa: ANN001
    repository = ArtifactRepository(tmp_path / "out")
    repository.create_container("runs")

    path = repository.upload_json("summary.json", {"b": 1, "a": [1, 2]}, container="runs")

    assert path == tmp_path / "out" / "runs" / "summary.json"
    assert repository.download_json("summary.json", container="runs") == {"b": 1, "a": [1, 2]}
    assert path.read_text(encoding="utf-8") == '{"a":[1,2],"b":1}'


def test_artifact_repository_replaces_existing_files(tmp_path) -> None:  # noqa: ANN001
    repository = ArtifactRepository(tmp_path)

    repository.upload_artifact(Artifact(name="a.txt", data=b"first"))
    path = repository.upload_artifact(Artifact(name="a.txt", data=b"second"))

    assert path == tmp_path / "a.txt"
    assert repository.download_artifact(Artifact(name="a.txt")).data == b"second"


def test_artifact_repository_errors(tmp_path) -> None:  # noqa: ANN001
    repository = ArtifactRepository(tmp_path)
    (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")

    with pytest.raises(MissingInputError):
        repository.download_json("absent.json")
    with pytest.raises(ArtifactError):
        repository.download_json("bad.json")
