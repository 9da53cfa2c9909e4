import csv
import math

import pytest

from veilface.evaluation.report import (
    CSV_COLUMNS,
    load_report,
    save_report,
    similarity_rows,
    write_similarity_csv,
)
from veilface.evaluation.types import MetricsReport, QualityMetrics, RateCell
from veilface.utils.exceptions import OverwriteRefusedError


def make_report() -> MetricsReport:
    return MetricsReport(
        n=4,
        rates={"toy-0": RateCell(asr=0.75, esr=1.0)},
        protected_quality=QualityMetrics(l1=0.1, mse=0.02, psnr=23.0),
        restored_quality=QualityMetrics(l1=0.0, mse=0.0, psnr=math.inf),
        robustness={"jpeg:50": {"toy-0": RateCell(asr=0.5, esr=0.75)}},
    )


def test_save_and_load(tmp_path):
    path = tmp_path / "out" / "report.json"
    report = make_report()
    save_report(report, path)
    loaded = load_report(path)
    assert loaded.restored_quality.psnr == math.inf
    assert report.max_abs_difference(loaded) == 0.0
    with pytest.raises(OverwriteRefusedError):
        save_report(report, path)
    save_report(report, path, overwrite=True)


def test_max_abs_difference():
    a = make_report()
    b = make_report()
    b.rates["toy-0"].asr = 0.5
    assert a.max_abs_difference(b) == pytest.approx(0.25)
    b.rates["toy-1"] = RateCell(asr=0.0)
    assert a.max_abs_difference(b) == math.inf


def test_empty_rows_rejected():
    with pytest.raises(ValueError):
        MetricsReport(n=1, robustness={"identity": {}})


def test_similarity_csv(tmp_path, models, x_cov, x_target):
    ids = [f"img{i}" for i in range(4)]
    rows = similarity_rows(models[0], x_cov, ids, x_target)
    for row in rows:
        expected = "accepted" if row["similarity"] > 0.5 else "rejected"
        assert row["decision"] == expected
    erased = similarity_rows(models[0], x_cov, ids, x_target, mode="erasion")
    assert {r["decision"] for r in erased} <= {"erased", "not_erased"}
    with pytest.raises(ValueError):
        similarity_rows(models[0], x_cov, ids[:2], x_target)
    with pytest.raises(ValueError):
        similarity_rows(models[0], x_cov, ids, x_target, mode="other")

    path = write_similarity_csv(tmp_path / "sims.csv", rows)
    with open(path) as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == CSV_COLUMNS
        assert [r["image_id"] for r in reader] == ids
    with pytest.raises(OverwriteRefusedError):
        write_similarity_csv(path, rows)
