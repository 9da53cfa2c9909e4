import pytest
from pydantic import ValidationError

from veilface.cli import (
    EXIT_DATA,
    EXIT_DEPENDENCY,
    EXIT_OK,
    EXIT_USAGE,
    exit_code_for,
    main,
)
from veilface.data.image_io import save_image
from veilface.evaluation.report import load_report
from veilface.trainer.types import ExperimentConfig
from veilface.utils.exceptions import (
    CheckpointIntegrityError,
    DatasetError,
    EmptySetError,
    OverwriteRefusedError,
    StageDependencyError,
    VeilException,
)


def test_exit_codes():
    try:
        ExperimentConfig(beta=2.0)
    except ValidationError as e:
        assert exit_code_for(e) == EXIT_USAGE
    assert exit_code_for(OverwriteRefusedError()) == EXIT_USAGE
    assert exit_code_for(DatasetError()) == EXIT_DATA
    assert exit_code_for(EmptySetError()) == EXIT_DATA
    assert exit_code_for(StageDependencyError()) == EXIT_DEPENDENCY
    assert exit_code_for(CheckpointIntegrityError()) == EXIT_DEPENDENCY
    assert exit_code_for(VeilException()) == EXIT_DEPENDENCY
    assert exit_code_for(FileNotFoundError()) == EXIT_DEPENDENCY
    assert exit_code_for(RuntimeError()) == EXIT_USAGE


def test_usage_errors(workspace):
    assert main([]) == EXIT_USAGE
    assert main(["train", "--bogus"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK
    bad = workspace.parent / "bad.cfg"
    bad.write_text("beta = 3\n")
    assert main(["train", "--config", str(bad), "--synthetic"]) == EXIT_USAGE


def test_ingest_without_images(tmp_path):
    (tmp_path / "images").mkdir()
    (tmp_path / "attrs.csv").write_text("filename,smile\n")
    args = [
        "ingest",
        "--images",
        str(tmp_path / "images"),
        "--attributes",
        str(tmp_path / "attrs.csv"),
        "--out",
        str(tmp_path / "index.json"),
    ]
    assert main(args) == EXIT_DATA


def test_missing_dependencies(workspace, tmp_path):
    config = ["--config", str(workspace), "--synthetic"]
    assert main(["train", *config, "--stage", "2"]) == EXIT_DEPENDENCY
    evaluate = [
        "evaluate",
        *config,
        "--checkpoint",
        str(tmp_path / "missing.pt"),
        "--out-report",
        str(tmp_path / "report.json"),
    ]
    assert main(evaluate) == EXIT_DEPENDENCY
    assert main(["train", "--config", str(workspace)]) == EXIT_DEPENDENCY


def test_end_to_end(workspace, tmp_path, x_cov):
    config = ["--config", str(workspace)]
    checkpoint = str(tmp_path / "checkpoints" / "stage3.pt")
    assert main(["train", *config, "--synthetic"]) == EXIT_OK
    assert main(["train", *config, "--synthetic", "--stage", "1"]) == EXIT_USAGE

    images = [
        str(save_image(x, tmp_path / "in" / f"f{i}.png")) for i, x in enumerate(x_cov)
    ]
    protect = ["protect", *config, "--checkpoint", checkpoint, "--images", *images]
    out = ["--out-dir", str(tmp_path / "protected")]
    assert main([*protect, "--att-b", "110", *out]) == EXIT_OK
    assert main([*protect, "--att-b", "110", *out]) == EXIT_USAGE
    assert main([*protect, "--att-b", "flip:smile", *out]) == EXIT_DATA
    assert main([*protect, "--att-b", "1", *out]) == EXIT_DATA

    protected = [str(tmp_path / "protected" / f"f{i}.png") for i in range(4)]
    erase = ["erase", *config, "--checkpoint", checkpoint, "--images", *protected]
    assert main([*erase, "--out-dir", str(tmp_path / "restored")]) == EXIT_OK
    assert (tmp_path / "restored" / "f0.png").exists()

    report = tmp_path / "report.json"
    evaluate = [
        "evaluate",
        *config,
        "--synthetic",
        "--checkpoint",
        checkpoint,
        "--out-report",
        str(report),
        "--csv",
        str(tmp_path / "sims.csv"),
        "--no-baselines",
    ]
    assert main(evaluate) == EXIT_OK
    assert load_report(report).baselines == {}
    assert (tmp_path / "sims.csv").read_text().startswith("image_id,model_id")
    assert main(evaluate) == EXIT_USAGE


@pytest.mark.parametrize("level", ["debug", "WARNING"])
def test_log_level_is_accepted(workspace, tmp_path, level):
    args = ["--log-level", level, "train", "--config", str(workspace), "--stage", "3"]
    assert main([*args, "--synthetic"]) == EXIT_DEPENDENCY
