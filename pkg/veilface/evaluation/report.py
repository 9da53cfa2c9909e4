import csv
import logging
from pathlib import Path
from typing import Sequence, Union

import torch

from veilface.evaluation.metrics import target_similarities
from veilface.evaluation.types import MetricsReport
from veilface.surrogate.model import SurrogateModel
from veilface.utils.exceptions import OverwriteRefusedError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CSV_COLUMNS = ["image_id", "model_id", "similarity", "decision"]


def _check_target(path: Path, overwrite: bool) -> None:
    if path.exists() and not overwrite:
        raise OverwriteRefusedError(f"{path} exists, pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)


def save_report(report: MetricsReport, path: PathLike, overwrite: bool = False) -> Path:
    path = Path(path)
    _check_target(path, overwrite)
    path.write_text(report.model_dump_json(indent=2))
    logger.info(f"wrote metrics report to {path}")
    return path


def load_report(path: PathLike) -> MetricsReport:
    return MetricsReport.model_validate_json(Path(path).read_text())


def similarity_rows(
    model: SurrogateModel,
    images: torch.Tensor,
    image_ids: Sequence[str],
    x_target: torch.Tensor,
    mode: str = "attack",
) -> list[dict]:
    """
    Per-image similarities and decisions for the CSV sidecar.

    Args:
        model (SurrogateModel): Calibrated model.

        images (torch.Tensor): Protected (mode "attack") or restored
            (mode "erasion") faces.

        image_ids (Sequence[str]): One id per image.

        x_target (torch.Tensor): Target face.

        mode (str): "attack" marks similarity > tau_attack as accepted;
            "erasion" marks similarity < tau_erasion as erased.

    Returns:
        list[dict]: Rows with the CSV columns.
    """
    if mode not in ("attack", "erasion"):
        raise ValueError(f"Unknown mode `{mode}`")
    sims = target_similarities(model, images, x_target).tolist()
    if len(sims) != len(image_ids):
        raise ValueError("One image id per image expected")
    rows = []
    for image_id, s in zip(image_ids, sims):
        if mode == "attack":
            decision = "accepted" if s > model.tau_attack else "rejected"
        else:
            decision = "erased" if s < model.tau_erasion else "not_erased"
        rows.append(
            {
                "image_id": image_id,
                "model_id": model.id,
                "similarity": s,
                "decision": decision,
            }
        )
    return rows


def write_similarity_csv(
    path: PathLike, rows: Sequence[dict], overwrite: bool = False
) -> Path:
    path = Path(path)
    _check_target(path, overwrite)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return path
