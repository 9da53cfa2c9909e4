import logging
from typing import Optional

import torch
from torch.utils.data import Dataset

from veilface.client.apis.base import VeilBaseAPI
from veilface.surrogate.calibrate import calibrate_threshold, make_verification_pairs
from veilface.surrogate.loader import save_manifest
from veilface.surrogate.train import dataset_labels
from veilface.surrogate.types import CalibrationResult
from veilface.utils.exceptions import InsufficientDataError

logger = logging.getLogger(__name__)


def _pair_tensors(images: torch.Tensor, pairs: list[tuple[int, int]]):
    if not pairs:
        return images[:0], images[:0]
    index = torch.tensor(pairs, dtype=torch.long)
    return images[index[:, 0]], images[index[:, 1]]


class SurrogateAPI(VeilBaseAPI):
    """
    Threshold calibration of the loaded face models.
    """

    def calibrate(
        self,
        dataset: Dataset,
        far_attack: Optional[float] = None,
        far_erasion: Optional[float] = None,
        save: bool = True,
    ) -> dict[str, tuple[CalibrationResult, CalibrationResult]]:
        """
        Calibrates tau_attack and tau_erasion of every loaded model on the
        verification pairs of `dataset`, and writes them back to the manifest.

        Args:
            dataset (Dataset): Yields (image, attributes, identity) tuples.

            far_attack (float, optional): Overrides `evaluation.far_attack`.

            far_erasion (float, optional): Overrides `evaluation.far_erasion`.

            save (bool): Update the manifest file.

        Returns:
            dict: model id -> (attack result, erasion result).

        Raises:
            InsufficientDataError: Below `evaluation.min_impostor_pairs` impostor pairs.
        """
        cfg = self.context.config.evaluation
        far_attack = far_attack if far_attack is not None else cfg.far_attack
        far_erasion = far_erasion if far_erasion is not None else cfg.far_erasion
        labels = dataset_labels(dataset)
        genuine, impostor = make_verification_pairs(labels)
        if len(impostor) < cfg.min_impostor_pairs:
            raise InsufficientDataError(
                f"Calibration needs at least {cfg.min_impostor_pairs} impostor pairs, "
                f"got {len(impostor)}"
            )
        images = torch.stack([dataset[i][0] for i in range(len(dataset))])
        genuine_pairs = _pair_tensors(images, genuine)
        impostor_pairs = _pair_tensors(images, impostor)

        results = {}
        for model in self._models():
            attack = calibrate_threshold(
                model, genuine_pairs, impostor_pairs, far_attack, target="attack"
            )
            erasion = calibrate_threshold(
                model, genuine_pairs, impostor_pairs, far_erasion, target="erasion"
            )
            results[model.id] = (attack, erasion)
            if self.context.manifest is not None:
                for entry in self.context.manifest.models:
                    if entry.id == model.id:
                        entry.tau_attack = attack.tau
                        entry.tau_erasion = erasion.tau
        if save and self.context.manifest_path is not None:
            save_manifest(self.context.manifest, self.context.manifest_path)
            logger.info(f"updated thresholds in {self.context.manifest_path}")
        return results
