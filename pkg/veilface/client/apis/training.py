from pathlib import Path
from typing import Optional

from torch.utils.data import Dataset

from veilface.client.apis.base import VeilBaseAPI
from veilface.trainer.trainer import CurriculumTrainer
from veilface.trainer.types import TrainingStage


class TrainingAPI(VeilBaseAPI):
    """
    Runs the three-stage curriculum.
    """

    def trainer(self, dataset: Dataset, progress: bool = False) -> CurriculumTrainer:
        ensemble = self._ensemble() if self.context.models else None
        return CurriculumTrainer(
            self.context.config,
            dataset,
            ensemble=ensemble,
            x_target=self.context.x_target,
            progress=progress,
        )

    def train(
        self,
        dataset: Dataset,
        stage: Optional[int] = None,
        epochs: Optional[int] = None,
        resume: bool = True,
        overwrite: bool = False,
        progress: bool = False,
    ) -> Path:
        """
        Trains one stage, or all three in order when `stage` is None.

        Args:
            dataset (Dataset): Training images with attribute labels.

            stage (int, optional): 1, 2 or 3.

            epochs (int, optional): Overrides the configured epochs of `stage`.

            resume (bool): Continue from the latest epoch checkpoint.

            overwrite (bool): Allow replacing a finished stage checkpoint.

            progress (bool): Show progress bars.

        Returns:
            Path: The last stage checkpoint written.
        """
        trainer = self.trainer(dataset, progress)
        stages = [TrainingStage(stage)] if stage is not None else list(TrainingStage)
        path = None
        for s in stages:
            run = {
                TrainingStage.GENERATION: trainer.train_stage1,
                TrainingStage.ATTACK: trainer.train_stage2,
                TrainingStage.ERASION: trainer.train_stage3,
            }[s]
            path = run(epochs=epochs, resume=resume, overwrite=overwrite)
        return path
