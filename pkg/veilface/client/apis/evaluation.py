from pathlib import Path
from typing import Optional, Union

import torch
from torch.utils.data import Dataset

from veilface.client.apis.base import VeilBaseAPI
from veilface.evaluation.report import save_report
from veilface.evaluation.sweep import evaluate_protection
from veilface.evaluation.types import MetricsReport
from veilface.utils.exceptions import EmptySetError
from veilface.utils.seed import derive_seed, make_generator


class EvaluationAPI(VeilBaseAPI):
    """
    Scores a trained pipeline on the loaded face models.
    """

    def evaluate(
        self,
        x_cov: torch.Tensor,
        att_b: torch.Tensor,
        baselines: bool = True,
    ) -> MetricsReport:
        """
        Protects `x_cov`, restores the result and builds the full report.

        Args:
            x_cov (torch.Tensor): Clean faces.

            att_b (torch.Tensor): Target attributes, (n,) or (N, n).

            baselines (bool): Also score FGSM / PGD crafted on the white-box ensemble.

        Returns:
            MetricsReport: The report.

        Raises:
            EmptySetError: If `x_cov` is empty.
        """
        if x_cov.shape[0] == 0:
            raise EmptySetError("No images to evaluate")
        pipeline = self._pipeline()
        x_cov = x_cov.to(self.context.device)
        with torch.no_grad():
            x_adv = pipeline.protector.protect(x_cov, att_b)
        return evaluate_protection(
            self._models(),
            x_cov,
            x_adv,
            self._target(),
            config=self.context.config.evaluation,
            restore_fn=pipeline.restorer.restore if pipeline.restorer else None,
            attack_models=list(self._ensemble()) if baselines else None,
            seed=self.context.config.seed,
        )

    def evaluate_dataset(
        self,
        dataset: Dataset,
        out_report: Optional[Union[str, Path]] = None,
        baselines: bool = True,
        overwrite: bool = False,
    ) -> MetricsReport:
        """
        Evaluates every image of `dataset`, with att_b a seeded permutation of
        the dataset's own attribute vectors.
        """
        x_cov, att_b = self.dataset_inputs(dataset)
        report = self.evaluate(x_cov, att_b, baselines)
        if out_report is not None:
            save_report(report, out_report, overwrite)
        return report

    def dataset_inputs(self, dataset: Dataset) -> tuple[torch.Tensor, torch.Tensor]:
        """
        Stacks the images of `dataset` and pairs each with the attribute vector
        of another image, chosen by a permutation seeded from the config.

        Raises:
            EmptySetError: If `dataset` is empty.
        """
        if len(dataset) == 0:
            raise EmptySetError("The evaluation set is empty")
        x_cov = torch.stack([dataset[i][0] for i in range(len(dataset))])
        att_a = torch.stack([dataset[i][1] for i in range(len(dataset))])
        generator = make_generator(derive_seed(self.context.config.seed, "evaluate"))
        return x_cov, att_a[torch.randperm(att_a.shape[0], generator=generator)]
