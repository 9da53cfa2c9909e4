import torch

from veilface.client.context import ProtectionPipeline, VeilClientContext
from veilface.restorer.restorer import Restorer
from veilface.surrogate.loader import build_ensemble
from veilface.surrogate.model import SurrogateEnsemble, SurrogateModel
from veilface.utils.exceptions import MissingComponentError


class VeilBaseAPI:
    """
    The base class of every veilface API class.

    Attributes:
        context (VeilClientContext): Shared configuration, models and networks.

    Note:
        Not meant to be used directly; use the sub-APIs of a VeilClient.
    """

    context: VeilClientContext

    def __init__(self, context: VeilClientContext):
        self.context = context

    def _models(self) -> list[SurrogateModel]:
        if not self.context.models:
            raise MissingComponentError(
                "No face models loaded; set `ensemble_manifest` in the config"
            )
        return self.context.models

    def _ensemble(self) -> SurrogateEnsemble:
        return build_ensemble(self._models())

    def _target(self) -> torch.Tensor:
        if self.context.x_target is None:
            raise MissingComponentError(
                "No target image; set `target_image` in the config"
            )
        return self.context.x_target

    def _pipeline(self) -> ProtectionPipeline:
        if self.context.pipeline is None:
            raise MissingComponentError(
                "No trained pipeline loaded; load a checkpoint first"
            )
        return self.context.pipeline

    def _restorer(self) -> Restorer:
        restorer = self._pipeline().restorer
        if restorer is None:
            raise MissingComponentError("The loaded checkpoint holds no restorer")
        return restorer
