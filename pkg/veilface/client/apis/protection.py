import csv
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import torch

from veilface.client.apis.base import VeilBaseAPI
from veilface.client.context import ProtectionPipeline
from veilface.data.image_io import load_image, save_image
from veilface.generator.networks import Generator
from veilface.perturbation.fusion import SemanticProtector, init_perturbation_encoder
from veilface.restorer.restorer import Restorer
from veilface.trainer.checkpoint import load_checkpoint
from veilface.trainer.types import ExperimentConfig, TrainingStage
from veilface.utils.exceptions import (
    InvalidAttributeError,
    OverwriteRefusedError,
    StageDependencyError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLIP_PREFIX = "flip:"
SIDECAR = "protect.csv"


def resolve_att_b(
    spec: str,
    attribute_names: Sequence[str],
    att_a: Optional[Sequence[int]] = None,
) -> torch.Tensor:
    """
    Turns an att_b selector into a bit vector.

    Args:
        spec (str): An explicit bit string ("0110...") or "flip:<attr_name>".

        attribute_names (Sequence[str]): Attribute names, in bit order.

        att_a (Sequence[int], optional): Source attributes; required for "flip:".

    Returns:
        torch.Tensor: (n,) float bits.

    Raises:
        InvalidAttributeError: For a malformed selector or an unknown name.
    """
    n = len(attribute_names)
    if spec.startswith(FLIP_PREFIX):
        name = spec[len(FLIP_PREFIX) :]
        if name not in attribute_names:
            raise InvalidAttributeError(f"Unknown attribute `{name}`")
        if att_a is None:
            raise InvalidAttributeError(f"`{spec}` needs the source attributes")
        bits = [int(b) for b in att_a]
        i = list(attribute_names).index(name)
        bits[i] = 1 - bits[i]
    else:
        if len(spec) != n or any(c not in "01" for c in spec):
            raise InvalidAttributeError(
                f"Expected {n} bits or flip:<name>, got `{spec}`"
            )
        bits = [int(c) for c in spec]
    return torch.tensor(bits, dtype=torch.float32)


def load_pipeline(
    path: PathLike, device: Union[str, torch.device] = "cpu"
) -> ProtectionPipeline:
    """
    Rebuilds the protection networks from a stage-2 or stage-3 checkpoint.

    Raises:
        StageDependencyError: If the checkpoint predates stage 2.
    """
    manifest = load_checkpoint(path)
    components = manifest.components
    if manifest.stage < TrainingStage.ATTACK or "perturb_encoder" not in components:
        raise StageDependencyError(f"{path} holds no trained perturbation encoder")
    config = ExperimentConfig.model_validate(manifest.config)
    generator = Generator(config.generator)
    generator.load_state_dict(components["generator"])
    perturb_encoder = init_perturbation_encoder(generator)
    perturb_encoder.load_state_dict(components["perturb_encoder"])
    restorer = None
    if "restorer" in components:
        restorer = Restorer(config.generator)
        restorer.load_state_dict(components["restorer"])
    for module in (generator, perturb_encoder, restorer):
        if module is not None:
            module.to(device).eval()
            module.requires_grad_(False)
    return ProtectionPipeline(
        generator=generator,
        perturb_encoder=perturb_encoder,
        restorer=restorer,
        protector=SemanticProtector(generator, perturb_encoder, config.fusion),
        stage=manifest.stage,
    )


class ProtectionAPI(VeilBaseAPI):
    """
    Protects faces with a trained pipeline and restores protected faces.
    """

    def load(self, checkpoint: PathLike) -> ProtectionPipeline:
        self.context.pipeline = load_pipeline(checkpoint, self.context.device)
        return self.context.pipeline

    @torch.no_grad()
    def protect(self, x_cov: torch.Tensor, att_b: torch.Tensor) -> torch.Tensor:
        """
        Protects faces under target attributes.

        Args:
            x_cov (torch.Tensor): Clean faces in [-1, 1].

            att_b (torch.Tensor): (n,) or (N, n) target attributes.

        Returns:
            torch.Tensor: Protected faces.
        """
        device = self.context.device
        return self._pipeline().protector.protect(x_cov.to(device), att_b.to(device))

    @torch.no_grad()
    def erase(self, x_adv: torch.Tensor) -> torch.Tensor:
        """Restores protected faces; the clean faces are never needed."""
        return self._restorer().restore(x_adv.to(self.context.device))

    def protect_files(
        self,
        images: Sequence[PathLike],
        att_b: Sequence[torch.Tensor],
        out_dir: PathLike,
        overwrite: bool = False,
    ) -> list[Path]:
        """
        Protects image files, writing one 8-bit PNG per input plus a sidecar
        CSV with columns (input, output, att_b).

        Raises:
            OverwriteRefusedError: If an output exists and `overwrite` is False.
        """
        if len(images) != len(att_b):
            raise InvalidAttributeError("One att_b per image expected")
        out_dir = Path(out_dir)
        outputs = [out_dir / f"{Path(p).stem}.png" for p in images]
        self._check_outputs(outputs + [out_dir / SIDECAR], overwrite)
        size = self.context.config.image_size
        rows = []
        for src, dst, bits in zip(images, outputs, att_b):
            x_adv = self.protect(load_image(src, size).unsqueeze(0), bits)
            save_image(x_adv[0], dst)
            rows.append(
                {
                    "input": str(src),
                    "output": str(dst),
                    "att_b": "".join(str(int(b)) for b in bits.tolist()),
                }
            )
        with open(out_dir / SIDECAR, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=["input", "output", "att_b"])
            writer.writeheader()
            writer.writerows(rows)
        logger.info(f"protected {len(outputs)} images into {out_dir}")
        return outputs

    def erase_files(
        self, images: Sequence[PathLike], out_dir: PathLike, overwrite: bool = False
    ) -> list[Path]:
        """Restores protected image files into `out_dir`, one PNG per input."""
        out_dir = Path(out_dir)
        outputs = [out_dir / f"{Path(p).stem}.png" for p in images]
        self._check_outputs(outputs, overwrite)
        size = self.context.config.image_size
        for src, dst in zip(images, outputs):
            save_image(self.erase(load_image(src, size).unsqueeze(0))[0], dst)
        logger.info(f"restored {len(outputs)} images into {out_dir}")
        return outputs

    @staticmethod
    def _check_outputs(paths: Sequence[Path], overwrite: bool) -> None:
        if overwrite:
            return
        existing = [str(p) for p in paths if p.exists()]
        if existing:
            raise OverwriteRefusedError(
                f"{len(existing)} outputs exist (first: {existing[0]}), pass --force"
            )
