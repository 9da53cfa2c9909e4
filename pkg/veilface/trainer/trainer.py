import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Optional

import torch
from torch.utils.data import DataLoader, Dataset
from tqdm import tqdm

from veilface.generator.losses import attribute_losses, gan_losses, reconstruction_loss
from veilface.generator.networks import Discriminator, Generator
from veilface.meta_attack.attack import adaptive_weights, meta_adversarial_loss
from veilface.meta_attack.types import AdaptiveWeights
from veilface.noise_pool.pool import NoisePool
from veilface.perturbation.fusion import SemanticProtector, init_perturbation_encoder
from veilface.perturbation.losses import perturbation_loss
from veilface.restorer.restorer import Restorer, erasion_loss
from veilface.surrogate.model import SurrogateEnsemble
from veilface.surrogate.types import LossHistory
from veilface.trainer.checkpoint import (
    epoch_checkpoint_path,
    latest_epoch_checkpoint,
    load_checkpoint,
    save_checkpoint,
    stage_checkpoint_path,
)
from veilface.trainer.types import (
    CheckpointManifest,
    EpochRecord,
    ExperimentConfig,
    StageConfig,
    TrainingStage,
)
from veilface.utils.exceptions import (
    ConfigMismatchError,
    InvalidAttributeError,
    MissingComponentError,
    NonFiniteLossError,
    OverwriteRefusedError,
    StageDependencyError,
)
from veilface.utils.seed import derive_seed, make_generator
from veilface.utils.tensor import ensure_attributes, ensure_image_batch

logger = logging.getLogger(__name__)

TRAIN_LOG = "train_log.jsonl"


def set_trainable(module: Optional[torch.nn.Module], trainable: bool) -> None:
    if module is None:
        return
    for p in module.parameters():
        p.requires_grad_(trainable)


def check_finite(terms: dict[str, torch.Tensor], stage: int, epoch: int, batch: int):
    """
    Halts training on the first non-finite loss term.

    Raises:
        NonFiniteLossError: With every term's value, the stage, epoch and batch.
    """
    values = {name: float(t.detach()) for name, t in terms.items()}
    if all(math.isfinite(v) for v in values.values()):
        return
    raise NonFiniteLossError(
        "Non-finite training loss",
        diagnostics={"stage": stage, "epoch": epoch, "batch": batch, **values},
    )


class CurriculumTrainer:
    """
    Three-stage training of the protection pipeline.

    Stage 1 trains the attribute-editing generator against its discriminator.
    Stage 2 freezes the generator and trains the perturbation encoder E_adv and
    the restorer R jointly, including the meta-auxiliary adversarial loss.
    Stage 3 trains R alone. Each stage refuses to start without its
    predecessor's checkpoint, saves a checkpoint after every epoch and resumes
    from the latest one written under the same config.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        dataset: Dataset,
        ensemble: Optional[SurrogateEnsemble] = None,
        x_target: Optional[torch.Tensor] = None,
        progress: bool = False,
    ):
        self.config = config
        self.dataset = dataset
        self.ensemble = ensemble
        self.device = torch.device(config.device)
        self.x_target = (
            ensure_image_batch(x_target, config.image_size).to(self.device)
            if x_target is not None
            else None
        )
        self.progress = progress
        self.checkpoint_dir = Path(config.checkpoint_dir)
        self.noise_pool = NoisePool(config.noise_pool)

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(derive_seed(config.seed, "init"))
            self.generator = Generator(config.generator).to(self.device)
            self.discriminator = Discriminator(config.generator).to(self.device)
        self.perturb_encoder = None
        self.restorer: Optional[Restorer] = None
        self.records: list[EpochRecord] = []
        self._reset_optimizers()

    # Components

    def _adam(self, params) -> torch.optim.Adam:
        betas = tuple(self.config.adam_betas)
        return torch.optim.Adam(params, lr=self.config.lr, betas=betas)

    def _reset_optimizers(self) -> None:
        self.optimizers: dict[str, torch.optim.Optimizer] = {
            "generator": self._adam(self.generator.parameters()),
            "discriminator": self._adam(self.discriminator.parameters()),
        }

    def _init_attack_components(self) -> None:
        self.perturb_encoder = init_perturbation_encoder(self.generator)
        self.restorer = Restorer.from_generator(self.generator)
        self.optimizers["attack"] = self._adam(
            list(self.perturb_encoder.parameters()) + list(self.restorer.parameters())
        )

    def _init_restorer_optimizer(self) -> None:
        self.optimizers["restorer"] = self._adam(self.restorer.parameters())

    def protector(self) -> SemanticProtector:
        if self.perturb_encoder is None:
            raise MissingComponentError("Perturbation encoder E_adv is not initialized")
        return SemanticProtector(
            self.generator, self.perturb_encoder, self.config.fusion
        )

    # Checkpoints

    def manifest(self, stage: TrainingStage, epoch: int, completed: bool):
        components = {
            "generator": self.generator.state_dict(),
            "discriminator": self.discriminator.state_dict(),
        }
        if self.perturb_encoder is not None:
            components["perturb_encoder"] = self.perturb_encoder.state_dict()
        if self.restorer is not None:
            components["restorer"] = self.restorer.state_dict()
        return CheckpointManifest(
            stage=int(stage),
            epoch=epoch,
            completed=completed,
            config_hash=self.config.config_hash,
            config=self.config.model_dump(mode="json"),
            components=components,
            optimizers={k: o.state_dict() for k, o in self.optimizers.items()},
            history=self.ensemble.history.model_dump() if self.ensemble else None,
            rng_state={"torch": torch.get_rng_state()},
        )

    def apply_manifest(self, manifest: CheckpointManifest, optimizers: bool = True):
        """
        Loads every network (and optionally optimizer) state from a manifest and
        restores the global torch RNG to where the manifest was written.

        Raises:
            ConfigMismatchError: If a network's architecture does not match.
        """
        try:
            self.generator.load_state_dict(manifest.components["generator"])
            self.discriminator.load_state_dict(manifest.components["discriminator"])
            if "perturb_encoder" in manifest.components:
                if self.perturb_encoder is None:
                    self._init_attack_components()
                self.perturb_encoder.load_state_dict(
                    manifest.components["perturb_encoder"]
                )
                self.restorer.load_state_dict(manifest.components["restorer"])
        except (KeyError, RuntimeError) as e:
            raise ConfigMismatchError(
                f"Checkpoint does not fit this config: {e}"
            ) from e
        if manifest.stage >= TrainingStage.ERASION and self.restorer is not None:
            self._init_restorer_optimizer()
        if optimizers:
            for name, state in manifest.optimizers.items():
                if name in self.optimizers:
                    self.optimizers[name].load_state_dict(state)
        if manifest.history is not None and self.ensemble is not None:
            self.ensemble.history = LossHistory.model_validate(manifest.history)
        if "torch" in manifest.rng_state:
            torch.set_rng_state(manifest.rng_state["torch"])

    def load(self, path) -> CheckpointManifest:
        manifest = load_checkpoint(path)
        self.apply_manifest(manifest)
        return manifest

    def _require_stage(self, stage: TrainingStage) -> None:
        previous = stage_checkpoint_path(self.checkpoint_dir, int(stage) - 1)
        if not previous.exists():
            raise StageDependencyError(
                f"Stage {int(stage)} needs {previous}; "
                f"train stage {int(stage) - 1} first"
            )
        manifest = load_checkpoint(previous)
        if manifest.config_hash != self.config.config_hash:
            logger.warning(f"{previous} was written under a different config")
        self.apply_manifest(manifest, optimizers=False)

    def _resume_epoch(self, stage: TrainingStage, resume: bool, overwrite: bool) -> int:
        final = stage_checkpoint_path(self.checkpoint_dir, int(stage))
        if final.exists() and not overwrite:
            raise OverwriteRefusedError(f"{final} exists, pass --force to retrain")
        latest = latest_epoch_checkpoint(self.checkpoint_dir, int(stage))
        if not resume:
            if latest is not None and not overwrite:
                raise OverwriteRefusedError(
                    f"Stage {int(stage)} epoch checkpoints exist in "
                    f"{self.checkpoint_dir}, pass --force to replace them"
                )
            return 0
        if latest is None:
            return 0
        manifest = load_checkpoint(latest)
        if manifest.config_hash != self.config.config_hash:
            raise ConfigMismatchError(
                f"{latest} was written under config {manifest.config_hash[:12]}, "
                f"current config is {self.config.config_hash[:12]}"
            )
        self.apply_manifest(manifest)
        logger.info(f"resuming stage {int(stage)} after epoch {manifest.epoch}")
        return manifest.epoch

    # Data

    def _loader(self, stage: TrainingStage, epoch: int) -> DataLoader:
        seed = derive_seed(self.config.seed, int(stage), epoch, "shuffle")
        generator = make_generator(seed)
        return DataLoader(
            self.dataset,
            batch_size=self.config.batch_size,
            shuffle=True,
            generator=generator,
        )

    def _batch(self, batch, stage: TrainingStage, epoch: int, index: int):
        x, att_a = batch[0].to(self.device), batch[1]
        att_a = ensure_attributes(att_a, self.config.n_attributes)
        att_a = att_a.to(self.device, x.dtype)
        perm = torch.randperm(
            att_a.shape[0],
            generator=make_generator(
                derive_seed(self.config.seed, int(stage), epoch, index, "att_b")
            ),
        ).to(self.device)
        return x, att_a, att_a[perm]

    def _corruption(self, stage: TrainingStage, epoch: int, index: int):
        seed = derive_seed(self.config.seed, int(stage), epoch, index, "noise")
        return lambda t: self.noise_pool.corrupt(t, seed)

    def _check_dataset(self) -> None:
        if len(self.dataset) == 0:
            raise InvalidAttributeError("The training dataset is empty")
        item = self.dataset[0]
        if len(item) < 2 or item[1] is None:
            raise InvalidAttributeError("The training dataset has no attribute labels")
        ensure_attributes(torch.as_tensor(item[1]), self.config.n_attributes)

    # Logging

    def _log_epoch(self, record: EpochRecord) -> None:
        self.records.append(record)
        line = record.json()
        logger.info(line)
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        with open(self.checkpoint_dir / TRAIN_LOG, "a") as f:
            f.write(line + "\n")

    def _run_stage(self, stage: TrainingStage, epochs, step, resume, overwrite):
        cfg = self.config.stage_config(stage)
        epochs = epochs or cfg.epochs
        start = self._resume_epoch(stage, resume, overwrite)
        for epoch in range(start + 1, epochs + 1):
            logger.info(f"training stage {int(stage)} epoch {epoch}/{epochs}")
            weights = self._epoch_weights(stage)
            sums: dict[str, float] = defaultdict(float)
            batches = 0
            loader = self._loader(stage, epoch)
            bar = tqdm(
                loader,
                desc=f"stage {int(stage)}",
                disable=not self.progress,
                leave=False,
            )
            for index, batch in enumerate(bar):
                terms = step(cfg, batch, epoch, index, weights)
                for name, value in terms.items():
                    sums[name] += value
                batches += 1
            record = EpochRecord(
                stage=int(stage),
                epoch=epoch,
                losses={k: v / max(batches, 1) for k, v in sums.items()},
                batches=batches,
            )
            if stage == TrainingStage.ATTACK:
                history = self.ensemble.history
                record.primary_losses = [
                    s / c if c else 0.0
                    for s, c in zip(history.running_sum, history.running_count)
                ]
                record.weights = list(weights.weights)
                history.end_epoch()
            self._log_epoch(record)
            save_checkpoint(
                epoch_checkpoint_path(self.checkpoint_dir, int(stage), epoch),
                self.manifest(stage, epoch, completed=False),
                overwrite=overwrite,
            )
        return save_checkpoint(
            stage_checkpoint_path(self.checkpoint_dir, int(stage)),
            self.manifest(stage, epochs, completed=True),
            overwrite=overwrite,
        )

    def _epoch_weights(self, stage: TrainingStage) -> Optional[AdaptiveWeights]:
        if stage != TrainingStage.ATTACK:
            return None
        return adaptive_weights(self.ensemble.history)

    # Stage 1

    def train_stage1(
        self, epochs: Optional[int] = None, resume: bool = True, overwrite: bool = False
    ) -> Path:
        """
        Trains G_enc / G_dec and D on attribute editing.

        Args:
            epochs (int, optional): Overrides `stages.stage1`.

            resume (bool): Continue from the latest stage-1 epoch checkpoint.

            overwrite (bool): Allow replacing an existing `stage1.pt`.

        Returns:
            Path: The `stage1.pt` checkpoint.

        Raises:
            InvalidAttributeError: If the dataset lacks valid attribute labels.
        """
        self._check_dataset()
        set_trainable(self.generator, True)
        set_trainable(self.discriminator, True)
        return self._run_stage(
            TrainingStage.GENERATION, epochs, self._stage1_step, resume, overwrite
        )

    def _discriminator_step(self, x, att_a, x_fake, att_b) -> torch.Tensor:
        optimizer = self.optimizers["discriminator"]
        optimizer.zero_grad()
        l_d, _ = gan_losses(self.discriminator, x, x_fake.detach())
        l_att_d, _ = attribute_losses(
            self.discriminator, x, att_a, x_fake.detach(), att_b
        )
        loss = l_d + l_att_d
        loss.backward()
        optimizer.step()
        return loss.detach()

    def _stage1_step(self, cfg: StageConfig, batch, epoch: int, index: int, weights):
        x, att_a, att_b = self._batch(batch, TrainingStage.GENERATION, epoch, index)
        lam = cfg.lambdas
        with torch.no_grad():
            x_fake = self.generator(x, att_b)
        d_loss = self._discriminator_step(x, att_a, x_fake, att_b)

        optimizer = self.optimizers["generator"]
        optimizer.zero_grad()
        z = self.generator.encode(x)
        x_gen = self.generator.decoder(z, att_b)
        x_rec = self.generator.decoder(z, att_a)
        _, l_g = gan_losses(self.discriminator, x, x_gen)
        _, l_att = attribute_losses(self.discriminator, x, att_a, x_gen, att_b)
        terms = {
            "rec": lam.rec * reconstruction_loss(x_rec, x),
            "att": lam.att * l_att,
            "g": lam.g * l_g,
        }
        total = sum(terms.values())
        check_finite({**terms, "d": d_loss}, 1, epoch, index)
        total.backward()
        optimizer.step()
        return self._floats({**terms, "d": d_loss, "total": total})

    # Stage 2

    def train_stage2(
        self, epochs: Optional[int] = None, resume: bool = True, overwrite: bool = False
    ) -> Path:
        """
        Trains E_adv and R end to end with the generator frozen.

        E_adv starts as a copy of G_enc and R as a copy of G. Every batch makes a
        single optimizer step on
        att*L_att + rec*L_rec + g*L_G + adv*L_adv + era*L_era + perb*L_perb,
        and one discriminator step.

        Returns:
            Path: The `stage2.pt` checkpoint.

        Raises:
            StageDependencyError: Without `stage1.pt`.
            MissingComponentError: Without a surrogate ensemble or target image.
        """
        if self.ensemble is None:
            raise MissingComponentError("Stage 2 needs a surrogate ensemble")
        if self.x_target is None:
            raise MissingComponentError("Stage 2 needs a target image")
        self._check_dataset()
        self._require_stage(TrainingStage.ATTACK)
        self._init_attack_components()
        set_trainable(self.generator, False)
        set_trainable(self.discriminator, True)
        return self._run_stage(
            TrainingStage.ATTACK, epochs, self._stage2_step, resume, overwrite
        )

    def _stage2_step(self, cfg: StageConfig, batch, epoch: int, index: int, weights):
        x, att_a, att_b = self._batch(batch, TrainingStage.ATTACK, epoch, index)
        lam = cfg.lambdas
        protector = self.protector()
        corrupt = self._corruption(TrainingStage.ATTACK, epoch, index)

        x_adv = protector.protect(x, att_b)
        d_loss = self._discriminator_step(x, att_a, x_adv, att_b)

        optimizer = self.optimizers["attack"]
        optimizer.zero_grad()
        meta = meta_adversarial_loss(
            self.ensemble,
            protector,
            x,
            att_b,
            self.x_target,
            self.config.meta_step,
            weights=weights,
            corrupt=corrupt,
            x_adv=x_adv,
        )
        with torch.no_grad():
            x_ref = protector.reference(x, att_b)
        _, l_g = gan_losses(self.discriminator, x, x_adv)
        _, l_att = attribute_losses(self.discriminator, x, att_a, x_adv, att_b)
        x_rec = self.restorer.restore(corrupt(x_adv))
        terms = {
            "att": lam.att * l_att,
            "rec": lam.rec * reconstruction_loss(protector.protect(x, att_a), x),
            "g": lam.g * l_g,
            "adv": lam.adv * meta.loss,
            "era": lam.era * erasion_loss(x_rec, x, reduction="mean"),
            "perb": lam.perb * perturbation_loss(x_adv, x_ref, cfg.sigma1),
        }
        total = sum(terms.values())
        check_finite({**terms, "d": d_loss}, 2, epoch, index)
        total.backward()
        optimizer.step()
        for i, loss in enumerate(meta.primary_losses):
            self.ensemble.history.record(i, loss)
        return self._floats({**terms, "d": d_loss, "total": total})

    # Stage 3

    def train_stage3(
        self, epochs: Optional[int] = None, resume: bool = True, overwrite: bool = False
    ) -> Path:
        """
        Trains R alone on the erasion loss; every other network stays frozen.

        Returns:
            Path: The `stage3.pt` checkpoint.

        Raises:
            StageDependencyError: Without `stage2.pt`.
        """
        self._check_dataset()
        self._require_stage(TrainingStage.ERASION)
        if self.restorer is None:
            raise MissingComponentError("Stage 2 checkpoint holds no restorer")
        self._init_restorer_optimizer()
        set_trainable(self.generator, False)
        set_trainable(self.discriminator, False)
        set_trainable(self.perturb_encoder, False)
        set_trainable(self.restorer, True)
        return self._run_stage(
            TrainingStage.ERASION, epochs, self._stage3_step, resume, overwrite
        )

    def _stage3_step(self, cfg: StageConfig, batch, epoch: int, index: int, weights):
        x, _, att_b = self._batch(batch, TrainingStage.ERASION, epoch, index)
        corrupt = self._corruption(TrainingStage.ERASION, epoch, index)
        with torch.no_grad():
            x_adv = corrupt(self.protector().protect(x, att_b))
        optimizer = self.optimizers["restorer"]
        optimizer.zero_grad()
        l_era = erasion_loss(self.restorer.restore(x_adv), x, reduction="mean")
        check_finite({"era": l_era}, 3, epoch, index)
        l_era.backward()
        optimizer.step()
        return self._floats({"era": l_era, "total": l_era})

    def train(self) -> Path:
        """Runs all three stages in order."""
        self.train_stage1()
        self.train_stage2()
        return self.train_stage3()

    @staticmethod
    def _floats(terms: dict[str, torch.Tensor]) -> dict[str, float]:
        return {k: float(v.detach()) for k, v in terms.items()}
