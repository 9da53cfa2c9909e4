from pathlib import Path
from typing import Callable

import pytest
import torch

from veilface.data.datasets import SyntheticFaceDataset
from veilface.data.image_io import save_image
from veilface.generator.networks import Generator
from veilface.generator.types import GeneratorConfig
from veilface.perturbation.fusion import SemanticProtector, init_perturbation_encoder
from veilface.perturbation.types import FusionConfig
from veilface.surrogate.embedder import ToyEmbedder
from veilface.surrogate.loader import save_embedder, save_manifest
from veilface.surrogate.model import SurrogateEnsemble, SurrogateModel
from veilface.surrogate.types import (
    EmbedderConfig,
    SurrogateManifest,
    SurrogateManifestEntry,
    SurrogateRole,
)
from veilface.trainer.config import dump_config
from veilface.trainer.types import ExperimentConfig

IMAGE_SIZE = 16
N_ATTRIBUTES = 3


@pytest.fixture
def image_size() -> int:
    return IMAGE_SIZE


@pytest.fixture
def n_attributes() -> int:
    return N_ATTRIBUTES


@pytest.fixture
def generator_config() -> GeneratorConfig:
    return GeneratorConfig(
        image_size=IMAGE_SIZE,
        n_attributes=N_ATTRIBUTES,
        enc_channels=[2, 2, 2, 2],
        kernel_size=2,
        shortcut_layers=1,
        enc_activation="elu",
        dec_activation="elu",
        dis_channels=[4, 4],
    )


@pytest.fixture
def embedder_config() -> EmbedderConfig:
    return EmbedderConfig(
        image_size=IMAGE_SIZE, channels=[4, 4], embedding_dim=8, activation="elu"
    )


@pytest.fixture
def generator(generator_config: GeneratorConfig) -> Generator:
    torch.manual_seed(0)
    return Generator(generator_config)


@pytest.fixture
def protector(generator: Generator) -> SemanticProtector:
    generator.requires_grad_(False)
    return SemanticProtector(
        generator,
        init_perturbation_encoder(generator),
        FusionConfig(beta=0.5, gamma=0.3),
    )


def make_models(
    config: EmbedderConfig, k: int, dtype: torch.dtype = torch.float32
) -> list[SurrogateModel]:
    models = []
    for i in range(k):
        torch.manual_seed(100 + i)
        network = ToyEmbedder(config).to(dtype)
        models.append(
            SurrogateModel(
                f"toy-{i}",
                network,
                config.image_size,
                tau_attack=0.5,
                tau_erasion=0.3,
            ).freeze()
        )
    return models


@pytest.fixture
def models(embedder_config: EmbedderConfig) -> list[SurrogateModel]:
    return make_models(embedder_config, 3)


@pytest.fixture
def ensemble(models: list[SurrogateModel]) -> SurrogateEnsemble:
    return SurrogateEnsemble(models)


@pytest.fixture
def make_ensemble(
    embedder_config: EmbedderConfig,
) -> Callable[[], SurrogateEnsemble]:
    """Builds a fresh, identically initialized ensemble on every call."""
    return lambda: SurrogateEnsemble(make_models(embedder_config, 3))


@pytest.fixture
def generator64(generator_config: GeneratorConfig) -> Generator:
    torch.manual_seed(0)
    return Generator(generator_config).double().requires_grad_(False)


@pytest.fixture
def protector64(generator64: Generator) -> SemanticProtector:
    perturb_encoder = init_perturbation_encoder(generator64)
    with torch.no_grad():
        for p in perturb_encoder.parameters():
            p.add_(0.1 * torch.randn_like(p))
    return SemanticProtector(
        generator64, perturb_encoder, FusionConfig(beta=0.5, gamma=0.3)
    )


@pytest.fixture
def ensemble64(embedder_config: EmbedderConfig) -> SurrogateEnsemble:
    return SurrogateEnsemble(make_models(embedder_config, 2, torch.float64))


@pytest.fixture
def dataset() -> SyntheticFaceDataset:
    return SyntheticFaceDataset(
        n_identities=4,
        images_per_identity=4,
        n_attributes=N_ATTRIBUTES,
        image_size=IMAGE_SIZE,
        seed=0,
    )


@pytest.fixture
def x_cov(dataset: SyntheticFaceDataset) -> torch.Tensor:
    return dataset.images[:4]


@pytest.fixture
def att_b(dataset: SyntheticFaceDataset) -> torch.Tensor:
    return 1.0 - dataset.attributes[:4]


@pytest.fixture
def x_target(dataset: SyntheticFaceDataset) -> torch.Tensor:
    return dataset.images[-1:]


@pytest.fixture
def experiment(tmp_path: Path, generator_config: GeneratorConfig) -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "seed": 7,
            "image_size": IMAGE_SIZE,
            "n_attributes": N_ATTRIBUTES,
            "batch_size": 4,
            "lr": 1e-3,
            "checkpoint_dir": str(tmp_path / "checkpoints"),
            "stages": {"stage1": 1, "stage2": 1, "stage3": 1},
            "generator": generator_config.model_dump(),
            "evaluation": {"pgd_steps": 3, "min_impostor_pairs": 10},
        }
    )


@pytest.fixture
def workspace(
    tmp_path: Path,
    experiment: ExperimentConfig,
    models: list[SurrogateModel],
    embedder_config: EmbedderConfig,
    x_target: torch.Tensor,
) -> Path:
    """
    A config file next to saved face models and a target image; returns the
    config path. The last model is the held-out evaluator.
    """
    model_dir = tmp_path / "models"
    model_dir.mkdir()
    entries = []
    for i, model in enumerate(models):
        save_embedder(model, model_dir / f"{model.id}.pt")
        entries.append(
            SurrogateManifestEntry(
                id=model.id,
                role=(
                    SurrogateRole.BLACK_BOX_EVAL
                    if i == len(models) - 1
                    else SurrogateRole.WHITE_BOX_TRAIN
                ),
                embedding_dim=embedder_config.embedding_dim,
                tau_attack=model.tau_attack,
                tau_erasion=model.tau_erasion,
                checkpoint=f"{model.id}.pt",
                embedder=embedder_config,
            )
        )
    save_manifest(SurrogateManifest(models=entries), model_dir / "manifest.json")
    save_image(x_target[0], tmp_path / "target.png")
    config = experiment.model_copy(
        update={
            "attribute_names": ["smile", "glasses", "beard"],
            "target_image": "target.png",
            "ensemble_manifest": "models/manifest.json",
        }
    )
    path = tmp_path / "experiment.cfg"
    path.write_text(dump_config(config))
    return path
