import shutil
import tempfile
from pathlib import Path

import torch
from torch.utils.data import Subset

from sanity import DEVICE, SEED
from veilface.client.apis.protection import load_pipeline
from veilface.data.datasets import SyntheticFaceDataset
from veilface.evaluation.sweep import ablation_sweep, evaluate_protection
from veilface.surrogate.calibrate import calibrate_threshold, make_verification_pairs
from veilface.surrogate.loader import (
    build_ensemble,
    load_manifest,
    load_models,
    save_embedder,
    save_manifest,
)
from veilface.surrogate.train import train_toy_embedder
from veilface.surrogate.types import (
    EmbedderConfig,
    SurrogateManifest,
    SurrogateManifestEntry,
    SurrogateRole,
)
from veilface.trainer.checkpoint import stage_checkpoint_path
from veilface.trainer.trainer import CurriculumTrainer
from veilface.trainer.types import ExperimentConfig
from veilface.utils.seed import derive_seed, make_generator

IMAGE_SIZE = 32
N_ATTRIBUTES = 5
TARGET_IDENTITY = 0

EMBEDDERS = [
    ("wb-lrelu", SurrogateRole.WHITE_BOX_TRAIN, [16, 32, 64], "lrelu"),
    ("wb-elu", SurrogateRole.WHITE_BOX_TRAIN, [8, 16, 32], "elu"),
    ("wb-tanh", SurrogateRole.WHITE_BOX_TRAIN, [16, 16, 32], "tanh"),
    ("held-out", SurrogateRole.BLACK_BOX_EVAL, [12, 24, 48], "lrelu"),
]


def train_embedders(dataset, workdir: Path) -> Path:
    print("training toy face embedders...")
    entries = []
    for i, (model_id, role, channels, activation) in enumerate(EMBEDDERS):
        config = EmbedderConfig(
            image_size=IMAGE_SIZE,
            channels=channels,
            embedding_dim=32,
            activation=activation,
        )
        seed = derive_seed(SEED, "embedder", i)
        model = train_toy_embedder(
            dataset,
            dataset.n_identities,
            epochs=40,
            config=config,
            id=model_id,
            role=role,
            seed=seed,
        )
        save_embedder(model, workdir / f"{model_id}.pt")
        entries.append(
            SurrogateManifestEntry(
                id=model_id,
                role=role,
                embedding_dim=32,
                checkpoint=f"{model_id}.pt",
                embedder=config,
                seed=seed,
            )
        )
    path = workdir / "manifest.json"
    save_manifest(SurrogateManifest(models=entries), path)
    return path


def calibrate(dataset, manifest_path: Path):
    print("calibrating thresholds...")
    manifest = load_manifest(manifest_path)
    models = load_models(manifest, manifest_path.parent)
    images = dataset.images
    genuine, impostor = make_verification_pairs(dataset.identities)
    g = torch.tensor(genuine)
    i = torch.tensor(impostor)
    genuine_pairs = (images[g[:, 0]], images[g[:, 1]])
    impostor_pairs = (images[i[:, 0]], images[i[:, 1]])
    for model, entry in zip(models, manifest.models):
        attack = calibrate_threshold(model, genuine_pairs, impostor_pairs, 0.01)
        erasion = calibrate_threshold(
            model, genuine_pairs, impostor_pairs, 0.1, target="erasion"
        )
        entry.tau_attack, entry.tau_erasion = attack.tau, erasion.tau
        print(f"{model.id}: tau_attack={attack.tau:.4f} tau_erasion={erasion.tau:.4f}")
    save_manifest(manifest, manifest_path)
    return load_models(manifest, manifest_path.parent)


def experiment(workdir: Path, name: str, meta_auxiliary: bool) -> ExperimentConfig:
    return ExperimentConfig.model_validate(
        {
            "seed": SEED,
            "device": DEVICE,
            "image_size": IMAGE_SIZE,
            "n_attributes": N_ATTRIBUTES,
            "batch_size": 8,
            "lr": 2e-4,
            "inner_lr": 2e-4,
            "checkpoint_dir": str(workdir / name),
            "stages": {"stage1": 30, "stage2": 15, "stage3": 15},
            "meta_auxiliary": meta_auxiliary,
        }
    )


def run():
    workdir = Path(tempfile.mkdtemp(prefix="veilface-toy-"))
    print(f"working in {workdir}")
    torch.manual_seed(SEED)

    dataset = SyntheticFaceDataset(
        n_identities=8,
        images_per_identity=8,
        n_attributes=N_ATTRIBUTES,
        image_size=IMAGE_SIZE,
        seed=SEED,
    )
    models = calibrate(dataset, train_embedders(dataset, workdir))
    held_out = [m for m in models if m.role == SurrogateRole.BLACK_BOX_EVAL]

    target_index = dataset.identities.index(TARGET_IDENTITY)
    x_target = dataset.images[target_index : target_index + 1]
    faces = [i for i, k in enumerate(dataset.identities) if k != TARGET_IDENTITY]
    train_set = Subset(dataset, faces)

    meta_config = experiment(workdir, "meta", meta_auxiliary=True)
    ablation_config = experiment(workdir, "ablation", meta_auxiliary=False)

    print("training the meta-auxiliary pipeline...")
    trainer = CurriculumTrainer(
        meta_config, train_set, build_ensemble(models), x_target, progress=True
    )
    trainer.train_stage1()
    trainer.train_stage2()
    trainer.train_stage3()

    print("training the plain-ensemble ablation from the same stage-1 generator...")
    ablation_dir = Path(ablation_config.checkpoint_dir)
    ablation_dir.mkdir(parents=True, exist_ok=True)
    shutil.copy(
        stage_checkpoint_path(meta_config.checkpoint_dir, 1),
        stage_checkpoint_path(ablation_dir, 1),
    )
    ablation = CurriculumTrainer(
        ablation_config, train_set, build_ensemble(models), x_target, progress=True
    )
    ablation.train_stage2()
    ablation.train_stage3()

    x_cov = dataset.images[faces]
    att_a = dataset.attributes[faces]
    att_b = att_a[
        torch.randperm(len(faces), generator=make_generator(derive_seed(SEED, "eval")))
    ]
    reports = {}
    for name, config in (("meta", meta_config), ("ablation", ablation_config)):
        pipeline = load_pipeline(stage_checkpoint_path(config.checkpoint_dir, 3))
        with torch.no_grad():
            x_adv = pipeline.protector.protect(x_cov, att_b)
        reports[name] = evaluate_protection(
            held_out,
            x_cov,
            x_adv,
            x_target,
            restore_fn=pipeline.restorer.restore,
            seed=SEED,
        )
        print(f"{name} report:")
        print(reports[name].model_dump_json(indent=2))

    print("beta / gamma ablation of the meta-auxiliary pipeline...")
    pipeline = load_pipeline(stage_checkpoint_path(meta_config.checkpoint_dir, 3))
    for parameter in ("beta", "gamma"):
        for point in ablation_sweep(
            pipeline.protector,
            pipeline.restorer.restore,
            x_cov,
            att_b,
            x_target,
            held_out,
            parameter,
            [0.0, 0.25, 0.5, 0.75, 1.0],
        ):
            cell = point.rates[held_out[0].id]
            print(f"{parameter}={point.value}: asr={cell.asr:.3f} esr={cell.esr}")

    meta_cell = reports["meta"].rates[held_out[0].id]
    ablation_cell = reports["ablation"].rates[held_out[0].id]
    print(
        f"held-out ASR meta={meta_cell.asr:.3f} ablation={ablation_cell.asr:.3f}: "
        f"{'PASS' if meta_cell.asr >= ablation_cell.asr else 'FAIL'}"
    )
    print(
        f"held-out ESR={meta_cell.esr:.3f}: "
        f"{'PASS' if meta_cell.esr >= 0.8 else 'FAIL'}"
    )


if __name__ == "__main__":
    run()
