import json

import pytest
import torch

from veilface.data.datasets import SyntheticFaceDataset
from veilface.generator.losses import reconstruction_loss
from veilface.restorer.restorer import erasion_loss
from veilface.trainer.checkpoint import (
    epoch_checkpoint_path,
    load_checkpoint,
    save_checkpoint,
    stage_checkpoint_path,
)
from veilface.trainer.trainer import TRAIN_LOG, CurriculumTrainer
from veilface.trainer.types import TrainingStage
from veilface.utils.exceptions import (
    ConfigMismatchError,
    InvalidAttributeError,
    MissingComponentError,
    OverwriteRefusedError,
    StageDependencyError,
)


def state(module: torch.nn.Module) -> dict[str, torch.Tensor]:
    return {k: v.detach().clone() for k, v in module.state_dict().items()}


def same(a: dict, b: dict) -> bool:
    return a.keys() == b.keys() and all(torch.equal(a[k], b[k]) for k in a)


def watch_frozen(trainer, step: str, modules: list) -> list[int]:
    """Wraps a stage step so every 10th call checks `modules` are untouched."""
    frozen = [state(m) for m in modules]
    wrapped = getattr(trainer, step)
    calls = []

    def checked(*args):
        if len(calls) % 10 == 0:
            assert all(same(f, state(m)) for f, m in zip(frozen, modules))
        calls.append(len(calls))
        return wrapped(*args)

    setattr(trainer, step, checked)
    return calls


@pytest.fixture
def trainer(experiment, dataset, ensemble, x_target) -> CurriculumTrainer:
    return CurriculumTrainer(experiment, dataset, ensemble, x_target)


def test_stages_need_their_predecessor(trainer):
    with pytest.raises(StageDependencyError):
        trainer.train_stage2()
    with pytest.raises(StageDependencyError):
        trainer.train_stage3()


def test_stage2_needs_ensemble_and_target(experiment, dataset, x_target, ensemble):
    with pytest.raises(MissingComponentError):
        CurriculumTrainer(experiment, dataset, None, x_target).train_stage2()
    with pytest.raises(MissingComponentError):
        CurriculumTrainer(experiment, dataset, ensemble, None).train_stage2()


def test_dataset_needs_attributes(experiment, x_cov):
    unlabeled = [(x, None) for x in x_cov]
    with pytest.raises(InvalidAttributeError):
        CurriculumTrainer(experiment, unlabeled).train_stage1()


def test_full_curriculum(trainer, experiment):
    path = trainer.train_stage1()
    assert path == stage_checkpoint_path(experiment.checkpoint_dir, 1)
    assert epoch_checkpoint_path(experiment.checkpoint_dir, 1, 1).exists()
    with pytest.raises(OverwriteRefusedError):
        trainer.train_stage1()

    generator = state(trainer.generator)
    trainer.train_stage2()
    assert same(generator, state(trainer.generator))
    assert all(not p.requires_grad for p in trainer.generator.parameters())

    frozen = [trainer.generator, trainer.discriminator, trainer.perturb_encoder]
    before = [state(m) for m in frozen]
    restorer = state(trainer.restorer)
    trainer.train_stage3()
    assert all(same(b, state(m)) for b, m in zip(before, frozen))
    assert not same(restorer, state(trainer.restorer))

    manifest = load_checkpoint(stage_checkpoint_path(experiment.checkpoint_dir, 3))
    assert manifest.stage == 3 and manifest.completed
    assert manifest.config_hash == experiment.config_hash
    assert set(manifest.components) == {
        "generator",
        "discriminator",
        "perturb_encoder",
        "restorer",
    }

    log = trainer.checkpoint_dir / TRAIN_LOG
    records = [json.loads(line) for line in log.read_text().splitlines()]
    assert [r["stage"] for r in records] == [1, 2, 3]
    stage2 = records[1]
    assert set(stage2["losses"]) >= {"att", "rec", "g", "adv", "era", "perb", "d"}
    assert len(stage2["weights"]) == len(trainer.ensemble)
    assert len(stage2["primary_losses"]) == len(trainer.ensemble)


def test_training_is_deterministic(experiment, dataset, tmp_path):
    runs = []
    for name in ("a", "b"):
        config = experiment.model_copy(
            update={"checkpoint_dir": str(tmp_path / name)}
        )
        trainer = CurriculumTrainer(config, dataset)
        trainer.train_stage1(epochs=2)
        runs.append(state(trainer.generator))
    assert same(*runs)


def test_resume_continues_training(experiment, dataset, tmp_path):
    straight = CurriculumTrainer(
        experiment.model_copy(update={"checkpoint_dir": str(tmp_path / "a")}),
        dataset,
    )
    straight.train_stage1(epochs=2)

    config = experiment.model_copy(update={"checkpoint_dir": str(tmp_path / "b")})
    CurriculumTrainer(config, dataset).train_stage1(epochs=1)
    resumed = CurriculumTrainer(config, dataset)
    resumed.train_stage1(epochs=2, overwrite=True)
    assert [r.epoch for r in resumed.records] == [2]
    a, b = state(straight.generator), state(resumed.generator)
    assert all(torch.allclose(a[k], b[k], atol=1e-6) for k in a)


def test_resume_refuses_another_config(experiment, dataset):
    CurriculumTrainer(experiment, dataset).train_stage1()
    changed = experiment.model_copy(update={"lr": 5e-4})
    with pytest.raises(ConfigMismatchError):
        CurriculumTrainer(changed, dataset).train_stage1(overwrite=True)
    CurriculumTrainer(changed, dataset).train_stage1(resume=False, overwrite=True)


def test_resume_continues_later_stages(
    experiment, dataset, make_ensemble, x_target, tmp_path
):
    def trainer_in(name: str) -> CurriculumTrainer:
        config = experiment.model_copy(
            update={"checkpoint_dir": str(tmp_path / name)}
        )
        return CurriculumTrainer(config, dataset, make_ensemble(), x_target)

    straight = trainer_in("a")
    straight.train_stage1()
    straight.train_stage2(epochs=2)
    straight.train_stage3(epochs=2)
    expected = {(r.stage, r.epoch): r.losses for r in straight.records}

    first = trainer_in("b")
    first.train_stage1()
    first.train_stage2(epochs=1)
    stage2 = trainer_in("b")
    stage2.train_stage2(epochs=2, overwrite=True)
    trainer_in("b").train_stage3(epochs=1)
    stage3 = trainer_in("b")
    stage3.train_stage3(epochs=2, overwrite=True)

    for resumed, key in ((stage2, (2, 2)), (stage3, (3, 2))):
        assert [(r.stage, r.epoch) for r in resumed.records] == [key]
        losses = resumed.records[0].losses
        assert losses == pytest.approx(expected[key], rel=1e-5, abs=1e-7)
    a, b = state(straight.restorer), state(stage3.restorer)
    assert all(torch.allclose(a[k], b[k], atol=1e-6) for k in a)


def test_load_restores_random_state(trainer, tmp_path):
    manifest = trainer.manifest(TrainingStage.GENERATION, 1, completed=False)
    path = save_checkpoint(tmp_path / "snapshot.pt", manifest)
    expected = torch.rand(5)
    trainer.load(path)
    assert torch.equal(torch.rand(5), expected)


def test_epoch_checkpoints_need_force(trainer, experiment):
    trainer.train_stage1()
    stage_checkpoint_path(experiment.checkpoint_dir, 1).unlink()
    with pytest.raises(OverwriteRefusedError):
        trainer.train_stage1(resume=False)
    trainer.train_stage1(resume=False, overwrite=True)
    assert stage_checkpoint_path(experiment.checkpoint_dir, 1).exists()


def test_training_improves_held_out_losses(experiment, dataset, ensemble, x_target):
    config = experiment.model_copy(update={"lr": 5e-3})
    trainer = CurriculumTrainer(config, dataset, ensemble, x_target)
    # The first four images of every identity are the training set.
    faces = SyntheticFaceDataset(
        n_identities=4, images_per_identity=6, n_attributes=3, image_size=16, seed=0
    )
    held_out = [i for i in range(len(faces)) if i % 6 >= 4]
    x, att_a = faces.images[held_out], faces.attributes[held_out]

    def rec_loss() -> float:
        with torch.no_grad():
            return reconstruction_loss(trainer.generator(x, att_a), x).item()

    def era_loss() -> float:
        with torch.no_grad():
            x_adv = trainer.protector().protect(x, 1.0 - att_a)
            x_rec = trainer.restorer.restore(x_adv)
            return erasion_loss(x_rec, x, reduction="mean").item()

    untrained = rec_loss()
    trainer.train_stage1(epochs=20)
    assert rec_loss() < untrained

    g_enc = state(trainer.generator.encoder)
    calls = watch_frozen(trainer, "_stage2_step", [trainer.generator])
    trainer.train_stage2(epochs=3)
    assert len(calls) >= 10
    assert same(g_enc, state(trainer.generator.encoder))
    assert not same(g_enc, state(trainer.perturb_encoder))

    before = era_loss()
    frozen = [trainer.generator, trainer.discriminator, trainer.perturb_encoder]
    snapshot = [state(m) for m in frozen]
    calls = watch_frozen(trainer, "_stage3_step", frozen)
    trainer.train_stage3(epochs=15)
    assert len(calls) >= 10
    assert all(same(s, state(m)) for s, m in zip(snapshot, frozen))
    assert era_loss() < before

    x_cov = dataset.images
    with torch.no_grad():
        x_adv = trainer.protector().protect(x_cov, 1.0 - dataset.attributes)
        x_rec = trainer.restorer.restore(x_adv)

    def distance(images: torch.Tensor) -> float:
        return (images - x_cov).flatten(1).norm(dim=1).mean().item()

    assert distance(x_rec) < distance(x_adv)
