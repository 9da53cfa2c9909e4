import pytest
from pydantic import ValidationError

from veilface.trainer.config import (
    config_from_dict,
    dump_config,
    load_config,
    parse_config_text,
)
from veilface.trainer.types import TrainingStage

CONFIG = """
# toy experiment
seed = 3
image_size = 16
n_attributes = 3
attribute_names = ["smile", "glasses", "beard"]
target_image = "faces/target.png"
checkpoint_dir = out  # unquoted text
stages.stage1 = 2
lambdas.adv = 100.0
noise_pool.kinds = ["identity", "jpeg"]
evaluation.transforms = ["identity", "rotate:10"]
"""


def test_parse_config_text():
    data = parse_config_text(CONFIG)
    assert data["seed"] == 3
    assert data["checkpoint_dir"] == "out"
    assert data["stages"] == {"stage1": 2}
    assert data["lambdas"] == {"adv": 100.0}
    assert data["attribute_names"] == ["smile", "glasses", "beard"]
    assert parse_config_text('name = "a # b"') == {"name": "a # b"}


@pytest.mark.parametrize(
    "text, line",
    [
        ("seed = 1\nbad line", 2),
        ("seed = 1\nseed = 2", 2),
        ("a = 1\na.b = 2", 2),
        ("a..b = 1", 1),
        ("= 1", 1),
    ],
)
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ValueError, match=f"line {line}"):
        parse_config_text(text)


def test_load_config_resolves_paths(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG)
    config = load_config(path, env={})
    assert config.seed == 3
    assert config.target_image == str(tmp_path / "faces" / "target.png")
    assert config.checkpoint_dir == str(tmp_path / "out")
    assert config.generator.image_size == 16
    assert config.stages.stage1 == 2 and config.stages.stage2 == 100
    assert config.lambdas.adv == 100.0 and config.lambdas.era == 150.0


def test_seed_override():
    assert config_from_dict({"seed": 1}, env={"SEED": "42"}).seed == 42
    assert config_from_dict({"seed": 1}, env={}).seed == 1


def test_validation():
    with pytest.raises(ValidationError):
        config_from_dict({"beta": 1.5}, env={})
    with pytest.raises(ValidationError):
        config_from_dict({"adam_betas": [0.9]}, env={})
    with pytest.raises(ValidationError):
        config_from_dict({"n_attributes": 2, "attribute_names": ["a"]}, env={})
    with pytest.raises(ValidationError):
        config_from_dict(
            {"image_size": 16, "generator": {"image_size": 32}}, env={}
        )
    with pytest.raises(ValidationError):
        config_from_dict({"noise_pool": {"kinds": ["rotate"]}}, env={})


def test_dump_config_reloads(tmp_path, experiment):
    path = tmp_path / "dump.cfg"
    path.write_text(dump_config(experiment))
    reloaded = load_config(path, env={})
    assert reloaded.config_hash == experiment.config_hash


def test_stage_config(experiment):
    stage1 = experiment.stage_config(TrainingStage.GENERATION)
    stage2 = experiment.stage_config(TrainingStage.ATTACK)
    assert stage1.noise_pool_prob == 0.0
    assert stage2.noise_pool_prob == experiment.noise_pool.prob
    assert stage2.sigma1 == experiment.effective_sigma1
    assert stage2.epochs == 1
