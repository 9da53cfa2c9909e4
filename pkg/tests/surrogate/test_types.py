import pytest
from pydantic import ValidationError

from veilface.surrogate.types import (
    EmbedderConfig,
    LossHistory,
    SurrogateManifest,
    SurrogateManifestEntry,
    SurrogateRole,
)


def test_loss_history_window():
    history = LossHistory.bootstrap(2)
    history.record(0, 0.5)
    history.record(0, 0.7)
    history.end_epoch()
    assert history.previous == [pytest.approx(0.6), 1.0]
    assert history.before_previous == [1.0, 1.0]
    assert history.running_count == [0, 0]
    history.record(1, 0.2)
    history.end_epoch()
    assert history.before_previous == [pytest.approx(0.6), 1.0]
    assert history.previous == [pytest.approx(0.6), pytest.approx(0.2)]


def test_manifest_entry_validation():
    entry = SurrogateManifestEntry(
        id="m", role=SurrogateRole.WHITE_BOX_TRAIN, embedding_dim=64, checkpoint="m.pt"
    )
    assert entry.tau_attack is None
    with pytest.raises(ValidationError):
        SurrogateManifestEntry(
            id="m",
            role="white_box_train",
            embedding_dim=64,
            checkpoint="m.pt",
            tau_attack=1.5,
        )
    with pytest.raises(ValidationError):
        SurrogateManifestEntry(
            id="m", role="white_box_train", embedding_dim=8, checkpoint="m.pt"
        )
    manifest = SurrogateManifest(models=[entry])
    assert manifest.by_role(SurrogateRole.BLACK_BOX_EVAL) == []


def test_embedder_config_validation():
    with pytest.raises(ValidationError):
        EmbedderConfig(channels=[])
