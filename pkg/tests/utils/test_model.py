import json

from veilface.surrogate.types import SurrogateManifestEntry, SurrogateRole


def test_json_drops_unset_thresholds():
    entry = SurrogateManifestEntry(
        id="toy-0",
        role=SurrogateRole.WHITE_BOX_TRAIN,
        embedding_dim=8,
        checkpoint="toy-0.pt",
    )
    dumped = json.loads(entry.json())
    assert "tau_attack" not in dumped and "tau_erasion" not in dumped
    assert dumped["role"] == str(SurrogateRole.WHITE_BOX_TRAIN)
    assert "tau_attack" in entry.model_dump()


def test_roles_print_as_their_value():
    assert str(SurrogateRole.WHITE_BOX_TRAIN) == "white_box_train"
