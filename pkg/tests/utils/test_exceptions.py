from veilface.utils.exceptions import (
    DatasetError,
    EmptySetError,
    NonFiniteLossError,
    VeilException,
)


def test_exceptions_carry_messages():
    e = EmptySetError()
    assert isinstance(e, VeilException)
    assert e.message == "Empty input set"
    assert EmptySetError("custom").message == "custom"


def test_dataset_error_lists_rows():
    e = DatasetError("bad csv", ["row 2: x", "row 3: y"])
    assert e.errors == ["row 2: x", "row 3: y"]
    assert "row 3: y" in e.message


def test_non_finite_loss_diagnostics():
    e = NonFiniteLossError("boom", diagnostics={"stage": 2, "adv": float("nan")})
    assert e.diagnostics["stage"] == 2
