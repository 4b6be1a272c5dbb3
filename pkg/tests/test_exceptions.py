import pytest

from semsplat.exceptions import (
    BehindCamera,
    ConfigError,
    CorruptCheckpoint,
    DataError,
    DegenerateFeatures,
    EmptyPool,
    GeometryError,
    InputError,
    KTooLarge,
    MissingFile,
    NonFiniteLoss,
    NumericalError,
    ParseError,
    SemsplatError,
    UnsupportedCameraModel,
    wrap_exception,
)


@pytest.mark.parametrize(
    "error, base, exit_code",
    [
        (ConfigError("bad", field="k"), SemsplatError, 2),
        (ParseError("cameras.txt", 3, "bad row"), InputError, 3),
        (MissingFile("images/a.png"), InputError, 3),
        (CorruptCheckpoint("c.sspl", "truncated"), InputError, 3),
        (BehindCamera(0.0, 0.01), GeometryError, 4),
        (NonFiniteLoss({"l1": float("nan")}, step=3), NumericalError, 4),
        (DegenerateFeatures(2), NumericalError, 4),
        (KTooLarge(6, 5), DataError, 5),
        (EmptyPool("pseudo"), DataError, 5),
    ],
)
def test_exit_codes(error, base, exit_code):
    assert isinstance(error, base)
    assert error.exit_code == exit_code


def test_parse_error_location():
    err = ParseError("sparse/images.txt", 7, "expected 10 fields")
    assert str(err).startswith("sparse/images.txt:7: expected 10 fields")
    assert err.details == {"path": "sparse/images.txt", "line": 7}
    assert err.error_code == "PARSE_ERROR"


def test_unsupported_camera_details():
    err = UnsupportedCameraModel("OPENCV", path="cameras.txt", line=2)
    assert err.model == "OPENCV"
    assert err.details == {"model": "OPENCV", "path": "cameras.txt", "line": 2}


def test_to_dict():
    cause = ValueError("x")
    err = ConfigError("Invalid configuration", field="weights.a", cause=cause)
    assert err.to_dict() == {
        "error_code": "CONFIG_ERROR",
        "message": "Invalid configuration",
        "details": {"field": "weights.a"},
        "cause": "x",
    }


def test_str_without_details():
    assert str(ConfigError("plain")) == "plain"


def test_non_finite_loss_step():
    err = NonFiniteLoss({"ce": float("inf")}, step=12)
    assert err.step == 12
    assert "step 12" in str(err)


def test_wrap_exception():
    wrapped = wrap_exception(RuntimeError("boom"))
    assert type(wrapped) is SemsplatError
    assert wrapped.cause.args == ("boom",)
    assert wrapped.exit_code == 1

    original = KTooLarge(3, 1)
    assert wrap_exception(original) is original
