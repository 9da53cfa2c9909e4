from typing import Optional

from pydantic import Field, field_validator, model_validator

from veilface.utils.enum import StrEnum
from veilface.utils.model import VeilBaseModel

# Gaussian variance is given in [-1, 1] pixel units.
DEFAULT_JPEG_QUALITY = 50
DEFAULT_GAUSSIAN_VAR = 0.003
DEFAULT_TRAIN_RESIZE = 0.25
DEFAULT_EVAL_RESIZE = 0.5
DEFAULT_MEDIAN_KERNEL = 5
DEFAULT_MAX_ANGLE = 30.0
DEFAULT_CROP_FRACTION = 224 / 256
DEFAULT_NOISE_PROB = 0.5


class NoiseKind(StrEnum):
    """
    Kinds of image corruption known to the noise pool.

    Attributes:
        IDENTITY: No change.

        JPEG: Differentiable JPEG approximation, param `quality` in [1, 100].

        GAUSSIAN: Additive Gaussian noise, param `var` >= 0.

        RESIZE: Bilinear downscale by `factor` in (0, 1] and back up.

        MEDIAN_FILTER: Median filter with odd `kernel`; evaluation only.

        ROTATE: Rotation by a seeded angle in [-max_angle, max_angle], or by a
            fixed `angle`; evaluation only.

        CENTER_CROP: Central crop of linear `fraction`, resampled back; evaluation only.
    """

    IDENTITY = "identity"
    JPEG = "jpeg"
    GAUSSIAN = "gaussian"
    RESIZE = "resize"
    MEDIAN_FILTER = "median_filter"
    ROTATE = "rotate"
    CENTER_CROP = "center_crop"


DIFFERENTIABLE_KINDS = frozenset(
    [NoiseKind.IDENTITY, NoiseKind.JPEG, NoiseKind.GAUSSIAN, NoiseKind.RESIZE]
)


class NoiseOp(VeilBaseModel):
    """
    One parametrized corruption.

    Attributes:
        kind (NoiseKind): Corruption kind.

        params (dict[str, float]): Kind-specific parameters.

        differentiable (bool): Whether the op may sit in the training pool;
            derived from `kind` when omitted.
    """

    kind: NoiseKind
    params: dict[str, float] = Field(default_factory=dict)
    differentiable: Optional[bool] = None

    @model_validator(mode="after")
    def check_params(self):
        p = self.params
        if self.kind == NoiseKind.JPEG and not 1 <= p.get("quality", -1) <= 100:
            raise ValueError("jpeg needs `quality` in [1, 100]")
        if self.kind == NoiseKind.GAUSSIAN and p.get("var", -1) < 0:
            raise ValueError("gaussian needs `var` >= 0")
        if self.kind == NoiseKind.RESIZE and not 0 < p.get("factor", -1) <= 1:
            raise ValueError("resize needs `factor` in (0, 1]")
        if self.kind == NoiseKind.MEDIAN_FILTER:
            k = p.get("kernel", -1)
            if k < 1 or int(k) != k or int(k) % 2 == 0:
                raise ValueError("median_filter needs an odd positive `kernel`")
        rotate_ok = "angle" in p or p.get("max_angle", -1) >= 0
        if self.kind == NoiseKind.ROTATE and not rotate_ok:
            raise ValueError("rotate needs `angle` or `max_angle` >= 0")
        if self.kind == NoiseKind.CENTER_CROP and not 0 < p.get("fraction", -1) <= 1:
            raise ValueError("center_crop needs `fraction` in (0, 1]")
        supported = self.kind in DIFFERENTIABLE_KINDS
        if self.differentiable is None:
            self.differentiable = supported
        elif self.differentiable and not supported:
            raise ValueError(f"{self.kind.value} is not differentiable")
        return self

    @property
    def name(self) -> str:
        if not self.params:
            return self.kind.value
        values = ",".join(f"{v:g}" for _, v in sorted(self.params.items()))
        return f"{self.kind.value}:{values}"

    @classmethod
    def identity(cls) -> "NoiseOp":
        return cls(kind=NoiseKind.IDENTITY)

    @classmethod
    def jpeg(cls, quality: float = DEFAULT_JPEG_QUALITY) -> "NoiseOp":
        return cls(kind=NoiseKind.JPEG, params={"quality": quality})

    @classmethod
    def gaussian(cls, var: float = DEFAULT_GAUSSIAN_VAR) -> "NoiseOp":
        return cls(kind=NoiseKind.GAUSSIAN, params={"var": var})

    @classmethod
    def resize(cls, factor: float = DEFAULT_TRAIN_RESIZE) -> "NoiseOp":
        return cls(kind=NoiseKind.RESIZE, params={"factor": factor})

    @classmethod
    def median_filter(cls, kernel: int = DEFAULT_MEDIAN_KERNEL) -> "NoiseOp":
        return cls(kind=NoiseKind.MEDIAN_FILTER, params={"kernel": kernel})

    @classmethod
    def rotate(
        cls, max_angle: float = DEFAULT_MAX_ANGLE, angle: Optional[float] = None
    ) -> "NoiseOp":
        params = {"angle": angle} if angle is not None else {"max_angle": max_angle}
        return cls(kind=NoiseKind.ROTATE, params=params)

    @classmethod
    def center_crop(cls, fraction: float = DEFAULT_CROP_FRACTION) -> "NoiseOp":
        return cls(kind=NoiseKind.CENTER_CROP, params={"fraction": fraction})


class NoisePoolConfig(VeilBaseModel):
    """
    Training noise pool configuration.

    Attributes:
        kinds (list[NoiseKind]): Ops drawn uniformly per batch; differentiable
            kinds only.

        jpeg_quality (float): JPEG quality factor.

        gaussian_var (float): Gaussian variance in [-1, 1] units.

        resize_factor (float): Linear downscale factor of the resize op.

        prob (float): Per-sample probability of applying the drawn op.
    """

    kinds: list[NoiseKind] = Field(
        default_factory=lambda: [
            NoiseKind.IDENTITY,
            NoiseKind.JPEG,
            NoiseKind.GAUSSIAN,
            NoiseKind.RESIZE,
        ]
    )
    jpeg_quality: float = Field(default=DEFAULT_JPEG_QUALITY, ge=1, le=100)
    gaussian_var: float = Field(default=DEFAULT_GAUSSIAN_VAR, ge=0)
    resize_factor: float = Field(default=DEFAULT_TRAIN_RESIZE, gt=0, le=1)
    prob: float = Field(default=DEFAULT_NOISE_PROB, ge=0, le=1)

    @field_validator("kinds")
    @classmethod
    def check_kinds(cls, v: list[NoiseKind]) -> list[NoiseKind]:
        bad = [k.value for k in v if k not in DIFFERENTIABLE_KINDS]
        if bad:
            raise ValueError(f"training pool takes differentiable ops only, got {bad}")
        return v
