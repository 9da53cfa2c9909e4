from typing import Optional


class VeilException(Exception):
    """Base class for every error raised by veilface."""

    def __init__(self, message="Veilface operation failed"):
        self.message = message
        super().__init__(self.message)


class InputShapeError(VeilException):
    """Raised when an image tensor does not have the shape a network expects."""

    def __init__(self, message="Input has an unexpected shape"):
        super().__init__(message)


class DimensionMismatchError(VeilException):
    """Raised when two embeddings, pyramids or parameter sets do not line up."""

    def __init__(self, message="Dimensions do not match"):
        super().__init__(message)


class EmptySetError(VeilException):
    """Raised when an operation needs at least one element and got none."""

    def __init__(self, message="Empty input set"):
        super().__init__(message)


class InvalidAttributeError(VeilException):
    """Raised when an attribute vector has the wrong width or non-binary entries."""

    def __init__(self, message="Attribute vector is invalid"):
        super().__init__(message)


class NumericalGuardError(VeilException):
    """Raised when a probability leaves (0, 1) even after clamping."""

    def __init__(self, message="Probability outside (0, 1) after clamping"):
        super().__init__(message)


class NonFiniteLossError(VeilException):
    """Raised when a training loss term becomes NaN or infinite."""

    def __init__(
        self, message="Non-finite loss encountered", diagnostics: Optional[dict] = None
    ):
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message}: {self.diagnostics}" if diagnostics else message)


class MissingComponentError(VeilException):
    """Raised when a required network or ensemble has not been provided."""

    def __init__(self, message="Required component is missing"):
        super().__init__(message)


class InsufficientDataError(VeilException):
    """Raised when a dataset or pair set is too small for the requested operation."""

    def __init__(self, message="Not enough data"):
        super().__init__(message)


class UnknownNoiseOpError(VeilException):
    """Raised when a noise op kind is not known to the noise pool."""

    def __init__(self, message="Unknown noise op"):
        super().__init__(message)


class NotDifferentiableError(VeilException):
    """Raised when a gradient probe is requested through a non-differentiable op."""

    def __init__(self, message="Noise op is not differentiable"):
        super().__init__(message)


class CheckpointVersionError(VeilException):
    """Raised when a checkpoint was written with an unsupported format version."""

    def __init__(self, message="Unsupported checkpoint format version"):
        super().__init__(message)


class CheckpointIntegrityError(VeilException):
    """Raised when a checkpoint file is corrupted or truncated."""

    def __init__(self, message="Checkpoint failed its integrity check"):
        super().__init__(message)


class ConfigMismatchError(VeilException):
    """Raised when resuming from a checkpoint written under a different config."""

    def __init__(self, message="Checkpoint config hash does not match"):
        super().__init__(message)


class StageDependencyError(VeilException):
    """Raised when a curriculum stage starts without its predecessor's checkpoint."""

    def __init__(self, message="Previous stage checkpoint not found"):
        super().__init__(message)


class DatasetError(VeilException):
    """Raised when dataset ingestion finds invalid rows or files."""

    def __init__(self, message="Dataset is invalid", errors: Optional[list] = None):
        self.errors = errors or []
        if self.errors:
            message = message + ":\n" + "\n".join(self.errors)
        super().__init__(message)


class OverwriteRefusedError(VeilException):
    """Raised when an output already exists and overwriting was not forced."""

    def __init__(self, message="Output exists, pass --force to overwrite"):
        super().__init__(message)
