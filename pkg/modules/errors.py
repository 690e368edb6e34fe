# modules/errors.py


class TPMError(Exception):
    """Base class for every error raised by the simulation pipeline."""


class DimensionMismatchError(TPMError, ValueError):
    pass


class NotHermitianError(TPMError, ValueError):
    pass


class NotUnitaryError(TPMError, ValueError):
    pass


class InvalidStateError(TPMError, ValueError):
    """A vector or matrix fails the norm, trace or positivity requirements of a state."""


class SchemeError(TPMError, ValueError):
    """A measurement scheme cannot be built or lacks what an operation needs."""


class ScenarioFormatError(TPMError, ValueError):
    """A scenario document failed to parse or validate; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigurationError(TPMError, ValueError):
    pass
