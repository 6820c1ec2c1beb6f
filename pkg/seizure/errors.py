"""Exception hierarchy shared by the library and the command-line front end."""


class SeizureError(Exception):
    """Base class; every subclass carries a machine-parsable class token and exit code."""

    error_class = "error"
    exit_code = 1


class ConfigError(SeizureError, ValueError):
    error_class = "config_error"
    exit_code = 2


class ShapeChainError(ConfigError):
    """A pipeline's declared shapes do not compose."""

    error_class = "shape_chain_error"

    def __init__(self, stage: str, detail: str) -> None:
        super().__init__(f"stage '{stage}': {detail}")
        self.stage = stage


class DataError(SeizureError, ValueError):
    error_class = "data_error"
    exit_code = 3


class HeaderError(DataError):
    error_class = "header_error"


class ChannelMismatchError(DataError):
    error_class = "channel_mismatch"


class SampleCountError(DataError):
    error_class = "sample_count_mismatch"


class RangeError(DataError):
    error_class = "range_error"


class RecordTooShortError(DataError):
    error_class = "record_too_short"


class AlignmentError(DataError):
    error_class = "alignment_error"


class ShapeError(DataError):
    """Array dimensions do not match what an operation expects."""

    error_class = "shape_error"


class NumericError(SeizureError, RuntimeError):
    error_class = "numeric_failure"
    exit_code = 4


class NonFiniteError(NumericError):
    error_class = "non_finite"

    def __init__(self, layer: str, detail: str = "non-finite values") -> None:
        super().__init__(f"{detail} in layer '{layer}'")
        self.layer = layer
