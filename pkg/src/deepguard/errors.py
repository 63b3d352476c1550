"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class DeepGuardError(Exception):
    exit_code = 1


class ConfigError(DeepGuardError):
    exit_code = 2


class DataError(DeepGuardError):
    exit_code = 3


class NumericError(DeepGuardError):
    exit_code = 4


class DimensionError(DataError, ValueError):
    pass


class CalibrationError(DataError):
    pass


class DomainError(NumericError, ValueError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class VersionError(DataError):
    pass


class ParseError(DataError):
    pass


class StateError(DeepGuardError, RuntimeError):
    pass
