from app.utils.constants import EXIT_MISSING_ARTIFACT, EXIT_NUMERIC, EXIT_USAGE


class MedalcastError(Exception):
    exit_code = EXIT_NUMERIC


# usage, I/O and input data

class DataError(MedalcastError):
    exit_code = EXIT_USAGE

class DataIOError(DataError):
    pass

class SchemaError(DataError):
    pass

class UnknownAliasError(SchemaError):
    pass

class ConsistencyError(DataError):
    pass

class ImputationError(DataError):
    pass

class EmbeddingError(DataError):
    pass

class UnknownCategoryValueError(EmbeddingError):
    pass

class CodebookCollisionError(EmbeddingError):
    pass

class UnknownSportError(DataError):
    pass

class UsageError(DataError):
    pass


class MissingArtifactError(MedalcastError):
    exit_code = EXIT_MISSING_ARTIFACT


# numeric failures

class NumericError(MedalcastError):
    pass

class ShapeError(NumericError):
    pass

class RangeError(NumericError):
    pass

class InsufficientDataError(NumericError):
    pass

class DegenerateError(NumericError):
    pass

class IterationLimitError(NumericError):
    pass

class ModelStateError(NumericError):
    pass

class ArimaFitError(NumericError):
    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate

class ExplosiveFitError(ArimaFitError):
    pass

class SelectionError(NumericError):
    def __init__(self, message: str, failures=None):
        super().__init__(message)
        self.failures = failures or []

class TrainingError(NumericError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch

class UndefinedTestError(NumericError):
    pass

class AttributionError(NumericError):
    def __init__(self, message: str, subset=None):
        super().__init__(message)
        self.subset = subset

class PartitionError(NumericError):
    pass
