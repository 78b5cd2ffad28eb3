"""Exception hierarchy. ``exit_code`` maps each class to the CLI exit status."""


class FactsumError(Exception):
    exit_code = 3


class UsageError(FactsumError, ValueError):
    exit_code = 1


class DataError(FactsumError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(DataError):
    sentence = None


class DatasetError(DataError):
    pass


class CapacityError(DataError):
    pass


class TrainingError(FactsumError):
    exit_code = 3
