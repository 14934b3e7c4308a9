"""Exception hierarchy shared by all stages."""


class PolifragError(Exception):
    """Base class for every error raised by this package."""


class ParseError(PolifragError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(PolifragError):
    pass


class ValidationError(PolifragError):
    pass


class ContractError(PolifragError, ValueError):
    """A precondition of a public operation was violated."""


class SchemaError(PolifragError):
    """An intermediate JSON file has the wrong kind or schema version."""


class EmptyHierarchyError(PolifragError):
    pass


class UndefinedSubgroupError(PolifragError):
    pass


class ConfigError(PolifragError):
    pass


class StageError(PolifragError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
