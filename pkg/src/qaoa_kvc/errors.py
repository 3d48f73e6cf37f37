class QAOAError(Exception):
    """Base class for errors raised by this package."""

    kind = "error"


class InvalidArgument(QAOAError, ValueError):
    kind = "invalid-argument"


class ResourceLimit(QAOAError):
    kind = "resource-limit"


class UndefinedRatio(QAOAError, ZeroDivisionError):
    kind = "undefined-ratio"


class Unsupported(QAOAError):
    kind = "unsupported"
