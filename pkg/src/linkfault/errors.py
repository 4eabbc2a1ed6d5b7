"""Exception hierarchy shared by all modules."""


class LinkFaultError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(LinkFaultError, ValueError):
    pass


class ConnectivityFailure(LinkFaultError):
    pass


class ParseError(LinkFaultError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(LinkFaultError, ValueError):
    pass


class MissingCoordinates(LinkFaultError, ValueError):
    pass


class UnknownLink(LinkFaultError, KeyError):
    pass


class DuplicateLink(LinkFaultError, ValueError):
    pass


class DisconnectsGraph(LinkFaultError, ValueError):
    pass


class Unreachable(LinkFaultError):
    pass


class ClassTooSmall(LinkFaultError, ValueError):
    pass


class DimensionMismatch(LinkFaultError, ValueError):
    pass


class SingleClass(LinkFaultError, ValueError):
    pass


class Diverged(LinkFaultError, ArithmeticError):
    pass


class ConstantTarget(LinkFaultError, ValueError):
    pass


class VersionMismatch(LinkFaultError):
    pass


class CorruptModel(LinkFaultError):
    pass


class FingerprintMismatch(LinkFaultError):
    pass


class NoFaultyPoints(LinkFaultError, ValueError):
    pass
