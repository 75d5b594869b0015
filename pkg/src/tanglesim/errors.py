"""Exception hierarchy shared by every tanglesim module."""


class TangleError(Exception):
    """Base class for all errors raised by tanglesim."""


class UnknownParent(TangleError):
    pass


class DuplicateId(TangleError):
    pass


class SelfConflictingPast(TangleError):
    """The site's past cone (itself included) holds two directly conflicting sites."""


class DuplicateSpendBranch(TangleError):
    pass


class InvalidSite(TangleError):
    pass


class UnknownSite(TangleError, KeyError):
    pass


class NotConflictFree(TangleError):
    pass


class NoChildren(TangleError):
    pass


class EmptyTipSet(TangleError):
    pass


class ParentsNotInTips(TangleError):
    pass


class SiteNotInTangle(TangleError):
    pass


class ConfigInvalid(TangleError, ValueError):
    pass


class MissingConflict(TangleError):
    pass


class NoAttackConfigured(TangleError):
    pass


class ParseError(ConfigInvalid):
    """Malformed configuration line; ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnknownKey(ParseError):
    pass


class TypeMismatch(ParseError):
    pass


class RangeError(ParseError):
    """A well-typed value outside its allowed range."""
