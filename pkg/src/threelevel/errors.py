"""Exception hierarchy shared by all modules."""


class ThreeLevelError(Exception):
    """Base class for every error raised by this package."""


class DegenerateTransition(ThreeLevelError):
    pass


class ThreePhotonResonance(ThreeLevelError):
    pass


class DegenerateCubic(ThreeLevelError):
    pass


class NotAnEigenvalue(ThreeLevelError):
    pass


class EmptyState(ThreeLevelError):
    pass


class UndefinedForVacuum(ThreeLevelError):
    pass


class DimensionTooLarge(ThreeLevelError):
    pass


class ConvergenceFailure(ThreeLevelError):
    pass


class NoMatch(ThreeLevelError):
    pass


class ConfigError(ThreeLevelError):
    pass


class ParseError(ConfigError):
    def __init__(self, lineno, token, reason=""):
        self.lineno = lineno
        self.token = token
        msg = f"line {lineno}: cannot parse {token!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class UnknownKey(ConfigError):
    def __init__(self, lineno, key):
        self.lineno = lineno
        self.key = key
        super().__init__(f"line {lineno}: unknown key {key!r}")


class MissingKey(ConfigError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"missing required key {key!r}")
