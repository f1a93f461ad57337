"""Exception hierarchy shared across the package."""


class VhetposError(Exception):
    """Base class for every error raised by vhetpos."""


class NearSingular(VhetposError):
    pass


class ZeroRange(VhetposError):
    pass


class ParseError(VhetposError):
    def __init__(self, message, line=None, block=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if block is not None:
            where.append(f"block {block}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.block = block


class KeplerNoConvergence(VhetposError):
    pass


class InsufficientMeasurements(VhetposError):
    pass


class SingularGeometry(VhetposError):
    pass


class NoConvergence(VhetposError):
    pass


class ZeroRedundancy(VhetposError):
    pass


class NumericalDegeneracy(VhetposError):
    pass


class ConfigError(VhetposError):
    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class EmptyInput(VhetposError):
    pass
