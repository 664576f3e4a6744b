"""Exception hierarchy.

Errors fall into three families that the command line maps onto exit codes:
configuration (2), data (3) and numerical (4).
"""


class SolarcastError(Exception):
    """Base class. ``context`` collects tags added while the error propagates."""

    exit_code = 1

    def __init__(self, message="", **context):
        super().__init__(message)
        self.context = dict(context)

    def tag(self, **context):
        self.context.update(context)
        return self

    def __str__(self):
        msg = super().__str__()
        if self.context:
            tags = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
            msg = f"{msg} [{tags}]" if msg else f"[{tags}]"
        return msg


class ConfigError(SolarcastError, ValueError):
    exit_code = 2


class DataError(SolarcastError, ValueError):
    exit_code = 3


class NumericalError(SolarcastError, ArithmeticError):
    exit_code = 4


# -- data ------------------------------------------------------------------

class SchemaError(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, name, **context):
        super().__init__(f"column {name!r} not found in header", **context)
        self.name = name


class BadTimestamp(DataError):
    def __init__(self, row, value=None, **context):
        super().__init__(f"unparseable timestamp {value!r} at data row {row}", **context)
        self.row = row


class NonMonotonicTimestamps(DataError):
    def __init__(self, row, **context):
        super().__init__(f"timestamps not strictly increasing at data row {row}", **context)
        self.row = row


class EmptyAfterClean(DataError):
    pass


class TooFewRows(DataError):
    pass


class SampleTooLarge(DataError):
    pass


class UnknownFeature(DataError):
    def __init__(self, name, **context):
        super().__init__(f"unknown feature {name!r}", **context)
        self.name = name


class TargetInFeatures(DataError):
    pass


class FeatureMismatch(DataError):
    def __init__(self, difference, **context):
        super().__init__(f"feature names differ: {sorted(difference)}", **context)
        self.difference = set(difference)


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


# -- numerical -------------------------------------------------------------

class ConstantColumn(NumericalError):
    def __init__(self, name, **context):
        super().__init__(f"feature {name!r} has zero variance", **context)
        self.name = name


class ConstantTarget(NumericalError):
    pass


class NumericalFailure(NumericalError):
    pass


class DidNotConverge(NumericalError):
    """Raised by coordinate descent; carries the last iterate."""

    def __init__(self, message, model=None, kkt=None, **context):
        super().__init__(message, **context)
        self.model = model
        self.kkt = kkt


# -- argument checks -------------------------------------------------------

class BadFoldCount(ConfigError):
    pass


class TooManyFeatures(ConfigError):
    pass
