"""Exception hierarchy shared by all fairsemi modules."""


class FairSemiError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(FairSemiError, KeyError):
    """A column or config key named by a schema does not exist."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DataValueError(FairSemiError, ValueError):
    """Input values violate a documented contract (e.g. non-binary labels)."""


class EmptyDataError(DataValueError):
    pass


class MissingLabelError(DataValueError):
    pass


class SplitError(DataValueError):
    pass


class ShapeError(DataValueError):
    pass


class SizeError(DataValueError):
    pass


class SpecError(DataValueError):
    pass


class DegenerateDataError(DataValueError):
    pass


class EmptyGroupError(DataValueError):
    pass


class UndefinedRateError(DataValueError):
    """A rate's denominator is empty (e.g. a protected group is absent)."""


class TrainingError(FairSemiError, RuntimeError):
    """SGD produced non-finite parameters or a base model failed to train."""


class ConfigError(FairSemiError, ValueError):
    pass
