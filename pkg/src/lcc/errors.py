"""Exception hierarchy shared by all lcc modules."""


class LccError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(LccError):
    """Input data violates an invariant (non-finite values, empty dataset, ...)."""


class ParameterError(LccError):
    """A parameter is out of its documented range or inconsistent with the data."""


class FormatError(LccError):
    """A file does not conform to the expected on-disk format."""
