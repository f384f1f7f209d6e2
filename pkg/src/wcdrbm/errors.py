"""Exception types that map to distinct CLI exit categories."""


class WcdrbmError(Exception):
    """Base class for library-raised failures."""


class EnumerationLimitError(WcdrbmError):
    """The visible space is too large to enumerate exactly."""


class DatasetFormatError(WcdrbmError):
    """A dataset or sample-set file violates the on-disk format."""


class NonFiniteError(WcdrbmError):
    """A parameter update produced NaN or infinity."""
