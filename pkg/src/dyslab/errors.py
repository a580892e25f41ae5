"""Exception taxonomy shared across the toolkit.

Hierarchy matters for the CLI's exit codes: UsageError -> 1, DataError -> 2,
anything else escaping to the top level -> 3.
"""


class DyslabError(Exception):
    """Base class for all toolkit errors."""


class UsageError(DyslabError):
    """Bad invocation: unknown config key, missing flag, invalid combination."""


class DataError(DyslabError):
    """Bad input data: malformed file, wrong shape, out-of-range value."""


# -- file decoding --------------------------------------------------------

class MissingFile(DataError):
    pass


class BadMagic(DataError):
    pass


class UnsupportedEncoding(DataError):
    pass


class TruncatedData(DataError):
    pass


class ShapeOverflow(DataError):
    """Declared element count disagrees with the payload actually present."""


class DuplicateName(DataError):
    pass


class ArchMismatch(DataError):
    """Weight file manifest does not match the target architecture."""


# -- numeric / shape contracts --------------------------------------------

class ValueOutOfRange(DataError):
    pass


class BadRange(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptySignal(DataError):
    pass


class NotAConvLayer(DataError):
    pass


# -- dataset assembly ------------------------------------------------------

class EmptyClass(DataError):
    pass


class MixedFeatureShapes(DataError):
    pass


class TooSmall(DataError):
    pass


class OutOfRange(DataError):
    pass


# -- metrics ----------------------------------------------------------------

class LengthMismatch(DataError):
    pass


class Empty(DataError):
    pass


class EmptyReference(DataError):
    pass
