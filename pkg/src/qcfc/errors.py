"""Exception types shared across the toolkit."""


class QcfcError(Exception):
    """Base class for all toolkit errors."""


class DataIntegrityError(QcfcError):
    """Input contains NaN or infinite entries."""


class DimensionError(QcfcError):
    """Shapes of related inputs do not line up."""


class DegenerateInputError(QcfcError):
    """Input is constant or too small where variation is required."""


class SchemaError(QcfcError):
    """Labels or schema versions of related objects do not match."""


class ValidationError(QcfcError):
    """A configuration or manifest failed validation."""


class FileFormatError(QcfcError):
    """A data file could not be parsed in the documented format."""
