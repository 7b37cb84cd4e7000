"""Exception types shared across the package.

The CLI maps these onto exit codes: parse failures are input errors (2),
validation and model-format failures are validation errors (3), and
InvariantError marks an internal self-check breach (4).
"""


class ParseError(ValueError):
    """A structured-text or CSV input could not be parsed; message carries
    the file, line/row number and the offending content."""


class ValidationError(ValueError):
    """A value violates a documented invariant; message names the field."""


class DegenerateProfileError(ValueError):
    """A distribution is unusable for density estimation (too few or
    all-identical values)."""


class ModelFormatError(ValueError):
    """A persisted classifier file is missing fields or carries an
    unknown format version."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
