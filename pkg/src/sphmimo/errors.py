"""Exception taxonomy shared across the toolkit.

The command-line layer maps these onto process exit codes: validation
failures exit with 2, file and format problems with 3, numeric domain
errors with 4.
"""


class ValidationError(Exception):
    """A config block or argument set failed validation.

    The message names the offending field (e.g. ``scene.loudspeaker.cap_alpha``).
    """


class FormatError(Exception):
    """A file exists but its contents do not match the documented format."""


class DomainError(ValueError):
    """A numeric argument lies outside the mathematical domain of an operation."""
