"""Error taxonomy shared by all modules.

Exit-code mapping used by the CLI: FormatError/IntegrityError/InputError -> 2,
GuardError -> 3, anything else -> 4.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ToolkitError):
    """A file does not conform to its declared format."""


class IntegrityError(ToolkitError):
    """A file parses but its contents are inconsistent or incomplete."""


class InputError(ToolkitError):
    """Invalid argument values (unknown head, bad rate, incomplete table...)."""


class ConventionError(InputError):
    """An operation was invoked under a sign convention it does not support."""


class GuardError(ToolkitError):
    """A combinatorial safety ceiling was exceeded."""
