"""Exception hierarchy for circuitgp."""


class CircuitGPError(Exception):
    """Base class for all circuitgp errors."""


class UnknownFunctionError(CircuitGPError):
    """A gate/element name is not in the function set."""


class UnknownVariableError(CircuitGPError):
    """A terminal references an input variable that does not exist."""


class PrefixSyntaxError(CircuitGPError):
    """Malformed prefix-notation circuit text."""


class ArityError(CircuitGPError):
    """A function node was given the wrong number of children."""


class TableSyntaxError(CircuitGPError):
    """Malformed truth-table text."""

    def __init__(self, message, filename=None, line=None):
        self.filename = filename
        self.line = line
        where = ""
        if filename is not None:
            where = f"{filename}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class MissingCombinationError(CircuitGPError):
    """A truth table does not cover every input combination."""


class DuplicateCombinationError(CircuitGPError):
    """An input combination appears more than once in a truth table."""


class WidthMismatchError(CircuitGPError):
    """A truth-table row has the wrong number of input or output bits."""


class TooManyInputsError(CircuitGPError):
    """A truth table declares more inputs than the configured limit."""


class SequentialNotAllowedError(CircuitGPError):
    """A flip-flop-bearing tree was passed to a combinational-only operation."""


class ConfigError(CircuitGPError):
    """An evolution configuration violates its invariants."""
