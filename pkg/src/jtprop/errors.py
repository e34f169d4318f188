"""Exception hierarchy.

Everything raised on purpose derives from :class:`JtpropError`, so callers
(and the CLI exit-code mapping) can distinguish expected failures from bugs.
"""


class JtpropError(Exception):
    """Base class for all jtprop errors."""


class InputError(JtpropError):
    """A problem with user-supplied data (files, networks, evidence)."""


# --- model -----------------------------------------------------------------

class CyclicGraphError(InputError):
    """The parent relation contains a directed cycle."""


class CardinalityTooSmallError(InputError):
    def __init__(self, variable):
        self.variable = variable
        super().__init__(f"variable {variable!r} needs cardinality >= 2")


class CptRowNotNormalizedError(InputError):
    def __init__(self, variable, row, total):
        self.variable = variable
        self.row = row
        self.total = total
        super().__init__(
            f"CPT row {row} of variable {variable!r} sums to {total!r}, not 1"
        )


class UnknownVariableError(InputError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown variable {name!r}")


class StateOutOfRangeError(InputError):
    def __init__(self, variable, state, cardinality):
        self.variable = variable
        super().__init__(
            f"state {state} out of range for variable {variable!r} "
            f"(cardinality {cardinality})"
        )


# --- parsing ---------------------------------------------------------------

class ParseError(InputError):
    """Syntax error in a network document, with source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class ArityMismatchError(InputError):
    def __init__(self, block, expected, got):
        self.block = block
        self.expected = expected
        self.got = got
        super().__init__(
            f"potential block {block!r} expects {expected} data values, got {got}"
        )


class UnsupportedFeatureError(InputError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unsupported NET feature: {name}")


class SchemaViolationError(InputError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


# --- potential tables ------------------------------------------------------

class IndexOutOfRangeError(InputError):
    pass


class ScopeNotContainedError(InputError):
    pass


class ZeroMassError(JtpropError):
    """Total mass is zero; the observed evidence has probability 0."""


# --- compilation -----------------------------------------------------------

class NotChordalError(JtpropError):
    """Defensive: the given elimination order is not perfect for the graph."""


class NoCoveringCliqueError(JtpropError):
    """No clique covers a CPT scope; indicates a compiler bug."""


# --- propagation -----------------------------------------------------------

class InconsistentDivisionError(JtpropError):
    """A separator entry is zero while its fresh marginal is not.

    Cannot arise in valid propagation; signals corrupted state.
    """


# --- oracle / perfmodel ----------------------------------------------------

class JointTooLargeError(InputError):
    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f"joint table has {size} entries, above the cap {cap}")


class InsufficientSamplesError(InputError):
    pass
