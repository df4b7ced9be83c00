"""Exception types shared across the package."""


class GreedysfError(Exception):
    """Base class for all package errors."""


class ParseError(GreedysfError):
    """Malformed or non-canonical serialized input."""


class InputError(GreedysfError):
    """Invalid argument or violated operation precondition."""


class CapExceededError(InputError):
    """An exact-oracle size cap was exceeded."""


class RunError(GreedysfError):
    """The online run could not proceed (e.g. an unreachable pair)."""


class InternalConsistencyError(GreedysfError):
    """A property the construction guarantees failed to hold.

    Raising this is a reportable finding about the inputs, not a crash path:
    callers are expected to surface the message verbatim.
    """
