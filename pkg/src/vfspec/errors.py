"""Exception hierarchy shared by all modules."""


class VfspecError(Exception):
    """Base class for errors raised by vfspec."""


class ParseError(VfspecError, ValueError):
    """Malformed expression or spec string; ``position`` is a character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.message = message
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class SpecError(VfspecError, ValueError):
    """Malformed domain, metric or field specification."""


class EvalDomainError(VfspecError, ArithmeticError):
    """An expression was evaluated at a pole, off a branch, or overflowed."""

    def __init__(self, reason: str, node=None, point=None):
        self.reason = reason
        self.node = node
        self.point = point
        text = reason
        if node is not None:
            from .expr import to_string  # expr imports this module
            text += f" in {to_string(node)}"
        if point is not None:
            text += f" at {tuple(float(v) for v in point)}"
        super().__init__(text)


class GeometryError(VfspecError, ArithmeticError):
    """Metric is singular or not positive-definite where it is needed."""


class FlowExitError(VfspecError):
    """The integral curve left the domain before the requested time."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        self.bracket = bracket
        super().__init__(f"{message}; exit time in [{bracket[0]:.9g}, {bracket[1]:.9g}]")


class FlowError(VfspecError):
    """The integrator could not take a step (pole inside the domain)."""


class PreconditionError(VfspecError, ValueError):
    """A spectral check was called on data that violates its hypotheses."""
