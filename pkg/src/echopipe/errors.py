"""Exception types shared across the package."""


class EchopipeError(Exception):
    """Base class for all echopipe errors."""


class InvalidMetadata(EchopipeError):
    """An acquisition/phantom/grid metadata field is out of contract."""

    def __init__(self, field, reason=""):
        self.field = field
        self.reason = reason
        msg = f"invalid metadata field {field!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class DimensionMismatch(EchopipeError):
    """Tensor dimensions disagree with the paired metadata."""

    def __init__(self, axis, reason=""):
        self.axis = axis
        self.reason = reason
        msg = f"dimension mismatch on axis {axis}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class FormatError(EchopipeError):
    """A file payload violates its on-disk format."""

    def __init__(self, offset, reason):
        self.offset = offset
        self.reason = reason
        super().__init__(f"format error at byte {offset}: {reason}")


class WrongStage(EchopipeError):
    """An image was passed to an operation expecting a different stage."""


class EmptyCoefficients(EchopipeError):
    """FIR filter has no coefficients."""


class AxisTooShort(EchopipeError):
    """Transform axis is shorter than the operation requires."""


class AllZeroInput(EchopipeError):
    """Dynamic-range adjustment needs at least one positive element."""


class NonPositiveRange(EchopipeError):
    """Dynamic range in dB must be strictly positive."""


class WindowTooLarge(EchopipeError):
    """Sliding window does not fit inside the image."""


class UnknownOperator(EchopipeError):
    """Pipeline spec references an operator kind that is not registered."""

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown operator kind {name!r}")


class CycleDetected(EchopipeError):
    """Pipeline graph contains a cycle."""

    def __init__(self, nodes):
        self.nodes = list(nodes)
        super().__init__(f"cycle detected involving nodes {self.nodes}")


class PortMismatch(EchopipeError):
    """A graph edge connects incompatible or ill-formed ports."""

    def __init__(self, edge, expected, found):
        self.edge = edge
        self.expected = expected
        self.found = found
        super().__init__(
            f"port mismatch on edge {edge}: expected {expected}, found {found}"
        )


class InsufficientFrames(EchopipeError):
    """Benchmark source cannot supply the requested number of frames."""


class OperatorFailed(EchopipeError):
    """A pipeline node raised; carries the node name and the original error."""

    def __init__(self, node, cause):
        self.node = node
        self.__cause__ = cause
        super().__init__(f"operator {node!r} failed: {cause}")
