"""Exception and warning types raised across the package."""


class TryOnError(Exception):
    """Base class for all errors raised by accessory_tryon."""


class ChannelError(TryOnError, ValueError):
    pass


class DimensionError(TryOnError, ValueError):
    pass


class LabelError(TryOnError, ValueError):
    pass


class GeometryError(TryOnError, ValueError):
    pass


class DegenerateGeometryError(GeometryError):
    pass


class NoPersonError(TryOnError, ValueError):
    pass


class SchemaError(TryOnError, ValueError):
    pass


class RangeError(TryOnError, ValueError):
    pass


class NoArmError(TryOnError):
    pass


class InsufficientContoursError(TryOnError):
    pass


class LocalizationError(TryOnError):
    pass


class NumericalError(TryOnError, ArithmeticError):
    pass


class DivergenceError(TryOnError, ArithmeticError):
    def __init__(self, step, loss):
        super().__init__(f"non-finite loss {loss!r} at step {step}")
        self.step = step
        self.loss = loss


class WindowError(TryOnError, ValueError):
    pass


class EmptyEvalError(TryOnError):
    pass


class LayoutError(TryOnError):
    pass


class EmptyRegionWarning(UserWarning):
    """The accessory region mask came out empty; processing continues."""
