"""Exception types shared across the package."""


class EkzetaError(Exception):
    """Base class for all package errors."""


class PrecisionLossError(EkzetaError):
    """Requested precision is unreachable with the configured depth/budget."""


class BoundExceededError(EkzetaError):
    """An input exceeds a configured size bound (discriminant, modulus norm, ...)."""


class DegenerateLatticeError(EkzetaError):
    """Basis vectors are collinear or otherwise do not span a lattice."""


class NotALatticePointError(EkzetaError):
    """A point claimed to lie on a lattice does not (exact coordinate test)."""


class DivisorPointError(EkzetaError):
    """Evaluation requested at a point of the function's divisor."""


class PoleError(EkzetaError):
    """Evaluation requested at a pole of an analytically continued function."""


class CalibrationError(EkzetaError):
    """No candidate convention survived calibration, or calibration is missing."""


class UsageError(EkzetaError):
    """Bad configuration or CLI usage."""
