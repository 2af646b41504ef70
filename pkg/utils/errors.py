"""Exception types shared across the geodesic calculus packages."""

from typing import Optional


class GeoCalcError(Exception):
    """Base class for all library errors."""


class SingularPoint(GeoCalcError):
    """Nearest point on a manifold is not unique (point too close to the singular set)."""


class DegenerateWeights(GeoCalcError):
    """Kernel weights collapsed to zero or NaN."""


class DimensionMismatch(GeoCalcError, ValueError):
    """Array dimensions do not match what the operation expects."""


class NonFiniteLoss(GeoCalcError):
    """Training produced a NaN/inf loss."""

    def __init__(self, step: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at step {step}")
        self.step = step
        self.loss = loss


class LineSearchFailure(GeoCalcError):
    """Strong-Wolfe line search could not find an acceptable step.

    Carries the best iterate seen so far so callers can restart from it.
    """

    def __init__(self, x, fun: float, grad, iterations: int = 0):
        super().__init__(f"line search failed at f={fun:.6e}")
        self.x = x
        self.fun = fun
        self.grad = grad
        self.iterations = iterations


class NotConverged(GeoCalcError):
    """A solver stopped without reaching its target accuracy."""

    def __init__(self, report, path=None):
        reason = getattr(report, "stop_reason", "unknown")
        super().__init__(f"solver did not converge (stop reason: {reason})")
        self.report = report
        self.path = path


class DegenerateStep(GeoCalcError):
    """Exponential step requested from two (numerically) identical points."""


class AntipodalBlock(GeoCalcError):
    """Spherical block pair is (nearly) antipodal; the distance gradient is singular."""


class ConfigError(GeoCalcError):
    """Invalid configuration value or file."""


class ArtifactFormatError(GeoCalcError):
    """Malformed artifact file (point cloud, checkpoint, path, study table)."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        text = f"{', '.join(prefix)}: {message}" if prefix else message
        super().__init__(text)
        self.line = line
        self.field = field
