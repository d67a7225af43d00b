"""Exception and warning types shared across the package."""


class KpboxError(Exception):
    """Base class for kpbox errors."""


class RepresentationError(KpboxError):
    """A field was passed in the wrong representation (physical vs spectral)."""


class NonZeroXMean(KpboxError):
    """The zero-wavenumber column in x exceeds tolerance; the x-antiderivative
    is undefined. Project with project_zero_xmean first."""


class BlowUp(KpboxError):
    """The sup norm exceeded the configured ceiling during time stepping."""

    def __init__(self, t, sup, ceiling):
        super().__init__(f"|u|_inf = {sup:.6g} exceeded ceiling {ceiling:.6g} at t = {t:.6g}")
        self.t = t
        self.sup = sup
        self.ceiling = ceiling


class DegenerateDenominator(KpboxError):
    """A norm factor in the interpolation ratio is numerically zero."""


class ConstructionFailed(KpboxError):
    """The weight profile builder found a violated inequality."""


class InsufficientSamples(KpboxError):
    """Too few samples for the requested finite-difference stencil."""


class ParseError(KpboxError):
    """Config text could not be parsed."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line
        self.message = message


class ValidationError(KpboxError):
    """A config value violates a documented constraint.

    Messages cite the constraint tag they enforce (see README, "constraint tags").
    """


class BadMagic(KpboxError):
    """Snapshot file does not start with the KPF1 magic."""


class TruncatedFile(KpboxError):
    """Snapshot file is shorter than its header promises."""


class GridMismatch(KpboxError):
    """Snapshot grid does not match the run configuration."""


class MissingCsv(KpboxError):
    """CSV input for plot-script emission is absent or empty."""


class ResolutionWarning(UserWarning):
    """High-derivative diagnostics requested on under-resolved data."""


class RegionOutsideBox(UserWarning):
    """A diagnostic region extends beyond the periodic box."""


class ProjectedMassWarning(UserWarning):
    """Loading initial data removed a non-negligible x-mean component."""
