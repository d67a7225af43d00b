"""Periodic-grid field arithmetic.

A real scalar field lives on a uniform periodic box, stored either as
physical samples (shape ``(ny, nx)``, row = y sample, column = x sample)
or as half-complex spectral coefficients from ``rfft2`` (shape
``(ny, nx//2 + 1)``, x-wavenumber along the last axis).

Normalization convention: transforms use ``norm="ortho"``, so Parseval
reads ``integral(f^2) == (lx*ly/(nx*ny)) * sum_full |c|^2`` where the full
sum doubles the interior x-columns of the half spectrum. Derivatives are
Fourier multipliers ``(i*k)^order``; odd-order multipliers zero the
Nyquist line so results stay real. The x-antiderivative is division by
``i*kx`` with the kx = 0 column projected out, which is the periodic
surrogate of integrating from -infinity; it requires x-mean-free input.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import NonZeroXMean, RepresentationError

PHYSICAL = "physical"
SPECTRAL = "spectral"

XMEAN_RTOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box with precomputed wavenumber tables.

    Coordinates are cell-centered at ``-l/2 + d*j`` so the box center sits
    on a grid point. ``nx`` and ``ny`` must be even and at least 8 so the
    2/3 dealiasing band is well defined.
    """

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8 or n % 2 != 0:
                raise ValueError(f"{name} must be even and >= 8, got {n}")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("box lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def x(self) -> np.ndarray:
        return -self.lx / 2 + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return -self.ly / 2 + self.dy * np.arange(self.ny)

    def meshgrid(self):
        """Return ``X, Y`` with shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    @property
    def kx(self) -> np.ndarray:
        """Non-negative x wavenumbers of the half spectrum, 2*pi*j/lx."""
        return 2 * np.pi * np.fft.rfftfreq(self.nx, d=self.dx)

    @property
    def ky(self) -> np.ndarray:
        """Full y wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    @property
    def spectral_shape(self):
        return (self.ny, self.nx // 2 + 1)

    def wavenumber_mesh(self):
        """Broadcastable ``KX (1, nx//2+1)`` and ``KY (ny, 1)``."""
        return self.kx[None, :], self.ky[:, None]

    def dealias_mask(self) -> np.ndarray:
        """Boolean keep-mask of the 2/3 rule: keep |j| <= floor(n/3) per axis."""
        jx = np.arange(self.nx // 2 + 1)
        jy = np.fft.fftfreq(self.ny, d=1.0 / self.ny)
        keep_x = jx <= self.nx // 3
        keep_y = np.abs(jy) <= self.ny // 3
        return keep_y[:, None] & keep_x[None, :]


@dataclass
class Field:
    """A real scalar field with a physical or spectral representation tag."""

    grid: Grid
    data: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        expected = (self.grid.ny, self.grid.nx) if self.rep == PHYSICAL else self.grid.spectral_shape
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match {self.rep} shape {expected}")

    def require(self, rep: str) -> None:
        if self.rep != rep:
            raise RepresentationError(f"expected a {rep} field, got {self.rep}")

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy(), self.rep)


def field_from_values(grid: Grid, values: np.ndarray) -> Field:
    """Wrap physical samples (shape ``(ny, nx)``) as a Field."""
    return Field(grid, np.asarray(values, dtype=float), PHYSICAL)


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros((grid.ny, grid.nx)), PHYSICAL)


def to_spectral(f: Field) -> Field:
    f.require(PHYSICAL)
    return Field(f.grid, np.fft.rfft2(f.data, norm="ortho"), SPECTRAL)


def from_spectral(f: Field) -> Field:
    f.require(SPECTRAL)
    g = f.grid
    return Field(g, np.fft.irfft2(f.data, s=(g.ny, g.nx), norm="ortho"), PHYSICAL)


def _spectral_data(f: Field) -> np.ndarray:
    return f.data if f.rep == SPECTRAL else np.fft.rfft2(f.data, norm="ortho")


def _wrap_like(f: Field, spec: np.ndarray) -> Field:
    """Return spec coefficients in the representation of the input field."""
    if f.rep == SPECTRAL:
        return Field(f.grid, spec, SPECTRAL)
    g = f.grid
    return Field(g, np.fft.irfft2(spec, s=(g.ny, g.nx), norm="ortho"), PHYSICAL)


def deriv_x_multiplier(grid: Grid, order: int) -> np.ndarray:
    kx = grid.kx
    m = (1j * kx) ** order
    if order % 2 == 1:
        m = m.copy()
        m[-1] = 0.0  # Nyquist column: odd multiplier must vanish for a real result
    return np.broadcast_to(m[None, :], grid.spectral_shape)


def deriv_y_multiplier(grid: Grid, order: int) -> np.ndarray:
    ky = grid.ky
    m = (1j * ky) ** order
    if order % 2 == 1:
        m = m.copy()
        m[grid.ny // 2] = 0.0
    return np.broadcast_to(m[:, None], grid.spectral_shape)


def antideriv_x_multiplier(grid: Grid) -> np.ndarray:
    kx = grid.kx
    m = np.zeros(kx.shape, dtype=complex)
    m[1:] = 1.0 / (1j * kx[1:])
    m[-1] = 0.0
    return np.broadcast_to(m[None, :], grid.spectral_shape)


def deriv_x(f: Field, order: int = 1) -> Field:
    """Spectral x-derivative of the given order."""
    if order < 1:
        raise ValueError("order must be a positive integer")
    return _wrap_like(f, deriv_x_multiplier(f.grid, order) * _spectral_data(f))


def deriv_y(f: Field, order: int = 1) -> Field:
    """Spectral y-derivative of the given order."""
    if order < 1:
        raise ValueError("order must be a positive integer")
    return _wrap_like(f, deriv_y_multiplier(f.grid, order) * _spectral_data(f))


def xmean_residual(f: Field) -> float:
    """Relative weight of the kx = 0 column, 0 for the zero field."""
    spec = _spectral_data(f)
    total = np.linalg.norm(spec)
    if total == 0.0:
        return 0.0
    return np.linalg.norm(spec[:, 0]) / total


def antideriv_x(f: Field, project: bool = False) -> Field:
    """Periodic x-antiderivative: divide by i*kx, kx = 0 column zeroed.

    Requires x-mean-free input (relative kx = 0 content below 1e-10);
    pass ``project=True`` to remove the column instead of raising.
    """
    spec = _spectral_data(f)
    if not project and xmean_residual(f) > XMEAN_RTOL:
        raise NonZeroXMean(
            f"kx=0 column holds {xmean_residual(f):.3e} of the spectrum "
            f"(tolerance {XMEAN_RTOL:g}); project_zero_xmean first"
        )
    return _wrap_like(f, antideriv_x_multiplier(f.grid) * spec)


def project_zero_xmean(f: Field) -> Field:
    """Zero the kx = 0 spectral column (subtract per-row x-means). Idempotent."""
    spec = _spectral_data(f).copy()
    spec[:, 0] = 0.0
    return _wrap_like(f, spec)


def dealias(f: Field) -> Field:
    """Zero coefficients above 2/3 of Nyquist in either direction. Idempotent."""
    f.require(SPECTRAL)
    return Field(f.grid, f.data * f.grid.dealias_mask(), SPECTRAL)


def integral(f: Field) -> float:
    """Rectangle-rule integral over the box (spectrally accurate for smooth data)."""
    f.require(PHYSICAL)
    return float(f.data.sum() * f.grid.cell_area)


def inner(f: Field, g: Field) -> float:
    """L2 inner product on the box."""
    f.require(PHYSICAL)
    g.require(PHYSICAL)
    return float((f.data * g.data).sum() * f.grid.cell_area)


def lp_norm(f: Field, p) -> float:
    """L^p norm for p in [1, inf]."""
    f.require(PHYSICAL)
    if p == np.inf or p == "inf":
        return float(np.abs(f.data).max(initial=0.0))
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.abs(f.data) ** p).sum() * f.grid.cell_area) ** (1.0 / p)


def spectral_l2_sq(f: Field) -> float:
    """Full-spectrum sum of |c|^2, doubling interior x-columns of the half spectrum."""
    spec = _spectral_data(f)
    w = np.full(spec.shape[1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return float(np.sum(w[None, :] * np.abs(spec) ** 2))
