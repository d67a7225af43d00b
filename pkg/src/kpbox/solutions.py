"""Closed-form lump family, symmetry transforms, and the KdV line soliton.

The base lump profile is

    Q(x, y) = 24*(3 - x^2 + y^2) / (x^2 + y^2 + 3)^2,

even in both variables, algebraically decaying, with zero mean along every
x-line. Its x-antiderivative-of-y-derivative has the closed form
``v_Q = -48*x*y/(x^2+y^2+3)^2``, used as an oracle for the spectral
operators. The scaled member is ``Q_c(x,y) = c*Q(sqrt(c)*x, c*y)``.

Periodic sampling uses the continuum transform

    Qhat(k) = 48*pi*sqrt(3) * k1^2 * K1(sqrt(3)*|k|) / |k|,

sampled at box wavenumbers (Poisson summation), which realizes the exact
infinite image sum and is exactly x-mean-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import k1 as _bessel_k1

from .spectral import Field, Grid, SPECTRAL, from_spectral


@dataclass(frozen=True)
class LumpParams:
    """Speed/scale c > 0, transverse speed beta, and space/time shifts."""

    c: float = 1.0
    beta: float = 0.0
    x0: float = 0.0
    y0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("lump speed c must be positive")


def lump_q(x, y):
    """Base lump profile; peak value 8 at the origin."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = x * x + y * y + 3.0
    return 24.0 * (3.0 - x * x + y * y) / (f * f)


def lump_qc(x, y, c: float):
    """Scaled lump c*Q(sqrt(c)x, cy); peak 8c."""
    if c <= 0:
        raise ValueError("c must be positive")
    return c * lump_q(np.sqrt(c) * np.asarray(x, dtype=float), c * np.asarray(y, dtype=float))


def lump_v(x, y):
    """Closed form of the x-antiderivative of dQ/dy."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = x * x + y * y + 3.0
    return -48.0 * x * y / (f * f)


def lump_vc(x, y, c: float):
    """x-antiderivative of d(Q_c)/dy: c^{3/2} * v_Q(sqrt(c)x, cy)."""
    return c ** 1.5 * lump_v(np.sqrt(c) * np.asarray(x, dtype=float), c * np.asarray(y, dtype=float))


def _moving_args(x, y, t, p: LumpParams):
    xs = np.asarray(x, dtype=float) - p.x0
    ys = np.asarray(y, dtype=float) - p.y0
    ts = t - p.t0
    yy = ys - 2.0 * p.beta * ts
    xx = xs - p.c * ts - p.beta ** 2 * ts - p.beta * yy
    return xx, yy


def moving_lump(x, y, t, params: LumpParams):
    """Boosted lump Q_c(x - ct - b^2 t - b(y - 2bt), y - 2bt), with shifts."""
    xx, yy = _moving_args(x, y, t, params)
    return lump_qc(xx, yy, params.c)


def moving_lump_v(x, y, t, params: LumpParams):
    """x-antiderivative of the y-derivative of the boosted lump (closed form)."""
    xx, yy = _moving_args(x, y, t, params)
    return -2.0 * params.beta * lump_qc(xx, yy, params.c) + lump_vc(xx, yy, params.c)


def lump_qhat(kx, ky, c: float = 1.0):
    """Continuum Fourier transform of Q_c (convention f(x) = int fhat e^{ikx} dk/(2pi)^2)."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    # Q_c transform: c^{-1/2} * Qhat(kx/sqrt(c), ky/c)
    kxs = kx / np.sqrt(c)
    kys = ky / c
    kk = np.hypot(kxs, kys)
    safe = np.where(kk > 0, kk, 1.0)
    a = np.sqrt(3.0)
    base = 48.0 * np.pi * a * kxs ** 2 * _bessel_k1(a * safe) / safe
    return c ** -0.5 * np.where(kk > 0, base, 0.0)


def sample_moving_lump(grid: Grid, params: LumpParams, t: float) -> Field:
    """Exactly periodized moving lump on the grid at time t (physical field).

    Coefficients are the continuum transform evaluated at sheared
    wavenumbers (the shear x -> x - beta*y maps k2 to k2 + beta*k1) with
    the translation carried by a phase factor; the result is exactly
    x-mean-free.
    """
    g = grid
    kx, ky = g.wavenumber_mesh()
    ts = t - params.t0
    dx_shift = -params.x0 + params.beta * params.y0 + (params.beta ** 2 - params.c) * ts
    dy_shift = -params.y0 - 2.0 * params.beta * ts
    k2s = ky + params.beta * kx
    coeff = lump_qhat(kx, k2s, params.c).astype(complex)
    coeff *= np.exp(1j * (kx * dx_shift + k2s * dy_shift))
    # align the transform origin with the grid coordinates (x = -lx/2 at index 0)
    coeff *= np.exp(-1j * (kx * (g.lx / 2) + ky * (g.ly / 2)))
    # Poisson summation: series coefficients are fhat/(lx*ly); ortho rfft2
    # scaling multiplies by sqrt(nx*ny).
    coeff *= np.sqrt(g.nx * g.ny) / g.area
    coeff[:, 0] = 0.0
    return from_spectral(Field(g, coeff, SPECTRAL))


def sample_lump(grid: Grid, c: float = 1.0, x0: float = 0.0, y0: float = 0.0) -> Field:
    """Exactly periodized stationary-frame lump Q_c(x - x0, y - y0)."""
    return sample_moving_lump(grid, LumpParams(c=c, beta=0.0, x0=x0, y0=y0), t=0.0)


def shift_transform(u, x0: float = 0.0, y0: float = 0.0, t0: float = 0.0):
    """Return (x,y,t) -> u(x + x0, y + y0, t + t0)."""

    def shifted(x, y, t=0.0):
        return u(x + x0, y + y0, t + t0)

    return shifted


def scaling_transform(u, c: float):
    """Return (x,y,t) -> c*u(sqrt(c)x, cy, c^{3/2}t); group law in c."""
    if c <= 0:
        raise ValueError("c must be positive")
    rc = np.sqrt(c)

    def scaled(x, y, t=0.0):
        return c * u(rc * np.asarray(x, dtype=float), c * np.asarray(y, dtype=float), c ** 1.5 * t)

    return scaled


def galilean_transform(u, beta: float, kappa: int):
    """Transverse boost; the sign convention depends on the equation branch.

    kappa=-1: (x,y,t) -> u(x - b^2 t - b(y - 2bt), y - 2bt, t)
    kappa=+1: (x,y,t) -> u(x + b^2 t + b(y - 2bt), y - 2bt, t)
    """
    if kappa not in (-1, 1):
        raise ValueError("kappa must be -1 or +1")
    sgn = -1.0 if kappa == -1 else 1.0

    def boosted(x, y, t=0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        yy = y - 2.0 * beta * t
        return u(x + sgn * (beta ** 2 * t + beta * yy), yy, t)

    return boosted


def kdv_line_soliton(x, y, c: float):
    """Line soliton 3c*sech^2(sqrt(c)x/2), constant in y.

    The amplitude convention matches a quadratic nonlinearity with unit
    coefficient: f solves -c*f + f'' + f^2/2 = 0.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    x = np.asarray(x, dtype=float)
    prof = 3.0 * c / np.cosh(np.sqrt(c) * x / 2.0) ** 2
    return np.broadcast_to(prof, np.broadcast_shapes(prof.shape, np.asarray(y).shape)).copy()
