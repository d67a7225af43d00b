"""Conserved quantities, energy-space norms, and the interpolation-ratio diagnostic.

All integrals use the rectangle rule of the spectral core. The nonlocal
pieces come from the periodic x-antiderivative, so every operation except
``mass`` requires x-mean-free input.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, ResolutionWarning
from .spectral import (
    Field,
    antideriv_x_multiplier,
    deriv_x_multiplier,
    deriv_y_multiplier,
    _spectral_data,
    lp_norm,
    xmean_residual,
)
from .errors import NonZeroXMean

DENOM_TOL = 1e-14


def _check_xmean(u: Field) -> None:
    if xmean_residual(u) > 1e-10:
        raise NonZeroXMean("field is not x-mean-free; project_zero_xmean first")


@dataclass
class ConservedRecord:
    t: float
    mass: float
    energy: float
    momentum: float
    second_energy: float | None = None


class FieldOps:
    """Shared spectral derivatives of one physical field (computed lazily)."""

    def __init__(self, u: Field):
        u.require("physical")
        self.u = u.data
        self.grid = u.grid
        self.area = u.grid.cell_area
        self._spec = _spectral_data(u)
        self._cache: dict[str, np.ndarray] = {}

    def _inv(self, name: str, mult: np.ndarray) -> np.ndarray:
        if name not in self._cache:
            g = self.grid
            self._cache[name] = np.fft.irfft2(mult * self._spec, s=(g.ny, g.nx), norm="ortho")
        return self._cache[name]

    @property
    def ux(self):
        return self._inv("ux", deriv_x_multiplier(self.grid, 1))

    @property
    def uxx(self):
        return self._inv("uxx", deriv_x_multiplier(self.grid, 2))

    @property
    def uxxx(self):
        return self._inv("uxxx", deriv_x_multiplier(self.grid, 3))

    @property
    def uy(self):
        return self._inv("uy", deriv_y_multiplier(self.grid, 1))

    @property
    def v(self):
        """x-antiderivative of du/dy."""
        m = antideriv_x_multiplier(self.grid) * deriv_y_multiplier(self.grid, 1)
        return self._inv("v", m)

    @property
    def vy(self):
        """d/dy of v, i.e. the nonlocal term of the evolution equation."""
        m = antideriv_x_multiplier(self.grid) * deriv_y_multiplier(self.grid, 2)
        return self._inv("vy", m)

    @property
    def w2(self):
        """Twice-antidifferentiated second y-derivative (E^2 quantity)."""
        m = antideriv_x_multiplier(self.grid) ** 2 * deriv_y_multiplier(self.grid, 2)
        return self._inv("w2", m)

    @property
    def vxinv(self):
        """x-antiderivative of v (used by the v-equation diagnostics)."""
        m = antideriv_x_multiplier(self.grid) ** 2 * deriv_y_multiplier(self.grid, 1)
        return self._inv("vxinv", m)

    def integral(self, values: np.ndarray) -> float:
        return float(values.sum() * self.area)


def mass(u: Field) -> float:
    """Half the squared L2 norm."""
    u.require("physical")
    return 0.5 * float((u.data ** 2).sum() * u.grid.cell_area)


def energy(u: Field, kappa: int, ops: FieldOps | None = None) -> float:
    """integral of (1/2)(du/dx)^2 - (kappa/2) v^2 - u^3/3, v the nonlocal field."""
    _check_xmean(u)
    o = ops or FieldOps(u)
    dens = 0.5 * o.ux ** 2 - 0.5 * kappa * o.v ** 2 - o.u ** 3 / 3.0
    return o.integral(dens)


def momentum(u: Field, ops: FieldOps | None = None) -> float:
    """Half the pairing of u with its nonlocal field v."""
    _check_xmean(u)
    o = ops or FieldOps(u)
    return 0.5 * o.integral(o.u * o.v)


SECOND_ENERGY_TAIL_TOL = 1e-6


def second_energy_resolved(u: Field, ops: FieldOps | None = None) -> bool:
    """True when the dealias-band tail of d^2u/dx^2 is negligible."""
    o = ops or FieldOps(u)
    spec = deriv_x_multiplier(o.grid, 2) * o._spec
    keep = o.grid.dealias_mask()
    total = np.linalg.norm(spec)
    if total == 0.0:
        return True
    return np.linalg.norm(spec * ~keep) / total <= SECOND_ENERGY_TAIL_TOL


def second_energy(u: Field, ops: FieldOps | None = None) -> float:
    """Seven-term second invariant (conserved by the kappa=-1 flow).

    Coefficients 3/2, 5, 5/6, -5/6, -5/6, 5/4, 5/24 on
    (uxx)^2, (uy)^2, w2^2, u^2*w2, u*v^2, u^2*uxx, u^4 where
    w2 is the twice-antidifferentiated second y-derivative.
    Emits ResolutionWarning when the uxx spectral tail is significant.
    """
    _check_xmean(u)
    o = ops or FieldOps(u)
    if not second_energy_resolved(u, o):
        warnings.warn(
            "second_energy on under-resolved data: spectral tail of d2u/dx2 "
            f"exceeds {SECOND_ENERGY_TAIL_TOL:g} of its norm",
            ResolutionWarning,
            stacklevel=2,
        )
    uu = o.u
    dens = (
        1.5 * o.uxx ** 2
        + 5.0 * o.uy ** 2
        + 5.0 / 6.0 * o.w2 ** 2
        - 5.0 / 6.0 * uu ** 2 * o.w2
        - 5.0 / 6.0 * uu * o.v ** 2
        + 1.25 * uu ** 2 * o.uxx
        + 5.0 / 24.0 * uu ** 4
    )
    return o.integral(dens)


def conserved_record(u: Field, kappa: int, t: float, with_second: bool = True) -> ConservedRecord:
    """All conserved quantities of one state, sharing spectral work."""
    o = FieldOps(u)
    m = mass(u)
    e = energy(u, kappa, o)
    p = momentum(u, o)
    f = second_energy(u, o) if with_second else None
    return ConservedRecord(t=t, mass=m, energy=e, momentum=p, second_energy=f)


def grad_mass(u: Field, ops: FieldOps | None = None) -> np.ndarray:
    return (ops or FieldOps(u)).u.copy()


def grad_energy(u: Field, kappa: int, ops: FieldOps | None = None) -> np.ndarray:
    """Variational derivative -uxx - kappa*w2 - u^2."""
    o = ops or FieldOps(u)
    return -o.uxx - kappa * o.w2 - o.u ** 2


def grad_second_energy(u: Field, ops: FieldOps | None = None) -> np.ndarray:
    """Variational derivative of the second invariant (x-mean-free input)."""
    o = ops or FieldOps(u)
    g = o.grid
    spec = o._spec
    mxi = antideriv_x_multiplier(g)
    my1 = deriv_y_multiplier(g, 1)
    mx1 = deriv_x_multiplier(g, 1)

    def inv(m):
        return np.fft.irfft2(m, s=(g.ny, g.nx), norm="ortho")

    u2spec = np.fft.rfft2(o.u ** 2, norm="ortho")
    uvspec = np.fft.rfft2(o.u * o.v, norm="ortho")
    return (
        3.0 * inv(mx1 ** 4 * spec)
        - 10.0 * inv(my1 ** 2 * spec)
        + 5.0 / 3.0 * inv((mxi * my1) ** 4 * spec)
        - 5.0 / 6.0 * (2.0 * o.u * o.w2 + inv(mxi ** 2 * my1 ** 2 * u2spec))
        - 5.0 / 6.0 * (o.v ** 2 + 2.0 * inv(mxi * my1 * uvspec))
        + 1.25 * (2.0 * o.u * o.uxx + inv(mx1 ** 2 * u2spec))
        + 5.0 / 6.0 * o.u ** 3
    )


def e1_norm(u: Field, ops: FieldOps | None = None) -> float:
    """Sum of the L2 norms of u, du/dx, and v."""
    _check_xmean(u)
    o = ops or FieldOps(u)
    a = o.area
    return float(
        np.sqrt((o.u ** 2).sum() * a) + np.sqrt((o.ux ** 2).sum() * a) + np.sqrt((o.v ** 2).sum() * a)
    )


def e2_norm(u: Field, ops: FieldOps | None = None) -> float:
    """Sum of the L2 norms of u, v, d2u/dx2, and w2."""
    _check_xmean(u)
    o = ops or FieldOps(u)
    a = o.area
    return float(
        np.sqrt((o.u ** 2).sum() * a)
        + np.sqrt((o.v ** 2).sum() * a)
        + np.sqrt((o.uxx ** 2).sum() * a)
        + np.sqrt((o.w2 ** 2).sum() * a)
    )


def dy_norm(u: Field, ops: FieldOps | None = None) -> float:
    """L2 norm of du/dy (controlled by the second energy norm)."""
    o = ops or FieldOps(u)
    return float(np.sqrt((o.uy ** 2).sum() * o.area))


def interpolation_ratio(u: Field, p: float, ops: FieldOps | None = None) -> float:
    """Ratio of |u|_p to |u|_2^((6-p)/2p) |ux|_2^((p-2)/p) |v|_2^((p-2)/2p).

    Finite for 2 <= p <= 6; equals 1 exactly at p = 2. Raises
    DegenerateDenominator when a factor with positive exponent vanishes.
    """
    if not 2.0 <= p <= 6.0:
        raise ValueError("p must lie in [2, 6]")
    _check_xmean(u)
    o = ops or FieldOps(u)
    a = o.area
    e0 = (6.0 - p) / (2.0 * p)
    e1 = (p - 2.0) / p
    e2 = (p - 2.0) / (2.0 * p)
    n_u = np.sqrt((o.u ** 2).sum() * a)
    n_ux = np.sqrt((o.ux ** 2).sum() * a)
    n_v = np.sqrt((o.v ** 2).sum() * a)
    denom = 1.0
    for val, expo in ((n_u, e0), (n_ux, e1), (n_v, e2)):
        if expo > 0.0:
            if val < DENOM_TOL:
                raise DegenerateDenominator(f"norm factor {val:.3e} below {DENOM_TOL:g}")
            denom *= val ** expo
    num = lp_norm(Field(o.grid, o.u, "physical"), p)
    return float(num / denom)
