"""Localizing weight functions, time-dependent schedules, and space-time regions.

The profile bundles three one-dimensional shapes:

* ``phi``: smooth, even, positive, identically 1 on [0, 1], exactly
  ``e^-x`` beyond 2, squeezed between ``e^-x`` and ``3 e^-x`` on the
  positive axis, with monotone decay and derivative bounds
  ``|phi'|, |phi''| <= c_phi * phi``. On the transition band [1, 2] we use
  ``phi = exp(m(x-1) - x)`` with ``m(s) = (1 + s e^{-(s/tau)^2})(1 - S(s))``
  (S the quintic smoothstep, tau = 0.2), which meets every bound with
  margin; the builder re-verifies all of them numerically on a fine grid
  and pins the measured constants.
* ``psi``: the odd antiderivative of phi; equals x on [-1, 1], bounded by 3.
* ``chi``: a smooth switch, 1 below -1 and 0 above 0, with chi' <= 0 and
  ``-chi' >= c_chi`` on [-3/4, -1/4]; plus the companion bump ``xi >= 0``
  supported in [-3/4, -1/4].

Schedules: with exponents b (window growth), r (anisotropy), q > 1
(auxiliary x attenuation), p = 1 - b, the six scale factors and three
attenuation factors are

    lam5 = t^b/log t        eta3 = t^p log t       (lam5*eta3 = t)
    lam6 = lam5^r
    lam3 = t^b/log^2 t      eta2 = t^(1-b) log^4 t (eta2*lam4 = t log t)
    lam4 = t^b/log^3 t
    lam2 = t^b/log^4 t      eta1 = t^(1-b) log^6 t (eta1*lam1 = t log t)
    lam1 = t^b/log^5 t

with shifts rho_i = l_i t^(m_i) and the far-field scale
theta = t^p log^(1+eps) t. The asymptotic ordering
lam1 << lam2 << lam4 << lam3 << lam5 << lam6 and eta3 << eta2 << eta1
holds for large t (``chain_holds_at`` reports it at finite t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield, replace
import warnings

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConstructionFailed, RegionOutsideBox, ValidationError
from .spectral import Grid

T_START_MIN = math.exp(2.0)


# ---------------------------------------------------------------------------
# quintic smoothstep and the transition shape
# ---------------------------------------------------------------------------

def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)


def _smoothstep_d1(s):
    out = np.zeros_like(np.asarray(s, dtype=float))
    inside = (s > 0) & (s < 1)
    ss = np.asarray(s, dtype=float)[inside]
    out[inside] = 30.0 * ss ** 2 * (1.0 - ss) ** 2
    return out


def _smoothstep_d2(s):
    out = np.zeros_like(np.asarray(s, dtype=float))
    inside = (s > 0) & (s < 1)
    ss = np.asarray(s, dtype=float)[inside]
    out[inside] = 60.0 * ss * (1.0 - ss) * (1.0 - 2.0 * ss)
    return out


_TAU = 0.2


def _transition_m(s):
    """m, m', m'' of the transition exponent on s = x - 1 in [0, 1]."""
    s = np.asarray(s, dtype=float)
    e = np.exp(-((s / _TAU) ** 2))
    a = s * e
    da = (1.0 - 2.0 * s ** 2 / _TAU ** 2) * e
    d2a = (-6.0 * s / _TAU ** 2 + 4.0 * s ** 3 / _TAU ** 4) * e
    S = _smoothstep(s)
    dS = _smoothstep_d1(s)
    d2S = _smoothstep_d2(s)
    m = (1.0 + a) * (1.0 - S)
    dm = da * (1.0 - S) - (1.0 + a) * dS
    d2m = d2a * (1.0 - S) - 2.0 * da * dS - (1.0 + a) * d2S
    return m, dm, d2m


def _phi_pos(x):
    """phi, phi', phi'' for x >= 0 (piecewise closed forms)."""
    x = np.asarray(x, dtype=float)
    phi = np.empty_like(x)
    d1 = np.empty_like(x)
    d2 = np.empty_like(x)
    flat = x <= 1.0
    tail = x >= 2.0
    band = ~flat & ~tail
    phi[flat] = 1.0
    d1[flat] = 0.0
    d2[flat] = 0.0
    e = np.exp(-x[tail])
    phi[tail] = e
    d1[tail] = -e
    d2[tail] = e
    if band.any():
        m, dm, d2m = _transition_m(x[band] - 1.0)
        p = np.exp(m - x[band])
        phi[band] = p
        d1[band] = (dm - 1.0) * p
        d2[band] = (d2m + (dm - 1.0) ** 2) * p
    return phi, d1, d2


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

_PSI_TABLE_N = 200001


class WeightProfile:
    """Evaluators for phi, psi, chi, xi and the pinned constants.

    Build through :func:`build_weight_profile`, which verifies every
    required inequality on a fine grid and records ``c_phi`` (derivative
    bound constant) and ``c_chi`` (lower bound of -chi' on the bump band).
    """

    def __init__(self):
        xs = np.linspace(0.0, 2.0, _PSI_TABLE_N)
        phis = _phi_pos(xs)[0]
        table = cumulative_trapezoid(phis, xs, initial=0.0)
        self._psi_xs = xs
        self._psi_table = table
        self._psi_two = float(table[-1])
        self.psi_sup = self._psi_two + math.exp(-2.0)
        self.c_phi: float | None = None
        self.c_chi: float | None = None

    # phi and derivatives -------------------------------------------------
    def phi(self, x):
        return _phi_pos(np.abs(np.asarray(x, dtype=float)))[0]

    def dphi(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * _phi_pos(np.abs(x))[1]

    def d2phi(self, x):
        return _phi_pos(np.abs(np.asarray(x, dtype=float)))[2]

    # psi ------------------------------------------------------------------
    def psi(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        core = np.interp(np.minimum(ax, 2.0), self._psi_xs, self._psi_table)
        tail = np.where(ax > 2.0, math.exp(-2.0) - np.exp(-np.clip(ax, 2.0, None)), 0.0)
        return np.sign(x) * (core + tail)

    def dpsi(self, x):
        return self.phi(x)

    # chi and the bump -----------------------------------------------------
    def chi(self, x):
        return 1.0 - _smoothstep(np.asarray(x, dtype=float) + 1.0)

    def dchi(self, x):
        return -_smoothstep_d1(np.asarray(x, dtype=float) + 1.0)

    def bump(self, x):
        """Smooth xi >= 0 supported in [-3/4, -1/4], peak 1 at -1/2."""
        z = 4.0 * np.asarray(x, dtype=float) + 2.0
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    # two-dimensional weights ----------------------------------------------
    def Phi(self, x, y):
        """psi(x)*phi(y); odd in x."""
        return self.psi(x) * self.phi(y)

    def dx_Phi(self, x, y):
        return self.phi(x) * self.phi(y)

    def dy_Phi(self, x, y):
        return self.psi(x) * self.dphi(y)

    def Psi(self, x, y):
        """phi(x)*psi(y); odd in y."""
        return self.phi(x) * self.psi(y)

    def dx_Psi(self, x, y):
        return self.dphi(x) * self.psi(y)

    def dy_Psi(self, x, y):
        return self.phi(x) * self.phi(y)


def _verify_profile(profile: WeightProfile, n_samples: int) -> None:
    tol = 1e-12
    x = np.linspace(-50.0, 50.0, n_samples)
    phi = profile.phi(x)
    dphi = profile.dphi(x)
    d2phi = profile.d2phi(x)
    checks = [
        ("phi positive", np.all(phi > 0)),
        ("phi even", np.allclose(phi, profile.phi(-x), rtol=0, atol=tol)),
        ("phi == 1 on [0,1]", np.all(np.abs(phi[np.abs(x) <= 1.0] - 1.0) <= tol)),
    ]
    far = np.abs(x) >= 2.0
    checks.append(("phi == e^-x on [2,inf)", np.all(np.abs(phi[far] - np.exp(-np.abs(x[far]))) <= tol)))
    pos = x >= 0.0
    ex = np.exp(-x[pos])
    checks.append(("e^-x <= phi on R+", np.all(phi[pos] >= ex * (1.0 - 1e-12))))
    checks.append(("phi <= 3e^-x on R+", np.all(phi[pos] <= 3.0 * ex * (1.0 + 1e-12))))
    checks.append(("phi' <= 0 on R+", np.all(dphi[pos] <= tol)))

    psi = profile.psi(x)
    checks.append(("psi odd", np.allclose(psi, -profile.psi(-x), rtol=0, atol=tol)))
    unit = np.abs(x) <= 1.0
    checks.append(("psi == x on [-1,1]", np.all(np.abs(psi[unit] - x[unit]) <= 1e-9)))
    checks.append(("|psi| <= 3", np.all(np.abs(psi) <= 3.0)))

    xc = np.linspace(-3.0, 1.0, n_samples)
    chi = profile.chi(xc)
    dchi = profile.dchi(xc)
    checks.append(("chi == 1 below -1", np.all(np.abs(chi[xc <= -1.0] - 1.0) <= tol)))
    checks.append(("chi == 0 above 0", np.all(np.abs(chi[xc >= 0.0]) <= tol)))
    checks.append(("chi' <= 0", np.all(dchi <= tol)))
    band = (xc >= -0.75) & (xc <= -0.25)
    c_chi = float((-dchi[band]).min())
    checks.append(("-chi' positive on [-3/4,-1/4]", c_chi > 0.0))

    for name, ok in checks:
        if not ok:
            raise ConstructionFailed(f"weight profile violates: {name}")

    profile.c_phi = float(max((np.abs(dphi) / phi).max(), (np.abs(d2phi) / phi).max()))
    profile.c_chi = c_chi


def build_weight_profile(n_samples: int = 100001) -> WeightProfile:
    """Construct the profile and verify every inequality on ``n_samples`` points."""
    profile = WeightProfile()
    _verify_profile(profile, n_samples)
    return profile


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleParams:
    """Exponent and shift bundle driving the schedules and regions.

    Constraint tags cited in validation messages: indices (5/3 < r < 3,
    0 < b < 2/(3+r)), bqconditions_new (1 < q < 2, b <= 2/(2+q+r)),
    eq4 (p + b = 1), cond_rho1rho2 (bounds on m1, m2).
    """

    b: float = 0.3
    r: float = 2.0
    q: float = 1.05
    p: float | None = None
    m1: float = 0.0
    m2: float = 0.0
    l1: float = 0.0
    l2: float = 0.0
    eps: float = 0.1
    eta0: float = 0.05
    t_start: float = T_START_MIN

    def __post_init__(self):
        if self.p is None:
            object.__setattr__(self, "p", 1.0 - self.b)
        validate_schedule_params(self)


def validate_schedule_params(sp: ScheduleParams) -> None:
    if not (5.0 / 3.0 < sp.r < 3.0):
        raise ValidationError(f"r must satisfy 5/3 < r < 3, got {sp.r} (constraint tag: indices)")
    if not (0.0 < sp.b < 2.0 / (3.0 + sp.r)):
        raise ValidationError(
            f"b must satisfy 0 < b < 2/(3+r) = {2.0 / (3.0 + sp.r):.6g}, got {sp.b} "
            "(constraint tag: indices)"
        )
    if not (1.0 < sp.q < 2.0):
        raise ValidationError(f"q must lie in (1, 2), got {sp.q} (constraint tag: bqconditions_new)")
    if sp.b > 2.0 / (2.0 + sp.q + sp.r):
        raise ValidationError(
            f"b must satisfy b <= 2/(2+q+r) = {2.0 / (2.0 + sp.q + sp.r):.6g}, got {sp.b} "
            "(constraint tag: bqconditions_new)"
        )
    if abs(sp.p + sp.b - 1.0) > 1e-12:
        raise ValidationError(f"p + b must equal 1, got p = {sp.p}, b = {sp.b} (constraint tag: eq4)")
    m1_max = 1.0 - 0.5 * sp.b * (sp.r + 1.0)
    if not (0.0 <= sp.m1 < m1_max):
        raise ValidationError(
            f"m1 must satisfy 0 <= m1 < 1 - (b/2)(r+1) = {m1_max:.6g}, got {sp.m1} "
            "(constraint tag: cond_rho1rho2)"
        )
    m2_max = 1.0 - 0.5 * sp.b * (sp.q + 2.0 - sp.r)
    if not (0.0 <= sp.m2 < m2_max):
        raise ValidationError(
            f"m2 must satisfy 0 <= m2 < 1 - (b/2)(q+2-r) = {m2_max:.6g}, got {sp.m2} "
            "(constraint tag: cond_rho1rho2)"
        )
    if sp.eps <= 0.0:
        raise ValidationError(f"eps must be positive, got {sp.eps} (constraint tag: theta_1)")
    if sp.eta0 <= 0.0:
        raise ValidationError(f"eta0 must be positive, got {sp.eta0} (constraint tag: Omega1)")
    if sp.t_start < T_START_MIN - 1e-12:
        raise ValidationError(
            f"t_start must be at least e^2 = {T_START_MIN:.6f} so every log power exceeds 1, "
            f"got {sp.t_start}"
        )


class Schedules:
    """Closed-form schedule values and time derivatives for one parameter set."""

    # (power of t relative to b or 1-b, log power) per index
    _LAM_LOGS = {1: 5, 2: 4, 3: 2, 4: 3, 5: 1}
    _ETA_LOGS = {1: 6, 2: 4, 3: 1}

    def __init__(self, params: ScheduleParams):
        self.params = params

    def _t(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.params.t_start - 1e-12):
            raise ValueError(f"t must be at least t_start = {self.params.t_start:.6f}")
        return t

    def lam(self, j: int, t):
        t = self._t(t)
        sp = self.params
        if j == 6:
            return self.lam(5, t) ** sp.r
        n = self._LAM_LOGS[j]
        return t ** sp.b / np.log(t) ** n

    def dlam(self, j: int, t):
        t = self._t(t)
        sp = self.params
        if j == 6:
            return sp.r * self.lam(5, t) ** (sp.r - 1.0) * self.dlam(5, t)
        n = self._LAM_LOGS[j]
        lt = np.log(t)
        return t ** (sp.b - 1.0) * (sp.b * lt - n) / lt ** (n + 1)

    def eta(self, k: int, t):
        t = self._t(t)
        sp = self.params
        n = self._ETA_LOGS[k]
        a = sp.p if k == 3 else 1.0 - sp.b
        return t ** a * np.log(t) ** n

    def deta(self, k: int, t):
        t = self._t(t)
        sp = self.params
        n = self._ETA_LOGS[k]
        a = sp.p if k == 3 else 1.0 - sp.b
        lt = np.log(t)
        return t ** (a - 1.0) * lt ** (n - 1) * (a * lt + n)

    def rho(self, i: int, t):
        t = self._t(t)
        sp = self.params
        l, m = (sp.l1, sp.m1) if i == 1 else (sp.l2, sp.m2)
        return l * t ** m

    def drho(self, i: int, t):
        t = self._t(t)
        sp = self.params
        l, m = (sp.l1, sp.m1) if i == 1 else (sp.l2, sp.m2)
        return l * m * t ** (m - 1.0)

    def theta(self, t):
        t = self._t(t)
        sp = self.params
        return t ** sp.p * np.log(t) ** (1.0 + sp.eps)

    def dtheta(self, t):
        t = self._t(t)
        sp = self.params
        lt = np.log(t)
        return t ** (sp.p - 1.0) * lt ** sp.eps * (sp.p * lt + 1.0 + sp.eps)


def chain_holds_at(params: ScheduleParams, t: float) -> bool:
    """Strict ordering lam1<lam2<lam4<lam3<lam5<lam6 and eta3<eta2<eta1 at t.

    The ordering is asymptotic; at moderate t the last link needs
    lam5(t) > 1, e.g. t >~ 380 for b = 0.3.
    """
    s = Schedules(params)
    lams = [s.lam(j, t) for j in (1, 2, 4, 3, 5, 6)]
    etas = [s.eta(k, t) for k in (3, 2, 1)]
    return bool(np.all(np.diff(lams) > 0) and np.all(np.diff(etas) > 0))


# ---------------------------------------------------------------------------
# localization bound (x-antiderivative of psi*phi weight products)
# ---------------------------------------------------------------------------

def localizacion_lhs(profile: WeightProfile, a: float, b_scale: float, x0: float, x):
    """x-antiderivative (from -infinity) of psi((s-x0)/a)*phi((s-x0)/b) at x.

    The integrand is odd about x0 with integrable tails, so the
    antiderivative equals minus the tail integral of |shifted x|; it is
    computed by dense trapezoid quadrature, not spectrally, because weight
    products carry nonzero x-mean on any finite box.
    """
    if a <= 0 or b_scale <= 0:
        raise ValueError("scales must be positive")
    x = np.asarray(x, dtype=float)
    xi = np.abs(x - x0)
    # integrand decays like e^(-s/b); cut where it is below 1e-22
    s_max = max(float(xi.max(initial=0.0)), 2.0 * b_scale) + 55.0 * b_scale
    n = max(20001, int(20 * s_max / min(a, b_scale, 1.0)))
    n = min(n, 2_000_001)
    s = np.linspace(0.0, s_max, n)
    g = profile.psi(s / a) * profile.phi(s / b_scale)
    cum = cumulative_trapezoid(g, s, initial=0.0)
    total = cum[-1]
    partial = np.interp(xi, s, cum)
    return -(total - partial)


def localizacion_check(profile: WeightProfile, a: float, b_scale: float, x0: float, xs) -> dict:
    """Compare |antiderivative| against the bound 9*b*phi((x-x0)/b) pointwise."""
    xs = np.asarray(xs, dtype=float)
    lhs = localizacion_lhs(profile, a, b_scale, x0, xs)
    rhs = 9.0 * b_scale * profile.phi((xs - x0) / b_scale)
    ratio = np.abs(lhs) / rhs
    return {
        "a": a,
        "b": b_scale,
        "x0": x0,
        "x": xs,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "max_ratio": float(ratio.max()),
        "passed": bool(ratio.max() < 1.0),
    }


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

REGIONS = ("omega1", "omega2", "omega1_tilde", "omega2_tilde")


def region_halfwidths(which: str, t: float, params: ScheduleParams) -> tuple[float, float]:
    """Half-widths (x, y) of the centered rectangular regions."""
    b, r, eta0 = params.b, params.r, params.eta0
    if which == "omega1":
        return t ** b, t ** (b * r)
    if which == "omega1_tilde":
        return t ** (b * (1.0 - eta0)), t ** (b * (1.0 - 2.0 * eta0))
    if which == "omega2_tilde":
        return t ** (b * (1.0 - 4.0 * eta0)), t ** (b * (1.0 - 3.0 * eta0))
    raise ValueError(f"unknown rectangular region {which!r}")


OMEGA2_BAND_FACTOR = 2.0


def region_mask(which: str, t: float, params: ScheduleParams, grid: Grid) -> np.ndarray:
    """0/1 mask of the requested region on the grid.

    omega1 and the tilde regions are rectangles centered on the shifts
    (l1 t^m1, l2 t^m2); omega2 is the union of bands where |x| or |y|
    falls within a factor-2 of theta(t). Warns RegionOutsideBox when the
    region extends beyond the box.
    """
    X, Y = grid.meshgrid()
    s = Schedules(params)
    if np.asarray(t, dtype=float) < params.t_start - 1e-12:
        raise ValueError(f"t must be at least t_start = {params.t_start:.6f}")
    if which == "omega2":
        th = float(s.theta(t))
        lo, hi = th / OMEGA2_BAND_FACTOR, OMEGA2_BAND_FACTOR * th
        if hi > grid.lx / 2 or hi > grid.ly / 2:
            warnings.warn(
                f"omega2 band [{lo:.3g}, {hi:.3g}] exceeds the box half-lengths",
                RegionOutsideBox,
                stacklevel=2,
            )
        ax, ay = np.abs(X), np.abs(Y)
        mask = ((ax >= lo) & (ax <= hi)) | ((ay >= lo) & (ay <= hi))
        return mask.astype(float)
    if which not in REGIONS:
        raise ValueError(f"unknown region {which!r}")
    hx, hy = region_halfwidths(which, t, params)
    cx, cy = float(s.rho(1, t)), float(s.rho(2, t))
    if cx + hx > grid.lx / 2 or -grid.lx / 2 > cx - hx or cy + hy > grid.ly / 2 or cy - hy < -grid.ly / 2:
        warnings.warn(
            f"region {which} at t={t:.4g} (center ({cx:.3g},{cy:.3g}), half-widths "
            f"({hx:.3g},{hy:.3g})) exceeds the periodic box",
            RegionOutsideBox,
            stacklevel=2,
        )
    mask = (np.abs(X - cx) <= hx) & (np.abs(Y - cy) <= hy)
    if which in ("omega1_tilde", "omega2_tilde"):
        h1x, h1y = region_halfwidths("omega1", t, params)
        mask &= (np.abs(X - cx) <= h1x) & (np.abs(Y - cy) <= h1y)
    return mask.astype(float)
