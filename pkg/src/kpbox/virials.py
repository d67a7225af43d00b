"""Virial functionals, their exact rate decompositions, and region diagnostics.

Every functional below is a weighted integral of the evolving field; its
time derivative splits into a sum of integrals that are evaluated here by
direct quadrature from a state snapshot (spectral derivatives for the
nonlocal pieces, no inequality estimates). ``rate_check`` compares the
finite-difference derivative of a sampled functional series against the
sampled term sums; the residual is quadrature-exact up to the stencil and
time-integration error and shrinks at fourth order in the cadence.

Weight arguments are evaluated in principal box coordinates
(x-tilde = x - rho1(t), y-tilde = y - rho2(t), no periodic wrapping).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import InsufficientSamples
from .invariants import FieldOps, conserved_record
from .spectral import Field, antideriv_x_multiplier, deriv_x_multiplier, deriv_y_multiplier
from .weights import ScheduleParams, Schedules, WeightProfile, region_mask

# ---------------------------------------------------------------------------
# shared per-snapshot context
# ---------------------------------------------------------------------------


class Snapshot:
    """Field derivatives and schedule values frozen at one observation time.

    Rate terms are built from the semi-discrete right-hand side actually
    integrated by the solver (spectral derivatives, dealiased quadratic
    term), so the rate identities hold to round-off on the grid even when
    the localizing weights are narrower than a grid cell.
    """

    def __init__(self, u: Field, t: float, kappa: int, params: ScheduleParams,
                 profile: WeightProfile, dealias_on: bool = True):
        self.t = float(t)
        self.kappa = kappa
        self.params = params
        self.profile = profile
        self.dealias_on = dealias_on
        self.ops = FieldOps(u)
        self.grid = u.grid
        self.area = u.grid.cell_area
        self.X, self.Y = u.grid.meshgrid()
        self.sched = Schedules(params)
        self.xt = self.X - float(self.sched.rho(1, t))
        self.yt = self.Y - float(self.sched.rho(2, t))

    def integral(self, dens: np.ndarray) -> float:
        return float(dens.sum() * self.area)

    def _irfft(self, spec: np.ndarray) -> np.ndarray:
        g = self.grid
        return np.fft.irfft2(spec, s=(g.ny, g.nx), norm="ortho")

    def spectral_dx(self, values: np.ndarray) -> np.ndarray:
        """Grid x-derivative of sampled values (used on weight products)."""
        return self._irfft(deriv_x_multiplier(self.grid, 1) * np.fft.rfft2(values, norm="ortho"))

    def spectral_dy(self, values: np.ndarray) -> np.ndarray:
        return self._irfft(deriv_y_multiplier(self.grid, 1) * np.fft.rfft2(values, norm="ortho"))

    # extra spectral combinations beyond FieldOps
    @property
    def dxxx_v(self):
        o = self.ops
        m = deriv_x_multiplier(self.grid, 3) * antideriv_x_multiplier(self.grid) * deriv_y_multiplier(self.grid, 1)
        return o._inv("dxxx_v", m)

    @property
    def vyy_xinv(self):
        """Twice-antidifferentiated third y-derivative: the nonlocal term of the v equation."""
        o = self.ops
        m = antideriv_x_multiplier(self.grid) ** 2 * deriv_y_multiplier(self.grid, 3)
        return o._inv("vyy_xinv", m)

    @property
    def _half_usq_spec(self):
        o = self.ops
        if "husq" not in o._cache:
            spec = np.fft.rfft2(0.5 * o.u ** 2, norm="ortho")
            if self.dealias_on:
                spec = spec * self.grid.dealias_mask()
            o._cache["husq"] = spec
        return o._cache["husq"]

    @property
    def nonlinear(self):
        """The quadratic term of the solver: d/dx of the (dealiased) u^2/2."""
        o = self.ops
        if "nl" not in o._cache:
            o._cache["nl"] = self._irfft(deriv_x_multiplier(self.grid, 1) * self._half_usq_spec)
        return o._cache["nl"]

    @property
    def nonlinear_v(self):
        """Image of the quadratic term under the nonlocal map (d/dy of u^2/2,
        restricted to the interior x-columns where the map is invertible)."""
        o = self.ops
        if "nlv" not in o._cache:
            g = self.grid
            m = deriv_x_multiplier(g, 1) * antideriv_x_multiplier(g)  # interior-column projector
            o._cache["nlv"] = self._irfft(deriv_y_multiplier(g, 1) * m * self._half_usq_spec)
        return o._cache["nlv"]

    @property
    def du_dt(self):
        """Semi-discrete right-hand side of the evolution equation."""
        o = self.ops
        return -o.uxxx - self.kappa * o.vy - self.nonlinear

    @property
    def dv_dt(self):
        """Semi-discrete right-hand side of the nonlocal-field equation."""
        return -self.dxxx_v - self.kappa * self.vyy_xinv - self.nonlinear_v


# ---------------------------------------------------------------------------
# functional values
# ---------------------------------------------------------------------------


def K_functional(s: Snapshot) -> float:
    """(1/eta1) integral of u^2 * Phi(xt/lam1, yt/lam2)."""
    sc, p = s.sched, s.profile
    t = s.t
    w = p.Phi(s.xt / sc.lam(1, t), s.yt / sc.lam(2, t))
    return s.integral(s.ops.u ** 2 * w) / float(sc.eta(1, t))


def J_functional(s: Snapshot) -> float:
    """(1/eta2) integral of u * v * Psi(xt/lam3, yt/lam4)."""
    sc, p = s.sched, s.profile
    t = s.t
    w = p.Psi(s.xt / sc.lam(3, t), s.yt / sc.lam(4, t))
    return s.integral(s.ops.u * s.ops.v * w) / float(sc.eta(2, t))


def I_functional(s: Snapshot) -> float:
    """(1/eta3) integral of u * psi(xt/lam5) * phi(xt/lam5^q) * phi(yt/lam6)."""
    sc, p = s.sched, s.profile
    t = s.t
    l5 = float(sc.lam(5, t))
    w = p.psi(s.xt / l5) * p.phi(s.xt / l5 ** s.params.q) * p.phi(s.yt / float(sc.lam(6, t)))
    return s.integral(s.ops.u * w) / float(sc.eta(3, t))


def L_functionals(s: Snapshot) -> tuple[float, float]:
    """(1/2) integral of u^2 * chi((x+theta)/theta), in x and in y."""
    p = s.profile
    th = float(s.sched.theta(s.t))
    lx = 0.5 * s.integral(s.ops.u ** 2 * p.chi((s.X + th) / th))
    ly = 0.5 * s.integral(s.ops.u ** 2 * p.chi((s.Y + th) / th))
    return lx, ly


def M_functionals(s: Snapshot) -> tuple[float, float]:
    """(1/2) integral of u^2 against the bump at the same scale as chi."""
    p = s.profile
    th = float(s.sched.theta(s.t))
    mx = 0.5 * s.integral(s.ops.u ** 2 * p.bump((s.X + th) / th))
    my = 0.5 * s.integral(s.ops.u ** 2 * p.bump((s.Y + th) / th))
    return mx, my


# ---------------------------------------------------------------------------
# rate decompositions (exact identities, evaluated by quadrature)
# ---------------------------------------------------------------------------


def rate_terms_K(s: Snapshot) -> dict[str, float]:
    """Terms of dK/dt: dispersive transport (K11), nonlocal (K12), quadratic
    (K13), attenuation (K2), and the four schedule-derivative terms (K31..K34).

    K11 and K12 are the partially-integrated forms: the derivative of the
    weighted field u*Phi is taken spectrally on the grid, which keeps the
    identity with the cubic-derivative and nonlocal terms exact on the grid.
    """
    sc, p, o = s.sched, s.profile, s.ops
    t = s.t
    l1, l2 = float(sc.lam(1, t)), float(sc.lam(2, t))
    e1 = float(sc.eta(1, t))
    ax, ay = s.xt / l1, s.yt / l2
    W = p.Phi(ax, ay)
    Wx = p.dx_Phi(ax, ay)
    Wy = p.dy_Phi(ax, ay)
    u = o.u
    uW = u * W
    kappa = s.kappa
    terms = {
        "K11": 2.0 / e1 * s.integral(o.uxx * s.spectral_dx(uW)),
        "K12": 2.0 * kappa / e1 * s.integral(o.v * s.spectral_dy(uW)),
        "K13": -2.0 / e1 * s.integral(u * s.nonlinear * W),
        "K2": -float(sc.deta(1, t)) / e1 ** 2 * s.integral(u ** 2 * W),
        "K31": -float(sc.dlam(1, t)) / (l1 * e1) * s.integral(u ** 2 * ax * Wx),
        "K32": -float(sc.dlam(2, t)) / (l2 * e1) * s.integral(u ** 2 * ay * Wy),
        "K33": -float(sc.drho(1, t)) / (l1 * e1) * s.integral(u ** 2 * Wx),
        "K34": -float(sc.drho(2, t)) / (l2 * e1) * s.integral(u ** 2 * Wy),
    }
    return terms


def rate_terms_J(s: Snapshot) -> dict[str, float]:
    """Terms of dJ/dt: attenuation (J1), the two evolution terms (J21, J22),
    and the schedule-derivative terms (J31..J34)."""
    sc, p, o = s.sched, s.profile, s.ops
    t = s.t
    l3, l4 = float(sc.lam(3, t)), float(sc.lam(4, t))
    e2 = float(sc.eta(2, t))
    ax, ay = s.xt / l3, s.yt / l4
    W = p.Psi(ax, ay)
    Wx = p.dx_Psi(ax, ay)
    Wy = p.dy_Psi(ax, ay)
    u, v = o.u, o.v
    terms = {
        "J1": -float(sc.deta(2, t)) / e2 ** 2 * s.integral(u * v * W),
        "J21": 1.0 / e2 * s.integral(s.du_dt * v * W),
        "J22": 1.0 / e2 * s.integral(u * s.dv_dt * W),
        "J31": -float(sc.dlam(3, t)) / (l3 * e2) * s.integral(u * v * ax * Wx),
        "J32": -float(sc.dlam(4, t)) / (l4 * e2) * s.integral(u * v * ay * Wy),
        "J33": -float(sc.drho(1, t)) / (l3 * e2) * s.integral(u * v * Wx),
        "J34": -float(sc.drho(2, t)) / (l4 * e2) * s.integral(u * v * Wy),
    }
    return terms


def rate_terms_I(s: Snapshot) -> dict[str, float]:
    """Terms of dI/dt: attenuation (I2), the evolution split (I111 dispersive,
    I112 nonlocal, I113 quadratic), and schedule terms (I12..I17)."""
    sc, p, o = s.sched, s.profile, s.ops
    t = s.t
    q = s.params.q
    l5 = float(sc.lam(5, t))
    l5q = l5 ** q
    l6 = float(sc.lam(6, t))
    e3 = float(sc.eta(3, t))
    dl5 = float(sc.dlam(5, t))
    dl6 = float(sc.dlam(6, t))
    a5 = s.xt / l5
    a5q = s.xt / l5q
    a6 = s.yt / l6
    ps, dps = p.psi(a5), p.dpsi(a5)
    ph_q, dph_q = p.phi(a5q), p.dphi(a5q)
    ph_y, dph_y = p.phi(a6), p.dphi(a6)
    W = ps * ph_q * ph_y
    u = o.u
    terms = {
        "I2": -float(sc.deta(3, t)) / e3 ** 2 * s.integral(u * W),
        "I111": -1.0 / e3 * s.integral(o.uxxx * W),
        "I112": -s.kappa / e3 * s.integral(o.vy * W),
        # quadratic term kept in solver form; for resolved weights it equals
        # the two weight-derivative integrals of the continuum split
        "I113": -1.0 / e3 * s.integral(s.nonlinear * W),
        "I12": -dl5 / (l5 * e3) * s.integral(u * dps * a5 * ph_q * ph_y),
        "I13": -q * dl5 / (l5 * e3) * s.integral(u * ps * a5q * dph_q * ph_y),
        "I14": -dl6 / (l6 * e3) * s.integral(u * ps * ph_q * a6 * dph_y),
        "I15": -float(sc.drho(1, t)) / (l5 * e3) * s.integral(u * dps * ph_q * ph_y),
        "I16": -float(sc.drho(1, t)) / (l5q * e3) * s.integral(u * ps * dph_q * ph_y),
        "I17": -float(sc.drho(2, t)) / (l6 * e3) * s.integral(u * ps * ph_q * dph_y),
    }
    return terms


def rate_terms_Lx(s: Snapshot) -> dict[str, float]:
    """A1..A4 of dLx/dt; A1 <= 0 whenever chi' <= 0 and theta' > 0."""
    p, o = s.profile, s.ops
    th = float(s.sched.theta(s.t))
    dth = float(s.sched.dtheta(s.t))
    arg = (s.X + th) / th
    chi = p.chi(arg)
    dchi = p.dchi(arg)
    u = o.u
    return {
        "A1": dth / (2.0 * th) * s.integral(u ** 2 * dchi * (1.0 - arg)),
        "A2": -s.integral(u * o.uxxx * chi),
        "A3": -s.kappa * s.integral(u * o.vy * chi),
        "A4": -s.integral(u * s.nonlinear * chi),
    }


def rate_terms_Ly(s: Snapshot) -> dict[str, float]:
    """B1 and B3 of dLy/dt; the x-exact-derivative terms vanish identically."""
    p, o = s.profile, s.ops
    th = float(s.sched.theta(s.t))
    dth = float(s.sched.dtheta(s.t))
    arg = (s.Y + th) / th
    chi = p.chi(arg)
    dchi = p.dchi(arg)
    u = o.u
    return {
        "B1": dth / (2.0 * th) * s.integral(u ** 2 * dchi * (1.0 - arg)),
        "B3": -s.kappa * s.integral(u * o.vy * chi),
    }


# ---------------------------------------------------------------------------
# region masses and decay-series integrands
# ---------------------------------------------------------------------------


def region_mass(f: Field, which: str, t: float, params: ScheduleParams) -> float:
    """Integral of f^2 over the named region; bounded by the full squared norm."""
    f.require("physical")
    mask = region_mask(which, t, params, f.grid)
    return float((f.data ** 2 * mask).sum() * f.grid.cell_area)


def decay_integrals(s: Snapshot) -> dict[str, float]:
    """The three time-weighted localized integrals tracked along a run:
    cubic mass and nonlocal-field mass at the (lam3, lam4) scales, gradient
    mass at the (lam1, lam2) scales, each divided by t*log(t)."""
    sc, p, o = s.sched, s.profile, s.ops
    t = s.t
    tl = t * np.log(t)
    w34 = p.phi(s.xt / float(sc.lam(3, t))) * p.phi(s.yt / float(sc.lam(4, t)))
    w12 = p.phi(s.xt / float(sc.lam(1, t))) * p.phi(s.yt / float(sc.lam(2, t)))
    return {
        "decay_u3": s.integral(np.abs(o.u) ** 3 * w34) / tl,
        "decay_v2": s.integral(o.v ** 2 * w34) / tl,
        "decay_ux2": s.integral(o.ux ** 2 * w12) / tl,
    }


# ---------------------------------------------------------------------------
# series container and collector
# ---------------------------------------------------------------------------

CSV_COLUMNS = (
    "t", "mass", "energy", "momentum", "second_energy",
    "K", "J", "I", "Lx", "Ly", "Mx", "My",
    "mass_omega1", "mass_omega2", "mass_omega1tilde_v", "mass_omega2tilde_ux",
)


@dataclass
class DiagnosticsSeries:
    """Column-ordered per-observation diagnostics; times strictly increase."""

    rows: list[dict] = dfield(default_factory=list)

    def append(self, row: dict) -> None:
        if self.rows and row["t"] <= self.rows[-1]["t"]:
            raise ValueError("observation times must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def term_column(self, functional: str) -> np.ndarray:
        """Sampled sum of the stored rate terms of one functional."""
        return np.array([sum(r["terms"][functional].values()) for r in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


class DiagnosticsCollector:
    """Observer that fills a DiagnosticsSeries from simulation states."""

    def __init__(self, params: ScheduleParams, profile: WeightProfile, kappa: int,
                 with_terms: bool = False, with_second_energy: bool = True,
                 with_decay: bool = False, dealias_on: bool = True):
        self.params = params
        self.profile = profile
        self.kappa = kappa
        self.with_terms = with_terms
        self.with_second_energy = with_second_energy
        self.with_decay = with_decay
        self.dealias_on = dealias_on
        self.series = DiagnosticsSeries()

    def __call__(self, state) -> None:
        s = Snapshot(state.u, state.t, self.kappa, self.params, self.profile,
                     dealias_on=self.dealias_on)
        cons = conserved_record(state.u, self.kappa, state.t, with_second=self.with_second_energy)
        lx, ly = L_functionals(s)
        mx, my = M_functionals(s)
        ufld = state.u
        g = state.grid
        v_field = Field(g, s.ops.v, "physical")
        ux_field = Field(g, s.ops.ux, "physical")
        row = {
            "t": state.t,
            "mass": cons.mass,
            "energy": cons.energy,
            "momentum": cons.momentum,
            "second_energy": cons.second_energy if cons.second_energy is not None else np.nan,
            "K": K_functional(s),
            "J": J_functional(s),
            "I": I_functional(s),
            "Lx": lx,
            "Ly": ly,
            "Mx": mx,
            "My": my,
            "mass_omega1": region_mass(ufld, "omega1", state.t, self.params),
            "mass_omega2": region_mass(ufld, "omega2", state.t, self.params),
            "mass_omega1tilde_v": region_mass(v_field, "omega1_tilde", state.t, self.params),
            "mass_omega2tilde_ux": region_mass(ux_field, "omega2_tilde", state.t, self.params),
        }
        if self.with_decay:
            row.update(decay_integrals(s))
        if self.with_terms:
            row["terms"] = {
                "K": rate_terms_K(s),
                "J": rate_terms_J(s),
                "I": rate_terms_I(s),
                "Lx": rate_terms_Lx(s),
                "Ly": rate_terms_Ly(s),
            }
        self.series.append(row)


# ---------------------------------------------------------------------------
# finite-difference rate check
# ---------------------------------------------------------------------------


def fd_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Fourth-order derivative on a uniform grid (one-sided at the ends)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(times)
    if n < 5:
        raise InsufficientSamples("need at least 5 uniformly spaced samples")
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-8, atol=1e-12):
        raise InsufficientSamples("samples must be uniformly spaced")
    d = np.empty(n)
    d[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
    d[0] = (-25 * values[0] + 48 * values[1] - 36 * values[2] + 16 * values[3] - 3 * values[4]) / (12 * h)
    d[1] = (-3 * values[0] - 10 * values[1] + 18 * values[2] - 6 * values[3] + values[4]) / (12 * h)
    d[-2] = -(-3 * values[-1] - 10 * values[-2] + 18 * values[-3] - 6 * values[-4] + values[-5]) / (12 * h)
    d[-1] = -(-25 * values[-1] + 48 * values[-2] - 36 * values[-3] + 16 * values[-4] - 3 * values[-5]) / (12 * h)
    return d


def rate_check(series: DiagnosticsSeries, functionals=("K", "J", "I", "Lx", "Ly")) -> dict:
    """Max relative residual between the FD derivative of each functional
    series and its directly quadratured term sum.

    The scale is the sup of the term-sum magnitude over the series (with a
    tiny absolute floor so identically-zero runs report zero residual).
    """
    times = series.times
    report = {}
    for name in functionals:
        vals = series.column(name)
        terms = series.term_column(name)
        deriv = fd_derivative(times, vals)
        scale = max(float(np.abs(terms).max(initial=0.0)), 1e-300)
        resid = np.abs(deriv - terms)
        report[name] = {
            "max_residual": float(resid.max()),
            "scale": scale,
            "max_rel_residual": float(resid.max() / scale) if np.abs(terms).max() > 0 else float(resid.max()),
        }
    return report
