"""Conserved and dissipated functionals, identity residuals, decay and stability.

Time derivatives are centered differences on snapshots and are reported at
interior snapshots only. Spatial integrals are spacing-weighted sums and
spatial derivatives are spectral.
"""

from dataclasses import dataclass
import csv

import numpy as np
from scipy.integrate import cumulative_simpson

from hnls._validation import ValidationError
from hnls.core import DampingProfile, DampingSpec, EquationParams, Trajectory, differentiate, l2_norm_sq
from hnls.nonlinearity import ZERO_GUARD, NonlinearConfig, rhs_values

IDENTITIES = (
    "mass_2_15",
    "weighted_2_17",
    "h1_2_24",
    "momentum_2_26",
    "mass_balance_3_22",
    "h1_balance_3_27",
    "momentum_balance_3_29",
    "cubic_balance_3_31",
    "energy_3_32",
    "weighted_smoothing_3_39",
)
WEIGHTED = ("weighted_2_17", "weighted_smoothing_3_39")
DELTA_ZERO_ONLY = ("cubic_balance_3_31", "energy_3_32")


@dataclass(frozen=True)
class IdentityResidualSeries:
    identity_name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residuals: np.ndarray
    bound_ratio: np.ndarray = None

    def __post_init__(self):
        if self.identity_name not in IDENTITIES:
            raise ValidationError(f"unknown identity {self.identity_name!r}")
        arrays = [np.asarray(a, dtype=float) for a in (self.times, self.lhs, self.rhs, self.residuals)]
        if len({a.shape for a in arrays}) != 1:
            raise ValidationError("identity series arrays must be congruent")
        if not np.all(np.isfinite(arrays[3])):
            raise ValidationError("identity residuals must be finite")
        for name, arr in zip(("times", "lhs", "rhs", "residuals"), arrays):
            object.__setattr__(self, name, arr)

    @property
    def max_abs_residual(self):
        return float(np.max(np.abs(self.residuals), initial=0.0))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lhs", "rhs", "residual"])
            for row in zip(self.times, self.lhs, self.rhs, self.residuals):
                w.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class DecayReport:
    gamma_hat: float
    r_squared: float
    monotone: bool
    gamma_formula: float = None
    decades: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValidationError("r_squared must lie in [0, 1]")


# --- scalar functionals ------------------------------------------------------


def mass(u):
    return l2_norm_sq(u)


def energy_bracket(u, params):
    """int |u_x|^2 + i(lambda/beta - a) int u conj(u_x) - (2 beta/3) int |u|^3."""
    if params.beta == 0:
        raise ValidationError("beta must be nonzero for the energy bracket")
    return float(_energy_rows(u.values[None, :], u.grid, params)[0])


def _energy_rows(U, grid, params):
    h = grid.spacing
    Ux = differentiate(U, grid, 1)
    mom = np.sum(U * np.conj(Ux), axis=-1) * h
    scale = np.sqrt(np.sum(np.abs(U) ** 2, axis=-1) * np.sum(np.abs(Ux) ** 2, axis=-1)) * h
    if np.any(np.abs(mom.real) > 1e-10 * np.maximum(scale, 1.0)):
        raise AssertionError("Re int u conj(u_x) should vanish on a periodic grid")
    coef = params.lam / params.beta - params.a
    return (np.sum(np.abs(Ux) ** 2, axis=-1) * h
            + np.real(1j * coef * mom)
            - 2.0 * params.beta / 3.0 * np.sum(np.abs(U) ** 3, axis=-1) * h)


def energy_series(traj, params=None):
    params = params or traj.params
    if params is None or params.beta == 0:
        raise ValidationError("beta must be nonzero for the energy bracket")
    return _energy_rows(traj.states, traj.grid, params)


# --- identity residuals ------------------------------------------------------


def _centered(values, times):
    return (values[2:] - values[:-2]) / (times[2:] - times[:-2])


def _nonlinear_of(traj, params):
    cfg = getattr(traj.config, "nonlinear", None)
    if isinstance(cfg, NonlinearConfig) and cfg.delta == params.delta:
        return cfg
    return NonlinearConfig(params.delta)


def identity_residuals(traj, name, weight=None, params=None, damping=None):
    """Residual series lhs - rhs of the named identity along ``traj``.

    The free-flow identities are evaluated with forcing f = F(u), the
    discrete right-hand side used by the solver, so they hold for nonlinear
    trajectories as well. ``params``/``damping`` override the trajectory echo.
    """
    if name not in IDENTITIES:
        raise ValidationError(f"unknown identity {name!r}; valid: {', '.join(IDENTITIES)}")
    params = params or traj.params or EquationParams()
    damping = damping or traj.damping or DampingSpec()
    if name in WEIGHTED and weight is None:
        raise ValidationError(f"{name} requires a weight")
    if name not in WEIGHTED and weight is not None:
        raise ValidationError(f"{name} does not take a weight")
    if name == "energy_3_32" and params.beta == 0:
        raise ValidationError("beta must be nonzero for energy_3_32")
    if name in DELTA_ZERO_ONLY and params.delta != 0:
        raise ValidationError(f"{name} holds only for delta = 0")
    t = traj.times
    if t.size < 3:
        raise ValidationError("need at least three snapshots for centered differences")

    g = traj.grid
    h = g.spacing
    U = traj.states
    Ux = differentiate(U, g, 1)
    d = damping.evaluate(g)
    inner = slice(1, -1)
    a, b, lam, beta, delta = params.a, params.b, params.lam, params.beta, params.delta

    def integ(arr):
        return np.sum(arr, axis=-1) * h

    mag = np.abs(U)
    G = np.sqrt(mag**2 + delta)
    live = G >= ZERO_GUARD
    Gx = np.where(live, np.real(np.conj(U) * Ux) / np.where(live, G, 1.0), 0.0)
    bound = None
    # 2 Re int d' u conj(u_x) is evaluated as -int d (|u|^2)_xx, which stays
    # valid when d jumps (plateau_with_hole)

    if name in ("mass_2_15", "weighted_2_17", "h1_2_24", "momentum_2_26"):
        nl = _nonlinear_of(traj, params)
        F = rhs_values(U, g, lam, beta, delta, d, nl.evaluation_mode, nl.dealias)
        if name == "mass_2_15":
            lhs = _centered(integ(mag**2), t)
            rhs = 2 * np.imag(integ(F * np.conj(U)))[inner]
        elif name == "weighted_2_17":
            from hnls.weights import weight_values

            psi, psi1, psi3 = (weight_values(weight, g.x, k) for k in (0, 1, 3))
            lhs = _centered(integ(mag**2 * psi), t) + 3 * integ(np.abs(Ux) ** 2 * psi1)[inner]
            rhs = (2 * a * np.imag(integ(Ux * np.conj(U) * psi1))
                   + integ(mag**2 * psi3) + b * integ(mag**2 * psi1)
                   + 2 * np.imag(integ(F * np.conj(U) * psi)))[inner]
        elif name == "h1_2_24":
            Fx = differentiate(F, g, 1)
            lhs = _centered(integ(np.abs(Ux) ** 2), t)
            rhs = 2 * np.imag(integ(Fx * np.conj(Ux)))[inner]
        else:
            lhs = np.real(1j * _centered(integ(U * np.conj(Ux)), t))
            rhs = 2 * np.real(integ(F * np.conj(Ux)))[inner]

    elif name == "mass_balance_3_22":
        M = integ(mag**2)
        dissipated = 2 * cumulative_simpson(integ(d * mag**2), x=t, initial=0.0)
        lhs = (M + dissipated)[inner]
        rhs = np.full(lhs.shape, M[0])

    elif name == "h1_balance_3_27":
        theta_xx = differentiate(mag**2, g, 2).real
        lhs = _centered(integ(np.abs(Ux) ** 2), t)
        rhs = -(2 * lam * np.imag(integ(Gx * U * np.conj(Ux)))
                + 3 * beta * integ(Gx * np.abs(Ux) ** 2)
                - beta * integ(Gx * theta_xx)
                + 2 * integ(d * np.abs(Ux) ** 2)
                - integ(d * theta_xx))[inner]

    elif name == "momentum_balance_3_29":
        lhs = np.real(1j * _centered(integ(U * np.conj(Ux)), t))
        rhs = (2 * beta * np.imag(integ(Gx * U * np.conj(Ux)))
               + 2 * np.imag(integ(d * U * np.conj(Ux))))[inner]

    elif name == "cubic_balance_3_31":
        theta_xx = differentiate(mag**2, g, 2).real
        lhs = 2.0 / 3.0 * _centered(integ(mag**3), t)
        rhs = -(2 * a * np.imag(integ(Gx * U * np.conj(Ux)))
                + 3 * integ(Gx * np.abs(Ux) ** 2)
                - integ(Gx * theta_xx)
                + 2 * integ(d * mag**3))[inner]

    elif name == "energy_3_32":
        coef = lam / beta - a
        theta_xx = differentiate(mag**2, g, 2).real
        lhs = _centered(_energy_rows(U, g, params), t)
        rhs = -(2 * integ(d * np.abs(Ux) ** 2)
                - integ(d * theta_xx)
                - 2 * coef * np.imag(integ(d * U * np.conj(Ux)))
                - 2 * beta * integ(d * mag**3))[inner]

    else:  # weighted_smoothing_3_39
        from hnls.weights import weight_values

        psi, psi1, psi2, psi3 = (weight_values(weight, g.x, k) for k in (0, 1, 2, 3))
        dpsi_mass = _centered(integ(mag**2 * psi), t)
        smoothing = integ(np.abs(Ux) ** 2 * psi1)[inner]
        lhs = dpsi_mass + 3 * smoothing
        if delta == 0:
            transport = 4.0 / 3.0 * beta * integ(mag**3 * psi1)
        else:
            transport = -2 * beta * np.real(integ((Gx * U + G * Ux) * np.conj(U) * psi))
        rhs = (2 * a * np.imag(integ(Ux * np.conj(U) * psi1))
               + integ(mag**2 * psi3) + b * integ(mag**2 * psi1)
               + transport - 2 * integ(d * mag**2 * psi))[inner]
        bracket = integ(mag**2 * (psi + psi1 + np.abs(psi2) + np.abs(psi3)))[inner]
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(bracket > 0, (dpsi_mass + smoothing) / bracket, 0.0)

    return IdentityResidualSeries(name, t[inner], lhs, rhs, lhs - rhs, bound)


def identity_suite(traj, weight=None, params=None, damping=None):
    """All identities applicable to ``traj``; weighted ones need ``weight``."""
    params = params or traj.params or EquationParams()
    out = {}
    for name in IDENTITIES:
        if name in WEIGHTED and weight is None:
            continue
        if name in DELTA_ZERO_ONLY and params.delta != 0:
            continue
        if name == "energy_3_32" and params.beta == 0:
            continue
        out[name] = identity_residuals(traj, name, weight if name in WEIGHTED else None,
                                       params, damping)
    return out


# --- local smoothing ---------------------------------------------------------


def local_smoothing_sigma(traj, window=1.0):
    """sup over x0 of int_0^T int_{x0}^{x0+window} |u_x|^2 dx dt.

    Window starts run over the grid nodes; the window may wrap across the
    periodic seam. Space uses the trapezoid rule with linear interpolation at
    the window end, time uses the trapezoid rule over snapshots.
    """
    g = traj.grid
    h = g.spacing
    if not 0 < window < 2 * g.half_width:
        raise ValidationError("window must be positive and shorter than the box")
    e = np.abs(differentiate(traj.states, g, 1)) ** 2
    N = g.n_points
    ext = np.concatenate([e, e[:, :1]], axis=1)
    cells = 0.5 * (ext[:, 1:] + ext[:, :-1]) * h
    cum = np.concatenate([np.zeros((e.shape[0], 1)), np.cumsum(np.tile(cells, 2), axis=1)], axis=1)
    shift = window / h
    whole = int(np.floor(shift))
    frac = shift - whole
    start = np.arange(N)
    end_lo = cum[:, start + whole]
    # linear interpolation of the integrand inside the last cell
    e2 = np.tile(e, 2)
    f_lo = e2[:, start + whole]
    f_hi = e2[:, start + whole + 1]
    partial = h * (frac * f_lo + 0.5 * frac**2 * (f_hi - f_lo))
    windows = end_lo - cum[:, start] + partial
    totals = np.trapezoid(windows, traj.times, axis=0) if len(traj) > 1 else np.zeros(N)
    return float(np.max(totals))


# --- decay -------------------------------------------------------------------


def decay_fit(traj, damping=None):
    """Exponential fit of mass over the second half of the run."""
    damping = damping or traj.damping or DampingSpec()
    M = traj.masses()
    t = traj.times
    if M[0] == 0:
        return DecayReport(0.0, 1.0, True, _gamma_formula(damping), 0.0)
    monotone = bool(np.all(np.diff(M) <= 1e-10 * M[0]))
    tail = t >= 0.5 * t[-1]
    if np.count_nonzero(tail) < 3:
        raise ValidationError("need at least three snapshots in the second half of the run")
    tt = t[tail]
    y = np.log(M[tail])
    slope, intercept = np.polyfit(tt, y, 1)
    fit = slope * tt + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    decades = float(np.log10(M[0] / M[-1])) if M[-1] > 0 else np.inf
    return DecayReport(float(-slope), r2, monotone, _gamma_formula(damping), decades)


def _gamma_formula(damping):
    if damping.profile is DampingProfile.CONSTANT:
        return 2.0 * damping.d0
    if damping.profile is DampingProfile.ZERO:
        return 0.0
    return None


# --- stability ---------------------------------------------------------------


def stability_gap(traj_u, traj_v, alpha=0.75, eps=0.5):
    """Weighted gap series int |u - v|^2 rho_{alpha,eps} and its ratio to t = 0.

    Returns (times, gap, ratio); the ratio is zero where the initial gap is 0.
    """
    from hnls.weights import WeightSpec, eval_rho

    if traj_u.grid != traj_v.grid:
        raise ValidationError("trajectories must share a grid")
    if traj_u.times.shape != traj_v.times.shape or np.any(traj_u.times != traj_v.times):
        raise ValidationError("trajectories must share snapshot times")
    if traj_u.params is not None and traj_v.params is not None and traj_u.params != traj_v.params:
        raise ValidationError("trajectories must share equation parameters")
    rho = eval_rho(WeightSpec(alpha, eps), traj_u.grid.x)
    diff = np.abs(traj_u.states - traj_v.states) ** 2
    gap = np.sum(diff * rho, axis=1) * traj_u.grid.spacing
    ratio = gap / gap[0] if gap[0] > 0 else np.zeros_like(gap)
    return traj_u.times.copy(), gap, ratio


__all__ = [
    "IDENTITIES",
    "IdentityResidualSeries",
    "DecayReport",
    "mass",
    "energy_bracket",
    "energy_series",
    "identity_residuals",
    "identity_suite",
    "local_smoothing_sigma",
    "decay_fit",
    "stability_gap",
    "Trajectory",
]
