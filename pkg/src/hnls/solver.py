"""Time integration of i u_t + a u_xx + i b u_x + i u_xxx = F(u) on a periodic box.

The dispersive part is always applied exactly through its Fourier
multiplier; only F (nonlinearity and damping) is stepped explicitly.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import math
import warnings

import numpy as np

from hnls._validation import ValidationError, check_positive
from hnls.core import Field, Trajectory, edge_ratio
from hnls.linear import LinearMultiplier, dispersion
from hnls.nonlinearity import EvaluationMode, NonlinearConfig, rhs_values

PICARD_SOFT_LIMIT = 0.2


class Scheme(str, Enum):
    STRANG_SPLIT = "strang_split"
    IF_RK4 = "if_rk4"
    PICARD_DUHAMEL = "picard_duhamel"


class NumericalAbort(RuntimeError):
    def __init__(self, step, time):
        super().__init__(f"non-finite state at step {step} (t = {time:.6g})")
        self.step = step
        self.time = time


class NonContractionError(RuntimeError):
    def __init__(self, ratios):
        super().__init__(
            "Picard iteration is not contracting (ratio >= 1 for 3 consecutive "
            f"iterations, last ratios {ratios[-3:]}); reduce t_final"
        )
        self.ratios = list(ratios)


class BoundaryContaminationWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolveConfig:
    """Time-stepping options.

    ``dt=None`` selects min(1e-3, h), rounded down so it divides t_final.
    ``periodic_data`` disables the box-edge decay checks, for data that are
    genuinely periodic rather than a surrogate for the line.
    """

    t_final: float
    dt: float = None
    scheme: Scheme = Scheme.STRANG_SPLIT
    snapshot_stride: int = 1
    picard_tol: float = None
    picard_max_iters: int = None
    nonlinear: NonlinearConfig = None
    periodic_data: bool = False

    def __post_init__(self):
        t_final = check_positive(self.t_final, "t_final", key="time.t_final")
        object.__setattr__(self, "t_final", t_final)
        if self.dt is not None:
            dt = check_positive(self.dt, "dt", key="time.dt")
            if dt >= t_final:
                raise ValidationError(f"dt={dt} must be smaller than t_final={t_final}", "time.dt")
            object.__setattr__(self, "dt", dt)
        try:
            scheme = Scheme(self.scheme)
        except ValueError:
            valid = ", ".join(s.value for s in Scheme)
            raise ValidationError(f"unknown scheme {self.scheme!r}; valid: {valid}", "scheme")
        object.__setattr__(self, "scheme", scheme)
        stride = self.snapshot_stride
        if isinstance(stride, bool) or not isinstance(stride, (int, np.integer)) or stride < 1:
            raise ValidationError("snapshot_stride must be an integer >= 1", "time.snapshot_stride")
        picard_given = self.picard_tol is not None or self.picard_max_iters is not None
        if scheme is Scheme.PICARD_DUHAMEL:
            if self.picard_tol is None or self.picard_max_iters is None:
                raise ValidationError("picard_duhamel needs picard_tol and picard_max_iters", "scheme")
            check_positive(self.picard_tol, "picard_tol", key="picard_tol")
            if int(self.picard_max_iters) < 1:
                raise ValidationError("picard_max_iters must be >= 1", "picard_max_iters")
        elif picard_given:
            raise ValidationError("picard_tol/picard_max_iters apply only to picard_duhamel", "scheme")

    def resolve_steps(self, grid):
        """(number of steps, step size) for this grid."""
        if self.dt is None:
            target = min(1e-3, grid.spacing)
            steps = max(1, math.ceil(self.t_final / target - 1e-9))
            return steps, self.t_final / steps
        steps = int(round(self.t_final / self.dt))
        if steps < 1 or abs(steps * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValidationError(
                f"dt={self.dt} must divide t_final={self.t_final}", "time.dt"
            )
        return steps, self.t_final / steps


@dataclass
class PicardReport:
    iterations: int
    increments: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False


class _Rhs:
    """Nonlinear vector field u_t = -i F(u), with an evaluation counter."""

    def __init__(self, grid, params, damping, nl):
        self.grid = grid
        self.params = params
        self.d = damping.evaluate(grid)
        self.nl = nl
        self.active = params.lam != 0 or params.beta != 0 or np.any(self.d != 0)

    def F(self, values):
        p = self.params
        return rhs_values(values, self.grid, p.lam, p.beta, self.nl.delta, self.d,
                          self.nl.evaluation_mode, self.nl.dealias)

    def __call__(self, values):
        return -1j * self.F(values)


def _nonlinear_config(params, cfg):
    nl = cfg.nonlinear if isinstance(cfg, SolveConfig) else cfg
    if nl is None:
        return NonlinearConfig(params.delta)
    if nl.delta != params.delta:
        raise ValidationError(
            f"nonlinear delta={nl.delta} disagrees with params.delta={params.delta}", "params.delta"
        )
    return nl


def _rk4(f, u, dt):
    k1 = f(u)
    k2 = f(u + 0.5 * dt * k1)
    k3 = f(u + 0.5 * dt * k2)
    k4 = f(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_strang(u, dt, params, damping, cfg=None):
    """One Strang step L(dt/2) N(dt) L(dt/2); N is integrated by RK4."""
    dt = check_positive(dt, "dt")
    nl = _nonlinear_config(params, cfg)
    rhs = _Rhs(u.grid, params, damping, nl)
    half = LinearMultiplier.build(u.grid, dt / 2, params.a, params.b)
    v = half.apply(u.values)
    if rhs.active:
        v = _rk4(rhs, v, dt)
    v = half.apply(v)
    if not np.all(np.isfinite(v)):
        raise NumericalAbort(1, dt)
    return Field(v, u.grid)


def _check_initial(u0, cfg):
    if cfg.periodic_data:
        return
    if edge_ratio(u0.values) >= 1e-8:
        raise ValidationError(
            "initial datum has not decayed at the box edges (|u0| >= 1e-8 max); "
            "enlarge grid.half_width or set periodic_data",
            "initial",
        )


class _EdgeMonitor:
    def __init__(self, enabled):
        self.enabled = enabled
        self.fired = False

    def check(self, values, t):
        if self.enabled and not self.fired and edge_ratio(values) > 1e-6:
            self.fired = True
            warnings.warn(
                f"solution reached the box edge (|u| > 1e-6 max at t = {t:.4g}); "
                "results are contaminated by the periodic surrogate",
                BoundaryContaminationWarning,
                stacklevel=3,
            )


def solve(u0, params, damping, cfg):
    """Integrate from u0 to cfg.t_final and return the snapshot Trajectory."""
    if not isinstance(cfg, SolveConfig):
        raise ValidationError("cfg must be a SolveConfig")
    _check_initial(u0, cfg)
    if cfg.scheme is Scheme.PICARD_DUHAMEL:
        traj, _ = picard_solve(u0, params, damping, cfg)
        return traj
    grid = u0.grid
    nl = _nonlinear_config(params, cfg)
    steps, dt = cfg.resolve_steps(grid)
    rhs = _Rhs(grid, params, damping, nl)
    omega = dispersion(grid, params.a, params.b)
    E = np.exp(1j * omega * dt)
    Eh = np.exp(1j * omega * dt / 2)
    monitor = _EdgeMonitor(not cfg.periodic_data)
    times = [0.0]
    states = [u0.values.copy()]
    if cfg.scheme is Scheme.STRANG_SPLIT:
        advance = _strang_advance(rhs, Eh, dt)
    else:
        advance = _if_rk4_advance(rhs, E, Eh, dt)
    v = u0.values.copy()
    for k in range(steps):
        # blow-up is reported through NumericalAbort, not floating point warnings
        with np.errstate(over="ignore", invalid="ignore"):
            v = advance(v)
        if not np.all(np.isfinite(v)):
            raise NumericalAbort(k + 1, (k + 1) * dt)
        if (k + 1) % cfg.snapshot_stride == 0 or k + 1 == steps:
            monitor.check(v, (k + 1) * dt)
            times.append((k + 1) * dt)
            states.append(v.copy())
    return Trajectory(grid, np.array(times), np.array(states), params, damping, cfg)


def _strang_advance(rhs, Eh, dt):
    def advance(v):
        v = np.fft.ifft(Eh * np.fft.fft(v))
        if rhs.active:
            v = _rk4(rhs, v, dt)
        return np.fft.ifft(Eh * np.fft.fft(v))

    return advance


def _if_rk4_advance(rhs, E, Eh, dt):
    fft, ifft = np.fft.fft, np.fft.ifft

    def N(vh):
        return fft(rhs(ifft(vh)))

    def advance(v):
        if not rhs.active:
            return ifft(E * fft(v))
        vh = fft(v)
        k1 = N(vh)
        k2 = N(Eh * (vh + 0.5 * dt * k1))
        k3 = N(Eh * vh + 0.5 * dt * k2)
        k4 = N(E * vh + dt * Eh * k3)
        return ifft(E * vh + dt / 6.0 * (E * k1 + 2 * Eh * (k2 + k3) + k4))

    return advance


# --- Picard / Duhamel fixed point --------------------------------------------


def _duhamel_half_steps(u0_hat, F_hat, E, Eh, Ehm, dt):
    """Duhamel quadrature returning the state at every half step.

    Full steps use Simpson on [t, t+dt]; half steps integrate the quadratic
    through the same three forcing samples over [t, t+dt/2].
    """
    n_half = F_hat.shape[0]
    out = np.empty_like(F_hat)
    out[0] = u0_hat
    uh = u0_hat
    for j in range(0, n_half - 1, 2):
        f0, f1, f2 = F_hat[j], F_hat[j + 1], F_hat[j + 2]
        out[j + 1] = Eh * uh - 1j * dt * (5 / 24 * Eh * f0 + 8 / 24 * f1 - 1 / 24 * Ehm * f2)
        uh = E * uh - 1j * dt / 6 * (E * f0 + 4 * Eh * f1 + f2)
        out[j + 2] = uh
    return out


def picard_solve(u0, params, damping, cfg):
    """Fixed-point iteration u <- Lambda(u) with Lambda the Duhamel map of F.

    Returns (Trajectory, PicardReport). The iterate is stored at half steps
    because the Simpson rule samples the forcing there.
    """
    if cfg.scheme is not Scheme.PICARD_DUHAMEL:
        cfg = replace(cfg, scheme=Scheme.PICARD_DUHAMEL,
                      picard_tol=cfg.picard_tol or 1e-12,
                      picard_max_iters=cfg.picard_max_iters or 50)
    _check_initial(u0, cfg)
    if cfg.t_final > PICARD_SOFT_LIMIT:
        warnings.warn(
            f"picard_duhamel is intended for t_final <= {PICARD_SOFT_LIMIT}; "
            "contraction may fail for longer horizons",
            RuntimeWarning,
            stacklevel=2,
        )
    grid = u0.grid
    nl = _nonlinear_config(params, cfg)
    steps, dt = cfg.resolve_steps(grid)
    rhs = _Rhs(grid, params, damping, nl)
    omega = dispersion(grid, params.a, params.b)
    E = np.exp(1j * omega * dt)
    Eh = np.exp(1j * omega * dt / 2)
    Ehm = np.conj(Eh)
    half_times = np.arange(2 * steps + 1) * (dt / 2)
    u0_hat = np.fft.fft(u0.values)
    # zeroth iterate: the free linear flow
    U_hat = np.exp(1j * omega[None, :] * half_times[:, None]) * u0_hat[None, :]
    U = np.fft.ifft(U_hat, axis=-1)
    report = PicardReport(iterations=0)
    streak = 0
    for it in range(int(cfg.picard_max_iters)):
        F_hat = np.fft.fft(rhs.F(U), axis=-1)
        new_hat = _duhamel_half_steps(u0_hat, F_hat, E, Eh, Ehm, dt)
        new = np.fft.ifft(new_hat, axis=-1)
        if not np.all(np.isfinite(new)):
            raise NumericalAbort(it + 1, cfg.t_final)
        inc = float(np.sqrt(np.max(np.sum(np.abs(new - U) ** 2, axis=1) * grid.spacing)))
        size = float(np.sqrt(np.max(np.sum(np.abs(new) ** 2, axis=1) * grid.spacing)))
        report.iterations = it + 1
        if report.increments and report.increments[-1] > 0:
            ratio = inc / report.increments[-1]
            report.ratios.append(ratio)
            streak = streak + 1 if ratio >= 1 else 0
        report.increments.append(inc)
        U = new
        if inc <= cfg.picard_tol * max(1.0, size):
            report.converged = True
            break
        if streak >= 3:
            raise NonContractionError(report.ratios)
    full = U[::2]
    times = half_times[::2]
    idx = [0] + [k for k in range(1, steps + 1) if k % cfg.snapshot_stride == 0 or k == steps]
    traj = Trajectory(grid, times[idx], full[idx], params, damping, cfg)
    return traj, report


# --- delta continuation ------------------------------------------------------


@dataclass
class ContinuationReport:
    deltas: list
    final_states: np.ndarray
    gaps: list
    monotone: bool
    rate_flags: list


def _solve_final(args):
    u0, params, damping, cfg = args
    return solve(u0, params, damping, cfg).states[-1]


def delta_continuation(u0, params, damping, cfg, deltas, workers=1, mode=None):
    """Solve the regularized problem along decreasing delta; report L2 gaps.

    ``gaps[j]`` is ||u_{delta_j}(T) - u_{delta_{j+1}}(T)||. ``rate_flags``
    marks consecutive gaps that shrink by less than the factor suggested by
    the delta ratio (gap_j / gap_{j+1} < 0.1 * delta_j / delta_{j+1}), which
    calls for inspection rather than signalling a failure.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(d < 0 for d in deltas):
        raise ValidationError("deltas must be a non-empty list of values >= 0")
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise ValidationError("deltas must be non-increasing")
    base = cfg.nonlinear
    jobs = []
    for d in deltas:
        if mode is not None:
            m = EvaluationMode(mode)
        elif base is not None and base.evaluation_mode is not EvaluationMode.PHYSICAL_P_FORM:
            m = base.evaluation_mode
        else:
            m = EvaluationMode.PSEUDOSPECTRAL
        if d > 0 and m is EvaluationMode.PHYSICAL_P_FORM:
            m = EvaluationMode.PSEUDOSPECTRAL
        dealias = True if base is None else base.dealias
        nl = NonlinearConfig(d, m, dealias)
        jobs.append((u0, params.replace(delta=d), damping, replace(cfg, nonlinear=nl)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(_solve_final, jobs))
    else:
        finals = [_solve_final(j) for j in jobs]
    finals = np.array(finals)
    h = u0.grid.spacing
    gaps = [float(np.sqrt(np.sum(np.abs(a - b) ** 2) * h)) for a, b in zip(finals, finals[1:])]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    flags = []
    for j in range(len(gaps) - 1):
        d0, d1 = deltas[j + 1], deltas[j + 2]
        expected = d0 / d1 if d1 > 0 else math.inf
        flags.append(gaps[j + 1] > 0 and gaps[j] / gaps[j + 1] < 0.1 * expected)
    return ContinuationReport(deltas, finals, gaps, monotone, flags)


__all__ = [
    "Scheme",
    "SolveConfig",
    "PicardReport",
    "ContinuationReport",
    "NumericalAbort",
    "NonContractionError",
    "BoundaryContaminationWarning",
    "step_strang",
    "solve",
    "picard_solve",
    "delta_continuation",
]
