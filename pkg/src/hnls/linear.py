"""Linear flow i u_t + a u_xx + i b u_x + i u_xxx = f.

In Fourier space (u_hat = sum e^{-i x xi} u) the equation reads
u_hat_t = i omega u_hat - i f_hat with omega = xi^3 - a xi^2 - b xi.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from hnls._validation import ValidationError, check_finite_scalar, check_positive
from hnls.core import Field, Trajectory, differentiate
from hnls.kernel import green_batch


def dispersion(grid, a, b):
    """omega(xi) = xi^3 - a xi^2 - b xi; odd powers drop the Nyquist mode."""
    xi = grid.wavenumbers
    xo = grid.wavenumbers_odd
    return xo**3 - a * xi**2 - b * xo


@dataclass(frozen=True, eq=False)
class LinearMultiplier:
    phases: np.ndarray

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=complex).copy()
        if np.max(np.abs(np.abs(ph) - 1.0), initial=0.0) > 1e-14:
            raise ValidationError("multiplier entries must have unit modulus")
        ph.flags.writeable = False
        object.__setattr__(self, "phases", ph)

    @classmethod
    def build(cls, grid, t, a, b):
        return cls(np.exp(1j * dispersion(grid, a, b) * t))

    def apply(self, values):
        return np.fft.ifft(self.phases * np.fft.fft(values))


def propagate(u0, t, a=0.0, b=0.0):
    """Exact linear flow S(t)u0; negative t runs the group backwards."""
    t = check_finite_scalar(t, "t")
    if t == 0:
        return u0
    mult = LinearMultiplier.build(u0.grid, t, a, b)
    return Field(mult.apply(u0.values), u0.grid)


def propagate_via_kernel(u0, t, a=0.0, b=0.0):
    """Line convolution h * sum_j G(t, x_i - y_j) u0(y_j).

    No periodic wrap is applied, so u0 must have decayed at the box edges.
    """
    t = check_positive(t, "t")
    g = u0.grid
    N = g.n_points
    offsets = g.spacing * np.arange(-(N - 1), N)
    kern = green_batch(t, offsets, a, b, 0)
    full = fftconvolve(kern, u0.values) * g.spacing
    return Field(full[N - 1:2 * N - 1], g)


def _forcing_values(forcing, t, grid):
    if forcing is None:
        return np.zeros(grid.n_points, dtype=complex)
    val = forcing(t)
    if isinstance(val, Field):
        val = val.values
    return np.asarray(val, dtype=complex)


def duhamel_solve(u0, forcing, t_final, dt, a=0.0, b=0.0, snapshot_stride=1):
    """Integrating-factor Simpson scheme for the forced linear problem.

    Each step advances
        u_hat <- E(dt) u_hat - i dt/6 [E(dt) f_hat(t) + 4 E(dt/2) f_hat(t+dt/2) + f_hat(t+dt)]
    with E(s) = exp(i omega s). ``forcing`` maps t to nodal values (or a
    Field); ``None`` means f = 0. Returns a Trajectory.
    """
    t_final = check_positive(t_final, "t_final")
    dt = check_positive(dt, "dt")
    steps = int(round(t_final / dt))
    if steps < 1 or abs(steps * dt - t_final) > 1e-9 * t_final:
        raise ValidationError("dt must divide t_final")
    g = u0.grid
    omega = dispersion(g, a, b)
    E = np.exp(1j * omega * dt)
    Eh = np.exp(1j * omega * dt / 2)
    uh = np.fft.fft(u0.values)
    times = [0.0]
    states = [u0.values.copy()]
    f_prev = np.fft.fft(_forcing_values(forcing, 0.0, g))
    for k in range(steps):
        t = k * dt
        if forcing is None:
            uh = E * uh
        else:
            f_mid = np.fft.fft(_forcing_values(forcing, t + dt / 2, g))
            f_next = np.fft.fft(_forcing_values(forcing, t + dt, g))
            uh = E * uh - 1j * dt / 6 * (E * f_prev + 4 * Eh * f_mid + f_next)
            f_prev = f_next
        if (k + 1) % snapshot_stride == 0 or k + 1 == steps:
            times.append((k + 1) * dt)
            states.append(np.fft.ifft(uh))
    return Trajectory(g, np.array(times), np.array(states))


LINEAR_IDENTITIES = ("mass_2_15", "weighted_2_17", "h1_2_24", "momentum_2_26")


def _centered(values, times):
    return (values[2:] - values[:-2]) / (times[2:] - times[:-2])


def identity_residual_linear(traj, forcing=None, which="mass_2_15", a=0.0, b=0.0, weight=None):
    """Residual series of one linear identity at the interior snapshots.

    Returns (times, lhs, rhs, residual). ``weight`` supplies psi for
    ``weighted_2_17`` (a WeightSpec); its derivatives are analytic.
    """
    from hnls.weights import weight_values

    if which not in LINEAR_IDENTITIES:
        raise ValidationError(f"unknown identity {which!r}; valid: {', '.join(LINEAR_IDENTITIES)}")
    g = traj.grid
    U = traj.states
    t = traj.times
    if t.size < 3:
        raise ValidationError("need at least three snapshots for centered differences")
    F = np.array([_forcing_values(forcing, tk, g) for tk in t])
    Ux = differentiate(U, g, 1)
    inner = slice(1, -1)

    def integ(arr):
        return np.sum(arr, axis=-1) * g.spacing

    if which == "mass_2_15":
        lhs = _centered(integ(np.abs(U) ** 2), t)
        rhs = 2 * np.imag(integ(F * np.conj(U)))[inner]
    elif which == "weighted_2_17":
        if weight is None:
            raise ValidationError("weighted_2_17 requires a weight")
        psi, psi1, psi3 = (weight_values(weight, g.x, k) for k in (0, 1, 3))
        lhs = _centered(integ(np.abs(U) ** 2 * psi), t) + 3 * integ(np.abs(Ux) ** 2 * psi1)[inner]
        rhs = (
            2 * a * np.imag(integ(Ux * np.conj(U) * psi1))
            + integ(np.abs(U) ** 2 * psi3)
            + b * integ(np.abs(U) ** 2 * psi1)
            + 2 * np.imag(integ(F * np.conj(U) * psi))
        )[inner]
    elif which == "h1_2_24":
        Fx = differentiate(F, g, 1)
        lhs = _centered(integ(np.abs(Ux) ** 2), t)
        rhs = 2 * np.imag(integ(Fx * np.conj(Ux)))[inner]
    else:
        mom = integ(U * np.conj(Ux))
        lhs = np.real(1j * _centered(mom, t))
        rhs = 2 * np.real(integ(F * np.conj(Ux)))[inner]
    return t[inner], lhs, rhs, lhs - rhs


__all__ = [
    "dispersion",
    "LinearMultiplier",
    "propagate",
    "propagate_via_kernel",
    "duhamel_solve",
    "identity_residual_linear",
    "LINEAR_IDENTITIES",
]
