"""Regularized nonlinearity g_delta, the right-hand side F and the |u| calculus.

F(u) = -lambda g u - i beta (g u)_x - i d u with g = g_delta(|u|^2).

Three evaluations of the transport term (g u)_x are offered:

pseudospectral
    form g u pointwise and differentiate spectrally.
physical_P_form
    (|u| u)_x = P(u, u_x) / 2 with P(u, v) = 3|u| v + u^2 conj(v)/|u|
    (delta = 0 only).
skew_symmetric
    2/3 D(g u) + 1/3 (g u_x + u Re(conj(u) u_x)/g). For delta = 0 the second
    bracket equals P(u, u_x)/2 and Re sum T conj(u) = 0 holds to round-off for
    any grid function, so the discrete mass law carries no transport error.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from hnls._validation import ValidationError, check_positive
from hnls.core import Field, dealias_mask, differentiate

ZERO_GUARD = 1e-300


class EvaluationMode(str, Enum):
    PSEUDOSPECTRAL = "pseudospectral"
    PHYSICAL_P_FORM = "physical_P_form"
    SKEW_SYMMETRIC = "skew_symmetric"


@dataclass(frozen=True)
class NonlinearConfig:
    delta: float = 0.0
    evaluation_mode: EvaluationMode = EvaluationMode.PSEUDOSPECTRAL
    dealias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "delta", check_positive(self.delta, "delta", strict=False))
        try:
            mode = EvaluationMode(self.evaluation_mode)
        except ValueError:
            valid = ", ".join(m.value for m in EvaluationMode)
            raise ValidationError(f"unknown evaluation_mode {self.evaluation_mode!r}; valid: {valid}")
        if mode is EvaluationMode.PHYSICAL_P_FORM and self.delta != 0:
            raise ValidationError("physical_P_form requires delta = 0")
        object.__setattr__(self, "evaluation_mode", mode)


def default_config(u0, delta=None):
    """delta = 0 with the P-form for nowhere-vanishing data, else delta = h^2."""
    floor = np.min(np.abs(u0.values))
    if delta is None:
        if floor > 1e-8 * max(np.max(np.abs(u0.values)), ZERO_GUARD):
            return NonlinearConfig(0.0, EvaluationMode.PHYSICAL_P_FORM)
        return NonlinearConfig(u0.grid.spacing**2, EvaluationMode.PSEUDOSPECTRAL)
    return NonlinearConfig(delta, EvaluationMode.PSEUDOSPECTRAL)


def g_delta(theta, delta):
    """(theta + delta)^{1/2} for theta, delta >= 0."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or not np.all(np.isfinite(theta)):
        raise ValidationError("theta must be finite and >= 0")
    delta = check_positive(delta, "delta", strict=False)
    out = np.sqrt(theta + delta)
    return out[()] if out.ndim == 0 else out


def g_delta_derivative(theta, delta, order=1):
    """d^k/dtheta^k of g_delta for k = 1, 2."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise ValidationError("theta must be >= 0")
    s = theta + check_positive(delta, "delta", strict=False)
    with np.errstate(divide="ignore"):
        if order == 1:
            out = 0.5 * s**-0.5
        elif order == 2:
            out = -0.25 * s**-1.5
        else:
            raise ValidationError("order must be 1 or 2")
    return out[()] if out.ndim == 0 else out


def _abs_derivative_values(u, ux):
    mag = np.abs(u)
    live = mag >= ZERO_GUARD
    safe = np.where(live, mag, 1.0)
    return np.where(live, np.real(ux * np.conj(u)) / safe, 0.0)


def abs_derivative(u, u_x):
    """|u|' = Re(u_x conj(u)) / |u|, and 0 where |u| < 1e-300."""
    if u.grid != u_x.grid:
        raise ValidationError("fields must share a grid")
    return Field(_abs_derivative_values(u.values, u_x.values), u.grid)


def p_function(u, v):
    """P(u, v) = 3|u| v + u^2 conj(v) / |u|, zero at u = 0 (elementwise)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    mag = np.abs(u)
    live = mag >= ZERO_GUARD
    safe = np.where(live, mag, 1.0)
    out = np.where(live, 3 * mag * v + u * u * np.conj(v) / safe, 0.0)
    return out[()] if out.ndim == 0 else out


def lipschitz_probe(v, v_tilde, delta):
    """max |g(|v|^2) - g(|v~|^2)| / |v - v~| over nodes where v != v~."""
    delta = check_positive(delta, "delta")
    a = np.asarray(v.values if isinstance(v, Field) else v, dtype=complex)
    b = np.asarray(v_tilde.values if isinstance(v_tilde, Field) else v_tilde, dtype=complex)
    gap = np.abs(a - b)
    num = np.abs(g_delta(np.abs(a) ** 2, delta) - g_delta(np.abs(b) ** 2, delta))
    keep = gap > 0
    if not np.any(keep):
        return 0.0
    return float(np.max(num[keep] / gap[keep]))


# --- the transport term and F ------------------------------------------------


def transport_term(values, grid, delta, mode, dealias, ux=None):
    """Approximation of (g_delta(|u|^2) u)_x on nodal values."""
    mode = EvaluationMode(mode)
    g = np.sqrt(np.abs(values) ** 2 + delta)
    if mode is EvaluationMode.PSEUDOSPECTRAL:
        spec = np.fft.fft(g * values)
        if dealias:
            spec = spec * dealias_mask(grid)
        return np.fft.ifft(grid.derivative_symbol(1) * spec)
    if ux is None:
        ux = differentiate(values, grid, 1)
    if mode is EvaluationMode.PHYSICAL_P_FORM:
        if delta != 0:
            raise ValidationError("physical_P_form requires delta = 0")
        out = 0.5 * p_function(values, ux)
    else:
        safe = np.where(g >= ZERO_GUARD, g, 1.0)
        chain = g * ux + np.where(g >= ZERO_GUARD, values * np.real(np.conj(values) * ux) / safe, 0.0)
        div = differentiate(g * values, grid, 1)
        out = (2.0 * div + chain) / 3.0
    if dealias:
        out = np.fft.ifft(np.fft.fft(out) * dealias_mask(grid))
    return out


def rhs_values(values, grid, lam, beta, delta, d, mode, dealias):
    """F on nodal values, with the damping coefficient d given as nodal values."""
    g = np.sqrt(np.abs(values) ** 2 + delta)
    out = -lam * g * values - 1j * d * values
    if beta != 0:
        out = out - 1j * beta * transport_term(values, grid, delta, mode, dealias)
    return out


def rhs_F(u, params, damping, cfg=None):
    """F(u) = -lambda g u - i beta (g u)_x - i d u as a Field."""
    if cfg is None:
        cfg = NonlinearConfig(params.delta)
    if cfg.delta != params.delta:
        raise ValidationError(
            f"NonlinearConfig.delta={cfg.delta} disagrees with params.delta={params.delta}"
        )
    d = damping.evaluate(u.grid)
    vals = rhs_values(u.values, u.grid, params.lam, params.beta, cfg.delta, d,
                      cfg.evaluation_mode, cfg.dealias)
    return Field(vals, u.grid)


__all__ = [
    "ZERO_GUARD",
    "EvaluationMode",
    "NonlinearConfig",
    "default_config",
    "g_delta",
    "g_delta_derivative",
    "abs_derivative",
    "p_function",
    "lipschitz_probe",
    "transport_term",
    "rhs_values",
    "rhs_F",
]
