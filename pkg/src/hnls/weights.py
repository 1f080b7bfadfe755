"""Weight family rho_{alpha,eps}, its truncation, the cut-off eta and weighted norms.

On x <= -1 the weight is exp(2 eps x); on x >= 0 it is (1+x)^(2 alpha), or
2 - 1/ln(x+e) when alpha = 0. On (-1, 0) the logarithmic slope is joined
smoothly: with tau = x + 1,

    (log rho)' = [(1 - eta(tau)) 2 eps + eta(tau) q(x)] * exp(kappa eta'(tau)),

where q is the log-derivative of the right branch and kappa is fixed so that
log rho climbs from -2 eps to 0 across the gap. Every factor is positive, so
the join is strictly increasing, and because eta is flat at both ends the
weight is C-infinity.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from hnls._validation import ValidationError, check_finite_scalar, check_positive
from hnls.core import Field

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_EDGE = 1e-3  # eta and its derivatives are below 1e-400 closer to 0 or 1 than this


@dataclass(frozen=True)
class WeightSpec:
    alpha: float
    eps: float
    truncation_r: float = None

    def __post_init__(self):
        alpha = check_finite_scalar(self.alpha, "alpha")
        if alpha < 0:
            raise ValidationError(f"alpha must be >= 0, got {alpha}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "eps", check_positive(self.eps, "eps"))
        if self.truncation_r is not None:
            object.__setattr__(
                self, "truncation_r", check_positive(self.truncation_r, "truncation_r")
            )

    def untruncated(self):
        return WeightSpec(self.alpha, self.eps)


# --- cut-off -----------------------------------------------------------------


def _eta_parts(x):
    x = np.asarray(x, dtype=float)
    inside = (x > _EDGE) & (x < 1 - _EDGE)
    t = np.where(inside, x, 0.5)
    return x, inside, t


def eval_eta(x):
    """Smooth step: 0 for x <= 0, 1 for x >= 1, eta(x) + eta(1-x) = 1.

    Built from exp(-1/x): eta = f(x) / (f(x) + f(1-x)), written as a logistic
    of s = 1/x - 1/(1-x) for numerical stability.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = 1.0 / x - 1.0 / (1.0 - x)
        out = expit(-s)
    out = np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, out))
    return out[()] if out.ndim == 0 else out


def eval_eta_derivative(x, order):
    """Analytic derivatives of eta, order 1 to 3."""
    if order == 0:
        return eval_eta(x)
    if order not in (1, 2, 3):
        raise ValidationError(f"eta derivative order must be 0..3, got {order}")
    x, inside, t = _eta_parts(x)
    s = 1.0 / t - 1.0 / (1.0 - t)
    e = expit(-s)
    w = e * (1.0 - e)
    L1 = -w
    L2 = w * (1.0 - 2.0 * e)
    L3 = -w * (1.0 - 6.0 * e + 6.0 * e * e)
    s1 = -1.0 / t**2 - 1.0 / (1.0 - t) ** 2
    s2 = 2.0 / t**3 - 2.0 / (1.0 - t) ** 3
    s3 = -6.0 / t**4 - 6.0 / (1.0 - t) ** 4
    if order == 1:
        d = L1 * s1
    elif order == 2:
        d = L2 * s1**2 + L1 * s2
    else:
        d = L3 * s1**3 + 3.0 * L2 * s1 * s2 + L1 * s3
    out = np.where(inside, d, 0.0)
    return out[()] if out.ndim == 0 else out


# --- right and left branches -------------------------------------------------


def _right_branch(alpha, x, order):
    """k-th derivative of the x >= 0 branch, valid for x > -1."""
    if alpha > 0:
        coef = 1.0
        for j in range(order):
            coef *= 2.0 * alpha - j
        return coef * (1.0 + x) ** (2.0 * alpha - order)
    u = x + math.e
    ell = np.log(u)
    if order == 0:
        return 2.0 - 1.0 / ell
    if order == 1:
        return 1.0 / (u * ell**2)
    if order == 2:
        return -(ell + 2.0) / (u**2 * ell**3)
    return (2.0 * ell**2 + 6.0 * ell + 6.0) / (u**3 * ell**4)


def _log_slope(alpha, x):
    """q = (log p)' of the right branch p and its first two derivatives."""
    if alpha > 0:
        y = 1.0 + x
        return 2 * alpha / y, -2 * alpha / y**2, 4 * alpha / y**3
    p = _right_branch(0.0, x, 0)
    p1, p2, p3 = (_right_branch(0.0, x, k) for k in (1, 2, 3))
    q = p1 / p
    q1 = p2 / p - q * q
    q2 = p3 / p - 3 * q * q1 - q**3
    return q, q1, q2


def _base(alpha, eps, x):
    """Blended log-slope (1-eta) 2 eps + eta q with derivatives, x in (-1, 0)."""
    tau = x + 1.0
    e0 = eval_eta(tau)
    e1 = eval_eta_derivative(tau, 1)
    e2 = eval_eta_derivative(tau, 2)
    live = e0 > 0
    xs = np.where(live, x, -0.5)  # keep q finite where eta vanishes
    q, q1, q2 = _log_slope(alpha, xs)
    diff = np.where(live, q - 2 * eps, 0.0)
    q1 = np.where(live, q1, 0.0)
    q2 = np.where(live, q2, 0.0)
    b0 = 2 * eps + e0 * diff
    b1 = e1 * diff + e0 * q1
    b2 = e2 * diff + 2 * e1 * q1 + e0 * q2
    return b0, b1, b2


def _slope(alpha, eps, kappa, x):
    b0, _, _ = _base(alpha, eps, x)
    return b0 * np.exp(kappa * eval_eta_derivative(x + 1.0, 1))


def _panel_integral(func, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(np.sum(func(nodes) * _GL_WEIGHTS[None, :] * half[:, None]))


@lru_cache(maxsize=64)
def _join_kappa(alpha, eps):
    target = 2.0 * eps

    def mismatch(kappa):
        total = _panel_integral(lambda s: _slope(alpha, eps, kappa, s), -1.0, 0.0, 400)
        return math.log(total) - math.log(target)

    # large |kappa| means the join is nearly a kink; refuse rather than return garbage
    lo, hi = -1.0, 1.0
    while mismatch(lo) > 0:
        lo *= 2.0
        if lo < -200:
            raise ValidationError(
                f"eps={eps} is too small for a smooth increasing join with alpha={alpha}; "
                "increase eps"
            )
    while mismatch(hi) < 0:
        hi *= 2.0
        if hi > 200:
            raise ValidationError(f"cannot build weight join for alpha={alpha}, eps={eps}")
    return brentq(mismatch, lo, hi, xtol=1e-15, rtol=1e-15)


def _join_log(alpha, eps, x):
    """log rho on (-1, 0): cumulative Gauss-Legendre over a partition that
    contains every requested point and is no coarser than 0.01."""
    kappa = _join_kappa(alpha, eps)
    edges, inverse = np.unique(np.concatenate([[-1.0], np.linspace(-1.0, 0.0, 101), x]),
                               return_inverse=True)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    pieces = (_slope(alpha, eps, kappa, nodes) * _GL_WEIGHTS[None, :]).sum(axis=1) * half
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)]) - 2.0 * eps
    return cumulative[inverse[102:]]


def _join_derivatives(alpha, eps, x):
    """(log rho)', '', ''' on (-1, 0)."""
    kappa = _join_kappa(alpha, eps)
    tau = x + 1.0
    b0, b1, b2 = _base(alpha, eps, x)
    e1 = eval_eta_derivative(tau, 1)
    e2 = eval_eta_derivative(tau, 2)
    e3 = eval_eta_derivative(tau, 3)
    grow = np.exp(kappa * e1)
    h1 = b0 * grow
    h2 = (b1 + b0 * kappa * e2) * grow
    h3 = (b2 + 2 * b1 * kappa * e2 + b0 * (kappa * e3 + (kappa * e2) ** 2)) * grow
    return h1, h2, h3


# --- public evaluation -------------------------------------------------------


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def eval_rho_derivative(spec, x, order=0):
    """order-th derivative (0..3) of rho_{alpha,eps} at x (scalar or array)."""
    if order not in (0, 1, 2, 3):
        raise ValidationError(f"rho derivative order must be 0..3, got {order}")
    arr, scalar = _as_array(x)
    arr = np.atleast_1d(arr)
    alpha, eps = spec.alpha, spec.eps
    out = np.empty_like(arr)
    left = arr <= -1.0
    right = arr >= 0.0
    mid = ~(left | right)
    out[left] = (2 * eps) ** order * np.exp(2 * eps * arr[left])
    out[right] = _right_branch(alpha, arr[right], order)
    if np.any(mid):
        xm = arr[mid]
        r = np.exp(_join_log(alpha, eps, xm))
        if order == 0:
            out[mid] = r
        else:
            h1, h2, h3 = _join_derivatives(alpha, eps, xm)
            poly = {1: h1, 2: h2 + h1**2, 3: h3 + 3 * h1 * h2 + h1**3}[order]
            out[mid] = r * poly
    return out[0] if scalar else out


def eval_rho(spec, x):
    if spec.truncation_r is not None:
        raise ValidationError("eval_rho expects an untruncated WeightSpec; use eval_rho_truncated")
    return eval_rho_derivative(spec, x, 0)


def eval_rho_prime(spec, x):
    if spec.truncation_r is not None:
        raise ValidationError("eval_rho_prime expects an untruncated WeightSpec")
    return eval_rho_derivative(spec, x, 1)


def eval_rho_truncated_derivative(spec, x, order=0):
    """Derivatives of rho_r = rho(x)(1 - eta(x-r)) + rho(r+1) eta(x-r).

    Equal to rho for x <= r and to the constant rho(r+1) = (2+r)^(2 alpha)
    for x >= r+1.
    """
    if spec.truncation_r is None:
        raise ValidationError("truncated weight requires truncation_r")
    r = spec.truncation_r
    base = spec.untruncated()
    arr, scalar = _as_array(x)
    arr = np.atleast_1d(arr)
    top = float(eval_rho_derivative(base, r + 1.0, 0))
    cut = [eval_eta_derivative(arr - r, k) for k in range(order + 1)]
    rho = [eval_rho_derivative(base, arr, k) for k in range(order + 1)]
    # Leibniz rule on rho*(1 - eta) plus top*eta
    out = np.zeros_like(arr)
    for k in range(order + 1):
        c = math.comb(order, k)
        one_minus = (1.0 - cut[0]) if k == 0 else -cut[k]
        out += c * rho[order - k] * one_minus
    out += top * cut[order]
    return out[0] if scalar else out


def eval_rho_truncated(spec, x):
    return eval_rho_truncated_derivative(spec, x, 0)


def weight_values(w, x, order=0):
    """Evaluate a weight description at nodes.

    ``w`` may be a WeightSpec (truncated or not) or a real exponent p, the
    latter meaning (1 + x_+)^p.
    """
    if isinstance(w, WeightSpec):
        if w.truncation_r is None:
            return eval_rho_derivative(w, x, order)
        return eval_rho_truncated_derivative(w, x, order)
    p = check_finite_scalar(w, "weight exponent")
    x = np.asarray(x, dtype=float)
    if order == 0:
        return (1.0 + np.maximum(x, 0.0)) ** p
    if order == 1:
        return np.where(x > 0, p * (1.0 + np.maximum(x, 0.0)) ** (p - 1), 0.0)
    raise ValidationError("plus-part weights only provide order 0 and 1")


def weighted_norm_sq(u, w):
    """sum |u_j|^2 w(x_j) h for a Field ``u``."""
    if not isinstance(u, Field):
        raise ValidationError("weighted_norm_sq expects a Field")
    wv = weight_values(w, u.grid.x)
    return float(np.sum(np.abs(u.values) ** 2 * wv) * u.grid.spacing)


__all__ = [
    "WeightSpec",
    "eval_eta",
    "eval_eta_derivative",
    "eval_rho",
    "eval_rho_prime",
    "eval_rho_derivative",
    "eval_rho_truncated",
    "eval_rho_truncated_derivative",
    "weight_values",
    "weighted_norm_sq",
]
