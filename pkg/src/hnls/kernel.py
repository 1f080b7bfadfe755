"""Generalized Airy function Phi_a, the fundamental solution G and envelope fits.

Phi_a^{(n)}(x) = (i^n / 2 pi) int xi^n exp(i(xi^3 - a xi^2 + x xi)) d xi.

The real-axis integral is only conditionally convergent, so it is deformed
into the complex plane. Shifting xi = a/3 + w turns the phase into
w^3 + c w + phi0 with c = x - a^2/3 and phi0 = a x/3 - 2 a^3/27. The contour
in w depends on c:

* |c| <= 1.5: two rays from w = 0 at angles 5 pi/6 (incoming) and pi/6
  (outgoing); the integrand decays like exp(-r^3 - c r/2).
* c > 1.5: the horizontal line Im w = sqrt(c/3) through the upper saddle,
  where |integrand| = exp(-2 H^3 - 3 H s^2).
* c < -1.5: the real segment between the saddles -m, m = sqrt(-c/3), closed
  by steepest-descent rays leaving -m at 3 pi/4 and m at pi/4.

Every piece is absolutely convergent and truncated where the integrand is
below exp(-46) of its peak. ``phi_rays`` keeps the unshifted two-ray form
(rays from 0 in the original variable) as an independent cross-check; it
loses digits to cancellation for strongly negative x.
"""

from dataclasses import dataclass
import csv
import math
import warnings

import numpy as np
from scipy import integrate

from hnls._validation import ValidationError, check_finite_scalar, check_positive

TAIL = 46.0  # exp(-46) ~ 1e-20, below the 1e-18 truncation target
_RAY_SWITCH = 1.5
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_E_IN = np.exp(5j * np.pi / 6)
_E_OUT = np.exp(1j * np.pi / 6)
_E_LEFT = np.exp(3j * np.pi / 4)
_E_RIGHT = np.exp(1j * np.pi / 4)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class KernelQuery:
    a: float
    x: float
    derivative_order: int = 0

    def __post_init__(self):
        check_finite_scalar(self.a, "a")
        check_finite_scalar(self.x, "x")
        _check_order(self.derivative_order)


@dataclass(frozen=True)
class EnvelopeReport:
    """Fitted envelope on one side of the origin.

    left:  |Phi| maxima ~ fitted_prefactor * (1+|x|)^fitted_rate
    right: |Phi| ~ fitted_prefactor * exp(-fitted_rate * x^(3/2))
    """

    region: str
    fitted_prefactor: float
    fitted_rate: float
    max_violation: float
    r_squared: float
    n_points: int


def _check_order(n):
    if n not in (0, 1):
        raise ValidationError(f"derivative order must be 0 or 1, got {n!r}")
    return n


# --- contour geometry --------------------------------------------------------


def _pieces(c):
    """Contour pieces (start, direction, length, orientation) in the w plane."""
    if abs(c) <= _RAY_SWITCH:
        R = 3.7
        return [(0.0, _E_IN, R, -1.0), (0.0, _E_OUT, R, 1.0)]
    if c > 0:
        H = math.sqrt(c / 3.0)
        S = math.sqrt(TAIL / (3.0 * H))
        return [(complex(-S, H), 1.0 + 0j, 2.0 * S, 1.0)]
    m = math.sqrt(-c / 3.0)
    R = min(math.sqrt(TAIL / (3.0 * m)), (TAIL * math.sqrt(2.0)) ** (1.0 / 3.0))
    return [
        (complex(-m, 0.0), _E_LEFT, R, -1.0),
        (complex(-m, 0.0), 1.0 + 0j, 2.0 * m, 1.0),
        (complex(m, 0.0), _E_RIGHT, R, 1.0),
    ]


def _panel_count(c, start, direction, length):
    # total variation of the exponent i(w^3 + c w) along the piece
    r = np.linspace(0.0, length, 65)
    w = start + direction * r
    variation = np.trapezoid(np.abs(3.0 * w * w + c), r)
    return max(1, int(math.ceil(variation / 12.0)))


def _exponent(w, c):
    return 1j * (w * w * w + c * w)


def _phase_offset(a, x):
    return a * x / 3.0 - 2.0 * a**3 / 27.0


def _prefactor(a, x, n):
    return (1j**n) / (2.0 * np.pi) * np.exp(1j * _phase_offset(a, x))


# --- adaptive scalar engine --------------------------------------------------


def phi(a, x, n=0, return_error=False):
    """Phi_a^{(n)}(x) for n in {0, 1} by adaptive Gauss-Kronrod on the contour.

    Raises QuadratureError when the error estimate exceeds 1e-10 relative to
    the integrand scale.
    """
    a = check_finite_scalar(a, "a")
    x = check_finite_scalar(x, "x")
    _check_order(n)
    z0 = a / 3.0
    c = x - a * a / 3.0
    total = 0.0 + 0.0j
    err = 0.0
    scale = 0.0
    for start, direction, length, sign in _pieces(c):
        def integrand(r, start=start, direction=direction):
            w = start + direction * r
            return (z0 + w) ** n * np.exp(_exponent(w, c)) * direction

        peak = abs(integrand(0.0 if start.imag == 0 else length / 2.0))
        scale = max(scale, peak, 1e-300)
        edges = np.linspace(0.0, length, _panel_count(c, start, direction, length) + 1)
        for r0, r1 in zip(edges[:-1], edges[1:]):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, e = integrate.quad(
                    integrand, r0, r1, complex_func=True,
                    epsabs=1e-15 * scale, epsrel=1e-13, limit=100,
                )
            total += sign * val
            err += abs(e)
    value = complex(_prefactor(a, x, n) * total)
    err = err / (2.0 * np.pi)
    if err > 1e-10 * max(abs(value), scale / (2.0 * np.pi), 1e-300):
        raise QuadratureError(
            f"contour quadrature did not converge at a={a}, x={x}, n={n}",
            value=value, error_estimate=err,
        )
    return (value, err) if return_error else value


# --- vectorized fixed-rule engine --------------------------------------------


def _gauss_on(length, panels):
    edges = np.linspace(0.0, length, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    r = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return r, wts


_UNIT_FINE = _gauss_on(1.0, 12)
_UNIT_LINE = _gauss_on(1.0, 48)


def _sum_pieces(w, dw, z0, c, n):
    """sum over nodes of (z0+w)^n exp(i(w^3+cw)) dw for rows of nodes."""
    vals = np.exp(_exponent(w, c[:, None]))
    if n:
        vals = vals * (z0 + w)
    return np.sum(vals * dw, axis=1)


def phi_batch(a, x, n=0):
    """Vectorized Phi_a^{(n)} on an array of x by composite Gauss-Legendre."""
    a = check_finite_scalar(a, "a")
    _check_order(n)
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    if not np.all(np.isfinite(x)):
        raise ValidationError("x contains non-finite entries")
    z0 = a / 3.0
    c = x - a * a / 3.0
    acc = np.zeros(x.shape, dtype=complex)

    ray = np.abs(c) <= _RAY_SWITCH
    if np.any(ray):
        u, wt = _UNIT_FINE
        r = 3.7 * u
        cr = c[ray]
        w_in = (_E_IN * r)[None, :]
        w_out = (_E_OUT * r)[None, :]
        dw_in = (-_E_IN * 3.7 * wt)[None, :]
        dw_out = (_E_OUT * 3.7 * wt)[None, :]
        acc[ray] = _sum_pieces(np.broadcast_to(w_in, (cr.size, r.size)), dw_in, z0, cr, n)
        acc[ray] += _sum_pieces(np.broadcast_to(w_out, (cr.size, r.size)), dw_out, z0, cr, n)

    up = c > _RAY_SWITCH
    if np.any(up):
        u, wt = _UNIT_LINE
        cu = c[up]
        H = np.sqrt(cu / 3.0)
        S = np.sqrt(TAIL / (3.0 * H))
        s = -S[:, None] + 2.0 * S[:, None] * u[None, :]
        w = s + 1j * H[:, None]
        dw = 2.0 * S[:, None] * wt[None, :]
        acc[up] = _sum_pieces(w, dw, z0, cu, n)

    low = np.flatnonzero(c < -_RAY_SWITCH)
    if low.size:
        cl = c[low]
        m = np.sqrt(-cl / 3.0)
        R = np.minimum(np.sqrt(TAIL / (3.0 * m)), (TAIL * math.sqrt(2.0)) ** (1.0 / 3.0))
        u, wt = _UNIT_FINE
        rr = R[:, None] * u[None, :]
        dr = R[:, None] * wt[None, :]
        part = _sum_pieces(-m[:, None] + _E_LEFT * rr, -_E_LEFT * dr, z0, cl, n)
        part += _sum_pieces(m[:, None] + _E_RIGHT * rr, _E_RIGHT * dr, z0, cl, n)
        # the real segment needs a panel count growing like m^3; bin by powers of two
        need = np.maximum(4, np.ceil(4.0 * m**3 / 2.0 + 2.0 * m)).astype(int)
        bins = 2 ** np.ceil(np.log2(need)).astype(int)
        for panels in np.unique(bins):
            sel = np.flatnonzero(bins == panels)
            us, ws = _gauss_on(1.0, int(panels))
            ms = m[sel][:, None]
            w = -ms + 2.0 * ms * us[None, :]
            dw = 2.0 * ms * ws[None, :]
            # process in chunks to bound memory
            chunk = max(1, 400000 // us.size)
            for k in range(0, sel.size, chunk):
                rows = slice(k, k + chunk)
                part[sel[rows]] += _sum_pieces(w[rows], dw[rows], z0, cl[sel[rows]], n)
        acc[low] = part

    out = _prefactor(a, x, n) * acc
    return out.reshape(shape)


# --- literal two-ray form ----------------------------------------------------


def phi_rays(a, x, n=0):
    """Phi_a^{(n)}(x) from rays leaving xi = 0 at angles pi/6 and 5 pi/6.

    Intended for moderate |x| (it suffers cancellation of size exp(|x|^{3/2})
    for x << 0). Used only as a cross-check of the main engine.
    """
    a = check_finite_scalar(a, "a")
    x = check_finite_scalar(x, "x")
    _check_order(n)
    s3 = math.sqrt(3.0) / 2.0

    def plus(r):
        return r**n * np.exp(-r**3 + a * r * r * s3 - x * r / 2.0
                             + 1j * (-a * r * r / 2.0 + x * r * s3))

    def minus(r):
        return r**n * np.exp(-r**3 - a * r * r * s3 - x * r / 2.0
                             + 1j * (-a * r * r / 2.0 - x * r * s3))

    R = 6.0 + abs(a) + math.sqrt(abs(x))
    opts = dict(complex_func=True, epsabs=1e-14, epsrel=1e-13, limit=400)
    with warnings.catch_warnings():
        # roundoff warnings are expected once the tolerance hits machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        ip = integrate.quad(plus, 0.0, R, **opts)[0]
        im = integrate.quad(minus, 0.0, R, **opts)[0]
    k = n + 1
    return complex((1j**n) / (2 * np.pi) * (np.exp(1j * np.pi * k / 6) * ip
                                           - np.exp(5j * np.pi * k / 6) * im))


# --- ODE residual ------------------------------------------------------------


def phi_ode_residual(a, x, step=None):
    """|3 Phi'' - 2 a i Phi' - x Phi| with Phi'' from finite differences of Phi'.

    A fourth-order central stencil is used; the default step scales like
    (1 + |x|)^{-1/2}, matching the local oscillation length.
    """
    a = check_finite_scalar(a, "a")
    x = check_finite_scalar(x, "x")
    if step is None:
        step = 0.005 / math.sqrt(1.0 + abs(x - a * a / 3.0))
    h = check_positive(step, "step")
    xs = np.array([x - 2 * h, x - h, x + h, x + 2 * h])
    d1 = np.array([phi(a, xi, 1) for xi in xs])
    d2 = (-d1[3] + 8 * d1[2] - 8 * d1[1] + d1[0]) / (12 * h)
    y = phi(a, x, 0)
    y1 = phi(a, x, 1)
    return float(abs(3 * d2 - 2j * a * y1 - x * y))


# --- fundamental solution ----------------------------------------------------


def _green_scaling(t, x, a, b):
    t = check_positive(t, "t")
    s = t ** (1.0 / 3.0)
    return s, a * s, (np.asarray(x, dtype=float) - b * t) / s


def green(t, x, a=0.0, b=0.0, n=0):
    """G(t,x) = t^{-1/3} Phi_{a t^{1/3}}((x - b t)/t^{1/3}); n=1 gives dG/dx."""
    _check_order(n)
    s, A, y = _green_scaling(t, x, a, b)
    return phi(A, float(y), n) / s ** (n + 1)


def green_batch(t, x, a=0.0, b=0.0, n=0):
    _check_order(n)
    s, A, y = _green_scaling(t, x, a, b)
    return phi_batch(A, y, n) / s ** (n + 1)


def kernel_weighted_norm(t, y, alpha, eps, n=0, a=0.0, b=0.0):
    """int rho_{alpha,eps}(x) |d^n G(t, x - y)/dx^n|^2 dx by composite Gauss-Legendre."""
    from hnls.weights import WeightSpec, eval_rho

    _check_order(n)
    spec = WeightSpec(alpha, eps)
    t = check_positive(t, "t")
    y = check_finite_scalar(y, "y")
    s = t ** (1.0 / 3.0)
    A = a * s
    shift = b * t
    # right cut where |Phi|^2 < e^-46 in the scaled variable, left where rho < e^-46
    x_hi = y + shift + s * (20.0 + A * A / 3.0)
    x_lo = min(y, -1.0) - TAIL / (2.0 * spec.eps)
    zeta_lo = (x_lo - y - shift) / s
    m_max = math.sqrt(max(1.0, (A * A / 3.0 - zeta_lo) / 3.0))
    width = min(0.5 * s, s / (2.0 * m_max), 0.25)
    panels = int(math.ceil((x_hi - x_lo) / width))
    r, wts = _gauss_on(x_hi - x_lo, panels)
    xs = x_lo + r
    g = green_batch(t, xs - y, a, b, n)
    return float(np.sum(eval_rho(spec, xs) * np.abs(g) ** 2 * wts))


# --- envelope certification --------------------------------------------------


def _left_samples(a, x_lo, x_hi, per_halfperiod):
    xs = [x_lo]
    while xs[-1] < x_hi:
        c = xs[-1] - a * a / 3.0
        m = math.sqrt(max(-c, 0.75) / 3.0)
        # |Phi| peaks are pi/m apart in c
        xs.append(xs[-1] + math.pi / (m * per_halfperiod))
    xs[-1] = x_hi
    return np.array(xs)


def _local_maxima(x, f):
    i = np.flatnonzero((f[1:-1] >= f[:-2]) & (f[1:-1] >= f[2:])) + 1
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    f0, f1, f2 = f[i - 1], f[i], f[i + 1]
    # vertex of the interpolating parabola
    d1 = (f1 - f0) / (x1 - x0)
    d2 = (f2 - f1) / (x2 - x1)
    curv = (d2 - d1) / (x2 - x0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xv = 0.5 * (x0 + x1) - d1 / (2.0 * curv)
    ok = (curv < 0) & (xv > x0) & (xv < x2)
    xv = np.where(ok, xv, x1)
    fv = np.where(ok, f1 + d1 * (xv - x1) + curv * (xv - x0) * (xv - x1), f1)
    return xv, np.maximum(fv, f1)


def _r_squared(y, fit):
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def certify_left(a, n, x_lo, x_hi, per_halfperiod=12):
    xs = _left_samples(a, x_lo, x_hi, per_halfperiod)
    f = np.abs(phi_batch(a, xs, n))
    xm, fm = _local_maxima(xs, f)
    if xm.size < 3:
        raise ValidationError("left range too short: fewer than three local maxima")
    X = np.log1p(np.abs(xm))
    Y = np.log(fm)
    slope, intercept = np.polyfit(X, Y, 1)
    pref = math.exp(intercept)
    envelope = pref * (1.0 + np.abs(xs)) ** slope
    violation = float(max(0.0, np.max(f - envelope)))
    return EnvelopeReport("left", pref, float(slope), violation,
                          _r_squared(Y, slope * X + intercept), int(xm.size))


def certify_right(a, n, x_lo, x_hi, samples=200):
    xs = np.linspace(x_lo, x_hi, samples)
    f = np.abs(phi_batch(a, xs, n))
    X = xs**1.5
    Y = np.log(f)
    slope, intercept = np.polyfit(X, Y, 1)
    pref = math.exp(intercept)
    envelope = pref * np.exp(slope * X)
    violation = float(max(0.0, np.max(f - envelope)))
    return EnvelopeReport("right", pref, float(-slope), violation,
                          _r_squared(Y, slope * X + intercept), samples)


def certify_envelope(a, n, x_range, per_halfperiod=12, samples=200):
    """Fit the envelopes of |Phi_a^{(n)}| on [x_min, x_max].

    The part of the range below zero is fitted by a power of (1+|x|) through
    the local maxima of |Phi|; the part above zero by exp(-c x^{3/2}).
    Returns a dict keyed by "left" and/or "right".
    """
    a = check_finite_scalar(a, "a")
    _check_order(n)
    lo, hi = (float(v) for v in (min(x_range), max(x_range)))
    if not hi > lo:
        raise ValidationError("x_range is empty")
    reports = {}
    if lo < 0:
        reports["left"] = certify_left(a, n, lo, min(hi, 0.0), per_halfperiod)
    if hi > 0:
        reports["right"] = certify_right(a, n, max(lo, 0.0), hi, samples)
    return reports


# --- tabulation --------------------------------------------------------------


def tabulate(a, xs, n=0):
    """Rows (a, x, n, re, im, err_estimate) from the adaptive engine."""
    rows = []
    for x in np.asarray(xs, dtype=float):
        val, err = phi(a, float(x), n, return_error=True)
        rows.append((float(a), float(x), int(n), val.real, val.imag, err))
    return rows


def write_tabulation(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "x", "n", "re", "im", "err_estimate"])
        for a, x, n, re, im, err in rows:
            w.writerow([f"{a:.17g}", f"{x:.17g}", n, f"{re:.17g}", f"{im:.17g}", f"{err:.17g}"])


__all__ = [
    "KernelQuery",
    "EnvelopeReport",
    "QuadratureError",
    "phi",
    "phi_batch",
    "phi_rays",
    "phi_ode_residual",
    "green",
    "green_batch",
    "kernel_weighted_norm",
    "certify_envelope",
    "tabulate",
    "write_tabulation",
]
