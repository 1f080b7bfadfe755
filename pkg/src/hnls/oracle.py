"""Slow reference computations for tests.

Nothing in the production paths imports this module. Each routine uses a
method unrelated to the fast path it checks: brute-force real-axis
quadrature for the Airy-type kernel, an arbitrary-precision power series for
Ai, and a dense matrix exponential for the linear flow.
"""

import math

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import expm

from hnls._validation import ValidationError, check_finite_scalar
from hnls.core import Field, differentiate

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gl_panels(func, lo, hi, panels, chunk=None):
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    if chunk is None:
        return np.sum(weights * func(nodes))
    return sum(np.sum(weights[k:k + chunk] * func(nodes[k:k + chunk]))
               for k in range(0, nodes.size, chunk))


# --- Phi_a by direct quadrature of the Fourier integral ----------------------


def _tail_series(phase, R, terms, side):
    """Integration-by-parts expansion of the tails of int e^{i theta}.

    With p = theta', repeated integration by parts gives
    int_R^inf e^{i theta} = -e^{i theta(R)} sum_k N_k(R) / (i^{k+1} p(R)^{2k+1})
    with N_0 = 1 and N_{k+1} = (2k+1) N_k p' - N_k' p. The left tail is
    the mirror image with the opposite sign.
    """
    p = phase.deriv()
    dp = p.deriv()
    N = Polynomial([1.0])
    total = 0.0j
    pR = p(R)
    for k in range(terms):
        total += N(R) / ((1j) ** (k + 1) * pR ** (2 * k + 1))
        N = (2 * k + 1) * N * dp - N.deriv() * p
    sign = -1.0 if side == "right" else 1.0
    return sign * np.exp(1j * phase(R)) * total


def phi_direct_quadrature(a, x, radius=30.0, terms=6):
    """(1/2pi) int e^{i(xi^3 - a xi^2 + x xi)} d xi on the real axis.

    The integral over [-radius, radius] uses 20-point Gauss-Legendre panels
    sized to the local oscillation; the tails come from an asymptotic
    integration-by-parts series, whose first neglected term is O(radius^-14).
    """
    a = check_finite_scalar(a, "a")
    x = check_finite_scalar(x, "x")
    if abs(x) > 30 or abs(a) > 2:
        raise ValidationError("phi_direct_quadrature is limited to |x| <= 30 and |a| <= 2")
    phase = Polynomial([0.0, x, -a, 1.0])
    # about 12 nodes per local period near the ends
    local_rate = 3 * radius**2 + 2 * abs(a) * radius + abs(x)
    panels = int(math.ceil(2 * radius * local_rate / (2 * math.pi) * 12 / 20))
    body = _gl_panels(lambda s: np.exp(1j * phase(s)), -radius, radius, panels)
    left = _tail_series(phase, -radius, terms, "left")
    right = _tail_series(phase, radius, terms, "right")
    return complex((body + left + right) / (2 * math.pi))


# --- classical Airy function ---------------------------------------------------


def airy_reference(x, digits=60):
    """Ai(x) from its Maclaurin series in arbitrary precision, |x| <= 12.

    Ai = c1 f - c2 g with f = sum 3^k (1/3)_k x^{3k}/(3k)!,
    g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!; at x = 12 the two parts cancel
    to about 25 digits, so 60 working digits leave ample margin.
    """
    x = check_finite_scalar(x, "x")
    if abs(x) > 12:
        raise ValidationError("airy_reference is limited to |x| <= 12")
    with mpmath.workdps(digits):
        z = mpmath.mpf(x)
        c1 = 1 / (mpmath.power(3, mpmath.mpf(2) / 3) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.power(3, mpmath.mpf(1) / 3) * mpmath.gamma(mpmath.mpf(1) / 3))
        z3 = z**3
        f_term = mpmath.mpf(1)
        g_term = z
        f_sum = f_term
        g_sum = g_term
        tiny = mpmath.mpf(10) ** (-digits)
        k = 0
        while True:
            k += 1
            f_term = f_term * z3 / ((3 * k - 1) * (3 * k))
            g_term = g_term * z3 / ((3 * k) * (3 * k + 1))
            f_sum += f_term
            g_sum += g_term
            if abs(f_term) + abs(g_term) < tiny * (abs(f_sum) + abs(g_sum)) and k > 3:
                break
        return float(c1 * f_sum - c2 * g_sum)


def airy_asymptotic(x, terms=8):
    """Leading asymptotic forms of Ai, for cross-checking the series at |x| >= 6."""
    x = check_finite_scalar(x, "x")
    if abs(x) < 6:
        raise ValidationError("airy_asymptotic is only meaningful for |x| >= 6")

    def u(k):
        # u_k = Gamma(3k + 1/2) / (54^k k! Gamma(k + 1/2))
        return math.gamma(3 * k + 0.5) / (54**k * math.factorial(k) * math.gamma(k + 0.5))

    if x > 0:
        zeta = 2.0 / 3.0 * x**1.5
        s = sum((-1) ** k * u(k) / zeta**k for k in range(terms))
        return math.exp(-zeta) / (2 * math.sqrt(math.pi) * x**0.25) * s
    y = -x
    zeta = 2.0 / 3.0 * y**1.5
    even = sum((-1) ** k * u(2 * k) / zeta ** (2 * k) for k in range(terms // 2))
    odd = sum((-1) ** k * u(2 * k + 1) / zeta ** (2 * k + 1) for k in range(terms // 2))
    arg = zeta + math.pi / 4
    return (math.sin(arg) * even - math.cos(arg) * odd) / (math.sqrt(math.pi) * y**0.25)


# --- kernel mass -----------------------------------------------------------------


def green_mass(t, a=0.0, b=0.0, radius=60.0, panels=1200):
    """int G(t, x) W(x - bt) dx with a smooth plateau window W.

    W equals 1 on |y| <= radius and vanishes beyond 2 radius; because G
    oscillates ever faster on its slowly decaying side, the smooth cutoff
    removes the conditionally convergent tail to high accuracy.
    """
    from hnls.kernel import green_batch
    from hnls.weights import eval_eta

    t = check_finite_scalar(t, "t")
    if t <= 0:
        raise ValidationError("t must be positive")

    def integrand(y):
        w = eval_eta(2.0 - np.abs(y) / radius)
        return green_batch(t, y + b * t, a, b, 0) * w

    return complex(_gl_panels(integrand, -2 * radius, 2 * radius, panels, chunk=2000))


# --- dense linear flow -------------------------------------------------------------


def _periodic_d1(N, half_width):
    h = 2 * math.pi / N
    j = np.arange(N)
    diff = j[:, None] - j[None, :]
    D = np.zeros((N, N))
    off = diff != 0
    D[off] = 0.5 * (-1.0) ** diff[off] / np.tan(diff[off] * h / 2)
    return D * (math.pi / half_width)


def _periodic_d2(N, half_width):
    h = 2 * math.pi / N
    j = np.arange(N)
    diff = j[:, None] - j[None, :]
    D = np.full((N, N), -math.pi**2 / (3 * h**2) - 1.0 / 6.0)
    off = diff != 0
    D[off] = -0.5 * (-1.0) ** diff[off] / np.sin(diff[off] * h / 2) ** 2
    return D * (math.pi / half_width) ** 2


def linear_generator(grid, a=0.0, b=0.0):
    """Dense matrix of u -> i a u_xx - b u_x - u_xxx from periodic cardinal functions."""
    N = grid.n_points
    if N > 64:
        raise ValidationError("dense oracle is limited to N <= 64")
    D1 = _periodic_d1(N, grid.half_width)
    D2 = _periodic_d2(N, grid.half_width)
    return 1j * a * D2 - b * D1 - D1 @ D2


def dense_linear_solve(u0, t, a=0.0, b=0.0):
    """exp(t A) u0 with the dense generator A, N <= 64."""
    t = check_finite_scalar(t, "t")
    A = linear_generator(u0.grid, a, b)
    if t == 0:
        return u0
    return Field(expm(t * A) @ u0.values, u0.grid)


# --- pointwise PDE residual ------------------------------------------------------


def pde_pointwise_residual(traj, params=None, damping=None):
    """L2 norm of the full equation applied to the snapshots.

    Returns (times, residuals) at interior snapshots; u_t by centered
    differences, spatial derivatives spectral, and (|u| u)_x by the chain
    rule pointwise. For delta > 0, |u| is replaced by g_delta.
    """
    params = params or traj.params
    damping = damping or traj.damping
    if params is None or damping is None:
        raise ValidationError("params and damping are required")
    g = traj.grid
    U = traj.states
    t = traj.times
    if t.size < 3:
        raise ValidationError("need at least three snapshots")
    Ut = (U[2:] - U[:-2]) / (t[2:] - t[:-2])[:, None]
    V = U[1:-1]
    Vx = differentiate(V, g, 1)
    Vxx = differentiate(V, g, 2)
    Vxxx = differentiate(V, g, 3)
    G = np.sqrt(np.abs(V) ** 2 + params.delta)
    live = G > 1e-300
    Gx = np.where(live, np.real(np.conj(V) * Vx) / np.where(live, G, 1.0), 0.0)
    d = damping.evaluate(g)
    res = (1j * Ut + params.a * Vxx + 1j * params.b * Vx + 1j * Vxxx
           + params.lam * G * V + 1j * params.beta * (Gx * V + G * Vx) + 1j * d * V)
    norms = np.sqrt(np.sum(np.abs(res) ** 2, axis=1) * g.spacing)
    return t[1:-1], norms


__all__ = [
    "phi_direct_quadrature",
    "airy_reference",
    "airy_asymptotic",
    "green_mass",
    "linear_generator",
    "dense_linear_solve",
    "pde_pointwise_residual",
]
