"""Periodic grids, fields, equation coefficients and damping profiles."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from hnls._validation import (
    ValidationError,
    check_finite_scalar,
    check_positive,
    check_power_of_two,
    check_samples,
)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on [-L, L) with N nodes.

    Node j sits at ``x_j = -L + j*h``. Wavenumbers follow the unshifted FFT
    layout, ``xi_k = pi*k/L``.
    """

    half_width: float
    n_points: int
    spacing: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)
    wavenumbers_odd: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = check_positive(self.half_width, "half_width")
        N = check_power_of_two(self.n_points, "n_points")
        h = 2.0 * L / N
        x = -L + h * np.arange(N)
        xi = 2.0 * np.pi * np.fft.fftfreq(N, d=h)
        # Nyquist mode has no real-symmetric odd derivative
        xi_odd = xi.copy()
        xi_odd[N // 2] = 0.0
        for arr in (x, xi, xi_odd):
            arr.flags.writeable = False
        object.__setattr__(self, "half_width", L)
        object.__setattr__(self, "n_points", N)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "wavenumbers", xi)
        object.__setattr__(self, "wavenumbers_odd", xi_odd)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.half_width == other.half_width and self.n_points == other.n_points

    def __hash__(self):
        return hash((self.half_width, self.n_points))

    def derivative_symbol(self, order):
        """Fourier symbol (i xi)^order with the Nyquist convention applied."""
        xi = self.wavenumbers_odd if order % 2 else self.wavenumbers
        return (1j * xi) ** order


def make_grid(half_width, n_points):
    return Grid(half_width, n_points)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a grid. Values are stored read-only."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        if not isinstance(self.grid, Grid):
            raise ValidationError("grid must be a Grid instance")
        vals = check_samples(self.values, self.grid.n_points)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid, func):
        return cls(func(grid.x), grid)

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.n_points, dtype=complex), grid)

    def with_values(self, values):
        return Field(values, self.grid)

    def __len__(self):
        return self.grid.n_points


@dataclass(frozen=True)
class EquationParams:
    """Coefficients a, b, lambda, beta of the equation and the regularization delta.

    ``lam`` holds lambda (a reserved word in Python).
    """

    a: float = 0.0
    b: float = 0.0
    lam: float = 0.0
    beta: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "lam", "beta"):
            object.__setattr__(self, name, check_finite_scalar(getattr(self, name), name))
        object.__setattr__(self, "delta", check_positive(self.delta, "delta", strict=False))

    def replace(self, **changes):
        kw = dict(a=self.a, b=self.b, lam=self.lam, beta=self.beta, delta=self.delta)
        kw.update(changes)
        return EquationParams(**kw)


class DampingProfile(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    PLATEAU_WITH_HOLE = "plateau_with_hole"
    SMOOTH_BUMP_COMPLEMENT = "smooth_bump_complement"
    SAMPLES = "samples"


def _eta_with_derivative(x):
    # deferred import: weights depends on core
    from hnls.weights import eval_eta, eval_eta_derivative

    return eval_eta(x), eval_eta_derivative(x, 1)


@dataclass(frozen=True, eq=False)
class DampingSpec:
    """The damping coefficient d(x).

    Profiles
    --------
    zero
        d = 0.
    constant
        d = d0 everywhere.
    plateau_with_hole
        d = 0 on (-R0, R0) and d0 outside. Discontinuous: ``derivative``
        returns the zero pointwise part only, and balance laws that need d'
        integrate it by parts onto the solution instead.
    smooth_bump_complement
        d = d0 * eta((|x| - R0 + w) / w) with w = min(1, R0/2): zero on
        |x| <= R0 - w, equal to d0 for |x| >= R0, smooth in between.
    samples
        user-supplied non-negative nodal values (``samples``), derivative
        computed spectrally.
    """

    profile: DampingProfile = DampingProfile.ZERO
    d0: float = 0.0
    R0: float = 1.0
    samples: np.ndarray = None

    def __post_init__(self):
        try:
            profile = DampingProfile(self.profile)
        except ValueError:
            valid = ", ".join(p.value for p in DampingProfile)
            raise ValidationError(f"unknown damping profile {self.profile!r}; valid: {valid}")
        object.__setattr__(self, "profile", profile)
        d0 = check_finite_scalar(self.d0, "d0")
        if d0 < 0:
            raise ValidationError(
                f"d0 must be non-negative (Condition A requires d >= 0), got {d0}"
            )
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "R0", check_positive(self.R0, "R0"))
        if profile is DampingProfile.SAMPLES:
            if self.samples is None:
                raise ValidationError("profile 'samples' requires nodal samples")
            s = np.asarray(self.samples, dtype=float).copy()
            if s.ndim != 1 or not np.all(np.isfinite(s)):
                raise ValidationError("damping samples must be a finite vector")
            if np.any(s < 0):
                raise ValidationError("damping samples must be non-negative (Condition A)")
            s.flags.writeable = False
            object.__setattr__(self, "samples", s)

    @property
    def transition_width(self):
        return min(1.0, self.R0 / 2.0)

    def evaluate(self, grid):
        x = grid.x
        p = self.profile
        if p is DampingProfile.ZERO:
            return np.zeros_like(x)
        if p is DampingProfile.CONSTANT:
            return np.full_like(x, self.d0)
        if p is DampingProfile.PLATEAU_WITH_HOLE:
            return np.where(np.abs(x) >= self.R0, self.d0, 0.0)
        if p is DampingProfile.SMOOTH_BUMP_COMPLEMENT:
            w = self.transition_width
            eta, _ = _eta_with_derivative((np.abs(x) - self.R0 + w) / w)
            return self.d0 * eta
        self._check_samples(grid)
        return np.array(self.samples)

    def derivative(self, grid):
        x = grid.x
        p = self.profile
        if p in (DampingProfile.ZERO, DampingProfile.CONSTANT, DampingProfile.PLATEAU_WITH_HOLE):
            return np.zeros_like(x)
        if p is DampingProfile.SMOOTH_BUMP_COMPLEMENT:
            w = self.transition_width
            _, deta = _eta_with_derivative((np.abs(x) - self.R0 + w) / w)
            return self.d0 * deta * np.sign(x) / w
        self._check_samples(grid)
        return differentiate(np.asarray(self.samples, dtype=complex), grid, 1).real

    def is_constant(self):
        return self.profile is DampingProfile.CONSTANT or (
            self.profile is DampingProfile.ZERO
        )

    def satisfies_condition_a(self, grid):
        """Check d >= 0 everywhere and d >= d0 on |x| >= R0 at the grid nodes."""
        d = self.evaluate(grid)
        if np.any(d < 0):
            return False
        if self.d0 > 0:
            outside = np.abs(grid.x) >= self.R0
            return bool(np.all(d[outside] >= self.d0 * (1 - 1e-12)))
        return True

    def _check_samples(self, grid):
        if self.samples.shape[0] != grid.n_points:
            raise ValidationError(
                f"damping samples have length {self.samples.shape[0]}, grid has {grid.n_points}"
            )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots u(t_k, .) stacked row-wise in ``states`` (count x N).

    ``params``, ``damping`` and ``config`` echo the inputs of the run that
    produced it; they may be ``None`` for purely linear trajectories.
    """

    grid: Grid
    times: np.ndarray
    states: np.ndarray
    params: "EquationParams" = None
    damping: "DampingSpec" = None
    config: object = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).copy()
        states = np.asarray(self.states, dtype=complex).copy()
        if states.ndim != 2 or states.shape != (times.size, self.grid.n_points):
            raise ValidationError(
                f"states must have shape ({times.size}, {self.grid.n_points}), got {states.shape}"
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValidationError("trajectory times must be strictly increasing")
        times.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.times.size

    def field(self, k):
        return Field(self.states[k], self.grid)

    @property
    def initial(self):
        return self.field(0)

    @property
    def final(self):
        return self.field(-1)

    def masses(self):
        return np.sum(np.abs(self.states) ** 2, axis=1) * self.grid.spacing


def differentiate(values, grid, order):
    """Spectral derivative of nodal values along the last axis."""
    if order not in (1, 2, 3):
        raise ValidationError(f"derivative order must be 1, 2 or 3, got {order}")
    return np.fft.ifft(grid.derivative_symbol(order) * np.fft.fft(values, axis=-1), axis=-1)


def spectral_derivative(u, order):
    return Field(differentiate(u.values, u.grid, order), u.grid)


def l2_norm_sq(u):
    if not isinstance(u, Field):
        raise ValidationError("l2_norm_sq expects a Field")
    return float(np.sum(np.abs(u.values) ** 2) * u.grid.spacing)


def integrate(values, grid):
    """Spacing-weighted sum, the periodic trapezoid rule."""
    return np.sum(values) * grid.spacing


def dealias_mask(grid, fraction=2.0 / 3.0):
    """Boolean mask keeping modes with |k| below fraction * N/2."""
    k = np.abs(np.fft.fftfreq(grid.n_points) * grid.n_points)
    return k < fraction * grid.n_points / 2


def edge_ratio(values, width=4):
    """max |u| over the outermost nodes divided by max |u| (0 for the zero field)."""
    mag = np.abs(values)
    peak = mag.max()
    if peak == 0:
        return 0.0
    edges = np.concatenate([mag[:width], mag[-width:]])
    return float(edges.max() / peak)


__all__ = [
    "Grid",
    "Field",
    "EquationParams",
    "DampingProfile",
    "DampingSpec",
    "Trajectory",
    "make_grid",
    "spectral_derivative",
    "differentiate",
    "l2_norm_sq",
    "integrate",
    "dealias_mask",
    "edge_ratio",
]
