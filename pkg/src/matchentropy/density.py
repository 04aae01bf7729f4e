"""Kolmogorov-forward propagation of the match density under a feedback volatility.

The density q solves dq/dt = 0.5 * d2(sigma^2 q)/dx2 from a discrete Dirac
start, implicitly in time with sigma^2 evaluated at nodes.  Interior mass
plus the accumulated boundary absorption telescopes to the initial mass
exactly, which makes the discrete mass ledger an identity rather than an
approximation.

Two volatility models are supported: the early-termination model reads
sigma^2 from a solved control field and absorbs at the boundaries; the
full-length benchmark sigma(t,x) = sin(pi x)/(pi sqrt(T-t)) cannot reach
the boundary before T, so its boundary coupling is reflecting and the
absorbed-mass ledger stays at zero until the final time, where the two
atoms are read from the penultimate level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import NumericalError, ValidationError
from .grid import Grid
from .hjb import ControlField
from .tridiag import solve_tridiagonal

EARLY_TERMINATION = "early_termination"
FULL_LENGTH = "full_length"


@dataclass(frozen=True)
class VolatilityModel:
    """Either a solved control field or the closed-form full-length benchmark."""

    kind: str
    T: float
    control: ControlField | None = None

    def __post_init__(self):
        if self.kind not in (EARLY_TERMINATION, FULL_LENGTH):
            raise ValidationError(f"unknown volatility model kind {self.kind!r}")
        if self.T <= 0.0:
            raise ValidationError("horizon T must be positive")
        if self.kind == EARLY_TERMINATION and self.control is None:
            raise ValidationError("early_termination model requires a ControlField")

    @classmethod
    def early_termination(cls, control: ControlField) -> "VolatilityModel":
        return cls(kind=EARLY_TERMINATION, T=control.grid.T, control=control)

    @classmethod
    def full_length(cls, T: float) -> "VolatilityModel":
        return cls(kind=FULL_LENGTH, T=T)


@dataclass(frozen=True)
class DensitySurface:
    """Sub-probability density rows plus the cumulative boundary absorption."""

    grid: Grid
    values: np.ndarray
    absorbed_mass_left: np.ndarray
    absorbed_mass_right: np.ndarray

    def __post_init__(self):
        g = self.grid
        vals = np.array(self.values, dtype=float)
        left = np.array(self.absorbed_mass_left, dtype=float)
        right = np.array(self.absorbed_mass_right, dtype=float)
        if vals.shape != (g.M + 1, g.N + 1):
            raise ValidationError("density surface has the wrong shape")
        if left.shape != (g.M + 1,) or right.shape != (g.M + 1,):
            raise ValidationError("absorbed-mass arrays must have M+1 entries")
        if np.min(vals) < -1e-12:
            raise ValidationError("density has negative entries beyond tolerance")
        interior = trapezoid(vals, dx=g.h, axis=1)
        ledger = interior + left + right
        if np.max(np.abs(ledger - 1.0)) > 1e-6:
            m = int(np.argmax(np.abs(ledger - 1.0)))
            raise ValidationError(
                f"mass ledger violated at time level {m}: interior+absorbed = {ledger[m]!r}")
        for arr in (vals, left, right):
            arr.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "absorbed_mass_left", left)
        object.__setattr__(self, "absorbed_mass_right", right)


def benchmark_volatility(t: float, x: float, T: float) -> float:
    """Full-length benchmark volatility sin(pi x)/(pi sqrt(T - t)); needs t < T."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"x must lie in [0, 1], got {x!r}")
    if t < 0.0 or t >= T:
        raise ValidationError(f"t must lie in [0, T), got t={t!r}, T={T!r}")
    return math.sin(math.pi * x) / (math.pi * math.sqrt(T - t))


def benchmark_entropy(t: float, x: float, T: float) -> float:
    """Entropy of the full-length benchmark; explodes at x in {0, 1} for t < T."""
    if t < 0.0 or t > T:
        raise ValidationError(f"t must lie in [0, T], got t={t!r}")
    if t == T:
        return 0.0
    if not 0.0 < x < 1.0:
        raise ValidationError(
            f"the benchmark entropy diverges at x in {{0, 1}} for t < T (got x={x!r})")
    return (T - t) * (math.log(math.sin(math.pi * x) / (math.pi * math.sqrt(T - t))) + 0.5)


def _sigma_squared_row(model: VolatilityModel, grid: Grid, m: int) -> np.ndarray:
    """sigma^2 at all nodes of time level m; the full-length row at t = T is
    capped at its value one step earlier (the closed form is singular there)."""
    if model.kind == EARLY_TERMINATION:
        return model.control.a_star[m]
    t = min(m, grid.M - 1) * grid.k
    x = grid.x_nodes()
    return np.sin(math.pi * x) ** 2 / (math.pi ** 2 * (model.T - t))


def solve_forward_density(model: VolatilityModel, grid: Grid, x0: float) -> DensitySurface:
    """Propagate a discrete Dirac at x0 through the implicit conservative scheme."""
    if not 0.0 < x0 < 1.0:
        raise ValidationError(f"x0 must lie strictly inside (0, 1), got {x0!r}")
    if model.kind == EARLY_TERMINATION and model.control.grid != grid:
        raise ValidationError("control field and density grid do not match")
    j0 = int(round(x0 * grid.N))
    if j0 <= 0 or j0 >= grid.N:
        raise ValidationError(f"x0={x0!r} rounds onto a boundary node at this resolution")

    N, M, h, k = grid.N, grid.M, grid.h, grid.k
    b = k / (2.0 * h * h)
    reflecting = model.kind == FULL_LENGTH

    q = np.zeros((M + 1, N + 1))
    q[0, j0] = 1.0 / h
    left = np.zeros(M + 1)
    right = np.zeros(M + 1)

    for m in range(M):
        s = _sigma_squared_row(model, grid, m + 1)
        diag = 1.0 + 2.0 * b * s[1:N]
        sup = -b * s[2:N]
        sub = -b * s[1:N - 1]
        if reflecting:
            # mirror the would-be boundary flux back: no absorption before T
            diag[0] -= b * s[1]
            diag[-1] -= b * s[N - 1]
        interior = solve_tridiagonal(sub, diag, sup, q[m, 1:N])
        lowest = float(np.min(interior))
        peak = float(np.max(np.abs(interior))) if interior.size else 0.0
        if lowest < -1e-12 * max(1.0, peak):
            raise NumericalError(
                f"negative density {lowest:.3e} at time level {m + 1}: "
                "discretisation lost monotonicity")
        np.clip(interior, 0.0, None, out=interior)
        q[m + 1, 1:N] = interior
        if reflecting:
            left[m + 1] = left[m]
            right[m + 1] = right[m]
        else:
            left[m + 1] = left[m] + b * h * s[1] * interior[0]
            right[m + 1] = right[m] + b * h * s[N - 1] * interior[-1]

    return DensitySurface(grid=grid, values=q,
                          absorbed_mass_left=left, absorbed_mass_right=right)


def survival_probability(density: DensitySurface, t: float) -> float:
    """Trapezoidal integral of q(t, .) over (0,1); t must be a grid time level."""
    m = density.grid.time_index(t)
    return float(trapezoid(density.values[m], dx=density.grid.h))


def terminal_atoms(density: DensitySurface) -> tuple[float, float]:
    """Masses reaching 0 and 1 as t -> T, read from the penultimate level.

    Each atom is the accumulated absorption on its side plus the interior
    mass on that side of 1/2 (an exact-centre node splits evenly).
    """
    g = density.grid
    m = g.M - 1
    row = density.values[m]
    x = g.x_nodes()
    w = np.full(g.N + 1, g.h)
    w[0] = w[-1] = g.h / 2.0
    mass = row * w
    left = float(density.absorbed_mass_left[m] + np.sum(mass[x < 0.5])
                 + 0.5 * np.sum(mass[x == 0.5]))
    right = float(density.absorbed_mass_right[m] + np.sum(mass[x > 0.5])
                  + 0.5 * np.sum(mass[x == 0.5]))
    return left, right
