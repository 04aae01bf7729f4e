"""Euler-Maruyama simulation of the controlled win-probability martingale.

Paths follow X_{j+1} = X_j + sigma(t_j, X_j) sqrt(dt) xi_j with feedback
sigma^2 read from a solved control field (bilinear interpolation), the
closed-form full-length benchmark, or a constant.  A path stops the first
step its endpoint crosses the continuity-corrected barriers
beta*sigma*sqrt(dt) inside {0, 1} (beta = -zeta(1/2)/sqrt(2*pi), the
standard correction for discretely monitored absorption, which removes the
O(sqrt(dt)) survival bias); the endpoint is then clipped to {0,1}.  Reward
0.5*(1 + log a)*dt accrues for every completed step including the exit
step, and nothing accrues after stopping.

Every path owns a counter-based generator keyed by (base_seed, path index),
so results are bit-identical regardless of batch layout, and the reduction
order is fixed by path index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import FULL_LENGTH, VolatilityModel
from .errors import ValidationError
from .hjb import ControlField

_CHUNK = 8192

# mean overshoot of a discretely monitored Brownian crossing, -zeta(1/2)/sqrt(2 pi)
BARRIER_CORRECTION = 0.5825971579390107


@dataclass(frozen=True)
class SimConfig:
    """Path count, step size, RNG seed and start point of a simulation run."""

    n_paths: int
    dt: float
    base_seed: int
    x0: float
    probe_times: tuple = ()

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValidationError("n_paths must be >= 1")
        if self.dt <= 0.0:
            raise ValidationError("dt must be positive")
        if not 0.0 < self.x0 < 1.0:
            raise ValidationError(f"x0 must lie in (0, 1), got {self.x0!r}")


@dataclass(frozen=True)
class PathStats:
    """Per-path outcomes plus the summary statistics of one simulation run."""

    reward_mean: float
    reward_stderr: float
    qv_mean: float
    exit_time_samples: np.ndarray
    absorbed_side: np.ndarray
    terminal_values: np.ndarray
    reward_samples: np.ndarray
    qv_samples: np.ndarray
    fraction_absorbed_by: dict


@dataclass(frozen=True)
class QvReport:
    """Outcome of the pathwise quadratic-variation identity check."""

    qv_mean: float
    terminal_gap: float
    se_combined: float
    passed: bool


def _control_evaluator(control, T: float | None):
    """Return (horizon, eval(t, x_array) -> a_array) for any supported control."""
    if isinstance(control, ControlField):
        grid = control.grid
        xs = grid.x_nodes()
        a_rows = control.a_star

        def eval_field(t, x):
            if np.any(x < 0.0) or np.any(x > 1.0):
                raise ValidationError("control field queried outside [0, 1]")
            mf = t / grid.k
            m = min(int(mf), grid.M - 1)
            wt = mf - m
            row = a_rows[m] if wt == 0.0 else (1.0 - wt) * a_rows[m] + wt * a_rows[m + 1]
            return np.interp(x, xs, row)

        return grid.T, eval_field
    if isinstance(control, VolatilityModel):
        if control.kind != FULL_LENGTH:
            return _control_evaluator(control.control, control.T)

        def eval_benchmark(t, x):
            if np.any(x < 0.0) or np.any(x > 1.0):
                raise ValidationError("benchmark volatility queried outside [0, 1]")
            return np.sin(math.pi * x) ** 2 / (math.pi ** 2 * (control.T - t))

        return control.T, eval_benchmark
    a_const = float(control)
    if not a_const > 0.0:
        raise ValidationError(f"constant control must be positive, got {control!r}")
    if T is None:
        raise ValidationError("a horizon T is required with a constant control")

    def eval_const(t, x):
        return np.full(x.shape, a_const)

    return float(T), eval_const


def simulate_paths(control, cfg: SimConfig, T: float | None = None, *,
                   barrier_correction: bool = True,
                   include_exit_step: bool = True) -> PathStats:
    """Simulate cfg.n_paths trajectories and aggregate their statistics.

    `control` may be a ControlField, a VolatilityModel, or a positive
    constant diffusion coefficient (which needs an explicit horizon T).
    For controls with a natural horizon, passing a smaller T stops the
    simulation early (the law of the stopped process at T).  The keyword
    flags expose the naive absorption rule (no barrier shift, reward
    truncated before the exit step) for bias studies.
    """
    horizon, eval_a = _control_evaluator(control, T)
    if T is not None and isinstance(control, (ControlField, VolatilityModel)):
        if T > horizon + 1e-12:
            raise ValidationError(f"T={T!r} exceeds the control horizon {horizon!r}")
        horizon = float(T)
    if isinstance(control, ControlField) and cfg.dt > control.grid.k + 1e-15:
        raise ValidationError(f"dt={cfg.dt!r} exceeds the control grid step {control.grid.k!r}")
    n_steps_f = horizon / cfg.dt
    n_steps = int(round(n_steps_f))
    if n_steps < 1 or abs(n_steps_f - n_steps) > 1e-9:
        raise ValidationError(f"dt={cfg.dt!r} must divide the horizon {horizon!r} evenly")
    dt = cfg.dt

    n = cfg.n_paths
    terminal = np.empty(n)
    side = np.zeros(n, dtype=np.int8)
    exit_time = np.full(n, horizon)
    reward = np.zeros(n)
    qv = np.zeros(n)

    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        size = hi - lo
        noise = np.empty((size, n_steps))
        seed_word = cfg.base_seed & 0xFFFFFFFFFFFFFFFF
        for i in range(size):
            gen = np.random.Generator(np.random.Philox(key=[seed_word, lo + i]))
            noise[i] = gen.standard_normal(n_steps)
        x = np.full(size, cfg.x0)
        alive = np.ones(size, dtype=bool)
        for j in range(n_steps):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            t = j * dt
            a = eval_a(t, x[idx])
            step_sd = np.sqrt(a * dt)
            x_new = x[idx] + step_sd * noise[idx, j]
            shift = BARRIER_CORRECTION * step_sd if barrier_correction else 0.0
            inside = (x_new > shift) & (x_new < 1.0 - shift)
            accrue = np.ones_like(inside) if include_exit_step else inside
            sel = idx[accrue]
            reward[lo + sel] += 0.5 * (1.0 + np.log(a[accrue])) * dt
            qv[lo + sel] += a[accrue] * dt
            gone = idx[~inside]
            if gone.size:
                # record the nearer boundary; endpoints clip to {0, 1}
                left_exit = x_new[~inside] <= 0.5
                side[lo + gone] = np.where(left_exit, -1, 1)
                exit_time[lo + gone] = (j + 1) * dt
                alive[gone] = False
                x_new[~inside] = np.where(left_exit, 0.0, 1.0)
            x[idx] = np.clip(x_new, 0.0, 1.0)
        terminal[lo:hi] = x

    probes = cfg.probe_times or (0.5 * horizon, 0.9 * horizon, 0.99 * horizon)
    absorbed = side != 0
    fractions = {
        float(t): float(np.mean(absorbed & (exit_time <= t + 1e-12))) for t in probes
    }
    stderr = float(np.std(reward, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    for arr in (terminal, side, exit_time, reward, qv):
        arr.setflags(write=False)
    return PathStats(
        reward_mean=float(np.mean(reward)),
        reward_stderr=stderr,
        qv_mean=float(np.mean(qv)),
        exit_time_samples=exit_time,
        absorbed_side=side,
        terminal_values=terminal,
        reward_samples=reward,
        qv_samples=qv,
        fraction_absorbed_by=fractions,
    )


def quadratic_variation_check(stats: PathStats, cfg: SimConfig) -> QvReport:
    """Check mean(int sigma^2 dt) against mean(X_stop^2) - x0^2 at 3 combined SE."""
    n = stats.qv_samples.size
    x2 = stats.terminal_values ** 2 - cfg.x0 ** 2
    gap = float(np.mean(stats.qv_samples) - np.mean(x2))
    se_qv = float(np.std(stats.qv_samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se_x2 = float(np.std(x2, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se = math.hypot(se_qv, se_x2)
    return QvReport(qv_mean=stats.qv_mean, terminal_gap=gap, se_combined=se,
                    passed=abs(gap) <= 3.0 * se)
