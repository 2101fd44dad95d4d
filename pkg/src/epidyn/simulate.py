"""Forward integration of either model and trajectory utilities."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .model import (
    COMPARTMENTS,
    SERIRS,
    SVERIRS,
    NumericalError,
    SverirsParams,
    theta,
)


@dataclass(frozen=True)
class IntegrationOptions:
    t_end: float = 3650.0
    stride: float = 1.0
    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    max_step: float = np.inf

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.stride > 0:
            raise ValueError("output stride must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), 4 or 5)
    model: str
    integral_I: float = 0.0  # int_0^T I dt
    integral_u: float = 0.0  # int_0^T phi dt
    stats: dict = field(default_factory=dict)

    @property
    def columns(self) -> tuple[str, ...]:
        return COMPARTMENTS[self.model]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    def to_csv(self, path_or_file) -> None:
        """Write ``t,S,E,I,R[,V]`` rows at full double precision."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t",) + self.columns)
            for t, row in zip(self.times, self.states):
                w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
        finally:
            if own:
                fh.close()


def _mode(model: str, p) -> int:
    if model not in (SERIRS, SVERIRS):
        raise ValueError(f"unknown model {model!r}")
    if (model == SVERIRS) != isinstance(p, SverirsParams):
        raise ValueError(f"parameters do not match model {model!r}")
    return kernels.MODE_SVERIRS if model == SVERIRS else kernels.MODE_SERIRS


def _schedule_arrays(model: str, p, t_end: float, schedule) -> tuple[np.ndarray, np.ndarray]:
    if schedule is None:
        phi = p.phi if model == SVERIRS else 0.0
        return np.array([0.0, t_end]), np.array([phi])
    breaks = np.asarray(schedule.breakpoints, dtype=float)
    values = np.asarray(schedule.values, dtype=float)
    if breaks[0] != 0.0 or breaks[-1] < t_end * (1 - 1e-12):
        raise ValueError("schedule must span [0, t_end]")
    keep = int(np.searchsorted(breaks, t_end, side="left"))
    breaks = np.append(breaks[:keep], t_end)
    return breaks, values[: len(breaks) - 1].copy()


def output_times(t_end: float, stride: float) -> np.ndarray:
    ts = np.arange(0.0, t_end, stride)
    if t_end - ts[-1] <= 1e-9 * stride:
        ts = ts[:-1]
    return np.append(ts, t_end)


def _check_initial(x0: np.ndarray, p, size: int) -> None:
    if x0.shape != (size,):
        raise ValueError(f"initial state must have {size} components, got {x0.shape}")
    if np.any(x0 < 0):
        raise ValueError("initial state has negative compartments")
    if abs(x0.sum() - p.n) > 1e-9 * p.n:
        raise ValueError(f"initial state sums to {x0.sum()!r}, expected n = {p.n!r}")


_STATUS_MESSAGES = {
    kernels.STATUS_UNDERFLOW: "stiffness/step underflow at t={t:.6g}",
    kernels.STATUS_NEGATIVE: "negative compartment beyond -abs_tol at t={t:.6g}",
    kernels.STATUS_NONFINITE: "non-finite state at t={t:.6g}",
    kernels.STATUS_MAX_STEPS: "step budget exhausted at t={t:.6g}",
}


def integrate(model: str, p, x0, opts: IntegrationOptions = IntegrationOptions(),
              schedule=None) -> Trajectory:
    """Integrate ``model`` from ``x0`` with adaptive Dormand-Prince 5(4).

    ``schedule`` (anything with ``breakpoints`` and ``values``) overrides phi
    with a piecewise-constant vaccination rate; otherwise phi is held at
    ``p.phi``. Output is sampled every ``opts.stride`` days plus the end time,
    with tiny negative excursions clamped to zero.
    """
    mode = _mode(model, p)
    size = 5 if model == SVERIRS else 4
    x0 = np.asarray(x0, dtype=float)
    _check_initial(x0, p, size)
    breaks, values = _schedule_arrays(model, p, opts.t_end, schedule)
    times = output_times(opts.t_end, opts.stride)
    y0 = np.concatenate([x0, [0.0, 0.0]])
    out, y_end, status, t_stat, n_acc, n_rej = kernels.dopri_solve(
        mode, theta(p), y0, breaks, values, times, opts.rel_tol, opts.abs_tol, float(opts.max_step)
    )
    if status != kernels.STATUS_OK:
        raise NumericalError(_STATUS_MESSAGES[status].format(t=t_stat))
    states = np.maximum(out[:, :size], 0.0)
    return Trajectory(
        times=times,
        states=states,
        model=model,
        integral_I=float(y_end[size]),
        integral_u=float(y_end[size + 1]),
        stats={"accepted": int(n_acc), "rejected": int(n_rej)},
    )


def integrate_fixed(model: str, p, x0, t_end: float, h: float = 0.01, stride: float = 1.0,
                    schedule=None) -> Trajectory:
    """Classical RK4 at step ``h``: the oracle the adaptive path is checked against."""
    mode = _mode(model, p)
    size = 5 if model == SVERIRS else 4
    x0 = np.asarray(x0, dtype=float)
    _check_initial(x0, p, size)
    breaks, values = _schedule_arrays(model, p, t_end, schedule)
    times = output_times(t_end, stride)
    y0 = np.concatenate([x0, [0.0, 0.0]])
    out = kernels.rk4_solve(mode, theta(p), y0, breaks, values, times, h)
    return Trajectory(times, out[:, :size].copy(), model,
                      integral_I=float(out[-1, size]), integral_u=float(out[-1, size + 1]))


def conservation_drift(traj: Trajectory, n: float) -> float:
    """Largest deviation of the compartment total from ``n`` over the samples."""
    return float(np.max(np.abs(traj.states.sum(axis=1) - n)))


def distance_series(traj: Trajectory, target) -> np.ndarray:
    """``(t, |x(t) - target|)`` rows, Euclidean distance."""
    target = np.asarray(target, dtype=float)
    if target.shape != traj.states.shape[1:]:
        raise ValueError("target dimension does not match trajectory")
    d = np.linalg.norm(traj.states - target, axis=1)
    return np.column_stack([traj.times, d])


def write_distance_csv(series: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("t,distance\n")
        for t, d in series:
            fh.write(f"{t:.17g},{d:.17g}\n")


def s0_family(n: float = 100.0, model: str = SERIRS,
                s0_values: Optional[list] = None) -> list[np.ndarray]:
    """Initial states ``(S0, (n - S0)/2, (n - S0)/2, 0[, 0])`` for S0 = 10, ..., 90 (n = 100)."""
    if s0_values is None:
        s0_values = [n * k / 10 for k in range(1, 10)]
    out = []
    for s0 in s0_values:
        x = [s0, (n - s0) / 2, (n - s0) / 2, 0.0]
        if model == SVERIRS:
            x.append(0.0)
        out.append(np.array(x))
    return out
