"""Vaccination rate as a control: piecewise-constant schedules and their optimisation.

The drift is the SVE(R)IRS field with phi = 0; the control field is
``u (-S, 0, 0, 0, S)``. Costs over a horizon T:

    J1 = I(T)            J2 = int I dt
    J3 = int (I + u) dt  J4 = I(T) + int u dt
    J5 = I at the endemic point for the terminal rate (experimental)

Gradients come from forward sensitivity equations integrated alongside the
state, one augmented solve per gradient. Central finite differences are kept
as an independent check (:func:`gradient_check`) and as the fallback for J5.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .model import NumericalError, SverirsParams, require_valid, sverirs_rhs, theta
from .simulate import IntegrationOptions, Trajectory, integrate

log = logging.getLogger(__name__)

COSTS = ("J1", "J2", "J3", "J4", "J5")
DEFAULT_U_MAX = 1.0 / 360.0


@dataclass(frozen=True)
class ControlSchedule:
    breakpoints: np.ndarray  # N + 1 increasing times, first 0, last T
    values: np.ndarray  # N control levels

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or v.ndim != 1 or b.shape[0] != v.shape[0] + 1:
            raise ValueError("need N + 1 breakpoints for N values")
        if b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, horizon: float, values) -> "ControlSchedule":
        values = np.asarray(values, dtype=float)
        return cls(np.linspace(0.0, horizon, values.shape[0] + 1), values)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t_start,t_end,u\n")
            for a, b, u in zip(self.breakpoints[:-1], self.breakpoints[1:], self.values):
                fh.write(f"{a:.17g},{b:.17g},{u:.17g}\n")

    def as_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class ControlProblem:
    params: SverirsParams  # phi is ignored
    x0: np.ndarray
    horizon: float = 1825.0
    u_min: float = 0.0
    u_max: float = DEFAULT_U_MAX
    cost: str = "J2"
    intervals: int = 24
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.cost not in COSTS:
            raise ValueError(f"unknown cost {self.cost!r}; expected one of {COSTS}")
        if self.u_min < 0 or self.u_max < self.u_min:
            raise ValueError("bounds must satisfy 0 <= u_min <= u_max")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.intervals < 1:
            raise ValueError("need at least one control interval")
        if self.x0.shape != (5,):
            raise ValueError("x0 must be a full (S, E, I, R, V) state")
        require_valid(self.params, allow_zero_phi=True)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.intervals + 1)

    def schedule(self, values) -> ControlSchedule:
        return ControlSchedule(self.breakpoints, np.asarray(values, dtype=float))

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "x0": self.x0.tolist(),
            "horizon": self.horizon,
            "u_min": self.u_min,
            "u_max": self.u_max,
            "cost": self.cost,
            "intervals": self.intervals,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
        }


@dataclass
class ControlSolution:
    schedule: ControlSchedule
    cost: float
    trajectory: Trajectory
    iterations: int
    converged: bool
    history: list = field(default_factory=list)  # cost after each accepted iteration
    projected_gradient_norm: float = np.nan
    starts: list = field(default_factory=list)  # (label, final cost, converged)


def controlled_rhs(x, p: SverirsParams, u: float) -> np.ndarray:
    """Drift plus ``u`` times the control field."""
    if u < 0:
        raise ValueError("control must be nonnegative")
    return sverirs_rhs(x, p.replace(phi=u))


def _options(prob: ControlProblem, stride: Optional[float] = None) -> IntegrationOptions:
    return IntegrationOptions(t_end=prob.horizon, stride=stride or prob.horizon,
                              rel_tol=prob.rel_tol, abs_tol=prob.abs_tol)


def _cost_from(prob: ControlProblem, traj: Trajectory, sched: ControlSchedule) -> float:
    I_T = float(traj.column("I")[-1])
    if prob.cost == "J1":
        return I_T
    if prob.cost == "J2":
        return traj.integral_I
    if prob.cost == "J3":
        return traj.integral_I + traj.integral_u
    if prob.cost == "J4":
        return I_T + traj.integral_u
    return endemic_I_cost(prob.params, float(sched.values[-1]))


def endemic_I_cost(p: SverirsParams, u: float) -> float:
    """Symptomatic count at the relevant endemic point for a constant rate ``u``.

    Zero when no relevant endemic point exists (the disease dies out).
    Experimental.
    """
    from .equilibria import endemic_serirs, endemic_sverirs, primary_endemic
    from .reproduction import r0_serirs, r0_sverirs

    if u == 0.0:
        # no vaccination: V = 0 and the point is the unvaccinated one
        if r0_serirs(p.base) <= 1.0:
            return 0.0
        return float(endemic_serirs(p.base).point[2])
    q = p.replace(phi=u)
    if r0_sverirs(q) <= 1.0:
        return 0.0
    eq = primary_endemic(endemic_sverirs(q))
    if eq is None or not eq.relevant:
        return 0.0
    return float(eq.point[2])


def simulate_schedule(prob: ControlProblem, sched: ControlSchedule,
                      stride: Optional[float] = None) -> Trajectory:
    return integrate("sverirs", prob.params, prob.x0, _options(prob, stride), schedule=sched)


def evaluate_cost(prob: ControlProblem, sched: ControlSchedule) -> float:
    """Cost of ``sched``; integrals are carried as extra states during the solve."""
    if abs(sched.horizon - prob.horizon) > 1e-9 * prob.horizon:
        raise ValueError("schedule does not span the problem horizon")
    return _cost_from(prob, simulate_schedule(prob, sched), sched)


def cost_gradient(prob: ControlProblem, values) -> tuple[float, np.ndarray]:
    """Cost and its gradient in the interval values, by forward sensitivities."""
    if prob.cost == "J5":
        raise ValueError("J5 has no sensitivity gradient; use finite differences")
    values = np.asarray(values, dtype=float)
    N = values.shape[0]
    y0 = np.zeros(7 + 6 * N)
    y0[:5] = prob.x0
    breaks = prob.breakpoints
    out, y, status, t_stat, _, _ = kernels.dopri_solve(
        kernels.MODE_SVERIRS_SENS, theta(prob.params), y0, breaks, values,
        np.array([prob.horizon]), prob.rel_tol, prob.abs_tol, np.inf)
    if status != kernels.STATUS_OK:
        raise NumericalError(f"sensitivity solve failed (status {status}) at t={t_stat:.6g}")
    dI_T = y[7 + 2: 7 + 5 * N: 5]
    dInt_I = y[7 + 5 * N:]
    dInt_u = np.diff(breaks)
    if prob.cost == "J1":
        return float(y[2]), dI_T.copy()
    if prob.cost == "J2":
        return float(y[5]), dInt_I.copy()
    if prob.cost == "J3":
        return float(y[5] + y[6]), dInt_I + dInt_u
    return float(y[2] + y[6]), dI_T + dInt_u


def fd_gradient(prob: ControlProblem, values, step: float, lo: Optional[float] = None,
                hi: Optional[float] = None) -> np.ndarray:
    """Central differences of :func:`evaluate_cost`, one-sided where a bound blocks."""
    values = np.asarray(values, dtype=float)
    lo = -np.inf if lo is None else lo
    hi = np.inf if hi is None else hi
    g = np.empty_like(values)
    for k in range(values.shape[0]):
        up, dn = values.copy(), values.copy()
        up[k] = min(values[k] + step, hi)
        dn[k] = max(values[k] - step, lo)
        if up[k] == dn[k]:
            g[k] = 0.0
            continue
        g[k] = (evaluate_cost(prob, prob.schedule(up)) - evaluate_cost(prob, prob.schedule(dn))) / (
            up[k] - dn[k])
    return g


def gradient_check(prob: ControlProblem, sched: ControlSchedule, rel_step: float = 1e-6) -> float:
    """Max deviation of the sensitivity gradient from central differences.

    Differences use step ``rel_step * u_max`` at tightened tolerances; the
    deviation is normalised by the largest finite-difference component.
    """
    tight = ControlProblem(prob.params, prob.x0, prob.horizon, prob.u_min, prob.u_max, prob.cost,
                           sched.values.shape[0], rel_tol=1e-12, abs_tol=1e-14)
    _, g = cost_gradient(tight, sched.values)
    fd = fd_gradient(tight, sched.values, rel_step * prob.u_max)
    scale = float(np.max(np.abs(fd)))
    if scale == 0.0:
        return float(np.max(np.abs(g)))
    return float(np.max(np.abs(g - fd)) / scale)


@dataclass
class _Run:
    values: np.ndarray
    cost: float
    iterations: int
    converged: bool
    history: list
    pg_norm: float


def _descend(prob: ControlProblem, z0: np.ndarray, max_iter: int, gtol: float,
             use_fd: bool) -> _Run:
    lo, width = prob.u_min, prob.u_max - prob.u_min

    def cost_of(z):
        return evaluate_cost(prob, prob.schedule(lo + width * z))

    def grad_of(z):
        u = lo + width * z
        if use_fd:
            g = fd_gradient(prob, u, 1e-6 * width, prob.u_min, prob.u_max)
        else:
            _, g = cost_gradient(prob, u)
        return g * width

    z = np.clip(z0, 0.0, 1.0)
    J = cost_of(z)
    history = [J]
    t = None
    pg = np.inf
    it = 0
    converged = False
    while True:
        g = grad_of(z)
        pg = float(np.max(np.abs(z - np.clip(z - g, 0.0, 1.0))))
        if pg <= gtol:
            converged = True
            break
        if it >= max_iter:
            break
        gmax = float(np.max(np.abs(g)))
        t = 1.0 / gmax if t is None else min(2.0 * t, 1e6 / gmax)
        accepted = False
        for _ in range(40):
            z_new = np.clip(z - t * g, 0.0, 1.0)
            J_new = cost_of(z_new)
            if J_new <= J + 1e-4 * float(g @ (z_new - z)) and J_new <= J:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            log.debug("line search failed after %d iterations (pg=%.3e)", it, pg)
            break
        assert np.all((z_new >= 0.0) & (z_new <= 1.0))
        z, J = z_new, J_new
        history.append(J)
        it += 1
    return _Run(lo + width * z, J, it, converged, history, pg)


def optimize(prob: ControlProblem, max_iter: int = 500, gtol: float = 1e-6, n_random: int = 5,
             seed: int = 0, gradient: str = "sensitivity") -> ControlSolution:
    """Projected-gradient descent over interval values in ``[u_min, u_max]^N``.

    Values are scaled to the unit box; convergence is ``max |z - P(z - g)| <=
    gtol`` in those scaled coordinates. Starts from both constant extremes and
    ``n_random`` seeded random schedules and returns the best end point.
    """
    N = prob.intervals
    if prob.u_max == prob.u_min:
        sched = prob.schedule(np.full(N, prob.u_min))
        traj = simulate_schedule(prob, sched)
        cost = _cost_from(prob, traj, sched)
        return ControlSolution(sched, cost, traj, 0, True, [cost], 0.0, [("only", cost, True)])
    use_fd = gradient == "fd" or prob.cost == "J5"
    rng = np.random.default_rng(seed)
    starts = [("u_min", np.zeros(N)), ("u_max", np.ones(N))]
    starts += [(f"random{k}", rng.uniform(0.0, 1.0, N)) for k in range(n_random)]
    best: Optional[_Run] = None
    summary = []
    failures = []
    for label, z0 in starts:
        try:
            run = _descend(prob, z0, max_iter, gtol, use_fd)
        except NumericalError as exc:
            failures.append(f"{label}: {exc}")
            continue
        summary.append((label, run.cost, run.converged))
        log.info("start %s: cost %.6g after %d iterations (converged=%s)", label, run.cost,
                 run.iterations, run.converged)
        if best is None or run.cost < best.cost:
            best = run
    if best is None:
        raise NumericalError("every start failed to integrate: " + "; ".join(failures))
    sched = prob.schedule(best.values)
    traj = simulate_schedule(prob, sched, stride=1.0)
    cost = evaluate_cost(prob, sched)
    return ControlSolution(sched, cost, traj, best.iterations, best.converged, best.history,
                           best.pg_norm, summary)
