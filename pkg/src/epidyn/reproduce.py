"""Reference results recomputed from the bundled presets and compared with stored values."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config as cfgmod
from .control import ControlProblem, optimize
from .equilibria import dfe, endemic, endemic_sverirs_closed, primary_endemic
from .reproduction import critical_phi, herd_threshold, r0
from .simulate import IntegrationOptions, s0_family, integrate
from .stability import stability_at
from .sweep import SweepSpec, find_threshold


@dataclass(frozen=True)
class Check:
    name: str
    expected: tuple  # flat tuple of reference numbers
    tol: float
    compute: Callable[[], tuple]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    got: tuple
    expected: tuple
    tol: float
    seconds: float
    error: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if self.error:
            return f"{tag} {self.name}: {self.error}"
        got = ", ".join(f"{v:.6g}" for v in self.got)
        exp = ", ".join(f"{v:.6g}" for v in self.expected)
        return f"{tag} {self.name}: got ({got}) expected ({exp}) tol {self.tol:g} [{self.seconds:.2f}s]"


def _params(preset: str, **overrides):
    cfg = cfgmod.load(preset=preset)
    if overrides:
        cfg = cfgmod.apply_overrides(cfg, [f"{k}={v!r}" for k, v in overrides.items()])
    return cfg.build_params(allow_zero_phi=True)


def _eigs(p, which: str) -> tuple:
    eq = dfe(p) if which == "dfe" else primary_endemic(endemic(p))
    ev = stability_at(p, eq).eigenvalues
    return tuple(float(v) for z in ev for v in (z.real, z.imag))


def _s0_family_terminal_gap() -> tuple:
    p = _params("example1")
    target = primary_endemic(endemic(p)).point
    gaps = [np.max(np.abs(integrate("serirs", p, x0, IntegrationOptions(t_end=3650.0)).states[-1] - target))
            for x0 in s0_family(p.n)]
    return (float(max(gaps)),)


def _control_fraction_at_max(cost: str) -> tuple:
    cfg = cfgmod.load(preset="control_j2")
    o = cfg.options
    p = cfg.build_params(allow_zero_phi=True)
    prob = ControlProblem(p, o["x0"], o["horizon"], o["u_min"], o["u_max"], cost, int(o["intervals"]))
    sol = optimize(prob, seed=int(o.get("seed", 0)))
    v = sol.schedule.values
    return (float(np.mean(np.abs(v - prob.u_max) <= 0.05 * prob.u_max)),)


def _j4_profile() -> tuple:
    cfg = cfgmod.load(preset="control_j4")
    o = cfg.options
    p = cfg.build_params(allow_zero_phi=True)
    prob = ControlProblem(p, o["x0"], o["horizon"], o["u_min"], o["u_max"], "J4", int(o["intervals"]))
    v = optimize(prob, seed=int(o.get("seed", 0))).schedule.values
    half = len(v) // 2
    return (float(np.mean(v[:half]) / prob.u_max), float(v[-1] / prob.u_max))


def _sweep_threshold(preset: str) -> tuple:
    cfg = cfgmod.load(preset=preset)
    p = cfg.build_params()
    o = cfg.options
    spec = SweepSpec(p, o["name"], grid_values(o["grid"]))
    th = find_threshold(spec, o.get("predicate", "r0_below_1"))
    return (th.value,)


def grid_values(grid) -> list:
    """Grid option: an explicit list, or ``{start, stop, num}`` for an even spacing."""
    if isinstance(grid, dict):
        try:
            start, stop, num = float(grid["start"]), float(grid["stop"]), int(grid["num"])
        except (KeyError, TypeError, ValueError):
            raise cfgmod.ConfigError("grid object needs numeric start, stop and num") from None
        return np.linspace(start, stop, num).tolist()
    if isinstance(grid, list):
        return [float(v) for v in grid]
    raise cfgmod.ConfigError("grid must be a list or {start, stop, num}")


def _serirs_r0s() -> tuple:
    return tuple(r0(_params(name)) for name in ("example1", "example2", "example3"))


def _herd_and_immunity() -> tuple:
    p = _params("vax_endemic")
    pt = primary_endemic(endemic(p)).point
    return (herd_threshold(r0(p)), (pt[3] + pt[4]) / p.n, pt[1], pt[2])


CHECKS: tuple[Check, ...] = (
    Check("r0 SE(R)IRS examples 1-3", (2.053, 1.027, 0.975), 1e-3, _serirs_r0s),
    Check("r0 SVE(R)IRS beta=1/5, 9/10", (0.719, 3.23), 1e-2,
          lambda: (r0(_params("vax_no_endemic")), r0(_params("vax_endemic")))),
    Check("endemic example 1", (49.0, 2.0, 2.0, 46.0), 0.5,
          lambda: tuple(primary_endemic(endemic(_params("example1"))).point)),
    Check("endemic example 2", (97.40, 0.12, 0.12, 2.35), 1e-2,
          lambda: tuple(primary_endemic(endemic(_params("example2"))).point)),
    Check("endemic p3 beta=9/10", (21.0, 3.0, 3.0, 66.0, 7.0), 0.5,
          lambda: tuple(endemic_sverirs_closed(_params("vax_endemic"))[1].point)),
    Check("p2 irrelevant beta=9/10", (0.0,), 0.0,
          lambda: (float(endemic_sverirs_closed(_params("vax_endemic"))[0].relevant),)),
    # eigenvalues as (re, im) pairs sorted by real part
    Check("eigenvalues M example 1", (-0.340, 0.0, -0.010, -0.031, -0.010, 0.031), 1e-3,
          lambda: _eigs(_params("example1"), "endemic")),
    Check("eigenvalues N example 3", (-0.336, 0.0, -0.011, 0.0, -0.002, 0.0), 1e-3,
          lambda: _eigs(_params("example3"), "dfe")),
    Check("eigenvalues p3 beta=9/10", (-0.345, 0.0, -0.020, -0.053, -0.020, 0.053, -0.009, 0.0), 1e-3,
          lambda: _eigs(_params("vax_endemic"), "endemic")),
    Check("critical phi beta=0.2", (0.000165,), 1e-6, lambda: (critical_phi(_params("phi_sweep")).phi,)),
    Check("critical phi beta=0.2 by sweep", (0.000165,), 1e-6, lambda: _sweep_threshold("phi_sweep")),
    Check("critical phi beta=0.3", (1 / 282,), 1e-5, lambda: (critical_phi(_params("eradication")).phi,)),
    Check("critical phi beta=0.3 by sweep", (1 / 282,), 1e-5, lambda: _sweep_threshold("eradication_sweep")),
    Check("herd threshold, immune fraction, E, I", (0.69, 0.73, 3.4, 3.4), 0.01,
          lambda: _herd_and_immunity()),
    Check("eradication endemic E+I", (0.73,), 0.02,
          lambda: (float(sum(primary_endemic(endemic(_params("eradication"))).point[1:3])),)),
    Check("S0 family terminal gap", (0.0,), 0.5, _s0_family_terminal_gap),
    Check("J2 fraction of horizon at u_max", (1.0,), 0.1, lambda: _control_fraction_at_max("J2")),
    Check("J4 first-half mean, final interval (x u_max)", (0.0, 1.0), 0.1, _j4_profile),
)

# per-check overrides where the stored reference carries a looser bound than ``tol``
_TOLS = {"herd threshold, immune fraction, E, I": (0.005, 0.01, 0.2, 0.2)}


def run_check(check: Check) -> CheckResult:
    t0 = time.perf_counter()
    try:
        got = tuple(float(v) for v in check.compute())
    except Exception as exc:  # report, never abort the run
        return CheckResult(check.name, False, (), check.expected, check.tol,
                           time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
    tols = _TOLS.get(check.name, (check.tol,) * len(check.expected))
    ok = len(got) == len(check.expected) and all(
        abs(g - e) <= t + 1e-12 for g, e, t in zip(got, check.expected, tols))
    return CheckResult(check.name, ok, got, check.expected, check.tol, time.perf_counter() - t0)


def run_all(names=None) -> list[CheckResult]:
    chosen = [c for c in CHECKS if names is None or c.name in names]
    return [run_check(c) for c in chosen]
