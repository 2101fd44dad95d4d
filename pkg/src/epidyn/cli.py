"""``epidyn`` command line: config ingestion, dispatch and report emission.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
(including a failed ``reproduce`` comparison).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import config as cfgmod
from .config import ConfigError, RunConfig
from .control import ControlProblem, optimize
from .equilibria import dfe, endemic, endemic_sverirs_closed, primary_endemic
from .model import SVERIRS, EpidynError, NumericalError, ParameterError
from .reproduce import grid_values, run_all
from .reproduction import critical_phi, herd_threshold, r0
from .simulate import (
    IntegrationOptions,
    distance_series,
    s0_family,
    integrate,
    write_distance_csv,
)
from .stability import stability_at
from .sweep import PREDICATES, SweepSpec, find_threshold, run_sweep, sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = ("r0", "equilibria", "stability", "simulate", "sweep", "optimize", "reproduce")
_DEFAULT_FORMAT = {"r0": "text", "equilibria": "json", "stability": "json", "simulate": "csv",
                   "sweep": "csv", "optimize": "json"}


class UsageError(ConfigError):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(doc: dict) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def _report(cfg: RunConfig, command: str, body: dict) -> dict:
    echoed = cfg.as_dict()
    echoed["command"] = command
    return {"config": echoed, **body}


def _fmt3(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if abs(x) >= 1e-3 or x == 0 else f"{x:.3g}"


# ---------------------------------------------------------------- commands

def cmd_r0(cfg: RunConfig, args) -> int:
    p = cfg.build_params()
    value = r0(p)
    herd = herd_threshold(value) if value > 0 else None
    crit = critical_phi(p) if cfg.model == SVERIRS else None
    if args.format == "json":
        body = {"r0": value, "herd_threshold": herd}
        if crit is not None:
            body["critical_phi"] = crit.phi
            if crit.reason:
                body["critical_phi_reason"] = crit.reason
        _emit(_json(_report(cfg, "r0", body)), args.out)
        return EXIT_OK
    parts = [f"r0={_fmt3(value)}", f"herd_threshold={_fmt3(herd) if herd is not None else 'n/a'}"]
    if crit is not None:
        parts.append(f"critical_phi={crit.phi:.6g}" if crit else "critical_phi=n/a")
    _emit(" ".join(parts) + "\n", args.out)
    return EXIT_OK


def cmd_equilibria(cfg: RunConfig, args) -> int:
    p = cfg.build_params()
    free = dfe(p)
    cands = endemic(p)
    body = {"r0": r0(p), "dfe": free.as_dict(), "endemic": [c.as_dict() for c in cands]}
    if cfg.model == SVERIRS and 0.0 < p.rho < 1.0:
        try:
            body["endemic_closed_form"] = [c.as_dict() for c in endemic_sverirs_closed(p)]
        except NumericalError as exc:
            body["endemic_closed_form_error"] = str(exc)
    body["endemic_relevant"] = any(c.kind == "endemic" and c.relevant for c in cands)
    if args.format == "text":
        lines = [f"r0={_fmt3(body['r0'])}", "dfe=(" + ", ".join(_fmt3(v) for v in free.point) + ")"]
        for c in cands:
            lines.append(f"{c.label or 'endemic'}=(" + ", ".join(_fmt3(v) for v in c.point)
                         + f") endemic_relevant={str(c.relevant).lower()}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_json(_report(cfg, "equilibria", body)), args.out)
    return EXIT_OK


def _stability_entry(p, eq) -> dict:
    d = {"equilibrium": eq.as_dict()}
    try:
        d["stability"] = stability_at(p, eq).as_dict()
    except (EpidynError, ValueError) as exc:
        d["stability_error"] = str(exc)
    return d


def cmd_stability(cfg: RunConfig, args) -> int:
    p = cfg.build_params()
    entries = {"dfe": _stability_entry(p, dfe(p)),
               "endemic": [_stability_entry(p, c) for c in endemic(p)]}
    if args.format == "text":
        lines = []
        for name, e in [("dfe", entries["dfe"])] + [
                (e["equilibrium"].get("label") or "endemic", e) for e in entries["endemic"]]:
            st = e.get("stability")
            if st is None:
                lines.append(f"{name}: {e['stability_error']}")
                continue
            eig = ", ".join(_complex3(re, im) for re, im in st["eigenvalues"])
            lines.append(f"{name}: {st['classification']} eigenvalues [{eig}]")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_json(_report(cfg, "stability", {"r0": r0(p), **entries})), args.out)
    return EXIT_OK


def _complex3(re: float, im: float) -> str:
    if abs(im) <= 1e-12:
        return f"{re:.3f}"
    return f"{re:.3f}{'+' if im > 0 else '-'}{abs(im):.3f}i"


def _initial_states(cfg: RunConfig, p) -> list[np.ndarray]:
    init = cfg.options.get("initial")
    if init is None:
        raise ConfigError("simulate needs options.initial (a state, a list of states, or \"fig1\")")
    if init == "s0_family":
        return s0_family(p.n, cfg.model)
    arr = np.asarray(init, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ConfigError("options.initial must be a state or a list of states")
    return list(arr)


def _suffixed(path: Path, k: Optional[int], tag: str = "") -> Path:
    stem = path.stem + (f"_{k}" if k is not None else "") + tag
    return path.with_name(stem + (path.suffix or ".csv"))


def cmd_simulate(cfg: RunConfig, args) -> int:
    p = cfg.build_params()
    o = cfg.options
    try:
        opts = IntegrationOptions(t_end=float(o.get("t_end", 3650.0)), stride=float(o.get("stride", 1.0)),
                                  rel_tol=float(o.get("rel_tol", 1e-6)), abs_tol=float(o.get("abs_tol", 1e-8)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    states = _initial_states(cfg, p)
    target_kind = o.get("distance_to")
    target = None
    if target_kind == "endemic":
        target = primary_endemic(endemic(p)).point
    elif target_kind == "dfe":
        target = dfe(p).point
    elif target_kind is not None:
        raise ConfigError("options.distance_to must be \"endemic\" or \"dfe\"")
    if (len(states) > 1 or target is not None) and not args.out:
        raise UsageError("--out is required when writing several CSV files")
    for k, x0 in enumerate(states, start=1):
        try:
            traj = integrate(cfg.model, p, x0, opts)
        except ValueError as exc:
            if isinstance(exc, NumericalError):
                raise
            raise ConfigError(str(exc)) from None
        if not args.out:
            buf = io.StringIO()
            traj.to_csv(buf)
            sys.stdout.write(buf.getvalue())
            continue
        idx = k if len(states) > 1 else None
        path = _suffixed(Path(args.out), idx)
        traj.to_csv(path)
        if target is not None:
            write_distance_csv(distance_series(traj, target), _suffixed(Path(args.out), idx, "_distance"))
    return EXIT_OK


def _sweep_spec(cfg: RunConfig) -> SweepSpec:
    o = cfg.options
    if "name" not in o or "grid" not in o:
        raise ConfigError("sweep needs options.name and options.grid")
    grid = grid_values(o["grid"])
    if not grid:
        raise UsageError("sweep grid is empty")
    try:
        return SweepSpec(cfg.build_params(), str(o["name"]), grid)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None


def cmd_sweep(cfg: RunConfig, args) -> int:
    spec = _sweep_spec(cfg)
    rows = run_sweep(spec)
    pred = cfg.options.get("predicate")
    threshold = None
    if pred is not None:
        if pred not in PREDICATES:
            raise ConfigError(f"unknown predicate {pred!r}; expected one of {sorted(PREDICATES)}")
        threshold = find_threshold(spec, pred, rows=rows)
    if args.format == "json":
        buf = io.StringIO()
        sweep_csv(spec, rows, buf)
        body = {"csv": buf.getvalue(), "threshold": None if threshold is None else {
            "bracket": list(threshold.bracket), "value": threshold.value,
            "closed_form": threshold.closed_form, "discrepancy": threshold.discrepancy}}
        _emit(_json(_report(cfg, "sweep", body)), args.out)
        return EXIT_OK
    if args.out:
        sweep_csv(spec, rows, args.out)
    else:
        sweep_csv(spec, rows, sys.stdout)
    if pred is not None:
        if threshold is None:
            print(f"threshold: predicate {pred} does not change on the grid", file=sys.stderr)
        else:
            msg = (f"threshold: {spec.name} in [{threshold.bracket[0]:.6g}, {threshold.bracket[1]:.6g}]"
                   f" bisected to {threshold.value:.10g}")
            if threshold.closed_form is not None:
                msg += f" (closed form {threshold.closed_form:.10g})"
            print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    if cfg.model != SVERIRS:
        raise ConfigError("optimize needs the sverirs model")
    p = cfg.build_params(allow_zero_phi=True)
    o = cfg.options
    try:
        prob = ControlProblem(
            p, o.get("x0", [30.0, 5.0, 5.0, 10.0, 50.0]), float(o.get("horizon", 1825.0)),
            float(o.get("u_min", 0.0)), float(o.get("u_max", 1 / 360)), str(o.get("cost", "J2")),
            int(o.get("intervals", 24)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NumericalError):
            raise
        raise ConfigError(str(exc)) from None
    sol = optimize(prob, max_iter=int(o.get("max_iter", 500)), seed=int(o.get("seed", 0)),
                   gradient=str(o.get("gradient", "sensitivity")))
    body = {
        "problem": prob.as_dict(),
        "schedule": sol.schedule.as_dict(),
        "cost": sol.cost,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "projected_gradient_norm": sol.projected_gradient_norm,
        "starts": [{"start": s, "cost": c, "converged": ok} for s, c, ok in sol.starts],
        "terminal_state": sol.trajectory.states[-1].tolist(),
    }
    _emit(_json(_report(cfg, "optimize", body)), args.out)
    sched_out = args.schedule_out
    if sched_out is None and args.out:
        sched_out = str(Path(args.out).with_name(Path(args.out).stem + "_schedule.csv"))
    if sched_out:
        sol.schedule.to_csv(sched_out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    results = run_all()
    lines = [r.line() for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_NUMERICAL


HANDLERS = {"r0": cmd_r0, "equilibria": cmd_equilibria, "stability": cmd_stability,
            "simulate": cmd_simulate, "sweep": cmd_sweep, "optimize": cmd_optimize}


# ---------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epidyn", description="SE(R)IRS / SVE(R)IRS epidemic analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS[:-1]:
        sp = sub.add_parser(name, help=f"run the {name} analysis")
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="PATH", help="JSON run configuration (or a previous report)")
        src.add_argument("--preset", metavar="NAME", help="bundled configuration: " + ", ".join(cfgmod.preset_names()))
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="NAME=VALUE",
                        help="override a parameter, or options.KEY (repeatable)")
        sp.add_argument("--out", metavar="PATH", help="output file (stdout when omitted)")
        sp.add_argument("--format", choices=("json", "csv", "text"), default=None)
        if name == "optimize":
            sp.add_argument("--schedule-out", metavar="PATH", help="schedule CSV (default: <out>_schedule.csv)")
    rp = sub.add_parser("reproduce", help="recompute the reference examples and compare with stored values")
    rp.add_argument("--out", metavar="PATH")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "reproduce":
            return cmd_reproduce(args)
        if args.format is None:
            args.format = _DEFAULT_FORMAT[args.command]
        cfg = cfgmod.apply_overrides(cfgmod.load(args.config, args.preset), args.overrides)
        return HANDLERS[args.command](cfg, args)
    except NumericalError as exc:
        print(f"epidyn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (EpidynError, ValueError, KeyError, TypeError) as exc:
        print(f"epidyn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"epidyn: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
