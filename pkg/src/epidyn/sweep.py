"""One-parameter sweeps and threshold location by bisection."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .equilibria import Equilibrium, dfe, endemic, primary_endemic
from .model import (
    COMPARTMENTS,
    SERIRS_FIELDS,
    SVERIRS_FIELDS,
    EpidynError,
    NumericalError,
    ParameterError,
    SverirsParams,
    validate_params,
)
from .reproduction import critical_phi, r0, vaccine_factor
from .stability import stability_at


@dataclass(frozen=True)
class SweepSpec:
    base: object  # SerirsParams | SverirsParams
    name: str
    grid: tuple

    def __post_init__(self):
        grid = tuple(float(v) for v in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ParameterError("sweep grid is empty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ParameterError("sweep grid must be sorted")
        names = SVERIRS_FIELDS if isinstance(self.base, SverirsParams) else SERIRS_FIELDS
        if self.name not in names:
            raise ParameterError(f"{self.name!r} is not a parameter of {self.model}")

    @property
    def model(self) -> str:
        return self.base.model


@dataclass
class SweepRow:
    value: float
    r0: float = np.nan
    dfe_class: str = ""
    endemic: list = field(default_factory=list)  # list[Equilibrium]
    endemic_class: Optional[str] = None
    error: str = ""

    @property
    def primary(self) -> Optional[Equilibrium]:
        return primary_endemic(self.endemic)

    @property
    def endemic_relevant(self) -> bool:
        eq = self.primary
        return bool(eq is not None and eq.kind == "endemic" and eq.relevant)


def evaluate_row(base, name: str, value: float) -> SweepRow:
    """Everything the sweep reports for one parameter value. Never raises."""
    row = SweepRow(value)
    p = base.replace(**{name: value})
    problems = validate_params(p)
    if problems:
        row.error = "; ".join(problems)
        return row
    row.r0 = r0(p)
    try:
        row.dfe_class = stability_at(p, dfe(p)).classification
    except EpidynError as exc:
        row.dfe_class = f"ERROR:{exc}"
    try:
        row.endemic = endemic(p)
        eq = row.primary
        if eq is not None and eq.kind == "endemic" and eq.relevant:
            row.endemic_class = stability_at(p, eq).classification
    except (EpidynError, ZeroDivisionError, ValueError) as exc:
        row.error = str(exc)
    return row


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("EPIDYN_THREADS", "1")))
    except ValueError:
        return 1


def run_sweep(spec: SweepSpec, threads: Optional[int] = None) -> list[SweepRow]:
    """Evaluate every grid value independently; rows come back in grid order."""
    threads = threads or _threads()
    if threads == 1 or len(spec.grid) == 1:
        return [evaluate_row(spec.base, spec.name, v) for v in spec.grid]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda v: evaluate_row(spec.base, spec.name, v), spec.grid))


def sweep_csv(spec: SweepSpec, rows: list[SweepRow], path_or_file) -> None:
    comps = COMPARTMENTS[spec.model]
    header = ["value", "r0", "dfe_class", "endemic_relevant"] + [f"endemic_{c}" for c in comps] + [
        "endemic_class"]
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            out = [f"{row.value:.17g}", f"{row.r0:.17g}", row.dfe_class]
            eq = row.primary
            if row.error and eq is None:
                err = f"ERROR:{row.error}"
                out += [err] * (len(comps) + 1) + [err]
            else:
                out.append(str(row.endemic_relevant).lower())
                out += [f"{v:.17g}" for v in eq.point]
                out.append(row.endemic_class or "")
            w.writerow(out)
    finally:
        if own:
            fh.close()


PREDICATES: dict[str, Callable[[SweepRow], bool]] = {
    "r0_below_1": lambda row: row.r0 < 1.0,
    "r0_above_1": lambda row: row.r0 > 1.0,
    "endemic_relevant": lambda row: row.endemic_relevant,
    "dfe_stable": lambda row: row.dfe_class.startswith("stable"),
}


@dataclass(frozen=True)
class Threshold:
    bracket: tuple  # grid values straddling the flip
    value: float  # bisection estimate
    closed_form: Optional[float] = None

    @property
    def discrepancy(self) -> Optional[float]:
        if self.closed_form is None:
            return None
        return abs(self.value - self.closed_form)


def r0_crossing(base, name: str) -> Optional[float]:
    """Value of ``name`` where R0 = 1, when a closed form is known (phi, beta)."""
    if name == "phi" and isinstance(base, SverirsParams):
        return critical_phi(base).phi
    if name == "beta":
        b = base.base if isinstance(base, SverirsParams) else base
        factor = vaccine_factor(base.phi, base.psi, base.rho) if isinstance(base, SverirsParams) else 1.0
        return b.gamma * (b.delta + b.sigma) / ((b.alpha * b.gamma + b.sigma) * factor)
    return None


def find_threshold(spec: SweepSpec, predicate: Union[str, Callable[[SweepRow], bool]],
                   tol: float = 1e-10, rows: Optional[list] = None) -> Optional[Threshold]:
    """Bracket the single flip of ``predicate`` on the grid and bisect it to ``tol``.

    Returns None when the predicate never changes; raises when it changes more
    than once.
    """
    pred_name = predicate if isinstance(predicate, str) else None
    pred = PREDICATES[predicate] if isinstance(predicate, str) else predicate
    rows = rows if rows is not None else run_sweep(spec)
    flags = [bool(pred(r)) for r in rows]
    flips = [i for i in range(len(flags) - 1) if flags[i] != flags[i + 1]]
    if not flips:
        return None
    if len(flips) > 1:
        raise NumericalError("non-monotone predicate")
    i = flips[0]
    lo, hi = spec.grid[i], spec.grid[i + 1]
    f_lo = flags[i]
    a, b = lo, hi
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if bool(pred(evaluate_row(spec.base, spec.name, mid))) == f_lo:
            a = mid
        else:
            b = mid
    closed = None
    if pred_name in ("r0_below_1", "r0_above_1") or (
            pred_name == "endemic_relevant" and spec.model == "serirs"):
        closed = r0_crossing(spec.base, spec.name)
    return Threshold((lo, hi), 0.5 * (a + b), closed)
