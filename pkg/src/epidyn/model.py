"""Parameter types and vector fields for the SE(R)IRS and SVE(R)IRS models.

States are plain float arrays in the canonical order ``(S, E, I, R)`` or
``(S, E, I, R, V)``; reduced states drop ``R`` (``(S, E, I)`` and
``(S, E, I, V)``). Time is in days and every rate is per day.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels


class EpidynError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(EpidynError, ValueError):
    """Parameters violate their documented ranges."""


class NumericalError(EpidynError, RuntimeError):
    """A numerical procedure failed (degeneracy, divergence, underflow)."""


SERIRS = "serirs"
SVERIRS = "sverirs"
MODELS = (SERIRS, SVERIRS)

COMPARTMENTS = {SERIRS: ("S", "E", "I", "R"), SVERIRS: ("S", "E", "I", "R", "V")}


@dataclass(frozen=True)
class SerirsParams:
    alpha: float  # relative infectiousness of E, in [0, 1]
    beta: float
    gamma: float
    delta: float
    sigma: float
    omega: float
    n: float = 100.0

    model = SERIRS

    def replace(self, **changes) -> "SerirsParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SverirsParams:
    base: SerirsParams
    phi: float
    psi: float
    rho: float  # vaccine leakiness; efficacy is 1 - rho

    model = SVERIRS

    def __getattr__(self, name):
        # forward alpha, beta, ... to the underlying SE(R)IRS rates
        if name in SERIRS_FIELDS:
            return getattr(self.base, name)
        raise AttributeError(name)

    def replace(self, **changes) -> "SverirsParams":
        base_changes = {k: changes.pop(k) for k in list(changes) if k in SERIRS_FIELDS}
        base = self.base.replace(**base_changes) if base_changes else self.base
        return dataclasses.replace(self, base=base, **changes)

    def as_dict(self) -> dict:
        d = self.base.as_dict()
        d.update(phi=self.phi, psi=self.psi, rho=self.rho)
        return d


Params = Union[SerirsParams, SverirsParams]

SERIRS_FIELDS = tuple(f.name for f in dataclasses.fields(SerirsParams))
SVERIRS_FIELDS = SERIRS_FIELDS + ("phi", "psi", "rho")


def make_params(model: str, values: dict) -> Params:
    """Build a parameter object from spelled-out names.

    Raises ``ParameterError`` on unknown or missing names.
    """
    if model not in MODELS:
        raise ParameterError(f"unknown model {model!r}; expected one of {MODELS}")
    allowed = SERIRS_FIELDS if model == SERIRS else SVERIRS_FIELDS
    unknown = sorted(set(values) - set(allowed))
    if unknown:
        raise ParameterError(f"unknown parameter(s) for {model}: {', '.join(unknown)}")
    required = [f for f in allowed if f != "n"]
    missing = [f for f in required if f not in values]
    if missing:
        raise ParameterError(f"missing parameter(s) for {model}: {', '.join(missing)}")
    base = SerirsParams(**{k: float(values[k]) for k in SERIRS_FIELDS if k in values})
    if model == SERIRS:
        return base
    return SverirsParams(base, float(values["phi"]), float(values["psi"]), float(values["rho"]))


def validate_params(p: Params, allow_zero_phi: bool = False) -> list[str]:
    """Return every violated range constraint; an empty list means valid.

    ``allow_zero_phi`` relaxes ``phi > 0`` to ``phi >= 0`` for control
    contexts, where phi is a control value rather than a fixed rate.
    """
    b = p.base if isinstance(p, SverirsParams) else p
    problems = []
    for name in SVERIRS_FIELDS if isinstance(p, SverirsParams) else SERIRS_FIELDS:
        v = getattr(p, name)
        if not np.isfinite(v):
            problems.append(f"{name} is not finite")
    if problems:
        return problems
    if not 0.0 <= b.alpha <= 1.0:
        problems.append("alpha out of [0,1]")
    if b.beta < 0.0:
        problems.append("beta must be >= 0")
    for name in ("gamma", "sigma", "omega", "n"):
        if getattr(b, name) <= 0.0:
            problems.append(f"{name} must be > 0")
    if b.delta < 0.0:
        problems.append("delta must be >= 0")
    if isinstance(p, SverirsParams):
        if not 0.0 <= p.rho <= 1.0:
            problems.append("rho out of [0,1]")
        if allow_zero_phi:
            if p.phi < 0.0:
                problems.append("phi must be >= 0")
        elif p.phi <= 0.0:
            problems.append("phi must be > 0")
        if p.psi <= 0.0:
            problems.append("psi must be > 0")
    return problems


def require_valid(p: Params, allow_zero_phi: bool = False) -> None:
    problems = validate_params(p, allow_zero_phi=allow_zero_phi)
    if problems:
        raise ParameterError("invalid parameters: " + "; ".join(problems))


def _rates(b: SerirsParams):
    return b.alpha, b.beta, b.gamma, b.delta, b.sigma, b.omega, b.n


def _as_state(x, size: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (size,):
        raise ValueError(f"expected a state of length {size}, got shape {x.shape}")
    return x


def serirs_rhs(x, p: SerirsParams) -> np.ndarray:
    """Time derivative of ``(S, E, I, R)``."""
    return kernels.serirs_rhs(_as_state(x, 4), *_rates(p))


def serirs_reduced_rhs(x, p: SerirsParams) -> np.ndarray:
    """Time derivative of ``(S, E, I)`` with ``R = n - S - E - I`` eliminated."""
    return kernels.serirs_reduced_rhs(_as_state(x, 3), *_rates(p))


def sverirs_rhs(x, p: SverirsParams) -> np.ndarray:
    """Time derivative of ``(S, E, I, R, V)``."""
    return kernels.sverirs_rhs(_as_state(x, 5), *_rates(p.base), p.phi, p.psi, p.rho)


def sverirs_reduced_rhs(x, p: SverirsParams) -> np.ndarray:
    """Time derivative of ``(S, E, I, V)`` with ``R = n - S - E - I - V`` eliminated."""
    return kernels.sverirs_reduced_rhs(_as_state(x, 4), *_rates(p.base), p.phi, p.psi, p.rho)


def rhs(x, p: Params) -> np.ndarray:
    if isinstance(p, SverirsParams):
        return sverirs_rhs(x, p)
    return serirs_rhs(x, p)


def reduced_rhs(x, p: Params) -> np.ndarray:
    if isinstance(p, SverirsParams):
        return sverirs_reduced_rhs(x, p)
    return serirs_reduced_rhs(x, p)


def recover_full(x, n: float) -> np.ndarray:
    """Lift a reduced state back to the full ordering by filling ``R``.

    >>> recover_full([21.0, 3.0, 3.0, 7.0], 100.0)
    array([21.,  3.,  3., 66.,  7.])
    """
    x = np.asarray(x, dtype=float)
    r = n - x.sum()
    if x.shape == (3,):
        return np.array([x[0], x[1], x[2], r])
    if x.shape == (4,):
        return np.array([x[0], x[1], x[2], r, x[3]])
    raise ValueError(f"reduced state must have 3 or 4 components, got {x.shape}")


def reduce_state(x) -> np.ndarray:
    """Drop ``R`` from a full state."""
    x = np.asarray(x, dtype=float)
    if x.shape == (4,):
        return x[:3].copy()
    if x.shape == (5,):
        return np.array([x[0], x[1], x[2], x[4]])
    raise ValueError(f"full state must have 4 or 5 components, got {x.shape}")


def theta(p: Params) -> np.ndarray:
    """Pack rates into the flat array layout the kernels expect."""
    b = p.base if isinstance(p, SverirsParams) else p
    psi = p.psi if isinstance(p, SverirsParams) else 0.0
    rho = p.rho if isinstance(p, SverirsParams) else 0.0
    return np.array([b.alpha, b.beta, b.gamma, b.delta, b.sigma, b.omega, b.n, psi, rho])
