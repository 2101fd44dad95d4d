"""Basic reproductive number, next-generation matrices and derived thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import NumericalError, SerirsParams, SverirsParams

# |R0 - 1| at or below this is reported as "threshold" rather than a side
THRESHOLD_TIE = 1e-12


@dataclass(frozen=True)
class NextGenPair:
    F: np.ndarray  # new-infection rates
    V: np.ndarray  # transition rates


def _contact_factor(b: SerirsParams) -> float:
    # R0 of the unvaccinated model; the vaccine multiplies it by (psi + rho phi) / (psi + phi)
    return (b.alpha * b.gamma + b.sigma) / (b.delta + b.sigma) * (b.beta / b.gamma)


def r0_serirs(p: SerirsParams) -> float:
    return _contact_factor(p)


def vaccine_factor(phi: float, psi: float, rho: float) -> float:
    return (psi + rho * phi) / (psi + phi)


def r0_sverirs(p: SverirsParams) -> float:
    return _contact_factor(p.base) * vaccine_factor(p.phi, p.psi, p.rho)


def r0(p) -> float:
    if isinstance(p, SverirsParams):
        return r0_sverirs(p)
    return r0_serirs(p)


def threshold_side(r0_value: float) -> str:
    """``"below"``, ``"above"`` or ``"threshold"`` relative to R0 = 1."""
    if abs(r0_value - 1.0) <= THRESHOLD_TIE:
        return "threshold"
    return "above" if r0_value > 1.0 else "below"


def build_nextgen_serirs(p: SerirsParams) -> NextGenPair:
    F = np.array([[p.alpha * p.beta, p.beta], [0.0, 0.0]])
    V = np.array([[p.sigma + p.delta, 0.0], [-p.sigma, p.gamma]])
    return NextGenPair(F, V)


def build_nextgen_sverirs(p: SverirsParams) -> NextGenPair:
    b = p.base
    susceptible_share = vaccine_factor(p.phi, p.psi, p.rho)
    F = np.array([[b.alpha * b.beta * susceptible_share, b.beta * susceptible_share], [0.0, 0.0]])
    V = np.array([[b.sigma + b.delta, 0.0], [-b.sigma, b.gamma]])
    return NextGenPair(F, V)


def next_generation_r0(pair: NextGenPair) -> float:
    """Spectral radius of ``F V^-1``, via a general eigensolver."""
    V = np.asarray(pair.V, dtype=float)
    F = np.asarray(pair.F, dtype=float)
    try:
        cond = np.linalg.cond(V)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError("transition matrix singular")
    K = F @ np.linalg.inv(V)
    return float(np.max(np.abs(np.linalg.eigvals(K))))


def herd_threshold(r0_value: float) -> float:
    """Immune fraction ``1 - 1/R0`` above which the disease does not invade.

    Negative for R0 < 1, where the notion is vacuous.
    """
    if r0_value <= 0.0:
        raise ValueError(f"herd threshold needs R0 > 0, got {r0_value}")
    return 1.0 - 1.0 / r0_value


@dataclass(frozen=True)
class CriticalPhi:
    """Vaccination rate at which R0 crosses 1, or the reason there is none.

    ``phi`` is None when no rate achieves R0 = 1; ``reason`` then says why.
    Vaccinating faster than ``phi`` gives R0 < 1.
    """

    phi: Optional[float]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.phi is not None


def critical_phi(p: SverirsParams) -> CriticalPhi:
    """Solve R0(phi) = 1 for phi, ignoring ``p.phi``.

    With C the unvaccinated R0, R0(phi) = C (psi + rho phi) / (psi + phi), so
    phi* = psi (C - 1) / (1 - C rho). This closed form is derived here by
    inverting the reproductive number; only numeric instances of it are
    published.
    """
    C = _contact_factor(p.base)
    if C <= 1.0:
        if C == 1.0:
            return CriticalPhi(0.0)
        return CriticalPhi(None, "R0 < 1 for every phi >= 0")
    if p.rho >= 1.0:
        return CriticalPhi(None, "vaccine cannot reduce R0 below C")
    if C * p.rho >= 1.0:
        return CriticalPhi(None, "R0 > 1 for every phi: leaky vaccine floor C*rho >= 1")
    return CriticalPhi(p.psi * (C - 1.0) / (1.0 - C * p.rho))
