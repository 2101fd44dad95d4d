"""Disease-free and endemic equilibria of both models.

The SVE(R)IRS endemic pair comes from a long closed form in which the two
candidates differ only in the sign of a square root. It is kept verbatim
(with two transcription fixes, noted inline) as an independent check on the
Newton path in :func:`endemic_sverirs_refine`.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Optional

import numpy as np

from . import kernels
from .model import (
    NumericalError,
    SERIRS,
    SVERIRS,
    SerirsParams,
    SverirsParams,
    recover_full,
    reduce_state,
    rhs,
    sverirs_reduced_rhs,
)
from .reproduction import THRESHOLD_TIE, r0_serirs

DISEASE_FREE = "disease-free"
ENDEMIC = "endemic"


@dataclass(frozen=True)
class Equilibrium:
    point: np.ndarray  # full state, canonical ordering
    kind: str  # DISEASE_FREE | ENDEMIC
    relevant: bool
    residual: float  # max |RHS| at point, per day
    label: str = ""
    iterations: int = 0

    @property
    def model(self) -> str:
        return SERIRS if self.point.shape == (4,) else SVERIRS

    def as_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "relevant": bool(self.relevant),
            "point": [float(v) for v in self.point],
            "residual": float(self.residual),
        }
        if self.label:
            d["label"] = self.label
        if self.iterations:
            d["iterations"] = self.iterations
        return d


def relevance(point) -> bool:
    """True iff every compartment is strictly positive."""
    return bool(np.all(np.asarray(point, dtype=float) > 0.0))


def _residual(point, p) -> float:
    return float(np.max(np.abs(rhs(point, p))))


def dfe_serirs(p: SerirsParams) -> Equilibrium:
    point = np.array([p.n, 0.0, 0.0, 0.0])
    return Equilibrium(point, DISEASE_FREE, True, _residual(point, p), label="dfe")


def epsilon(p: SerirsParams) -> float:
    """Composite rate fixing the endemic point; positive exactly when R0 > 1."""
    num = p.beta * (p.alpha * p.gamma + p.sigma) - p.gamma * (p.delta + p.sigma)
    den = p.sigma * p.omega + p.gamma * (p.delta + p.sigma + p.omega)
    return num / ((p.delta + p.sigma) * den)


def endemic_serirs(p: SerirsParams) -> Equilibrium:
    """Closed-form endemic point ``(n/R0) (1, w e, s w e / g, (s + d) e)``.

    Relevant (all coordinates positive) exactly when R0 > 1.
    """
    R0 = r0_serirs(p)
    if abs(R0 - 1.0) <= THRESHOLD_TIE:
        raise NumericalError("degenerate: endemic coincides with DFE")
    if R0 == 0.0:
        raise NumericalError("degenerate: R0 = 0 (beta = 0), no endemic point")
    eps = epsilon(p)
    scale = p.n / R0
    point = scale * np.array(
        [1.0, p.omega * eps, p.sigma * p.omega * eps / p.gamma, (p.sigma + p.delta) * eps]
    )
    if not np.all(np.isfinite(point)):
        raise NumericalError(f"endemic point overflows at R0 = {R0:.3g}")
    return Equilibrium(point, ENDEMIC, relevance(point), _residual(point, p), label="endemic")


def dfe_sverirs(p: SverirsParams) -> Equilibrium:
    total = p.phi + p.psi
    point = np.array([p.psi * p.n / total, 0.0, 0.0, 0.0, p.phi * p.n / total])
    return Equilibrium(point, DISEASE_FREE, True, _residual(point, p), label="p1")


def sverirs_radicand(p: SverirsParams) -> float:
    """Radicand ``Y`` shared by the two endemic candidates."""
    a, B, g, d, s, w, n = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega, p.n
    f, ps, r = p.phi, p.psi, p.rho
    K = a * g + s
    lin = g * (ps + f * r) * (d + s) + (ps + (-B + f) * r) * s * w + g * (ps + r * (-a * B + d + f + s)) * w
    quad = 4 * r * (-B * (ps + f * r) * s + g * (d * (f + ps) - a * B * (ps + f * r) + (f + ps) * s)) * w * (
        s * w + g * (d + s + w)
    )
    return B**2 * g**2 * n**2 * K**2 * (lin * lin - quad)


def _sverirs_closed_point(p: SverirsParams, root: float) -> np.ndarray:
    """Endemic candidate for a given value of the square root (+sqrt Y is p3)."""
    a, B, g, d, s, w, n = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega, p.n
    f, ps, r = p.phi, p.psi, p.rho
    K2 = (a * g + s) ** 2
    K = a * g + s
    D = s * w + g * (d + s + w)
    lead = B**2 * g * n * r * K2 * w

    S = (lead + B * g * n * K * (g * (ps + f * r) * (d + s) + (ps + f * r) * s * w
                                  + g * (ps + d * (-2 + r) + f * r + (-2 + r) * s) * w)
         - root) / (2 * B**2 * g * (-1 + r) * K2 * w)
    E = (lead + B * g * n * K * (-g * (ps + f * r) * (d + s)
                                  - ((ps + f * r) * s + g * (ps + r * (d + f + s))) * w)
         + root) / (2 * B**2 * r * K2 * D)
    I = s * (B * g * n * s**2 * (-g * (ps + f * r) - (ps + (-B + g + f) * r) * w)
             + a * B * g**3 * n * (-d * (ps + f * r) - (ps + (-a * B + d + f) * r) * w)
             + B * g**2 * n * s * (-((a * g + d) * (ps + f * r))
                                   - ((1 + a) * ps + (d + f + a * (-2 * B + g + f)) * r) * w)
             + root) / (2 * B**2 * g * r * K2 * D)
    R = -((d + s) * (-lead + B * g * n * K * (g * (ps + f * r) * (d + s) + (ps + f * r) * s * w
                                               + g * (ps + r * (d + f + s)) * w)
                     - root)) / (2 * B**2 * r * K2 * w * D)
    # Published V row carries "(delta + s)" for (delta + sigma) and flipped
    # signs on the bracket and root terms; this form satisfies S + rho V = (sigma + delta) / k.
    V = -(lead + B * g * n * K * (g * (ps + f * r) * (d + s) + (ps + f * r) * s * w
                                  + g * (ps - r * (d - f + s)) * w)
          - root) / (2 * B**2 * g * (-1 + r) * r * K2 * w)
    return np.array([S, E, I, R, V])


def endemic_sverirs_closed(p: SverirsParams) -> tuple[Equilibrium, Equilibrium]:
    """Both closed-form endemic candidates ``(p2, p3)``.

    Needs 0 < rho < 1 and a nonnegative radicand. Relevance is computed, never
    assumed, for either candidate.
    """
    if p.rho == 0.0:
        raise NumericalError("closed form undefined at rho=0, use numeric path")
    if p.rho == 1.0:
        raise NumericalError("closed form undefined at rho=1, use numeric path")
    if p.beta == 0.0:
        raise NumericalError("degenerate: beta = 0, no endemic point")
    Y = sverirs_radicand(p)
    if Y < 0.0:
        raise NumericalError("complex pair: no real endemic candidates")
    root = sqrt(Y)
    out = []
    for label, sgn in (("p2", -1.0), ("p3", 1.0)):
        point = _sverirs_closed_point(p, sgn * root)
        out.append(Equilibrium(point, ENDEMIC, relevance(point), _residual(point, p), label=label))
    return out[0], out[1]


def sverirs_closed_rational_part(p: SverirsParams) -> np.ndarray:
    """Closed form with the square root set to zero: the midpoint of p2 and p3."""
    return _sverirs_closed_point(p, 0.0)


def sverirs_reduced_jacobian(x, p: SverirsParams) -> np.ndarray:
    """Jacobian of the reduced ``(S, E, I, V)`` field at an arbitrary point."""
    full = recover_full(x, p.n)
    J = kernels.sverirs_jacobian(full, p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega,
                                 p.n, p.phi, p.psi, p.rho)
    keep = [0, 1, 2, 4]
    # R = n - S - E - I - V, so every reduced column picks up -dF/dR
    return J[np.ix_(keep, keep)] - J[keep, 3][:, None]


def endemic_sverirs_refine(
    p: SverirsParams,
    guess,
    max_iter: int = 200,
    tol: float = 1e-11,
    max_halvings: int = 8,
) -> Equilibrium:
    """Damped Newton on the reduced SVE(R)IRS field.

    Converges when ``max |F| <= tol * n``. A root with ``E`` and ``I`` at zero
    is reported as the disease-free equilibrium.
    """
    x = np.asarray(guess, dtype=float).copy()
    if x.shape == (5,):
        x = reduce_state(x)
    f = sverirs_reduced_rhs(x, p)
    res = float(np.max(np.abs(f)))
    target = tol * p.n
    it = 0
    while res > target:
        if it >= max_iter:
            raise NumericalError(
                f"Newton did not converge in {max_iter} iterations "
                f"(last iterate {x.tolist()}, residual {res:.3e})"
            )
        it += 1
        J = sverirs_reduced_jacobian(x, p)
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            raise NumericalError(f"singular Jacobian at {x.tolist()}") from None
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_try = x - lam * step
            f_try = sverirs_reduced_rhs(x_try, p)
            res_try = float(np.max(np.abs(f_try)))
            if res_try < res:
                break
            lam *= 0.5
        x, f, res = x_try, f_try, res_try
        if not np.isfinite(res):
            raise NumericalError(f"Newton diverged (non-finite residual) after {it} iterations")
    full = recover_full(x, p.n)
    if abs(full[1]) <= 1e-9 * p.n and abs(full[2]) <= 1e-9 * p.n:
        return Equilibrium(full, DISEASE_FREE, bool(np.all(full >= -1e-9 * p.n)),
                           _residual(full, p), label="p1", iterations=it)
    return Equilibrium(full, ENDEMIC, relevance(full), _residual(full, p), label="refined",
                       iterations=it)


def endemic_sverirs_numeric(p: SverirsParams, horizon: float = 7300.0) -> Equilibrium:
    """Locate an endemic point without the closed form: relax, then refine.

    Integrates from a lightly infected state for ``horizon`` days and polishes
    the end state with Newton. Converging to the DFE raises, since no endemic
    attractor was found.
    """
    from .simulate import IntegrationOptions, integrate

    dfe = dfe_sverirs(p).point
    x0 = dfe * 0.98
    x0[1] = x0[2] = 0.01 * p.n
    traj = integrate(SVERIRS, p, x0, IntegrationOptions(t_end=horizon, stride=horizon))
    eq = endemic_sverirs_refine(p, traj.states[-1])
    if eq.kind == DISEASE_FREE:
        raise NumericalError("no endemic attractor found: trajectory relaxed to the DFE")
    return eq


def endemic_sverirs(p: SverirsParams) -> list[Equilibrium]:
    """Endemic candidates, refined by Newton, with the closed form when defined.

    Returns ``[p2, p3]`` (each Newton-polished from its closed form) when
    0 < rho < 1, else the single numerically located point.
    """
    if 0.0 < p.rho < 1.0:
        out = []
        for cand in endemic_sverirs_closed(p):
            try:
                ref = endemic_sverirs_refine(p, cand.point)
            except NumericalError:
                ref = cand
            if ref.kind == ENDEMIC:
                ref = Equilibrium(ref.point, ENDEMIC, ref.relevant, ref.residual,
                                  label=cand.label, iterations=ref.iterations)
            out.append(ref)
        return out
    return [endemic_sverirs_numeric(p)]


def endemic(p) -> list[Equilibrium]:
    if isinstance(p, SverirsParams):
        return endemic_sverirs(p)
    return [endemic_serirs(p)]


def dfe(p) -> Equilibrium:
    if isinstance(p, SverirsParams):
        return dfe_sverirs(p)
    return dfe_serirs(p)


def primary_endemic(candidates: list[Equilibrium]) -> Optional[Equilibrium]:
    """The candidate to report: the relevant one if any, else the last (p3)."""
    if not candidates:
        return None
    for c in candidates:
        if c.kind == ENDEMIC and c.relevant:
            return c
    return candidates[-1]
