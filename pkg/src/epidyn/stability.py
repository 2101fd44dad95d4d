"""Linearisations, spectra, Fuller criteria and stability classification."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Callable, Optional

import numpy as np

from .equilibria import Equilibrium, epsilon
from .model import (
    NumericalError,
    SerirsParams,
    SverirsParams,
    reduce_state,
    reduced_rhs,
)
from .reproduction import r0_serirs

STABLE_NODE = "stable-node"
STABLE_SPIRAL = "stable-spiral"
UNSTABLE = "unstable"
CENTER_DEGENERATE = "center-degenerate"

# band on real parts treated as zero
REAL_PART_BAND = 1e-12
MAX_ORDER = 16


@dataclass(frozen=True)
class FullerRecord:
    det: float
    trace: float
    det_bialternate: float

    @property
    def det_negative(self) -> bool:
        return self.det < 0.0

    @property
    def trace_negative(self) -> bool:
        return self.trace < 0.0

    @property
    def det_bialternate_negative(self) -> bool:
        return self.det_bialternate < 0.0

    @property
    def stable(self) -> bool:
        return self.det_negative and self.trace_negative and self.det_bialternate_negative

    def as_dict(self) -> dict:
        return {
            "det": self.det,
            "trace": self.trace,
            "det_bialternate": self.det_bialternate,
            "det_negative": self.det_negative,
            "trace_negative": self.trace_negative,
            "det_bialternate_negative": self.det_bialternate_negative,
            "stable": self.stable,
        }


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    classification: str
    matrix: np.ndarray
    criteria: Optional[FullerRecord] = None

    def as_dict(self) -> dict:
        d = {
            "classification": self.classification,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "matrix": self.matrix.tolist(),
        }
        if self.criteria is not None:
            d["fuller"] = self.criteria.as_dict()
        return d


def jacobian_serirs_endemic(p: SerirsParams) -> np.ndarray:
    """Reduced linearisation at the endemic point; independent of n."""
    R0 = r0_serirs(p)
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    ewds = epsilon(p) * w * (d + s)
    return np.array([
        [-ewds - w, -a * b / R0 - w, -b / R0 - w],
        [ewds, -b * s / (g * R0), b / R0],
        [0.0, s, -g],
    ])


def det_endemic_closed(p: SerirsParams) -> float:
    """``det M = -e w (d + s) (s w + g (d + s + w)) = -w g (d + s) (R0 - 1)``.

    The factor is ``s w``, the same one that sits in the denominator of
    epsilon; with ``s d`` in its place the identity only holds when d = w.
    Negative exactly when R0 > 1.
    """
    eps = epsilon(p)
    return -eps * p.omega * (p.delta + p.sigma) * (
        p.sigma * p.omega + p.gamma * (p.delta + p.sigma + p.omega))


def jacobian_serirs_dfe(p: SerirsParams) -> np.ndarray:
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    return np.array([
        [-w, -a * b - w, -b - w],
        [0.0, a * b - d - s, b],
        [0.0, s, -g],
    ])


def dfe_eigs_closed_serirs(p: SerirsParams) -> np.ndarray:
    """``(-w, l2, l3)`` with l2 <= -gamma and sign(l3) = sign(R0 - 1)."""
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    disc = 4 * b * s + (a * b + g - d - s) ** 2
    mid = a * b - g - d - s
    return np.array([-w, 0.5 * (mid - sqrt(disc)), 0.5 * (mid + sqrt(disc))])


def jacobian_sverirs_dfe(p: SverirsParams) -> np.ndarray:
    """Reduced ``(S, E, I, V)`` linearisation at the disease-free point."""
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    f, ps, r = p.phi, p.psi, p.rho
    tot = f + ps
    s_share = ps / tot  # S / n at the DFE
    v_share = f / tot
    exposed = (ps + r * f) / tot  # (S + rho V) / n
    return np.array([
        [-f - w, -a * b * s_share - w, -b * s_share - w, ps - w],
        [0.0, a * b * exposed - d - s, b * exposed, 0.0],
        [0.0, s, -g, 0.0],
        [f, -a * b * r * v_share, -b * r * v_share, -ps],
    ])


def sverirs_dfe_Z(p: SverirsParams) -> float:
    a, b, g, d, s = p.alpha, p.beta, p.gamma, p.delta, p.sigma
    f, ps, r = p.phi, p.psi, p.rho
    return 4 * b * s * (f + ps) * (ps + r * f) + (a * b * (ps + r * f) + (g - s - d) * (f + ps)) ** 2


def dfe_eigs_closed_sverirs(p: SverirsParams) -> np.ndarray:
    """``(-w, -phi - psi, l3, l4)`` with l3 <= -gamma and sign(l4) = sign(R0 - 1)."""
    a, b, g, d, s, w = p.alpha, p.beta, p.gamma, p.delta, p.sigma, p.omega
    f, ps, r = p.phi, p.psi, p.rho
    rootZ = sqrt(sverirs_dfe_Z(p))
    mid = a * b * (ps + r * f) - (f + ps) * (g + d + s)
    den = 2 * (f + ps)
    return np.array([-w, -f - ps, (mid - rootZ) / den, (mid + rootZ) / den])


def jacobian_numeric(field: Callable[[np.ndarray], np.ndarray], point, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of ``field`` at ``point``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(point, dtype=float)
    k = x.shape[0]
    J = np.empty((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = step
        fp = np.asarray(field(x + e), dtype=float)
        fm = np.asarray(field(x - e), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NumericalError(f"non-finite field value while differencing coordinate {j}")
        J[:, j] = (fp - fm) / (2 * step)
    return J


def eigenvalues(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eigenvalues need a square matrix")
    if m.shape[0] > MAX_ORDER:
        raise ValueError(f"matrix order {m.shape[0]} exceeds {MAX_ORDER}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        eigs = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from None
    scale = max(np.linalg.norm(m), 1.0)
    if abs(eigs.sum() - np.trace(m)) > 1e-9 * scale:
        raise NumericalError("eigensolver returned an inconsistent spectrum")
    return eigs


def bialternate_sum(m) -> np.ndarray:
    """``2 (m (.) I)``, whose eigenvalues are the pairwise sums l_i + l_j, i < j.

    Rows and columns are indexed by lexicographic pairs (0,1), (0,2), ...,
    (1,2), ...
    """
    m = np.asarray(m, dtype=float)
    k = m.shape[0]
    if k < 2 or m.shape != (k, k):
        raise ValueError("bialternate sum needs a square matrix of order >= 2")
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    G = np.zeros((len(pairs), len(pairs)))
    for row, (i, j) in enumerate(pairs):
        for col, (r, s) in enumerate(pairs):
            if (i, j) == (r, s):
                G[row, col] = m[i, i] + m[j, j]
            elif i == r:
                G[row, col] = m[j, s]
            elif j == s:
                G[row, col] = m[i, r]
            elif j == r:
                G[row, col] = -m[i, s]
            elif i == s:
                G[row, col] = -m[j, r]
    return G


def fuller_criteria_3x3(m) -> FullerRecord:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("Fuller criteria implemented for order 3 only")
    return FullerRecord(float(np.linalg.det(m)), float(np.trace(m)),
                        float(np.linalg.det(bialternate_sum(m))))


def classify(eigs) -> str:
    eigs = np.asarray(eigs, dtype=complex)
    re = eigs.real
    if np.any(re > REAL_PART_BAND):
        return UNSTABLE
    if np.all(re < -REAL_PART_BAND):
        if np.any(np.abs(eigs.imag) > REAL_PART_BAND):
            return STABLE_SPIRAL
        return STABLE_NODE
    return CENTER_DEGENERATE


def report(matrix, with_fuller: bool = None) -> StabilityReport:
    matrix = np.asarray(matrix, dtype=float)
    eigs = eigenvalues(matrix)
    if with_fuller is None:
        with_fuller = matrix.shape == (3, 3)
    crit = fuller_criteria_3x3(matrix) if with_fuller else None
    order = np.lexsort((eigs.imag, eigs.real))
    return StabilityReport(eigs[order], classify(eigs), matrix, crit)


def stability_at(p, eq: Equilibrium) -> StabilityReport:
    """Stability of an equilibrium, choosing the analytic matrix where one exists.

    The SVE(R)IRS endemic point has no tractable closed-form Jacobian and uses
    central differences of the reduced field.
    """
    from .equilibria import DISEASE_FREE

    if isinstance(p, SverirsParams):
        if eq.kind == DISEASE_FREE:
            return report(jacobian_sverirs_dfe(p))
        x = reduce_state(eq.point)
        J = jacobian_numeric(lambda z: reduced_rhs(z, p), x, step=1e-5 * max(1.0, p.n / 100))
        return report(J)
    if eq.kind == DISEASE_FREE:
        return report(jacobian_serirs_dfe(p))
    return report(jacobian_serirs_endemic(p))
