"""Hot numeric kernels: vector fields, Dormand-Prince 5(4), fixed-step RK4.

Everything here runs either under numba or as plain numpy (see
:mod:`epidyn._accel`). Keep to scalars, float64 arrays and simple control
flow so both paths stay valid.

Integrated state layout (``y``)::

    [model compartments (4 or 5), int I dt, int u dt, sensitivities...]

In ``MODE_SVERIRS_SENS`` the tail holds, for each control interval k, the 5
derivatives d x / d u_k followed by the N derivatives d(int I dt) / d u_k.
"""

import numpy as np

from ._accel import njit

MODE_SERIRS = 0
MODE_SVERIRS = 1
MODE_SVERIRS_SENS = 2

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NEGATIVE = 2
STATUS_NONFINITE = 3
STATUS_MAX_STEPS = 4

# theta layout shared by every kernel
TH_ALPHA, TH_BETA, TH_GAMMA, TH_DELTA, TH_SIGMA, TH_OMEGA, TH_N, TH_PSI, TH_RHO = range(9)
THETA_SIZE = 9


@njit
def serirs_rhs(x, alpha, beta, gamma, delta, sigma, omega, n):
    S, E, I, R = x[0], x[1], x[2], x[3]
    inc = beta * S * (I + alpha * E) / n
    out = np.empty(4)
    out[0] = -inc + omega * R
    out[1] = inc - (sigma + delta) * E
    out[2] = sigma * E - gamma * I
    out[3] = delta * E + gamma * I - omega * R
    return out


@njit
def serirs_reduced_rhs(x, alpha, beta, gamma, delta, sigma, omega, n):
    S, E, I = x[0], x[1], x[2]
    inc = beta * S * (I + alpha * E) / n
    out = np.empty(3)
    out[0] = -inc + omega * (n - S - E - I)
    out[1] = inc - (sigma + delta) * E
    out[2] = sigma * E - gamma * I
    return out


@njit
def sverirs_rhs(x, alpha, beta, gamma, delta, sigma, omega, n, phi, psi, rho):
    S, E, I, R, V = x[0], x[1], x[2], x[3], x[4]
    lam = beta * (I + alpha * E) / n
    out = np.empty(5)
    out[0] = -lam * S + omega * R - phi * S + psi * V
    out[1] = lam * S - (sigma + delta) * E + rho * lam * V
    out[2] = sigma * E - gamma * I
    out[3] = delta * E + gamma * I - omega * R
    out[4] = -rho * lam * V + phi * S - psi * V
    return out


@njit
def sverirs_reduced_rhs(x, alpha, beta, gamma, delta, sigma, omega, n, phi, psi, rho):
    S, E, I, V = x[0], x[1], x[2], x[3]
    lam = beta * (I + alpha * E) / n
    out = np.empty(4)
    out[0] = -lam * S + omega * (n - S - E - I - V) - phi * S + psi * V
    out[1] = lam * S - (sigma + delta) * E + rho * lam * V
    out[2] = sigma * E - gamma * I
    out[3] = -rho * lam * V + phi * S - psi * V
    return out


@njit
def sverirs_jacobian(x, alpha, beta, gamma, delta, sigma, omega, n, phi, psi, rho):
    """Jacobian of the full 5-compartment field at an arbitrary state."""
    S, E, I, V = x[0], x[1], x[2], x[4]
    lam = beta * (I + alpha * E) / n
    dlam_dE = alpha * beta / n
    dlam_dI = beta / n
    J = np.zeros((5, 5))
    J[0, 0] = -lam - phi
    J[0, 1] = -dlam_dE * S
    J[0, 2] = -dlam_dI * S
    J[0, 3] = omega
    J[0, 4] = psi
    J[1, 0] = lam
    J[1, 1] = dlam_dE * (S + rho * V) - (sigma + delta)
    J[1, 2] = dlam_dI * (S + rho * V)
    J[1, 4] = rho * lam
    J[2, 1] = sigma
    J[2, 2] = -gamma
    J[3, 1] = delta
    J[3, 2] = gamma
    J[3, 3] = -omega
    J[4, 0] = phi
    J[4, 1] = -rho * dlam_dE * V
    J[4, 2] = -rho * dlam_dI * V
    J[4, 4] = -rho * lam - psi
    return J


@njit
def model_size(mode):
    if mode == MODE_SERIRS:
        return 4
    return 5


@njit
def system_rhs(mode, y, theta, u, seg):
    alpha = theta[TH_ALPHA]
    beta = theta[TH_BETA]
    gamma = theta[TH_GAMMA]
    delta = theta[TH_DELTA]
    sigma = theta[TH_SIGMA]
    omega = theta[TH_OMEGA]
    n = theta[TH_N]
    out = np.zeros(y.shape[0])
    if mode == MODE_SERIRS:
        f = serirs_rhs(y[:4], alpha, beta, gamma, delta, sigma, omega, n)
        out[:4] = f
        out[4] = y[2]
        out[5] = 0.0
        return out
    psi = theta[TH_PSI]
    rho = theta[TH_RHO]
    f = sverirs_rhs(y[:5], alpha, beta, gamma, delta, sigma, omega, n, u, psi, rho)
    out[:5] = f
    out[5] = y[2]
    out[6] = u
    if mode == MODE_SVERIRS_SENS:
        nseg = (y.shape[0] - 7) // 6
        J = sverirs_jacobian(y[:5], alpha, beta, gamma, delta, sigma, omega, n, u, psi, rho)
        sens = np.ascontiguousarray(y[7:7 + 5 * nseg]).reshape((nseg, 5))
        dsens = np.dot(sens, J.T)
        dsens[seg, 0] -= y[0]
        dsens[seg, 4] += y[0]
        out[7:7 + 5 * nseg] = dsens.ravel()
        out[7 + 5 * nseg:] = sens[:, 2]
    return out


# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@njit
def _rms(v):
    return np.sqrt(np.mean(v * v))


@njit
def _initial_step(mode, theta, y0, f0, u, seg, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / sc)
    d1 = _rms(f0 / sc)
    if d0 < 1e-5 or d1 < 1e-5 or not np.isfinite(d1):
        h0 = 1e-6
    else:
        h0 = max(0.01 * d0 / d1, 1e-300)
    f1 = system_rhs(mode, y0 + h0 * f0, theta, u, seg)
    d2 = _rms((f1 - f0) / sc) / h0
    big = max(d1, d2)
    if not np.isfinite(big):
        h1 = h0 * 1e-3
    elif big <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / big) ** 0.2
    return min(100.0 * h0, h1)


@njit
def dopri_solve(mode, theta, y0, breaks, values, out_times, rtol, atol, max_step):
    """Adaptive Dormand-Prince 5(4) over a piecewise-constant control.

    ``breaks`` has len(values) + 1 entries; the control equals ``values[k]``
    on ``[breaks[k], breaks[k+1])`` and steps never straddle a breakpoint.
    ``out_times`` (sorted, inside the span) are filled by cubic Hermite
    interpolation between accepted steps.

    Returns ``(out, y_end, status, t_status, n_accepted, n_rejected)``.
    """
    dim = y0.shape[0]
    nmodel = model_size(mode)
    nout = out_times.shape[0]
    out = np.full((nout, dim), np.nan)
    y = y0.copy()
    t = breaks[0]
    iout = 0
    while iout < nout and out_times[iout] <= t:
        out[iout, :] = y
        iout += 1
    n_acc = 0
    n_rej = 0
    status = STATUS_OK
    h = -1.0
    neg_reject = False
    nseg = values.shape[0]
    for seg in range(nseg):
        u = values[seg]
        t_seg_end = breaks[seg + 1]
        if t_seg_end <= t:
            continue
        k1 = system_rhs(mode, y, theta, u, seg)
        if h <= 0.0:
            h = _initial_step(mode, theta, y, k1, u, seg, rtol, atol)
        while t < t_seg_end:
            if n_acc + n_rej > 5_000_000:
                return out, y, STATUS_MAX_STEPS, t, n_acc, n_rej
            h = min(h, max_step)
            last = False
            if t + h >= t_seg_end or t_seg_end - (t + h) < 1e-12 * max(1.0, abs(t_seg_end)):
                h_try = t_seg_end - t
                last = True
            else:
                h_try = h
            if h_try < 1e-12 * max(1.0, abs(t)):
                if neg_reject:
                    return out, y, STATUS_NEGATIVE, t, n_acc, n_rej
                return out, y, STATUS_UNDERFLOW, t, n_acc, n_rej
            k2 = system_rhs(mode, y + h_try * (_A21 * k1), theta, u, seg)
            k3 = system_rhs(mode, y + h_try * (_A31 * k1 + _A32 * k2), theta, u, seg)
            k4 = system_rhs(mode, y + h_try * (_A41 * k1 + _A42 * k2 + _A43 * k3), theta, u, seg)
            k5 = system_rhs(mode, y + h_try * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
                            theta, u, seg)
            k6 = system_rhs(mode, y + h_try * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                                               + _A65 * k5), theta, u, seg)
            y_new = y + h_try * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = system_rhs(mode, y_new, theta, u, seg)
            err = h_try * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            en = _rms(err / sc)
            if not np.isfinite(en):
                n_rej += 1
                h = 0.2 * h_try
                continue
            neg_reject = False
            if en <= 1.0:
                # a step that leaves the nonnegative orthant by more than atol
                # is retried shorter; only a step that cannot shrink fails
                for i in range(nmodel):
                    if y_new[i] < -atol:
                        neg_reject = True
            if neg_reject:
                n_rej += 1
                h = 0.5 * h_try
                continue
            if en <= 1.0:
                t_new = t_seg_end if last else t + h_try
                while iout < nout and out_times[iout] <= t_new:
                    th = (out_times[iout] - t) / h_try
                    th2 = th * th
                    th3 = th2 * th
                    h00 = 2.0 * th3 - 3.0 * th2 + 1.0
                    h10 = th3 - 2.0 * th2 + th
                    h01 = -2.0 * th3 + 3.0 * th2
                    h11 = th3 - th2
                    out[iout, :] = h00 * y + h10 * h_try * k1 + h01 * y_new + h11 * h_try * k7
                    iout += 1
                y = y_new
                k1 = k7
                t = t_new
                n_acc += 1
                if en == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * en ** -0.2))
                h = h_try * fac
            else:
                n_rej += 1
                h = h_try * max(0.2, 0.9 * en ** -0.2)
    if not np.all(np.isfinite(y)):
        status = STATUS_NONFINITE
    return out, y, status, t, n_acc, n_rej


@njit
def rk4_solve(mode, theta, y0, breaks, values, out_times, h):
    """Classical RK4 with steps of at most ``h``; the oracle for ``dopri_solve``.

    Each output interval is cut at the control breakpoints and every piece is
    covered by equal substeps no longer than ``h``.
    """
    dim = y0.shape[0]
    nout = out_times.shape[0]
    out = np.empty((nout, dim))
    y = y0.copy()
    t = breaks[0]
    nseg = values.shape[0]
    seg = 0
    for iout in range(nout):
        target = out_times[iout]
        while t < target:
            while seg < nseg - 1 and breaks[seg + 1] <= t:
                seg += 1
            piece_end = min(target, breaks[seg + 1])
            span = piece_end - t
            nsub = int(np.ceil(span / h - 1e-9))
            if nsub < 1:
                nsub = 1
            hs = span / nsub
            u = values[seg]
            for _ in range(nsub):
                a = system_rhs(mode, y, theta, u, seg)
                b = system_rhs(mode, y + 0.5 * hs * a, theta, u, seg)
                c = system_rhs(mode, y + 0.5 * hs * b, theta, u, seg)
                d = system_rhs(mode, y + hs * c, theta, u, seg)
                y = y + (hs / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            t = piece_end
        out[iout, :] = y
    return out
