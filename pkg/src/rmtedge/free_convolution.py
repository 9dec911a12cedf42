"""Rectangular free convolution with the MP law: subordination and the left edge.

For a fixed spectrum of S(X) the Stieltjes transform ``m_t`` of the
Gaussian divisible model ``X + sqrt(t) W`` solves

    m_t = (1/M) sum_i (1 + c t m_t) / (lambda_i - zeta_t),
    zeta_t = (1 + c t m_t)^2 z - t (1 - c)(1 + c t m_t),

and the left edge of its support is the value of
``Phi_t(zeta) = (1 - c t m_X(zeta))^2 zeta + (1 - c) t (1 - c t m_X(zeta))``
at its leftmost local maximum.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import BranchError, EdgeLocationError, ParameterError, PoleError, SolverError
from .mp_law import mp_edges
from .spectral import Spectrum, stieltjes_derivatives

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubordinationState:
    z: complex
    m_t: complex
    zeta_t: complex
    b_t: complex
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class EdgeSolution:
    zeta_minus: float
    lambda_minus_t: float
    phi_second: float
    gamma_N: float
    gap: float
    t: float
    c_N: float
    multiple_extrema: bool = False


def _zeta_of(m, z, c, t):
    b = 1.0 + c * t * m
    return b, b * b * z - t * (1.0 - c) * b


def _rhs(lam, m, z, c, t):
    b, zeta = _zeta_of(m, z, c, t)
    return b * np.mean(1.0 / (lam - zeta)), b, zeta


def _newton(lam, m, z, c, t, tol, max_iter=50):
    for _ in range(max_iter):
        b, zeta = _zeta_of(m, z, c, t)
        inv = 1.0 / (lam - zeta)
        s1 = inv.mean()
        s2 = (inv * inv).mean()
        f = m - b * s1
        dzeta = c * t * (2.0 * b * z - t * (1.0 - c))
        df = 1.0 - (c * t * s1 + b * dzeta * s2)
        step = f / df
        m = m - step
        if abs(step) <= tol * max(1.0, abs(m)):
            break
    r, b, zeta = _rhs(lam, m, z, c, t)
    return m, abs(m - r)


def _damped(lam, m, z, c, t, tol, max_iter, history):
    theta = 0.5
    r, _, _ = _rhs(lam, m, z, c, t)
    res = abs(r - m)
    for it in range(max_iter):
        m_new = (1.0 - theta) * m + theta * r
        r_new, _, _ = _rhs(lam, m_new, z, c, t)
        res_new = abs(r_new - m_new)
        if res_new < res:
            m, r, res = m_new, r_new, res_new
            theta = min(1.0, theta * 1.2)
        else:
            theta *= 0.5
            history.append(theta)
            if theta < 1e-8:
                break
        if res < tol:
            break
    return m, res, it + 1


def _herglotz_ok(z, m):
    if z.imag <= 0:
        return True
    scale = max(1.0, abs(m))
    return m.imag > -1e-12 * scale and (z * m).imag > -1e-12 * scale * max(1.0, abs(z))


def _solve_at(lam, c, t, z, m0, tol):
    history = []
    m, res, it = _damped(lam, m0, z, c, t, 1e-9, 2000, history)
    m, res = _newton(lam, m, z, c, t, 1e-15)
    return m, res, it, history


def solve_subordination(spec: Spectrum, t: float, z: complex, m0: complex | None = None,
                        tol: float = 1e-11, eta_direct: float = 1e-2) -> SubordinationState:
    """Solve the self-consistent equation for ``m_t(z)``.

    Damped fixed-point iteration with Newton polish when ``Im z`` is not
    small; otherwise a continuation in ``Im z`` from ``eta_direct`` down to
    the target (or to 1e-10 followed by a Newton solve on the real axis).
    """
    if not 0 < t < 1:
        raise ParameterError(f"t must lie in (0, 1), got {t}")
    z = complex(z)
    if z.imag < 0:
        raise ParameterError("solve_subordination expects Im z >= 0")
    lam = spec.values
    c = spec.c_N
    if m0 is None:
        m0 = _initial_guess(z, lam)
    if z.imag >= eta_direct:
        m, res, it, hist = _solve_at(lam, c, t, z, complex(m0), tol)
        return _finish(z, m, res, it, hist, c, t, tol)

    # continuation in the imaginary part
    target = z.imag if z.imag > 0 else 1e-10
    eta = max(eta_direct, target)
    zk = complex(z.real, eta)
    m, res, it, hist = _solve_at(lam, c, t, zk, _initial_guess(zk, lam), tol)
    n_steps = 0
    while eta > target:
        eta_next = max(target, eta * 0.5)
        zk = complex(z.real, eta_next)
        m_try, res_try = _newton(lam, m, zk, c, t, 1e-15)
        if not (res_try < 1e-9 and _herglotz_ok(zk, m_try)):
            m_try, res_try, _, h = _solve_at(lam, c, t, zk, m, tol)
            hist += h
        m, res, eta = m_try, res_try, eta_next
        n_steps += 1
        if n_steps > 400:
            raise SolverError("continuation in Im z did not reach the target", res, hist)
    if z.imag == 0:
        m_real, res_real = _newton(lam, m, z, c, t, 1e-15)
        if res_real <= tol and abs(m_real - m) < 1e-4 * max(1.0, abs(m)) and m_real.imag >= -1e-10:
            m, res = m_real, res_real
    return _finish(z, m, res, it + n_steps, hist, c, t, tol)


def _initial_guess(z, lam):
    # transform of the spectrum itself, nudged into the upper half plane
    m = np.mean(1.0 / (lam - z))
    return complex(m.real, max(m.imag, 1e-3))


def _finish(z, m, res, it, hist, c, t, tol):
    if not np.isfinite(m) or res > tol:
        raise SolverError(f"no convergence at z={z}: residual {res:.3g}", res, hist)
    if not _herglotz_ok(z, m):
        raise BranchError(f"solution m={m} at z={z} violates the Herglotz property")
    b, zeta = _zeta_of(m, z, c, t)
    return SubordinationState(z=z, m_t=complex(m), zeta_t=complex(zeta), b_t=complex(b),
                              residual=float(res), iterations=it)


def _check_real_point(spec, zeta):
    d = np.min(np.abs(spec.values - zeta))
    if d < 1e-12:
        raise PoleError(f"zeta={zeta} is within {d:.3g} of the spectrum")


def _phi_terms(values, c, t, zeta, order):
    ms = stieltjes_derivatives(values, zeta, order)
    m = ms[0]
    q = 1.0 - c * t * m
    if order == 0:
        return q * q * zeta + (1.0 - c) * t * q
    m1 = ms[1]
    if order == 1:
        return q * q - 2.0 * c * t * m1 * zeta * q - c * (1.0 - c) * t * t * m1
    m2 = ms[2]
    return (-4.0 * c * t * m1 * q + 2.0 * c * c * t * t * m1 * m1 * zeta
            - 2.0 * c * t * m2 * zeta * q - c * (1.0 - c) * t * t * m2)


def phi_map(spec: Spectrum, t: float, zeta: float, order: int = 0) -> float:
    """Phi_t or its first/second derivative at real ``zeta`` below the spectrum."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    _check_real_point(spec, zeta)
    return float(_phi_terms(spec.values, spec.c_N, t, float(zeta), order))


def _pole_side_root(values, c, t):
    """The unique zeta < lambda_min where 1 - c t m_X(zeta) = 0."""
    lam_min = values[0]
    M = len(values)

    def g(z):
        return 1.0 - c * t * np.mean(1.0 / (values - z))

    lo = lam_min - 2.0 * c * t
    d = c * t / (2.0 * M)
    while g(lam_min - d) > 0:
        d *= 0.5
    return optimize.brentq(g, lo, lam_min - d, xtol=1e-15, rtol=1e-15, maxiter=500)


def find_left_edge(spec: Spectrum, t: float, n_scan: int = 200) -> EdgeSolution:
    """Locate the leftmost local maximum of Phi_t and the edge it maps to."""
    if not 0 < t < 1:
        raise ParameterError(f"t must lie in (0, 1), got {t}")
    values = spec.values
    if values[0] < 0:
        raise ParameterError("spectrum must be nonnegative")
    c = spec.c_N

    def dphi(z):
        return _phi_terms(values, c, t, z, 1)

    hi = _pole_side_root(values, c, t)
    trace = [(hi, dphi(hi))]
    step = t * t * 1e-3
    lo = hi - step
    for _ in range(60):
        v = dphi(lo)
        trace.append((lo, v))
        if v > 0:
            break
        step *= 2.0
        lo = hi - step
    else:
        raise EdgeLocationError("no sign change of Phi' found", trace)

    grid = np.linspace(lo, hi, n_scan)
    signs = np.sign([dphi(g) for g in grid])
    changes = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    multiple = len(changes) > 1
    if multiple:
        log.warning("Phi_t' changes sign %d times below the spectrum; using the leftmost", len(changes))
    a, b = grid[changes[0]], grid[changes[0] + 1]
    zeta = optimize.brentq(dphi, a, b, xtol=1e-16, rtol=1e-15, maxiter=500)
    for _ in range(3):
        d2 = _phi_terms(values, c, t, zeta, 2)
        d1 = dphi(zeta)
        if abs(d1) <= 1e-12 * max(1.0, abs(d2) * t * t):
            break
        nz = zeta - d1 / d2
        if not a <= nz <= b:
            break
        zeta = nz
    d2 = float(_phi_terms(values, c, t, zeta, 2))
    lam_t = float(_phi_terms(values, c, t, zeta, 0))
    gamma = gamma_scaling(lam_t, zeta, d2, c, t)
    return EdgeSolution(zeta_minus=float(zeta), lambda_minus_t=lam_t, phi_second=d2,
                        gamma_N=gamma, gap=float(values[0] - zeta), t=float(t), c_N=c,
                        multiple_extrema=multiple)


def gamma_scaling(lam_t, zeta, phi2, c, t) -> float:
    """Edge scaling from lambda_{-,t}, zeta_t(lambda_{-,t}) and Phi_t'' there."""
    x = 0.5 * (4.0 * lam_t * zeta + (1.0 - c) ** 2 * t * t) * c * c * t * t * phi2
    return float(-1.0 / np.cbrt(x))


def deterministic_edge(c, t: float):
    """(zeta_bar_{-,t}, gamma limit) for the MP counterpart."""
    cc = c.c_N if hasattr(c, "c_N") else float(c)
    lm, _ = mp_edges(cc)
    zeta_bar = (1.0 - t) * lm - math.sqrt(cc) * t * t
    gamma_limit = cc ** -0.5 * (1.0 - math.sqrt(cc)) ** (-4.0 / 3.0)
    return zeta_bar, gamma_limit


def subordination_residuals(spec: Spectrum, t: float, edge: EdgeSolution):
    """F_t and dF_t/dzeta at (lambda_{-,t}, zeta_{1,-}); both vanish at the edge."""
    c = spec.c_N
    z = edge.lambda_minus_t
    zeta = edge.zeta_minus
    disc = t * t * (1.0 - c) ** 2 + 4.0 * zeta * z
    if disc < 0:
        raise BranchError(f"square-root argument {disc:.3g} is negative")
    root = math.sqrt(disc)
    m, m1 = stieltjes_derivatives(spec.values, zeta, 1)
    f = 1.0 + (t * (1.0 - c) - root) / (2.0 * zeta) - c * t * m
    f_zeta = -(t * (1.0 - c) - root) / (2.0 * zeta * zeta) - z / (zeta * root) - c * t * m1
    return float(f), float(f_zeta)


def residuals_at(spec: Spectrum, t: float, z: float, zeta: float):
    """F_t and its zeta-derivative at an arbitrary real pair."""
    probe = EdgeSolution(zeta_minus=zeta, lambda_minus_t=z, phi_second=float("nan"),
                         gamma_N=float("nan"), gap=float("nan"), t=t, c_N=spec.c_N)
    return subordination_residuals(spec, t, probe)


def edge_density_ratio(spec: Spectrum, t: float, edge: EdgeSolution, kappas) -> np.ndarray:
    """Im m_t(lambda_{-,t} + kappa + i 1e-8) / sqrt(kappa) over the given offsets."""
    out = []
    for k in sorted(kappas):
        st = solve_subordination(spec, t, complex(edge.lambda_minus_t + k, 1e-8))
        out.append(st.m_t.imag / math.sqrt(k))
    return np.array(out)
