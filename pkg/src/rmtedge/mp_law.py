"""Closed-form Marchenko-Pastur law for aspect ratio c = M/N."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import interpolate

from .errors import DomainError, PoleError, RegimeError


@dataclass(frozen=True)
class MPParams:
    c_N: float

    def __post_init__(self):
        if not self.c_N > 0:
            raise RegimeError(f"aspect ratio must be positive, got {self.c_N}")
        if abs(self.c_N - 1.0) < 1e-12:
            raise RegimeError("c = 1 (hard edge) is excluded")


def _params(c) -> MPParams:
    return c if isinstance(c, MPParams) else MPParams(float(c))


def mp_edges(c):
    c = _params(c).c_N
    r = math.sqrt(c)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def atom_mass(c) -> float:
    c = _params(c).c_N
    return max(0.0, 1.0 - 1.0 / c)


def mp_density(c, x):
    """Absolutely continuous part of the MP law (no atom at zero)."""
    cc = _params(c).c_N
    lm, lp = mp_edges(cc)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(np.clip((lp - x) * (x - lm), 0.0, None)) / (2.0 * math.pi * cc * x)
    val = np.where((x > lm) & (x < lp), val, 0.0)
    return float(val) if val.ndim == 0 else val


def mp_stieltjes(c, z) -> complex:
    """Stieltjes transform of the MP law, Herglotz branch.

    On the real axis outside the support the eta -> 0 limit is returned.
    """
    cc = _params(c).c_N
    z = complex(z)
    if z == 0:
        raise PoleError("mp_stieltjes has a pole at z = 0")
    lm, lp = mp_edges(cc)
    if z.imag == 0 and lm < z.real < lp:
        raise DomainError(f"real z={z.real} lies on the support [{lm}, {lp}]")
    root = cmath.sqrt((lp - z) * (z - lm))
    m = (1.0 - cc - z + 1j * root) / (2.0 * cc * z)
    m_alt = (1.0 - cc - z - 1j * root) / (2.0 * cc * z)
    if z.imag > 0:
        return m if m.imag > 0 else m_alt
    if z.imag < 0:
        return m if m.imag < 0 else m_alt
    # real axis outside the support: value continuous with the upper half plane,
    # i.e. the branch that decays like -1/z and stays finite at the soft edges
    return _real_branch(cc, z.real, m, m_alt)


def _real_branch(cc, x, m, m_alt):
    ref = _upper_limit(cc, x)
    return m if abs(m - ref) <= abs(m_alt - ref) else m_alt


def _upper_limit(cc, x):
    # tiny vertical offset just to choose the branch; the returned value is exact
    z = complex(x, 1e-9 * max(1.0, abs(x)))
    lm, lp = mp_edges(cc)
    root = cmath.sqrt((lp - z) * (z - lm))
    m = (1.0 - cc - z + 1j * root) / (2.0 * cc * z)
    return m if m.imag > 0 else (1.0 - cc - z - 1j * root) / (2.0 * cc * z)


def mp_quadratic_residual(c, z, m) -> complex:
    cc = _params(c).c_N
    return z * cc * m * m + (z - (1.0 - cc)) * m + 1.0


def mp_stieltjes_scaled(c, t: float, z, k: int = 0) -> complex:
    """k-th z-derivative (k <= 3) of (1-t)^(-1) m_mp(z / (1-t))."""
    cc = _params(c).c_N
    if k not in (0, 1, 2, 3):
        raise ValueError("k must be 0..3")
    s = 1.0 - t
    w = complex(z) / s
    m = mp_stieltjes(cc, w)
    derivs = _mp_derivatives(cc, w, m)
    return derivs[k] / s ** (k + 1)


def _mp_derivatives(cc, z, m):
    """m, m', m'', m''' of the MP transform by implicit differentiation.

    F(z, m) = c z m^2 + (z - 1 + c) m + 1 = 0.
    """
    fm = 2.0 * cc * z * m + (z - 1.0 + cc)
    # d/dz: (c m^2 + m) + fm m' = 0
    m1 = -(cc * m * m + m) / fm
    # differentiate c z m^2 + (z-1+c) m + 1 twice
    fm1 = 2.0 * cc * m + 2.0 * cc * z * m1 + 1.0  # d(fm)/dz
    m2 = -(2.0 * cc * m * m1 + m1 + fm1 * m1) / fm
    fm2 = 4.0 * cc * m1 + 2.0 * cc * z * m2
    m3 = -(2.0 * cc * m1 * m1 + 2.0 * cc * m * m2 + m2 + fm2 * m1 + 2.0 * fm1 * m2) / fm
    return m, m1, m2, m3


def mp_cdf_grid(c, n: int = 20001):
    """(x, F(x)) on [lambda_-, lambda_+] for the continuous part, normalized by its mass."""
    cc = _params(c).c_N
    lm, lp = mp_edges(cc)
    theta = np.linspace(0.0, math.pi, n)
    x = lm + (lp - lm) * (1.0 - np.cos(theta)) / 2.0
    # rho(x) dx in the cosine variable is smooth
    half = (lp - lm) / 2.0
    dens = half * half * np.sin(theta) ** 2 / (2.0 * math.pi * cc * x)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(theta))])
    cum /= cum[-1]
    return x, cum


def mp_quantiles(c, M: int, scale: float = 1.0) -> np.ndarray:
    """Midpoint quantiles ``scale * F^{-1}((i - 1/2)/M)`` of the continuous MP part."""
    x, cdf = mp_cdf_grid(c)
    inv = interpolate.PchipInterpolator(cdf, x)
    q = (np.arange(M) + 0.5) / M
    return scale * np.sort(inv(q))
