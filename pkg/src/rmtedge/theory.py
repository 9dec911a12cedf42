"""Asymptotic constants of the smallest eigenvalue for alpha in (2, 4).

All quantities take the tail constant ``c_const`` in the convention
P(Theta > s) ~ -c_const / Gamma(1 - alpha/2) * s^(-alpha).
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gamma, roots_genlaguerre

from .errors import BranchError, DomainError, NumericError
from .free_convolution import deterministic_edge
from .mp_law import mp_edges, mp_stieltjes_scaled

# offset used to place real evaluation points on the upper side of the cut
REAL_AXIS_EPS = 1e-12
# beyond this |Im a / Re a| Gauss-Laguerre cannot resolve the oscillation
OSCILLATION_SWITCH = 2.0


@dataclass(frozen=True)
class TheoryInputs:
    alpha: float
    c_N: float
    c_const: float
    N: float = 1000
    t: float = 0.05

    def __post_init__(self):
        if not 2.0 < self.alpha < 4.0:
            raise DomainError(f"alpha must lie in (2, 4), got {self.alpha}")
        if abs(self.c_N - 1.0) < 1e-12 or self.c_N <= 0:
            raise DomainError(f"c_N must be positive and != 1, got {self.c_N}")
        if not self.c_const > 0:
            raise DomainError("c_const must be positive")

    @property
    def n_factor(self) -> float:
        """N^(1 - alpha/2)."""
        return float(self.N) ** (1.0 - self.alpha / 2.0)


def sigma_alpha(inp: TheoryInputs) -> float:
    a, c = inp.alpha, inp.c_N
    var = (inp.c_const * c ** ((4.0 - a) / 4.0) * (1.0 - math.sqrt(c)) ** 4
           * (a - 2.0) / 2.0 * gamma(a / 2.0 + 1.0))
    return math.sqrt(var)


def shift_term(inp: TheoryInputs) -> float:
    """Leading displacement lambda_-^mp - lambda_shift (positive)."""
    a, c = inp.alpha, inp.c_N
    return (inp.c_const * inp.n_factor * (1.0 - math.sqrt(c)) ** 2
            / c ** ((a - 2.0) / 4.0) * gamma(a / 2.0 + 1.0))


def lambda_shift(inp: TheoryInputs) -> float:
    return mp_edges(inp.c_N)[0] - shift_term(inp)


def tilde_sigma_critical(c: float, c_const: float) -> float:
    """Standard deviation of the Gaussian component at alpha = 8/3."""
    return math.sqrt(c_const * c ** (2.0 / 3.0) * (1.0 - math.sqrt(c)) ** (4.0 / 3.0)
                     * gamma(7.0 / 3.0) / 3.0)


def gamma_limit(c: float) -> float:
    return deterministic_edge(c, 0.0)[1]


@lru_cache(maxsize=None)
def _genlag(n, p):
    x, w = roots_genlaguerre(n, p)
    return x, w


def _fourier_laguerre(p, omega):
    """int_0^inf x^p e^(-x) e^(-i omega x) dx with oscillatory-weight quadrature."""
    f = lambda x: x**p * math.exp(-x)
    scale = gamma(p + 1.0) * (1.0 + omega * omega) ** (-(p + 1.0) / 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re = integrate.quad(f, 0, np.inf, weight="cos", wvar=omega, limlst=200, epsabs=1e-13 * scale)[0]
        im = integrate.quad(f, 0, np.inf, weight="sin", wvar=omega, limlst=200, epsabs=1e-13 * scale)[0]
    return complex(re, -im)


def _laguerre_gamma_integral(m: complex, cc: float, p: float, n0=32, n_max=512, rtol=1e-13):
    """int_0^inf exp(-s - s c m) (s m)^p ds by generalized Gauss-Laguerre."""
    a = 1.0 + cc * m
    rho = a.real
    omega = a.imag / rho
    if abs(omega) > OSCILLATION_SWITCH:
        return rho ** (-p - 1.0) * m**p * _fourier_laguerre(p, omega)
    prev = None
    n = n0
    while n <= n_max:
        x, w = _genlag(n, p)
        val = rho ** (-p - 1.0) * m**p * np.sum(w * np.exp(-1j * omega * x))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return complex(val)
        prev = val
        n *= 2
    raise NumericError(f"Gauss-Laguerre did not converge (n={n // 2}, last change {abs(val - prev):.3g})")


def p_transform(inp: TheoryInputs, m: complex):
    """(quadrature, closed form) of the expectation correction at transform value m."""
    m = complex(m)
    cc, p = inp.c_N, inp.alpha / 2.0
    a = 1.0 + cc * m
    if a.real <= 0:
        raise DomainError(f"Re(1 + c m) = {a.real:.3g} <= 0")
    pref = inp.c_const * inp.n_factor * cc
    quad = pref * _laguerre_gamma_integral(m, cc, p)
    closed = pref * gamma(p + 1.0) * m**p / a ** (p + 1.0)
    return quad, closed


def _upper(z):
    z = complex(z)
    return complex(z.real, REAL_AXIS_EPS) if z.imag == 0 else z


@dataclass(frozen=True)
class ShiftEvaluation:
    z: complex
    m_mp_t: complex
    p_value: complex
    m_shift: complex
    expected_m_x: complex


def m_shift_eval(inp: TheoryInputs, z) -> ShiftEvaluation:
    """m_shift(z) and the three-term approximation of E m_X(z).

    Real z is moved to z + 1e-12 i before evaluation.
    """
    z = _upper(z)
    c, t = inp.c_N, inp.t
    lm, lp = mp_edges(c)
    w = z / (1.0 - t)
    arg = (w - lm) * (lp - w)
    if abs(arg.imag) < 1e-300 and arg.real < 0:
        raise BranchError("square-root argument on the negative real axis")
    root = cmath.sqrt(arg)
    m = mp_stieltjes_scaled(c, t, z)
    _, p_val = p_transform(inp, m)
    ms = 1j * (w - c + 1.0) * p_val / (2.0 * c * z * root)
    expected = m + ms - p_val / (2.0 * c * z)
    return ShiftEvaluation(z=z, m_mp_t=m, p_value=p_val, m_shift=ms, expected_m_x=expected)


def shift_term_via_expansion(inp: TheoryInputs) -> float:
    """2 c lambda_-^mp * t * m_shift at zeta_bar_{-,t}: the same displacement as ``shift_term``."""
    zeta_bar, _ = deterministic_edge(inp.c_N, inp.t)
    ev = m_shift_eval(inp, zeta_bar)
    lm, _ = mp_edges(inp.c_N)
    return float((2.0 * inp.c_N * lm * inp.t * ev.m_shift).real)


def c2_limit(inp: TheoryInputs) -> float:
    """t m_shift near zeta_bar in the t -> 0 limit, from m_mp(lambda_-^mp)."""
    c, p = inp.c_N, inp.alpha / 2.0
    m0 = 1.0 / (math.sqrt(c) - c)
    integral = gamma(p + 1.0) * m0**p / (1.0 + c * m0) ** (p + 1.0)
    return inp.c_const * inp.n_factor * integral / (2.0 * math.sqrt(c) * (1.0 - math.sqrt(c)))


def _tanh_sinh(n, span=3.2):
    """Nodes u, 1-u and weights of a tanh-sinh rule on (0, 1) with n points."""
    h = 2.0 * span / (n - 1)
    x = -span + h * np.arange(n)
    g = 0.5 * math.pi * np.sinh(x)
    u = 1.0 / (1.0 + np.exp(-2.0 * g))
    v = 1.0 / (1.0 + np.exp(2.0 * g))
    w = h * 0.5 * math.pi * np.cosh(x) / (2.0 * np.cosh(g) ** 2)
    return u, v, w


def _kernel_integral(m, m1, n, n1, cc, p, n0=64, n_max=1 << 14, rtol=1e-7):
    """Double Laplace-type integral of the twice-differentiated kernel.

    With (s, s') = r (u, 1 - u) the r-integral is a Gamma function; the
    remaining u-integral uses a tanh-sinh rule doubled until converged.
    """
    a, b = 1.0 + cc * m, 1.0 + cc * n
    g0, g1, g2 = gamma(p), gamma(p + 1.0), gamma(p + 2.0)
    prev = None
    npts = n0
    while npts <= n_max:
        u, v, w = _tanh_sinh(npts)
        L = u * a + v * b
        if np.any(L.real <= 0):
            raise DomainError("Re(1 + c m) must be positive along the ray")
        um, vn = u * m, v * n
        S = um + vn
        B = S**p - um**p - vn**p
        XY = 2.0 * S ** (p - 1.0) - um ** (p - 1.0) - vn ** (p - 1.0)
        f = (cc * cc * B * g2 * L ** (-p - 2.0)
             - cc * p * XY * g1 * L ** (-p - 1.0)
             + p * (p - 1.0) * S ** (p - 2.0) * g0 * L ** (-p))
        val = m1 * n1 * np.sum(w * f)
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return complex(val), npts
        prev = val
        npts *= 2
    raise NumericError(f"kernel quadrature did not converge with {npts // 2} nodes; "
                       f"last change {abs(val - prev):.3g}")


def clt_kernel(inp: TheoryInputs, z, zp) -> complex:
    """Covariance kernel K(z, z') of the linear statistic m_X near the edge."""
    c, t, p = inp.c_N, inp.t, inp.alpha / 2.0
    z, zp = _upper(z), _upper(zp)
    m, m1 = mp_stieltjes_scaled(c, t, z, 0), mp_stieltjes_scaled(c, t, z, 1)
    n, n1 = mp_stieltjes_scaled(c, t, zp, 0), mp_stieltjes_scaled(c, t, zp, 1)
    val, _ = _kernel_integral(m, m1, n, n1, c, p)
    return inp.c_const * inp.n_factor * t * t * c * val


def sigma_m(inp: TheoryInputs) -> float:
    """Limiting standard deviation of N^(alpha/4) t (m_X - E m_X) at zeta_bar_{-,t}."""
    zeta_bar, _ = deterministic_edge(inp.c_N, inp.t)
    k = clt_kernel(inp, zeta_bar, zeta_bar) / inp.n_factor
    if k.real <= 0:
        raise NumericError(f"kernel variance is not positive: {k}")
    return math.sqrt(k.real)


def edge_sigma_from_kernel(inp: TheoryInputs) -> float:
    """2 c lambda_-^mp sigma_m: the kernel-route prediction of sigma_alpha."""
    return 2.0 * inp.c_N * mp_edges(inp.c_N)[0] * sigma_m(inp)


def theory_constants(inp: TheoryInputs) -> dict:
    zeta_bar, glim = deterministic_edge(inp.c_N, inp.t)
    lm, lp = mp_edges(inp.c_N)
    out = {
        "inputs": asdict(inp),
        "lambda_minus_mp": lm,
        "lambda_plus_mp": lp,
        "sigma_alpha": sigma_alpha(inp),
        "shift_term": shift_term(inp),
        "lambda_shift": lambda_shift(inp),
        "gamma_limit": glim,
        "zeta_bar": zeta_bar,
        "tw_prefactor": glim,
    }
    if abs(inp.alpha - 8.0 / 3.0) < 1e-12:
        out["tilde_sigma"] = tilde_sigma_critical(inp.c_N, inp.c_const)
    return out
