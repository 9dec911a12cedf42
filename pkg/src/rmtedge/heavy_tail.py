"""Exact-tail entry law, data-matrix sampling and the A/B/C decomposition.

The entry law is a symmetric two-piece density: uniform height ``h`` on
``[-s0, s0]`` and an exact Pareto tail ``A |x|^(-alpha-1)`` beyond.  The pair
``(h, A)`` is fixed by normalization and unit variance, so the tail
probability is exactly ``c / |Gamma(1 - alpha/2)| * s^(-alpha)`` for s >= s0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gamma

from .errors import DimensionError, NumericError, ParameterError


@dataclass(frozen=True)
class ThetaSpec:
    alpha: float
    s0: float
    core_height: float
    tail_amplitude: float
    c_const: float

    @property
    def tail_mass(self) -> float:
        """P(|Theta| > s0)."""
        return 2.0 * self.tail_amplitude / self.alpha * self.s0 ** (-self.alpha)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "s0": self.s0,
            "core_height": self.core_height,
            "tail_amplitude": self.tail_amplitude,
            "c_const": self.c_const,
        }


def _solve_heights(alpha, s0):
    # rows: normalization, unit variance; unknowns (h, A)
    mat = np.array(
        [
            [2.0 * s0, 2.0 * s0 ** (-alpha) / alpha],
            [2.0 * s0**3 / 3.0, 2.0 * s0 ** (2.0 - alpha) / (alpha - 2.0)],
        ]
    )
    return np.linalg.solve(mat, np.ones(2))


def _feasible(alpha, s0):
    h, a = _solve_heights(alpha, s0)
    return h > 0 and a > 0


def _feasibility_edge(alpha, s0, iters=200):
    # s0 = 1 is always feasible: h = 3/(2(alpha+1)), A = alpha(alpha-2)/(2(alpha+1))
    lo, hi = sorted((1.0, s0))
    good_is_lo = s0 > 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _feasible(alpha, mid) == good_is_lo:
            lo = mid
        else:
            hi = mid
    return lo if good_is_lo else hi


def build_theta(alpha: float, s0: float = 1.0) -> ThetaSpec:
    """Build the unit-variance symmetric law with an exact Pareto tail.

    Raises
    ------
    ParameterError
        If alpha is outside (2, 4), or s0 makes the core height or the tail
        amplitude nonpositive.  The message names the feasible endpoint of
        s0 on the offending side, located by bisection.
    """
    if not 2.0 < alpha < 4.0:
        raise ParameterError(f"alpha must lie in (2, 4), got {alpha}")
    if not s0 > 0:
        raise ParameterError(f"s0 must be positive, got {s0}")
    h, a = _solve_heights(alpha, s0)
    if not (h > 0 and a > 0):
        edge = _feasibility_edge(alpha, s0)
        side = "above" if s0 < 1.0 else "below"
        raise ParameterError(
            f"s0={s0} infeasible for alpha={alpha} (h={h:.6g}, A={a:.6g}); "
            f"feasible s0 must lie {side} {edge:.12g}"
        )
    c_const = -(a / alpha) * gamma(1.0 - alpha / 2.0)
    return ThetaSpec(alpha=float(alpha), s0=float(s0), core_height=float(h),
                     tail_amplitude=float(a), c_const=float(c_const))


def theta_tail(spec: ThetaSpec, s: float) -> float:
    """P(Theta > s) for s >= 0."""
    if s < 0:
        raise ParameterError("theta_tail expects s >= 0")
    if s <= spec.s0:
        return 0.5 - spec.core_height * s
    return spec.tail_amplitude / spec.alpha * s ** (-spec.alpha)


def theta_density(spec: ThetaSpec, x):
    x = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        tail = spec.tail_amplitude * np.where(x > 0, x, 1.0) ** (-spec.alpha - 1.0)
    return np.where(x <= spec.s0, spec.core_height, tail)


def theta_inverse_abs(spec: ThetaSpec, v):
    """Inverse of v = P(|Theta| > s), vectorized over v in (0, 1]."""
    v = np.asarray(v, dtype=float)
    q0 = spec.tail_mass
    core = (1.0 - v) / (2.0 * spec.core_height)
    with np.errstate(divide="ignore"):
        tail = (2.0 * spec.tail_amplitude / (spec.alpha * v)) ** (1.0 / spec.alpha)
    return np.where(v >= q0, core, tail)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_theta(spec: ThetaSpec, size, seed=None) -> np.ndarray:
    rng = make_rng(seed)
    v = 1.0 - rng.random(size)  # (0, 1]
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * theta_inverse_abs(spec, v)


def sample_matrix(spec: ThetaSpec, M: int, N: int, seed=None) -> np.ndarray:
    """M x N matrix with i.i.d. entries Theta / sqrt(N)."""
    if not 1 <= M < N:
        raise DimensionError(
            f"need 1 <= M < N, got M={M}, N={N}; transpose the roles of M and N"
        )
    return sample_theta(spec, (M, N), seed) / math.sqrt(N)


@dataclass(frozen=True)
class DecompositionParams:
    """Exponents of the light and heavy thresholds.

    Entries with ``|y| < N^(-1/2-eps_a)`` go to A, ``|y| >= N^(-eps_b)`` to C,
    the rest to B.  ``paper_mode`` is False whenever the exponents were set
    outside ``0 < eps_b < (alpha-2)/(10 alpha)``, ``0 < eps_a < min(eps_b, 4-alpha)/1e4``.
    """

    eps_a: float
    eps_b: float
    alpha: float
    paper_mode: bool = True
    t_target: float | None = None

    @property
    def eps_alpha(self) -> float:
        return (self.alpha - 2.0) / (5.0 * self.alpha)

    def light_cut(self, N: int) -> float:
        return N ** (-0.5 - self.eps_a)

    def heavy_cut(self, N: int) -> float:
        return N ** (-self.eps_b)

    def to_dict(self):
        return {"eps_a": self.eps_a, "eps_b": self.eps_b, "eps_alpha": self.eps_alpha,
                "paper_mode": self.paper_mode, "t_target": self.t_target}


def in_paper_range(alpha, eps_a, eps_b) -> bool:
    return (0 < eps_b < (alpha - 2.0) / (10.0 * alpha)
            and 0 < eps_a < min(eps_b, 4.0 - alpha) / 10000.0)


def default_params(alpha: float, eps_a=None, eps_b=None) -> DecompositionParams:
    if eps_b is None:
        eps_b = 0.9 * (alpha - 2.0) / (10.0 * alpha)
    if eps_a is None:
        eps_a = 0.9 * min(eps_b, 4.0 - alpha) / 10000.0
    return DecompositionParams(eps_a=float(eps_a), eps_b=float(eps_b), alpha=float(alpha),
                               paper_mode=in_paper_range(alpha, eps_a, eps_b))


def direct_params(spec: ThetaSpec, N: int, t_target: float, eps_b=None) -> DecompositionParams:
    """Parameters whose light threshold makes the Gaussian time equal ``t_target``.

    The heavy exponent keeps its default unless given.  Always flagged
    with ``paper_mode=False``.
    """
    cut = cutoff_for_time(spec, t_target)
    eps_a = -math.log(cut) / math.log(N)
    if eps_b is None:
        eps_b = 0.9 * (spec.alpha - 2.0) / (10.0 * spec.alpha)
    return DecompositionParams(eps_a=eps_a, eps_b=float(eps_b), alpha=spec.alpha,
                               paper_mode=False, t_target=float(t_target))


def _second_moment_below(spec: ThetaSpec, cut: float) -> float:
    """E[Theta^2 1{|Theta| < cut}]."""
    h, a, al, s0 = spec.core_height, spec.tail_amplitude, spec.alpha, spec.s0
    if math.isinf(cut):
        return 2.0 * h * s0**3 / 3.0 + 2.0 * a * s0 ** (2.0 - al) / (al - 2.0)
    if cut <= s0:
        return 2.0 * h * cut**3 / 3.0
    return 2.0 * h * s0**3 / 3.0 + 2.0 * a / (al - 2.0) * (s0 ** (2.0 - al) - cut ** (2.0 - al))


def gaussian_time(spec: ThetaSpec, N: int, eps_a: float) -> float:
    """t = N E|A_ij|^2 = E[Theta^2 1{|Theta| < N^(-eps_a)}], in closed form."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    return _second_moment_below(spec, N ** (-eps_a))


def cutoff_for_time(spec: ThetaSpec, t: float) -> float:
    """Inverse of the truncated second moment: the Theta-scale cut giving time t."""
    if not 0 < t < 1:
        raise ParameterError(f"t must lie in (0, 1), got {t}")
    h, a, al, s0 = spec.core_height, spec.tail_amplitude, spec.alpha, spec.s0
    core = 2.0 * h * s0**3 / 3.0
    if t <= core:
        return (1.5 * t / h) ** (1.0 / 3.0)
    rest = s0 ** (2.0 - al) - (t - core) * (al - 2.0) / (2.0 * a)
    return rest ** (1.0 / (2.0 - al))


@dataclass
class Decomposition:
    y: np.ndarray
    a_part: np.ndarray
    b_part: np.ndarray
    c_part: np.ndarray
    psi_mask: np.ndarray
    chi_mask: np.ndarray
    params: DecompositionParams
    t: float
    dims: tuple = field(default=())

    @property
    def x(self) -> np.ndarray:
        """X = B + C."""
        return self.b_part + self.c_part


def decompose(y: np.ndarray, params: DecompositionParams, spec: ThetaSpec | None = None) -> Decomposition:
    """Split ``y`` into light, intermediate and heavy parts by thresholding.

    ``t`` is the exact Gaussian time of ``spec`` when given (or ``t_target``
    in direct mode); without either it is left as NaN.
    """
    y = np.asarray(y, dtype=float)
    M, N = y.shape
    ay = np.abs(y)
    psi = ay >= params.heavy_cut(N)
    chi = (~psi) & (ay >= params.light_cut(N))
    light = ~(psi | chi)
    zero = np.zeros_like(y)
    c_part = np.where(psi, y, zero)
    b_part = np.where(chi, y, zero)
    a_part = np.where(light, y, zero)
    if params.t_target is not None:
        t = params.t_target
    elif spec is not None:
        t = gaussian_time(spec, N, params.eps_a)
    else:
        t = float("nan")
    return Decomposition(y=y, a_part=a_part, b_part=b_part, c_part=c_part,
                         psi_mask=psi, chi_mask=chi, params=params, t=float(t),
                         dims=(M, N, M / N))


def is_good(psi_mask: np.ndarray, alpha: float):
    """Return ``(good, count, threshold)`` with threshold N^(1 - (alpha-2)/(5 alpha))."""
    psi_mask = np.asarray(psi_mask, dtype=bool)
    N = psi_mask.shape[1] if psi_mask.ndim == 2 else psi_mask.size
    count = int(psi_mask.sum())
    threshold = N ** (1.0 - (alpha - 2.0) / (5.0 * alpha))
    return count <= threshold, count, threshold


def _quad_complex(f, a, b, **kw):
    re, er = integrate.quad(lambda u: f(u).real, a, b, limit=400, **kw)[:2]
    im, ei = integrate.quad(lambda u: f(u).imag, a, b, limit=400, **kw)[:2]
    return complex(re, im), max(er, ei)


def _one_minus_phi(spec: ThetaSpec, lam: complex, N: int, cut: float):
    """1 - E exp(-i lam Theta^2 1{|Theta|>=cut} / N), by quadrature."""
    h, a, p = spec.core_height, spec.tail_amplitude, spec.alpha / 2.0
    err = 0.0
    core = 0.0j
    if cut < spec.s0:
        def fc(th):
            return 1.0 - np.exp(-1j * lam * th * th / N)
        val, e = _quad_complex(fc, cut, spec.s0, epsabs=1e-15, epsrel=1e-12)
        core = 2.0 * h * val
        err += 2.0 * h * e
    lo = max(cut, spec.s0) ** 2 / N
    lr, li = lam.real, lam.imag
    # substitute u = Theta^2 / N on the Pareto segment
    # int_lo^inf u^(-p-1) (1 - i lam u - e^{-i lam u}) du + i lam int_lo^inf u^(-p) du
    lin = 1j * lam * lo ** (1.0 - p) / (p - 1.0)

    def fr(u):
        return -u ** (-p - 1.0) * (np.expm1(-1j * lam * u) + 1j * lam * u)

    split = max(lo, 1.0 / max(abs(lam), 1e-300))
    near, e1 = _quad_complex(fr, lo, split, epsabs=1e-15, epsrel=1e-11,
                             points=np.geomspace(lo, split, 12)[1:-1] if split > lo * 2 else None)
    # beyond split: closed-form non-oscillatory terms plus the Fourier part
    far_alg = split ** (-p) / p - 1j * lam * split ** (1.0 - p) / (p - 1.0)
    if lr == 0.0:
        fourier, e2 = _quad_complex(lambda u: u ** (-p - 1.0) * np.exp(li * u), split, np.inf,
                                    epsabs=1e-15, epsrel=1e-11)
    else:
        def g(u):
            return u ** (-p - 1.0) * math.exp(li * u)
        cr, e_c = integrate.quad(g, split, np.inf, weight="cos", wvar=lr, limlst=200)[:2]
        sr, e_s = integrate.quad(g, split, np.inf, weight="sin", wvar=lr, limlst=200)[:2]
        fourier, e2 = complex(cr, -sr), max(e_c, e_s)
    tail = near + far_alg - fourier + lin
    err += a * N ** (-p) * (e1 + e2)
    return core + a * N ** (-p) * tail, err


def phi_char(spec: ThetaSpec, lam: complex, N: int, eps_a: float | None = None, tol: float = 1e-9):
    """Characteristic function of ``N x^2`` for an entry of X = B + C.

    Returns ``(quadrature, expansion, difference)`` where the expansion is
    ``1 - i(1-t) lam / N + c (i lam)^(alpha/2) / N^(alpha/2)``.  With
    ``eps_a=None`` the default light exponent is used.
    """
    lam = complex(lam)
    if lam.imag > 0:
        raise ParameterError("phi_char needs Im(lambda) <= 0")
    if eps_a is None:
        eps_a = default_params(spec.alpha).eps_a
    if lam == 0:
        return 1.0 + 0.0j, 1.0 + 0.0j, 0.0j
    cut = N ** (-eps_a)
    om, err = _one_minus_phi(spec, lam, N, cut)
    scale = max(abs(om), 1e-300)
    if not np.isfinite(om) or err > max(tol * scale, 1e-14):
        raise NumericError(f"phi_char quadrature did not converge; residual estimate {err:.3g}")
    quad_val = 1.0 - om
    t = gaussian_time(spec, N, eps_a)
    p = spec.alpha / 2.0
    expansion = 1.0 - 1j * (1.0 - t) * lam / N + spec.c_const * (1j * lam) ** p / N**p
    return quad_val, expansion, quad_val - expansion
