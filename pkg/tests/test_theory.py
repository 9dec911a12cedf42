import cmath
import math

import mpmath
import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma

from rmtedge.errors import DomainError
from rmtedge.free_convolution import deterministic_edge
from rmtedge.mp_law import mp_edges, mp_stieltjes_scaled
from rmtedge.theory import (
    TheoryInputs, c2_limit, clt_kernel, edge_sigma_from_kernel, lambda_shift, m_shift_eval,
    p_transform, shift_term, shift_term_via_expansion, sigma_alpha, sigma_m, theory_constants,
    tilde_sigma_critical,
)


def inp(**kw):
    d = dict(alpha=3.0, c_N=0.25, c_const=1.0, N=1000, t=0.05)
    d.update(kw)
    return TheoryInputs(**d)


def test_gamma_accuracy():
    for x in np.linspace(-2.97, 10, 400):
        if abs(x - round(x)) < 1e-6 and x <= 0:
            continue
        assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)


def test_sigma_alpha():
    ref = 0.25**0.25 * 0.5**4 * 0.5 * (3 * math.sqrt(math.pi) / 4)
    assert sigma_alpha(inp()) ** 2 == pytest.approx(ref, rel=1e-14)
    assert sigma_alpha(inp(alpha=2.0 + 1e-9)) < 1e-4
    assert sigma_alpha(inp(c_const=2.0)) / sigma_alpha(inp()) == pytest.approx(math.sqrt(2), rel=1e-14)


def test_lambda_shift():
    term = 1000**-0.5 * 0.25 / 0.25**0.25 * float(mpmath.gamma(2.5))
    assert shift_term(inp()) == pytest.approx(term, rel=1e-13)
    assert lambda_shift(inp()) == pytest.approx(0.25 - term, rel=1e-13)
    assert lambda_shift(inp(N=1e12)) == pytest.approx(0.25, abs=1e-5)
    a = 10.0 / 3.0
    vals = [shift_term(inp(alpha=a, N=n)) * n ** (2 / 3) for n in (1e2, 1e4, 1e8)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-12) == vals[2]


def test_tilde_sigma():
    ref = 0.25 ** (2 / 3) * 0.5 ** (4 / 3) * float(mpmath.gamma(7 / 3)) / 3
    assert tilde_sigma_critical(0.25, 1.0) ** 2 == pytest.approx(ref, rel=1e-13)
    assert tilde_sigma_critical(0.25, 3.0) / tilde_sigma_critical(0.25, 1.0) == pytest.approx(math.sqrt(3))
    # both fluctuation scales are N^(-2/3) at the critical index
    assert (8 / 3) / 4 == pytest.approx(2 / 3)
    d = theory_constants(inp(alpha=8 / 3))
    assert "tilde_sigma" in d


def test_inputs_validation():
    with pytest.raises(DomainError):
        inp(alpha=4.0)
    with pytest.raises(DomainError):
        inp(c_N=1.0)
    with pytest.raises(DomainError):
        inp(c_const=0.0)


def test_p_transform_at_mp_edge():
    for alpha in (2.2, 3.0, 3.6):
        i = inp(alpha=alpha)
        c = i.c_N
        m0 = 1 / (math.sqrt(c) - c)
        q, closed = p_transform(i, m0)
        ref = i.n_factor * c * gamma(alpha / 2 + 1) * c ** (-alpha / 4) * (1 - math.sqrt(c))
        assert closed == pytest.approx(ref, rel=1e-13)
        assert q == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("alpha", [2.2, 2.7, 3.0, 3.6])
def test_p_transform_quadrature_vs_closed(alpha):
    rng = np.random.default_rng(int(alpha * 10))
    i = inp(alpha=alpha)
    n = 0
    while n < 50:
        m = complex(rng.uniform(-3, 10), rng.uniform(-4, 4))
        if (1 + i.c_N * m).real <= 0.05:
            continue
        q, closed = p_transform(i, m)
        assert abs(q - closed) <= 1e-9 * abs(closed)
        n += 1


def test_p_transform_real_positive_and_domain():
    q, closed = p_transform(inp(), 2.5)
    assert abs(closed.imag) < 1e-15 and closed.real > 0
    with pytest.raises(DomainError):
        p_transform(inp(), -5.0)


def test_m_shift_limit_and_order():
    for t in (0.002, 0.01, 0.05):
        i = inp(t=t, N=1e6, c_const=0.443)
        zb, _ = deterministic_edge(i.c_N, t)
        ev = m_shift_eval(i, zb)
        assert abs(t * ev.m_shift - c2_limit(i)) <= 10 * t * i.n_factor
        assert abs(ev.m_shift) <= 10 / t * i.n_factor
        # three-term expectation stays within O(t^-1 N^(1 - alpha/2)) of m_mp^(t)
        assert abs(ev.expected_m_x - ev.m_mp_t) <= 1e2 / t * i.n_factor


def test_m_shift_positive_on_real_axis():
    i = inp(t=0.01, N=1e6)
    zb, _ = deterministic_edge(i.c_N, i.t)
    ms = m_shift_eval(i, zb).m_shift
    assert ms.real > 0 and abs(ms.imag) < 1e-6 * ms.real


def test_shift_route_consistency():
    i = inp(t=0.01, N=1e6, c_const=0.443)
    assert shift_term_via_expansion(i) == pytest.approx(shift_term(i), rel=0.10)


def _log_form(p, m, n, c):
    """Underived kernel integral in one-dimensional form (independent representation)."""
    a, b = 1 + c * m, 1 + c * n

    def f(u):
        return u ** (-p - 1) * cmath.log(1 + u * m / a) * cmath.log(1 + u * n / b)

    re = integrate.quad(lambda u: f(u).real, 0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    im = integrate.quad(lambda u: f(u).imag, 0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    return complex(re, im) / gamma(-p)


def test_log_form_matches_double_integral():
    p, c, m, n = 1.5, 0.25, 3.0, 2.5
    a, b = 1 + c * m, 1 + c * n

    def g(s, sp):
        return math.exp(-s * a - sp * b) / (s * sp) * ((s * m + sp * n) ** p - (s * m) ** p - (sp * n) ** p)

    dbl = integrate.dblquad(g, 0, np.inf, 0, np.inf, epsabs=1e-12)[0]
    assert dbl == pytest.approx(_log_form(p, m, n, c).real, rel=1e-8)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_kernel_against_mixed_derivative():
    i = inp(alpha=3.0, t=0.05)
    c, t, p = i.c_N, i.t, 1.5
    z, zp = 0.22 + 0.01j, 0.21 + 0.02j
    m, m1 = mp_stieltjes_scaled(c, t, z), mp_stieltjes_scaled(c, t, z, 1)
    n, n1 = mp_stieltjes_scaled(c, t, zp), mp_stieltjes_scaled(c, t, zp, 1)
    h = 1e-4
    mixed = (_log_form(p, m + h, n + h, c) - _log_form(p, m + h, n - h, c)
             - _log_form(p, m - h, n + h, c) + _log_form(p, m - h, n - h, c)) / (4 * h * h)
    ref = i.c_const * i.n_factor * t * t * c * m1 * n1 * mixed
    assert clt_kernel(i, z, zp) == pytest.approx(ref, rel=1e-3)


def test_kernel_diagonal_closed_form():
    i = inp(alpha=3.0, t=0.05)
    c, t, p = i.c_N, i.t, 1.5
    z = 0.22 + 1e-3j
    m, m1 = mp_stieltjes_scaled(c, t, z), mp_stieltjes_scaled(c, t, z, 1)
    a = 1 + c * m
    closed = p * (p - 1) * gamma(p) * a ** (-2 - p) * m ** (p - 2)
    ref = i.c_const * i.n_factor * t * t * c * m1 * m1 * closed
    assert clt_kernel(i, z, z) == pytest.approx(ref, rel=1e-7)


def test_kernel_symmetry_and_conjugation():
    i = inp(alpha=2.6, t=0.05)
    z, zp = 0.22 + 0.003j, 0.2 + 0.01j
    k = clt_kernel(i, z, zp)
    assert clt_kernel(i, zp, z) == pytest.approx(k, rel=1e-9)
    assert clt_kernel(i, z.conjugate(), zp.conjugate()) == pytest.approx(k.conjugate(), rel=1e-9)


def test_sigma_m_route_limit():
    """The kernel route gives sqrt(c) sigma_alpha as t -> 0."""
    for c in (0.25, 0.5):
        ratio = edge_sigma_from_kernel(inp(c_N=c, t=0.002)) / sigma_alpha(inp(c_N=c, t=0.002))
        assert ratio == pytest.approx(math.sqrt(c), rel=0.01)
    assert sigma_m(inp()) > 0


def test_constants_continuous():
    alphas = np.linspace(2.05, 3.95, 40)
    for c in (0.1, 0.4, 0.8):
        s = np.array([sigma_alpha(inp(alpha=a, c_N=c)) for a in alphas])
        sh = np.array([shift_term(inp(alpha=a, c_N=c)) for a in alphas])
        assert np.all(np.isfinite(s)) and np.all(s > 0) and np.all(sh > 0)
        assert np.max(np.abs(np.diff(s))) < 0.08
    for a in (2.5, 3.5):
        cs = np.linspace(0.05, 0.95, 40)
        s = np.array([sigma_alpha(inp(alpha=a, c_N=c)) for c in cs])
        assert np.all(s > 0) and np.max(np.abs(np.diff(s))) < 0.08
    lm, _ = mp_edges(0.25)
    assert theory_constants(inp())["lambda_minus_mp"] == lm
