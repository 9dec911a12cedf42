import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from rmtedge.errors import DimensionError, NumericError, ParameterError
from rmtedge.heavy_tail import (
    DecompositionParams, build_theta, decompose, default_params, direct_params,
    gaussian_time, in_paper_range, is_good, phi_char, sample_matrix, sample_theta,
    theta_density, theta_tail, _second_moment_below,
)


def _moments(spec):
    s0 = spec.s0
    mass = 2 * (integrate.quad(lambda x: theta_density(spec, x), 0, s0)[0]
                + integrate.quad(lambda x: theta_density(spec, x), s0, np.inf)[0])
    var = 2 * (integrate.quad(lambda x: x * x * theta_density(spec, x), 0, s0)[0]
               + integrate.quad(lambda x: x * x * theta_density(spec, x), s0, np.inf, limit=200)[0])
    return mass, var


def test_build_theta_alpha3():
    spec = build_theta(3.0, 1.0)
    assert spec.core_height == pytest.approx(0.375, abs=1e-14)
    assert spec.tail_amplitude == pytest.approx(0.375, abs=1e-14)
    # -(A/alpha) Gamma(-1/2) with Gamma(-1/2) = -2 sqrt(pi)
    assert spec.c_const == pytest.approx(0.125 * 2 * math.sqrt(math.pi), rel=1e-13)


@pytest.mark.parametrize("alpha", [2.2, 2.7, 3.0, 3.6])
def test_theta_integrates_to_unit_variance(alpha):
    spec = build_theta(alpha, 1.0)
    h, a, s0 = spec.core_height, spec.tail_amplitude, spec.s0
    assert abs(2 * (h * s0 + a / alpha * s0**-alpha) - 1) < 1e-12
    assert abs(2 * (h * s0**3 / 3 + a * s0 ** (2 - alpha) / (alpha - 2)) - 1) < 1e-12
    mass, var = _moments(spec)
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert var == pytest.approx(1.0, abs=1e-7)


def test_infeasible_s0_reports_endpoint():
    with pytest.raises(ParameterError, match=r"s0"):
        build_theta(3.0, 5.0)
    with pytest.raises(ParameterError):
        build_theta(4.5, 1.0)


def test_theta_tail_values():
    spec = build_theta(3.0, 1.0)
    assert theta_tail(spec, 0.0) == 0.5
    assert theta_tail(spec, 1.0) == pytest.approx(0.125, abs=1e-15)
    assert theta_tail(spec, 2.0) == pytest.approx(0.015625, abs=1e-15)


@given(alpha=st.floats(2.05, 3.95), s=st.floats(1.0, 1e6))
@settings(max_examples=100, deadline=None)
def test_tail_identity_exact(alpha, s):
    spec = build_theta(alpha, 1.0)
    lhs = theta_tail(spec, s) * gamma(1 - alpha / 2) / (-spec.c_const)
    assert lhs == pytest.approx(s**-alpha, rel=1e-12)


def test_sampling_deterministic_and_moments():
    spec = build_theta(3.0)
    a = sample_matrix(spec, 200, 400, seed=11)
    b = sample_matrix(spec, 200, 400, seed=11)
    assert np.array_equal(a, b)
    # 4 sigma of the sample mean with the truncated fourth moment at this size
    assert abs(np.mean(400 * a * a) - 1) < 0.05
    frac = np.mean(np.abs(math.sqrt(400) * a) > 2)
    assert abs(frac - 2 * theta_tail(spec, 2.0)) < 0.01


def test_sample_symmetry():
    spec = build_theta(2.7)
    x = sample_theta(spec, 200_000, seed=3)
    assert abs(np.mean(x > 1.5) - np.mean(x < -1.5)) < 0.005


def test_sample_matrix_rejects_wide():
    with pytest.raises(DimensionError):
        sample_matrix(build_theta(3.0), 10, 10)


def test_decompose_examples():
    p = default_params(3.0)
    N = 100
    y = np.zeros((3, N))
    d = decompose(y, p)
    assert not d.psi_mask.any() and not d.chi_mask.any()
    assert not d.a_part.any() and not d.b_part.any() and not d.c_part.any()

    y[0, 0] = 1.5 * p.heavy_cut(N)
    y[1, 1] = 0.5 * (p.light_cut(N) + p.heavy_cut(N))
    y[2, 2] = 0.5 * p.light_cut(N)
    d = decompose(y, p)
    assert d.psi_mask[0, 0] and d.c_part[0, 0] == y[0, 0] and d.a_part[0, 0] == 0 == d.b_part[0, 0]
    assert d.chi_mask[1, 1] and d.b_part[1, 1] == y[1, 1] and d.c_part[1, 1] == 0 == d.a_part[1, 1]
    assert d.a_part[2, 2] == y[2, 2] and not d.chi_mask[2, 2]


@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(2.1, 3.9))
@settings(max_examples=25, deadline=None)
def test_decompose_partition(seed, alpha):
    spec = build_theta(alpha)
    y = sample_matrix(spec, 20, 50, seed)
    d = decompose(y, direct_params(spec, 50, 0.3), spec)
    assert np.array_equal(d.a_part + d.b_part + d.c_part, y)
    nz = (d.a_part != 0).astype(int) + (d.b_part != 0) + (d.c_part != 0)
    assert np.all(nz[y != 0] == 1)
    assert 0 < d.t < 1


def test_default_params_in_paper_range():
    for alpha in (2.2, 3.0, 3.8):
        p = default_params(alpha)
        assert p.paper_mode and in_paper_range(alpha, p.eps_a, p.eps_b)
        assert p.eps_alpha == pytest.approx((alpha - 2) / (5 * alpha))
    assert not default_params(3.0, eps_b=0.5).paper_mode


def test_gaussian_time():
    spec = build_theta(3.0, 1.0)
    assert gaussian_time(spec, 1000, 0.0) == pytest.approx(0.25, abs=1e-15)
    assert gaussian_time(spec, 1000, 0.1) == pytest.approx(0.25 * 1000 ** (-0.3), rel=1e-12)
    ts = [gaussian_time(spec, 1000, e) for e in (0.0, 0.05, 0.1, 0.2)]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    ts = [gaussian_time(spec, n, 0.05) for n in (10, 100, 10**4, 10**8)]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    assert _second_moment_below(spec, math.inf) == pytest.approx(1.0, abs=1e-14)
    # direct mode inverts the truncated second moment
    p = direct_params(spec, 1000, 0.4)
    assert gaussian_time(spec, 1000, p.eps_a) == pytest.approx(0.4, rel=1e-12)
    assert not p.paper_mode


def test_is_good():
    assert is_good(np.zeros((5, 100), bool), 3.0)[:2] == (True, 0)
    thr = 100 ** (14 / 15)
    assert thr == pytest.approx(73.56, abs=0.01)
    m = np.zeros((10, 100), bool)
    m.flat[:74] = True
    good, count, t = is_good(m, 3.0)
    assert (good, count) == (False, 74) and t == pytest.approx(thr)
    m.flat[73] = False
    assert is_good(m, 3.0)[0]


@given(k=st.integers(0, 200))
@settings(max_examples=30, deadline=None)
def test_goodness_monotone(k):
    m = np.zeros((10, 100), bool)
    m.flat[:k] = True
    before = is_good(m, 3.0)[0]
    m.flat[k] = True
    assert before or not is_good(m, 3.0)[0]


def test_phi_char_zero_and_bound():
    spec = build_theta(3.0)
    q, e, d = phi_char(spec, 0.0, 10_000)
    assert q == 1 and e == 1 and d == 0
    for lam in (0.5, 3.0, 40.0, 2 - 1j, -5 - 0.5j):
        q, _, _ = phi_char(spec, lam, 10_000)
        assert abs(q) <= 1 + 1e-12
    with pytest.raises(ParameterError):
        phi_char(spec, 1 + 1j, 100)


def test_phi_char_expansion_error_order():
    spec = build_theta(3.0)
    N, lam = 10_000, 1.0
    _, _, d = phi_char(spec, lam, N)
    # remainder exponent of the exactly-Pareto law taken as 0
    bound = max(lam**1.5 * N**-1.5, lam**2 * N**-2.0)
    assert abs(d) <= 10 * bound


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("alpha", [2.5, 3.0, 3.5])
def test_phi_char_heavy_coefficient(alpha):
    """The (i lam / N)^(alpha/2) coefficient of the exact law is 2 c_const."""
    spec = build_theta(alpha)
    N, lam = 10**8, 2.0
    q, e, _ = phi_char(spec, lam, N)
    lin = e - spec.c_const * (1j * lam) ** (alpha / 2) / N ** (alpha / 2)
    coeff = (q - lin) / ((1j * lam / N) ** (alpha / 2))
    assert coeff.real == pytest.approx(2 * spec.c_const, rel=0.02)
    assert abs(coeff.imag) < 0.02 * spec.c_const


def test_phi_char_tolerance_error():
    with pytest.raises(NumericError):
        phi_char(build_theta(3.0), 1e6, 10, tol=1e-30)


def test_params_to_dict():
    p = DecompositionParams(eps_a=0.1, eps_b=0.2, alpha=3.0, paper_mode=False)
    d = p.to_dict()
    assert d["eps_alpha"] == pytest.approx(1 / 15) and d["paper_mode"] is False
