import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from interface_spectra import dispersion as D
from interface_spectra.errors import EndpointUndefinedError, YPoleError
from interface_spectra.profile import InterfaceConfig, ShearProfile as S

from conftest import make_concave, make_convex, make_couette, make_kh

CV = make_convex()
CC = make_concave()


def coth(x):
    return 1.0 / math.tanh(x)


# -- Y ------------------------------------------------------------------------


def test_Y_linear_lower():
    assert abs(D.Y("lower", 5.0, 2.0, make_couette()) - 2 * coth(2)) < 1e-10


def test_Y_constant_upper():
    assert abs(D.Y("upper", 5.0, 3.0, make_kh()) + 3 * coth(3)) < 1e-10


def test_Y_k0_closed_form():
    p = CV.lower
    for c in (1.5, -2.0):
        integral, _ = integrate.quad(lambda x: (p.eval(x)[0] - c) ** -2, -1, 0, epsabs=0, epsrel=1e-13)
        U0, d1, _ = p.eval(0.0)
        ref = d1 / (U0 - c) + 1.0 / ((U0 - c) ** 2 * integral)
        assert abs(D.Y("lower", c, 0.0, CV) - ref) < 1e-9 * abs(ref)
        assert abs(D.Y_k0("lower", c, CV) - ref) < 1e-12 * abs(ref)


def test_Y_k0_upper_sign():
    # the upper closed form carries a minus sign in front of the integral term
    p = CV.upper
    c = -1.0
    integral, _ = integrate.quad(lambda x: (p.eval(x)[0] - c) ** -2, 0, 1, epsabs=0, epsrel=1e-13)
    U0, d1, _ = p.eval(0.0)
    ref = d1 / (U0 - c) - 1.0 / ((U0 - c) ** 2 * integral)
    assert abs(D.Y("upper", c, 0.0, CV) - ref) < 1e-9 * abs(ref)


def test_Y_frozen():
    assert D.Y("lower", 1.5, 1.0, CV) == pytest.approx(1.2429651830919541, rel=1e-9)
    assert D.Y("upper", -1.0, 1.0, CV) == pytest.approx(-1.3803934229500934, rel=1e-9)


def test_Y_errors():
    with pytest.raises(EndpointUndefinedError):
        D.Y("lower", CV.lower.interface_value, 1.0, CV)
    with pytest.raises(YPoleError):
        D.Y("lower", 1.5, 1.0, CV, pole_tol=2.0)


def test_Y_imag_linear_zero():
    assert D.Y_imag_formula("lower", -0.5, 1.0, make_couette()) == 0.0


def test_Y_imag_upper_convex_negative():
    c = CV.upper.eval(0.5)[0]
    assert D.Y_imag_formula("upper", c, 1.0, CV) < 0
    assert D.Y("upper", c, 1.0, CV).imag < 0


def test_Y_cauchy_linear():
    assert abs(D.Y_cauchy("lower", 2.0, 1.5, make_couette()) - 1.5 * coth(1.5)) < 1e-12


def test_Y_cauchy_matches_Y():
    assert abs(D.Y_cauchy("lower", 1.5, 1.0, CV) - D.Y("lower", 1.5, 1.0, CV)) < 1e-3
    assert abs(D.Y_cauchy("upper", -1.0, 1.0, CV) - D.Y("upper", -1.0, 1.0, CV)) < 1e-3


def test_Y_cauchy_k0_term():
    # the additive coth term tends to 1/h as k -> 0
    assert D._coth_term("lower", 0.0, 2.0) == pytest.approx(0.5)
    assert D._coth_term("lower", 1e-8, 2.0) == pytest.approx(0.5, rel=1e-12)


# -- F -----------------------------------------------------------------------


def kh_F(c, k, eps=0.1, g=9.8, sigma=0.07):
    return eps * k * coth(k) * (1 - c) ** 2 + k * coth(k) * c**2 - g * (1 - eps) - sigma * k * k


@pytest.mark.parametrize("c", [-2.0, 0.3 + 0.4j, 2.5, 1.7 - 0.2j])
def test_F_kelvin_helmholtz(c):
    assert abs(D.F_value(c, 2.0, 0.1, make_kh()) - kh_F(c, 2.0)) < 1e-10


def test_kh_roots_solve_quadratic():
    for k in (0.5, 2.0, 10.0):
        for c in D.kh_roots(k, 0.1, make_kh()):
            assert abs(kh_F(c, k)) < 1e-9


def test_F_conjugate():
    c = 0.4 + 0.3j
    assert abs(D.F_value(c.conjugate(), 1.3, 0.1, CV) - D.F_value(c, 1.3, 0.1, CV).conjugate()) < 1e-12


def test_F_eps0_at_interface_value():
    k = 2.0
    F = D.F_value(CV.lower.interface_value, k, 0.0, CV)
    assert F == pytest.approx(-CV.g - CV.sigma * k * k / CV.rho_minus, abs=1e-12)


def test_F_frozen():
    F = D.F_value(2 + 0.5j, 1.0, 0.1, CV)
    assert F.real == pytest.approx(-2.091334412319342, rel=1e-8)
    assert F.imag == pytest.approx(3.2096051260135874, rel=1e-8)


def test_F_k0_agrees():
    for c in (-1.5, 2.5, 0.2 + 0.3j):
        assert abs(D.F_k0(c, 0.1, CV) - D.F_value(c, 0.0, 0.1, CV)) < 1e-9


def test_evaluate_many_matches():
    cs = [-1.5, 2.5, 0.2 + 0.3j, 1.0 + 0.01j]
    ks = [0.5, 1.0, 2.0, 3.0]
    for p, c, k in zip(D.evaluate_many(cs, ks, 0.1, CV), cs, ks):
        assert abs(p.F - D.F_value(c, k, 0.1, CV)) < 1e-9 * (1 + abs(p.F))


def test_eps_above_one_warns():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        D.evaluate(2.5, 1.0, 1.5, CV)
    assert any("eps" in str(x.message) for x in w)


# -- derivatives -------------------------------------------------------------


def test_dF_dc_couette_closed_form():
    cfg = make_couette()
    c, k, eps = 2.5, 1.5, 0.1
    Yp, Ym = -k * coth(k), k * coth(k)
    dp, dm = 1.0 - c, 0.0 - c
    ref = eps * (-1.0 + 2 * dp * Yp) + 1.0 - 2 * dm * Ym
    assert abs(D.dF_dc(c, k, eps, cfg) - ref) < 1e-10


def fd(f, x, h):
    return (f(x + h) - f(x - h)) / (2 * h)


def test_dF_dc_fd():
    c = 2 + 0.5j
    an = D.dF_dc(c, 1.2, 0.1, CV)
    num = fd(lambda z: D.F_value(z, 1.2, 0.1, CV), c, 1e-5)
    assert abs(an - num) < 1e-6 * abs(an)


def test_dF_dc_at_bed_value():
    a = CV.lower.wall_value
    assert D.dF_dc(a, 0.0, 0.0, CV).real == pytest.approx(-CV.lower.eval(-1.0)[1], abs=1e-9)


def test_dF_dK_couette_fd():
    cfg = make_couette()
    c, k = 2.5, 1.5
    an = D.dF_dK(c, k, 0.1, cfg)
    num = fd(lambda K: D.F_value(c, math.sqrt(K), 0.1, cfg), k * k, 1e-5)
    assert abs(an - num) < 1e-7 * abs(an)
    # closed form of the lower part: c^2 int sinh^2(k(x+h)) / sinh^2(kh)
    lower = c**2 * (math.sinh(2 * k) / (4 * k) - 0.5) / math.sinh(k) ** 2
    assert D.dY_dK("lower", c, k, cfg).real * c**2 == pytest.approx(lower, rel=1e-9)


def test_dK_at_bed_value_k0():
    a = CV.lower.wall_value
    ref, _ = integrate.quad(lambda x: (CV.lower.eval(x)[0] - a) ** 2, -1, 0)
    val = D.dY_dK("lower", a, 0.0, CV).real * (CV.lower.interface_value - a) ** 2
    assert val == pytest.approx(ref, rel=1e-8)


def test_dK_vanishes_towards_interface_value():
    U0 = CV.lower.interface_value
    vals = [abs(D.dY_dK("lower", U0 + d, 0.0, CV)) * d * d for d in (1e-2, 1e-3, 1e-4)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_dF_deps_examples():
    assert D.dF_deps(CV.upper.wall_value, 0.0, CV).real == pytest.approx(CV.g, abs=1e-9)
    U0 = CV.upper.interface_value
    vals = [D.dF_deps(U0 - d, 0.0, CV).real for d in (1e-3, 1e-5, 1e-7)]
    assert abs(vals[-1] - CV.g) < abs(vals[0] - CV.g)
    assert abs(vals[-1] - CV.g) < 1e-3


def test_dF_deps_affine():
    c, k = 0.3 + 0.4j, 1.7
    num = (D.F_value(c, k, 0.3, CV) - D.F_value(c, k, 0.2, CV)) / 0.1
    assert abs(D.dF_deps(c, k, CV) - num) < 1e-8 * abs(num)


# -- property suites ---------------------------------------------------------

real_outside = st.one_of(st.floats(-4.0, -0.85), st.floats(1.75, 5.0))


@settings(max_examples=20, deadline=None)
@given(real_outside, st.floats(0.0, 6.0), st.floats(0.0, 1.0))
def test_F_real_off_range(c, k, eps):
    F = D.F_value(c, k, eps, CV)
    assert abs(F.imag) <= 1e-10 * max(abs(F), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(min_magnitude=0.1, max_magnitude=3), st.floats(0.1, 6.0))
def test_F_even_in_k(c, k):
    if abs(c.imag) < 0.05:
        c = complex(c.real, 0.3)
    assert D.F_value(c, k, 0.1, CV) == D.F_value(c, -k, 0.1, CV)


@settings(max_examples=50, deadline=None)
@given(real_outside, st.floats(0.05, 30.0), st.floats(0.0, 1.0), st.sampled_from(["cv", "cc"]))
def test_F_concave_in_K(c, K, eps, which):
    cfg = CV if which == "cv" else CC
    if which == "cc" and -1.25 < c < -0.85:
        c -= 0.5
    h = 1e-3 * (1 + K)
    f = [D.F_value(c, math.sqrt(K + j * h), eps, cfg).real for j in (-1, 0, 1)]
    assert f[0] - 2 * f[1] + f[2] < 0


@settings(max_examples=50, deadline=None)
@given(real_outside, st.floats(0.0, 8.0))
def test_Y_monotone_in_K(c, k):
    assert D.dY_dK("lower", c, k, CV).real > 0
    assert D.dY_dK("upper", c, k, CV).real < 0


@pytest.mark.parametrize("cfg", [CV, CC], ids=["convex", "concave"])
@pytest.mark.parametrize("c,k", [(-2.5, 0.7), (3.0, 1.5), (-1.6, 3.0)])
def test_mixed_derivative_sign(cfg, c, k):
    h = 1e-4
    up = fd(lambda z: D.dY_dK("upper", z, k, cfg).real, c, h)
    lo = fd(lambda z: D.dY_dK("lower", z, k, cfg).real, c, h)
    assert np.sign(up) == cfg.upper.convexity
    assert np.sign(lo) == -cfg.lower.convexity


def test_large_k_envelope():
    c = 2.5
    r = [abs(D.Y("lower", c, k, CV) - k * coth(k)) / k for k in (20, 40, 80, 160)]
    assert all(r[i] > r[i + 1] for i in range(3))
    assert r[-1] < 0.01


def test_log_singularity_bound():
    U0 = CV.lower.interface_value
    k = 1.0
    ratios = [abs(D.Y("lower", U0 + d, k, CV)) / (math.sqrt(1 + k * k) + abs(math.log(d)))
              for d in 10.0 ** -np.arange(2, 11)]
    steps = np.diff(ratios)
    # bounded: the ratio settles with shrinking increments
    assert np.all(np.abs(steps[1:]) < np.abs(steps[:-1]))
    assert max(ratios) < 1.0


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.5, 2.5), st.floats(0.1, 1.0), st.floats(0.1, 5.0))
def test_cauchy_riemann(x, y, k):
    c = complex(x, y)
    h = 1e-5
    fx = fd(lambda t: D.F_value(c + t, k, 0.1, CV), 0.0, h)
    fy = fd(lambda t: D.F_value(c + 1j * t, k, 0.1, CV), 0.0, h)
    assert abs(fx - fy / 1j) <= 1e-6 * max(abs(fx), 1.0)


@pytest.mark.parametrize("c", [-0.801, -0.85, 0.02, 0.3 + 0.2j])
def test_Y_cauchy_near_range_ends(c):
    from interface_spectra.rayleigh import critical_interface

    ref = critical_interface(CV.lower, c, 1.0).Y if isinstance(c, float) else D.Y("lower", c, 1.0, CV)
    assert abs(D.Y_cauchy("lower", c, 1.0, CV) - ref) < 1e-6 * abs(ref)
