import math

import numpy as np
import pytest

from modcomp import diffops, plusspace, qseries
from modcomp.diffops import Stencil

TAUS = [0.1 + 1.1j, -0.3 + 0.8j, 0.4 + 2.0j]


@pytest.mark.parametrize("tau", TAUS)
def test_lowering_of_v_power(tau):
    # L_k(v) = -2i v^2 * (i/2) = v^2
    val, err = diffops.lower(lambda t: t.imag, tau, 0)
    assert val == pytest.approx(tau.imag ** 2, rel=1e-10)
    assert err < 1e-8


@pytest.mark.parametrize("tau", TAUS)
def test_holomorphic_is_annihilated(tau):
    val, _ = diffops.lower(lambda t: t ** 3 + 2 * t, tau, 4)
    assert abs(val) < 1e-8
    val, _ = diffops.apply("d_tau", lambda t: t ** 3, tau)
    assert val == pytest.approx(3 * tau ** 2, rel=1e-9)


def test_polynomial_exactness():
    # fourth order stencils differentiate quartics exactly up to rounding
    f = lambda t: (t.real ** 4 - 2 * t.real * t.imag ** 3 + t.imag ** 2)
    tau = 0.3 + 1.2j
    val, _ = diffops.laplace(f, tau, 0, Stencil(h=1e-2, richardson=False))
    u, v = tau.real, tau.imag
    exact = -v * v * (12 * u * u - 12 * u * v + 2)
    assert val == pytest.approx(exact, rel=1e-9)


def test_raise_on_constant():
    val, _ = diffops.raise_(lambda t: 1.0, 0.2 + 1.5j, 3)
    assert val == pytest.approx(3 / 1.5, rel=1e-12)


def test_vector_valued():
    f = lambda t: np.array([t.imag, t.imag ** 2])
    val, _ = diffops.lower(f, 0.1 + 1.3j, 0)
    assert np.allclose(val, [1.3 ** 2, 2 * 1.3 ** 3], rtol=1e-9)


@pytest.mark.parametrize("tau", TAUS)
def test_xi_E2star(tau):
    val, err = diffops.xi(qseries.E2star_value, tau, 2)
    assert val == pytest.approx(3 / math.pi, abs=1e-8)


def test_xi_and_laplace_of_hcal():
    tau = 0.1 + 1.1j
    val, _ = diffops.xi(plusspace.hcal_scalar, tau, 1.5)
    th = qseries.classical("theta", 60).evaluate(tau)
    assert abs(val + th / (16 * math.pi)) < 1e-6
    lap, _ = diffops.laplace(plusspace.hcal_scalar, tau, 1.5, Stencil(h=1e-3 * tau.imag))
    assert abs(lap) < 1e-5


@pytest.mark.parametrize("name,f,k", [
    ("j", qseries.j_value, 0),
    ("E2*", qseries.E2star_value, 2),
    ("const", lambda t: 1.0 + 0j, 0),
])
def test_operator_identities(name, f, k):
    r = diffops.operator_identity_check(f, 0.15 + 1.2j, k)
    assert r["L_R"] < 1e-6 and r["R_L"] < 1e-6


def test_error_estimate_is_honest():
    # the reported error bounds the actual error of a non-polynomial function
    f = lambda t: np.exp(1j * t.real) * t.imag ** 2.5
    tau = 0.2 + 0.9j
    val, err = diffops.lower(f, tau, 0, Stencil(h=1e-2, richardson=False))
    exact = -2j * tau.imag ** 2 * (1j * f(tau) + 1j * 2.5 * f(tau) / tau.imag) / 2
    assert abs(val - exact) <= 2 * err
    v2, e2 = diffops.lower(f, tau, 0, Stencil(h=5e-3, richardson=False))
    assert e2 < err and abs(v2 - exact) < abs(val - exact)


def test_bad_operator_and_order():
    with pytest.raises(ValueError):
        diffops.apply("nope", lambda t: t, 1j)
    with pytest.raises(ValueError):
        diffops.lower(lambda t: t, 1j, 0, Stencil(order=3))
