import math

import numpy as np
import pytest
from scipy.integrate import quad

from modcomp import specialfn as sf
from modcomp.qforms import DomainError


def test_erfc():
    assert sf.erfc(0.0) == 1.0
    assert sf.erfc(-1.3) == pytest.approx(2 - sf.erfc(1.3), rel=1e-15)
    # midpoint rule with 10^6 panels on [0, 1]: erfc(1) = 1 - (2/sqrt pi) int_0^1 e^(-t^2) dt
    n = 10 ** 6
    t = (np.arange(n) + 0.5) / n
    val = 1 - 2 / math.sqrt(math.pi) * np.exp(-t * t).sum() / n
    assert sf.erfc(1.0) == pytest.approx(val, rel=1e-11)
    assert sf.erfc(40.0) == 0.0


def test_upper_gamma_examples():
    assert sf.upper_gamma(1, 2.0) == pytest.approx(math.exp(-2), rel=1e-15)
    assert sf.upper_gamma(0.5, 1.0) == pytest.approx(math.sqrt(math.pi) * math.erfc(1.0), rel=1e-15)
    ref, _ = quad(lambda t: math.exp(-t) * t ** -1.5, 1, np.inf, epsabs=0, epsrel=1e-13)
    assert sf.upper_gamma(-0.5, 1.0) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(DomainError):
        sf.upper_gamma(0.5, 0.0)
    with pytest.raises(DomainError):
        sf.upper_gamma(0.3, 1.0)


def test_upper_gamma_recurrence():
    for two_s in range(-3, 8):
        s = two_s / 2
        for x in (0.1, 1.0, 10.0):
            lhs = sf.upper_gamma(s + 1, x)
            rhs = s * sf.upper_gamma(s, x) + x ** s * math.exp(-x)
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1e-300) + 1e-300


def test_upper_gamma_against_quadrature():
    for s in (-1.5, -1, -0.5, 0, 0.5, 2.5, 3):
        for x in (0.3, 2.5, 12.0):
            ref, _ = quad(lambda t: math.exp(-t) * t ** (s - 1), x, np.inf, epsabs=0, epsrel=1e-13)
            assert sf.upper_gamma(s, x) == pytest.approx(ref, rel=1e-10)


def test_W_k():
    k = 1.5
    for x in (-0.4, -2.0):
        # W_k(x) = (-2x)^(1-k) E_k(-2x) = Gamma(1-k, -2x) for x < 0
        via_E = (-2 * x) ** (1 - k) * sf.expint_E(k, -2 * x)
        assert sf.W_k(x, k) == pytest.approx(via_E, rel=1e-10)
    for x, kk in ((0.3, 1.5), (1.7, -0.5), (-0.8, 2.5)):
        assert isinstance(sf.W_k(x, kk), float)
    x = 20.0
    assert abs(sf.W_k(-x, k)) <= 2 * x ** (1 - k) * math.exp(-2 * x) * 2 ** (1 - k)
    with pytest.raises(DomainError):
        sf.W_k(0.0, 1.5)


def test_kernel_closed_form_vs_quadrature():
    assert sf.kernel_K(2.0, 1.3) == pytest.approx(sf.kernel_K_quad(2.0, 1.3), rel=1e-10)
    worst = 0.0
    for w in np.linspace(-5, 5, 20):
        for v in np.linspace(0.1, 5, 20):
            a, b = sf.kernel_K(w, v), sf.kernel_K_quad(w, v)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    assert worst <= 1e-9


def test_kernel_special_cases():
    v = 0.8
    # closed form at w = 0: sgn(0) = 0 leaves the Gaussian term
    assert sf.kernel_K(0.0, v) == pytest.approx(math.exp(-math.pi * v) / (2 * math.pi * math.sqrt(v)))
    w, v = -3.0, 0.7
    s = w / math.sqrt(v) - math.sqrt(v)
    assert abs(sf.kernel_K(w, v)) <= 2 / (math.pi * math.sqrt(v)) * math.exp(-math.pi * s * s)
    with pytest.raises(DomainError):
        sf.kernel_K(1.0, 0.0)


def test_derivatives_match():
    h = 1e-5
    x = 0.7
    d_erfc = (sf.erfc(x + h) - sf.erfc(x - h)) / (2 * h)
    assert d_erfc == pytest.approx(-2 / math.sqrt(math.pi) * math.exp(-x * x), abs=1e-6)
    s = 1.5
    d_gamma = (sf.upper_gamma(s, x + h) - sf.upper_gamma(s, x - h)) / (2 * h)
    assert d_gamma == pytest.approx(-x ** (s - 1) * math.exp(-x), abs=1e-6)
