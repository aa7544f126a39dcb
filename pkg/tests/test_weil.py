import cmath
import math
import random

import numpy as np
import pytest

from modcomp import plusspace, qseries, weil
from modcomp.weil import MetaElt


def _random_elt(rng):
    g = weil.IDENTITY
    for _ in range(rng.randint(1, 6)):
        g = g * (weil.MetaElt(1, rng.randint(-3, 3), 0, 1) if rng.random() < 0.5 else weil.S)
    return g


def test_generators():
    assert np.allclose(weil.rho(weil.T), np.diag([1, cmath.exp(-2j * math.pi / 4)]))
    s = cmath.sqrt(1j) / math.sqrt(2)
    assert np.allclose(weil.rho(weil.S), s * np.array([[1, 1], [1, -1]]))
    assert np.allclose(weil.rho(weil.IDENTITY), np.eye(2))
    # rho(Z) e_h = i e_{-h}, and -h = h in L'/L
    assert np.allclose(weil.rho(weil.Z), 1j * np.eye(2))
    assert np.allclose(weil.rho(weil.T, conjugate=True), np.conj(weil.rho(weil.T)))


def test_homomorphism_and_unitarity():
    rng = random.Random(11)
    for _ in range(200):
        g1, g2 = _random_elt(rng), _random_elt(rng)
        r1, r2 = weil.rho(g1), weil.rho(g2)
        assert np.allclose(weil.rho(g1 * g2), r1 @ r2, atol=1e-12)
        assert np.allclose(r1 @ r1.conj().T, np.eye(2), atol=1e-12)


def test_metaplectic_cocycle():
    rng = random.Random(2)
    tau = 0.13 + 0.9j
    for _ in range(100):
        g1, g2 = _random_elt(rng), _random_elt(rng)
        g = g1 * g2
        assert g.phi(tau) == pytest.approx(g1.phi(g2.act(tau)) * g2.phi(tau))


def test_slash_group_law():
    # a vector-valued weight 3/2 function: the completed class number series
    f = plusspace.hcal_vector
    SS = weil.slash(weil.slash(f, 1.5, weil.S), 1.5, weil.S)
    Zf = weil.slash(f, 1.5, weil.Z)
    for tau in (0.1 + 1.1j, -0.3 + 0.8j, 0.45 + 1.4j, 0.02 + 2.0j, -0.2 + 1.2j):
        assert np.allclose(SS(tau), Zf(tau), atol=1e-12)


def test_slash_trivial_cases():
    th = lambda t: np.array([qseries.classical("theta", 40).evaluate(t), 0])
    tau = 0.2 + 1.1j
    # weight 0 and the identity: nothing happens
    assert np.allclose(weil.slash(th, 0, weil.IDENTITY)(tau), th(tau))
    # e(n^2 tau) has period 1 and sits in e_0 where rho(T) acts trivially
    assert np.allclose(weil.slash(th, 0.5, weil.T)(tau), th(tau))
    # a character: e(-tau/4) e_1 is T-invariant for rho
    f = lambda t: np.array([0, cmath.exp(-2j * math.pi * t / 4)])
    assert np.allclose(weil.slash(f, 1.5, weil.T)(tau), f(tau))


def test_coset_reps():
    reps = weil.coset_reps(1)
    assert weil.IDENTITY in reps
    assert any((g.c, g.d) == (1, 0) for g in reps)
    assert all(math.gcd(g.c, g.d) == 1 for g in reps if g.c)
    C = 200
    pairs = [(c, d) for c in range(1, C + 1) for d in range(-C, C + 1) if math.gcd(c, d) == 1 and c * c + d * d <= C * C]
    count = len(pairs)
    assert abs(count / (C * C * math.pi / 2 * 6 / math.pi ** 2) - 1) < 0.05
    with pytest.raises(ValueError):
        weil.coset_reps(0)


def test_scalar_bridge():
    # the vector class number series bridges to the scalar one
    for tau in (0.1 + 0.3j, -0.2 + 0.25j):
        s = weil.scalar_bridge(plusspace.hcal_vector)(tau)
        assert s == pytest.approx(plusspace.hcal_scalar(tau), rel=1e-12)
    one = lambda t: np.array([1.0, 0.0])
    assert weil.scalar_bridge(one)(0.3 + 0.4j) == 1.0
    c0, c1 = weil.split_plus({n: qseries.classical("hcal_holo", 20).coeff(n) for n in range(20)}, 1.5)
    assert all(n % 4 == 0 for n, c in c0.items() if c) and all(n % 4 == 3 for n, c in c1.items() if c)
    with pytest.raises(ValueError):
        weil.split_plus({1: 1}, 1.5)


def test_lowering_commutes_with_bridge():
    from modcomp import diffops
    f = plusspace.hcal_vector
    g = weil.scalar_bridge(f)
    for tau in (0.1 + 0.3j, -0.15 + 0.28j, 0.3 + 0.35j):
        lhs, _ = diffops.lower(g, tau, 1.5)
        lv, _ = diffops.lower(f, 4 * tau, 1.5)
        assert lhs == pytest.approx((lv[0] + lv[1]) / 4, rel=1e-7)


def test_symmetry_relation():
    # invariance under Z~ is the symmetry relation f_{-h} = (-1)^(k + 1/2) f_h with -h = h
    tau = 0.2 + 1.1j
    val = weil.slash(plusspace.hcal_vector, 1.5, weil.Z)(tau)
    assert np.allclose(val, plusspace.hcal_vector(tau), atol=1e-12)
    g = lambda t: np.asarray(plusspace.f_vector(3, t))
    assert np.allclose(weil.slash(g, 0.5, weil.Z, "rho_bar")(tau), g(tau), atol=1e-10)
