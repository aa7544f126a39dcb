import math

import numpy as np
import pytest

from modcomp import qforms, theta, weil
from modcomp.qforms import DomainError
from modcomp.theta import EvalBudget, ThetaKind


def test_kind_validation():
    with pytest.raises(ValueError):
        ThetaKind("nope", 1)
    with pytest.raises(DomainError):
        ThetaKind("siegel", 9)
    with pytest.raises(ValueError):
        ThetaKind("km", 1, 1)
    assert ThetaKind("siegel", -3).vanishes
    assert ThetaKind("shintani", 5, 0).vanishes and not ThetaKind("shintani", 5, 1).vanishes
    assert ThetaKind("millson", -4, 0).rep == "rho_bar"


def test_vanishing_kinds():
    tv = theta.theta_eval(ThetaKind("siegel", -3), 0.1 + 1j, 0.2 + 1.2j)
    assert np.all(tv.value == 0)
    assert np.all(theta.coset_expansion(ThetaKind("millson", 5), 0.1 + 1j, 0.2 + 1.2j) == 0)


def test_vanishing_pairs_cancel_termwise():
    # with the parity condition violated, lambda and -lambda give opposite summands
    rng = np.random.default_rng(4)
    z, v = 0.3 + 1.1j, 0.9
    for kind in (ThetaKind("shintani", 5, 0), ThetaKind("millson", -3, 1), ThetaKind("millson", 5, 0)):
        for _ in range(100):
            a, b, c = rng.integers(-9, 10, 3)
            lam = np.array([a]), np.array([b]), np.array([c])
            neg = np.array([-a]), np.array([-b]), np.array([-c])
            absD = abs(kind.D)
            p1 = theta._polynomial(kind, v, z.imag, *theta._geometry_arrays(*lam, z)[:3], absD)
            p2 = theta._polynomial(kind, v, z.imag, *theta._geometry_arrays(*neg, z)[:3], absD)
            disc = int(b * b - 4 * a * c)
            if disc == 0 or disc % absD or (disc // kind.D) % 4 not in (0, 1):
                continue
            ch1 = qforms.genus_character(qforms.QForm(int(a), int(b), int(c)), kind.D)
            ch2 = qforms.genus_character(qforms.QForm(int(-a), int(-b), int(-c)), kind.D)
            assert ch1 * p1[0] + ch2 * p2[0] == pytest.approx(0, abs=1e-12 * (abs(p1[0]) + 1))


def test_siegel_zero_vector_term():
    # the lambda = 0 term of Theta_S,1 is v e_0; bridged it becomes 4v at d = 0
    tau, z = 0.1 + 3.0j, 0.2 + 1.2j
    val = theta.theta_vec(ThetaKind("siegel", 1), tau, z)
    # the remaining terms are exponentially small in v
    assert val[0] == pytest.approx(tau.imag, rel=5e-3)
    assert abs(val[0] - tau.imag) > abs(theta.theta_vec(ThetaKind("siegel", 1), 2 * tau, z)[0] - 2 * tau.imag)
    s = theta.scalar_siegel(tau / 4, z)
    assert s.real == pytest.approx(tau.imag, rel=2e-2)


def test_doubling_within_tail_bound():
    tau, z = 0.1 + 0.9j, 0.2 + 1.2j
    kind = ThetaKind("siegel", 1)
    a = theta.theta_eval(kind, tau, z, EvalBudget(T=20.0))
    b = theta.theta_eval(kind, tau, z, EvalBudget(T=40.0))
    assert np.max(np.abs(a.value - b.value)) <= a.tail_bound + 1e-14
    assert b.tail_bound < a.tail_bound


def test_modularity_examples():
    for tau in (0.1 + 1.1j, -0.3 + 0.8j, 0.37 + 1.6j):
        z = 0.2 + 1.3j
        f = lambda t: theta.theta_vec(ThetaKind("siegel", 1), t, z, EvalBudget(T=60.0))
        assert np.allclose(weil.slash(f, -0.5, weil.S)(tau), f(tau), atol=1e-6 * np.abs(f(tau)).max())
    km = ThetaKind("km", 5)
    tau, z = 0.1 + 1.1j, 0.2 + 1.3j
    assert np.allclose(theta.theta_vec(km, tau, z + 1), theta.theta_vec(km, tau, z), rtol=1e-13, atol=1e-15)
    sh = ThetaKind("shintani", 5, 1)
    r = theta.modularity_residual(sh, tau, z)
    assert r["z_S"] <= 1e-5


@pytest.mark.parametrize("kind,D,k", [("siegel", 1, 0), ("km", 5, 0), ("shintani", -4, 0),
                                      ("millson", -3, 0), ("shintani", 5, 1), ("millson", 8, 1)])
def test_modularity_all_generators(kind, D, k):
    r = theta.modularity_residual(ThetaKind(kind, D, k), -0.21 + 0.95j, 0.4 + 1.05j)
    assert max(r.values()) <= 1e-10


def test_differential_equations():
    tau, z = 0.1 + 1.1j, 0.2 + 1.3j
    r = theta.diffeq_residuals("S-KM", 1, tau, z)
    assert r["raise"] <= 1e-5 and r["lower"] <= 1e-4
    r = theta.diffeq_residuals("Sh-M", -3, tau, z)
    assert max(r.values()) <= 1e-4
    with pytest.raises(ValueError):
        theta.diffeq_residuals("x", 1, tau, z)


def test_coset_expansions():
    tau, z = 0.05 + 1.1j, 0.1 + 1.3j
    for kind in (ThetaKind("km", 1), ThetaKind("millson", -4)):
        a = theta.coset_expansion(kind, tau, z)
        b = theta.theta_vec(kind, tau, z)
        assert np.max(np.abs(a - b)) <= 1e-4 * np.max(np.abs(b))


def test_order_independence():
    kind = ThetaKind("km", 5)
    tau, z = 0.1 + 0.9j, 0.2 + 1.2j
    T = 40.0
    a, b, c, comp, chi = theta._points(z, T, 5)
    p, qz, qzb, Q, R = theta._geometry_arrays(a, b, c, z)
    terms = chi * theta._polynomial(kind, tau.imag, z.imag, p, qz, qzb, 5) * np.exp(
        -2 * math.pi * tau.imag * (Q + R) / 5) * np.exp(2j * math.pi * Q * tau.real / 5)
    perm = np.random.default_rng(0).permutation(len(terms))
    assert abs(terms.sum() - terms[perm].sum()) <= 1e-12 * np.abs(terms).sum()


def test_scalar_bridge_siegel():
    z = 0.2 + 1.3j
    for tau in (0.1 + 0.3j, -0.2 + 0.28j, 0.31 + 0.5j):
        vec = weil.scalar_bridge(lambda t: theta.theta_vec(ThetaKind("siegel", 1), t, z))(tau)
        assert vec == pytest.approx(theta.scalar_siegel(tau, z), rel=1e-10)


def test_value_dict():
    tv = theta.theta_eval(ThetaKind("km", 1), 0.1 + 1j, 0.2 + 1.2j)
    d = tv.to_dict()
    assert len(d["value"]) == 4 and d["tail_bound"] >= 0
