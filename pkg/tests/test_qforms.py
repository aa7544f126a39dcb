import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from modcomp import qforms
from modcomp.qforms import DomainError, QForm


def test_reduce_examples():
    R, m = qforms.reduce(QForm(1, 0, 1))
    assert R == QForm(1, 0, 1) and m == ((1, 0), (0, 1))
    R, m = qforms.reduce(QForm(3, 2, 1))
    assert R == QForm(1, 0, 2)
    assert QForm(3, 2, 1).act(m) == R
    assert qforms.reduce(QForm(2, 2, 3))[0] == QForm(2, 2, 3)


def test_reduce_rejects_indefinite():
    with pytest.raises(DomainError):
        qforms.reduce(QForm(1, 0, -1))
    with pytest.raises(DomainError):
        qforms.reduce(QForm(0, 0, 0))


def _random_unimodular(rng):
    m = ((1, 0), (0, 1))
    for _ in range(6):
        n = rng.randint(-3, 3)
        g = ((1, n), (0, 1)) if rng.random() < 0.5 else ((0, -1), (1, 0))
        m = ((m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]),
             (m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]))
    return m


def test_reduce_idempotent_and_invariant():
    rng = random.Random(3)
    for _ in range(200):
        d = rng.choice([3, 4, 7, 8, 11, 12, 15, 20, 23, 47, 56, 71])
        Q = rng.choice(qforms.class_representatives(d))
        g = _random_unimodular(rng)
        Qg = Q.act(g)
        R, _ = qforms.reduce(Qg)
        assert R == Q
        assert qforms.reduce(R)[0] == R


def test_class_representatives_examples():
    assert qforms.class_representatives(3) == [QForm(1, 1, 1)]
    assert qforms.class_representatives(4) == [QForm(1, 0, 1)]
    assert set(qforms.class_representatives(23)) == {QForm(1, 1, 6), QForm(2, 1, 3), QForm(2, -1, 3)}
    assert set(qforms.class_representatives(20)) == {QForm(1, 0, 5), QForm(2, 2, 3)}
    with pytest.raises(DomainError):
        qforms.class_representatives(5)


def test_class_representatives_include_imprimitive():
    reps = qforms.class_representatives(12)
    assert QForm(2, 2, 2) in reps
    assert QForm(2, 2, 2) not in qforms.class_representatives(12, primitive=True)


def _count_classes_by_exhaustion(d):
    # reduce every form in a box large enough to contain a reduced form of each class
    seen = set()
    B = math.isqrt(d) + 1
    for a in range(1, B + 1):
        for b in range(-B, B + 1):
            if (b * b + d) % (4 * a) == 0:
                seen.add(qforms.reduce(QForm(a, b, (b * b + d) // (4 * a)))[0])
    return len(seen)


def test_class_counts_match_exhaustion():
    for d in range(3, 201):
        if (-d) % 4 in (0, 1):
            assert len(qforms.class_representatives(d)) == _count_classes_by_exhaustion(d), d


def _stabilizer_by_search(Q):
    count = 0
    for a, b, c, d in itertools.product(range(-2, 3), repeat=4):
        if a * d - b * c == 1 and Q.act(((a, b), (c, d))) == Q:
            count += 1
    return count // 2  # +-gamma


def test_stabilizer_order():
    for Q, w in ((QForm(1, 1, 1), 3), (QForm(1, 0, 1), 2), (QForm(1, 0, 5), 1)):
        assert qforms.stabilizer_order(Q) == w == _stabilizer_by_search(Q)


def test_hurwitz_values():
    assert qforms.hurwitz_H(0) == Fraction(-1, 12)
    assert qforms.hurwitz_H(3) == Fraction(1, 3)
    assert qforms.hurwitz_H(4) == Fraction(1, 2)
    assert qforms.hurwitz_H(5) == 0
    for n in range(1, 200):
        if n % 4 in (1, 2):
            assert qforms.hurwitz_H(n) == 0


def test_hurwitz_class_number_relation():
    # sum_s H(4n - s^2) = 2 sigma(n) - sum_{t | n} min(t, n/t)
    for n in range(1, 51):
        lhs = sum((qforms.hurwitz_H(4 * n - s * s) for s in range(-math.isqrt(4 * n), math.isqrt(4 * n) + 1)),
                  Fraction(0))
        divs = [t for t in range(1, n + 1) if n % t == 0]
        assert lhs == 2 * sum(divs) - sum(min(t, n // t) for t in divs)


def test_cm_point():
    assert qforms.cm_point(QForm(1, 0, 1)) == pytest.approx(1j)
    assert qforms.cm_point(QForm(1, 1, 1)) == pytest.approx((-1 + 1j * math.sqrt(3)) / 2)
    assert qforms.cm_point(QForm(2, 2, 3)) == pytest.approx((-1 + 1j * math.sqrt(5)) / 2)
    with pytest.raises(DomainError):
        qforms.cm_point(QForm(1, 0, -1))


def test_genus_character_examples():
    rng = random.Random(1)
    for _ in range(20):
        a, b, c = rng.randint(-9, 9), rng.randint(-9, 9), rng.randint(-9, 9)
        if (a, b, c) != (0, 0, 0):
            assert qforms.genus_character(QForm(a, b, c), 1) == 1
    assert qforms.genus_character(QForm(5, 5, 5), 5) == 0
    assert qforms.genus_character(QForm(1, 1, -1), 5) == 1


def test_genus_character_errors():
    with pytest.raises(DomainError):
        qforms.genus_character(QForm(1, 0, 1), 5)     # 5 does not divide -4
    with pytest.raises(DomainError):
        qforms.genus_character(QForm(1, 1, -20), 9)   # 9 is not fundamental

def test_genus_character_independent_of_represented_value():
    # chi_D(Q) = (D/n) for every represented n coprime to D
    rng = random.Random(7)
    for D in (5, -3, -4, 8, 12, 13):
        for _ in range(10):
            while True:
                a, b, c = rng.randint(-6, 6), rng.randint(-12, 12), rng.randint(-6, 6)
                disc = b * b - 4 * a * c
                if disc != 0 and disc % D == 0 and (disc // D) % 4 in (0, 1) and math.gcd(math.gcd(a, b), math.gcd(c, D)) == 1:
                    break
            Q = QForm(a, b, c)
            chi = qforms.genus_character(Q, D)
            vals = set()
            for x in range(-8, 9):
                for y in range(-8, 9):
                    n = Q(x, y)
                    if n != 0 and math.gcd(n, D) == 1:
                        vals.add(qforms.kronecker(D, n))
            assert vals == {chi}


def test_genus_character_vectorized_matches_scalar():
    rng = np.random.default_rng(0)
    for D in (5, -3, -4, 8, -8, 12, 13, -7):
        a = rng.integers(-20, 21, 300)
        b = rng.integers(-40, 41, 300)
        c = rng.integers(-20, 21, 300)
        disc = b * b - 4 * a * c
        keep = (disc % abs(D) == 0) & np.isin(np.mod(np.where(disc % abs(D) == 0, disc // D, 2), 4), (0, 1)) & (disc != 0)
        a, b, c = a[keep], b[keep], c[keep]
        vec = qforms.genus_character_array(a, b, c, D)
        for i in range(len(a)):
            assert vec[i] == qforms.genus_character(QForm(int(a[i]), int(b[i]), int(c[i])), D)


def test_geometry_examples():
    g = qforms.geometry(QForm(1, 0, 1), 1j)
    assert (g.p, g.q_poly, g.r, g.majorant) == pytest.approx((-2, 0, 0, 1))
    g = qforms.geometry(QForm(0, 0, 0), 0.3 + 1.2j)
    assert (g.p, g.q_poly, g.r, g.majorant) == (0, 0, 0, 0)
    g = qforms.geometry(QForm(1, 0, -1), 1j)
    assert (g.p, g.q_poly, g.r, g.majorant) == pytest.approx((0, -2, 2, 1))


def test_geometry_identities():
    rng = np.random.default_rng(5)
    for _ in range(10_000 // 20):
        a, b, c = (int(t) for t in rng.integers(-30, 31, 3))
        if (a, b, c) == (0, 0, 0):
            continue
        z = complex(rng.uniform(-2, 2), rng.uniform(0.2, 3))
        g = qforms.geometry(QForm(a, b, c), z)
        lhs = abs(g.q_poly) ** 2 / z.imag ** 2
        assert abs(2 * g.r - lhs) <= 1e-12 * max(lhs, 1)
        maj = 0.25 * g.p ** 2 + abs(g.q_poly) ** 2 / (4 * z.imag ** 2)
        assert abs(g.majorant - maj) <= 1e-12 * maj
        assert abs(g.majorant - (float(QForm(a, b, c).norm) + g.r)) <= 1e-10 * maj


def test_enumerate_by_majorant():
    pts = qforms.enumerate_by_majorant(1j, 1.0, q0=1)
    rows = {tuple(r) for r in pts}
    assert (1, 0, 1) in rows and (-1, 0, -1) in rows
    assert len(qforms.enumerate_by_majorant(1j, 0.0)) == 0
    z = 0.23 + 1.1j
    small = {tuple(r) for r in qforms.enumerate_by_majorant(z, 5.0)}
    big = qforms.enumerate_by_majorant(z, 10.0)
    assert small <= {tuple(r) for r in big}
    assert len(big) == len({tuple(r) for r in big})
    maj = qforms.majorant_array(big[:, 0], big[:, 1], big[:, 2], z)
    assert np.all(np.diff(np.round(maj, 12)) >= 0)
    # brute force count
    brute = 0
    for a in range(-8, 9):
        for b in range(-8, 9):
            for c in range(-8, 9):
                if (a, b, c) != (0, 0, 0) and qforms.geometry(QForm(a, b, c), z).majorant <= 10.0:
                    brute += 1
    assert brute == len(big)
