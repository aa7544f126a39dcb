import cmath
import math
import warnings
from fractions import Fraction

import pytest

from modcomp import qseries
from modcomp.qseries import PrecisionError, QSeries, TailWarning


def test_arithmetic_examples():
    a = QSeries([1, 1], 0, 10)
    b = QSeries([1, -1], 0, 10)
    assert (a * b).to_dict() == {0: 1, 2: -1}
    assert QSeries.monomial(-1, 10).derive().to_dict() == {-1: -1}
    geo = QSeries([1], 0, 8) / QSeries([1, -1], 0, 8)
    assert geo.to_dict() == {n: 1 for n in range(8)}


def test_precision_tracking():
    a = QSeries([1, 2, 3], 0, 3)
    b = QSeries([1, 1, 1, 1, 1], 0, 5)
    assert (a + b).prec == 3
    assert (a.shift(-1) * b).prec == 2
    with pytest.raises(PrecisionError):
        a.coeff(3)
    with pytest.raises(ZeroDivisionError):
        QSeries([1], 0, 5) / QSeries([], 5, 5)


def test_division_exact_and_pow():
    a = QSeries([2, 1], 0, 12)
    inv = QSeries([1], 0, 12) / a
    assert all(isinstance(c, (int, Fraction)) for c in inv.coeffs)
    assert (inv * a).to_dict() == {0: 1}
    assert (a ** 3).to_dict() == {0: 8, 1: 12, 2: 6, 3: 1}


def test_classical_j():
    j = qseries.classical("j", 10)
    assert [j.coeff(n) for n in (-1, 0, 1, 2)] == [1, 744, 196884, 21493760]
    E4, delta = qseries.classical("E4", 12), qseries.classical("delta", 12)
    assert (E4 ** 3 / delta).truncate(9) == j.truncate(9)


def test_classical_others():
    E2 = qseries.classical("E2star", 20)
    sigma = lambda n: sum(d for d in range(1, n + 1) if n % d == 0)
    assert E2.coeff(0) == 1
    assert all(E2.coeff(n) == -24 * sigma(n) for n in range(1, 20))
    th = qseries.classical("theta", 20)
    assert th.to_dict() == {0: 1, 1: 2, 4: 2, 9: 2, 16: 2}
    eta = qseries.classical("eta", 10)
    assert eta.scale == Fraction(1, 24)
    assert [eta.coeff(n) for n in (1, 25, 49, 121, 169)] == [1, -1, -1, 1, 1]
    h = qseries.classical("hcal_holo", 10)
    assert h.coeff(0) == Fraction(-1, 12) and h.coeff(3) == Fraction(1, 3)


def test_faber():
    assert qseries.faber(0, 10).to_dict() == {0: 1}
    j = qseries.classical("j", 12)
    assert qseries.faber(1, 10) == (j - 744).truncate(10)
    j2 = (j * j - 1488 * j + 159768).truncate(10)
    assert qseries.faber(2, 10) == j2
    f2 = qseries.faber(2, 10)
    assert [f2.coeff(n) for n in (-2, -1, 0)] == [1, 0, 0]


def test_faber_integral():
    for m in range(21):
        f = qseries.faber(m, 8)
        assert all(isinstance(c, int) for c in f.coeffs)
        assert f.coeff(-m) == 1
        assert all(f.coeff(n) == 0 for n in range(-m + 1, 1)) or m == 0


def test_evaluation():
    j = qseries.classical("j", 40)
    assert abs(j.evaluate(2j) - j.evaluate(2j + 1)) < 1e-10 * abs(j.evaluate(2j))
    assert abs(qseries.j_value(1j, 40) - 1728) < 1e-8
    th = qseries.classical("theta", 40)
    z = 0.2 + 0.7j
    assert abs(th.evaluate(z) - th.evaluate(z + 1)) < 1e-12


def test_tail_warning():
    j = qseries.classical("j", 5)
    with pytest.warns(TailWarning):
        j.evaluate(0.3j, tol=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        qseries.classical("j", 60).evaluate(1.5j, tol=1e-10)


def test_modularity_residuals():
    z = 0.2 + 1.1j
    j = qseries.classical("j", 60)
    delta = qseries.classical("delta", 60)
    assert abs(j.evaluate(-1 / z) - j.evaluate(z)) <= 1e-8 * abs(j.evaluate(z))
    assert abs(delta.evaluate(-1 / z) - z ** 12 * delta.evaluate(z)) <= 1e-8
    E2 = qseries.E2star_value
    assert abs(E2(-1 / z) - z ** 2 * E2(z)) <= 1e-8


def test_denominator_formula():
    assert qseries.denominator_residual(0.1 + 1.0j, 0.05 + 1.5j, 40) <= 1e-8
    with pytest.raises(ValueError):
        qseries.denominator_residual(0.1 + 1.5j, 0.05 + 1.0j)


def test_json_round_trip():
    for S in (qseries.classical("j", 10), qseries.classical("eta", 5), QSeries([Fraction(1, 3), 2], -1, 4)):
        T = qseries.from_json(qseries.to_json(S))
        assert T == S
        assert T.evaluate(0.1 + 1.3j) == S.evaluate(0.1 + 1.3j)
