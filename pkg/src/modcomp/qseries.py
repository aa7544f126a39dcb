"""Truncated q-expansions with exact coefficients, and the classical forms.

A QSeries stores coefficients c(n) for exponents val <= n < prec; the
exponent of q is n * scale, so a series in q^(1/24) has scale 1/24.
Arithmetic tracks precision: nothing is claimed beyond the data.
Coefficients are Python ints or Fractions while building, and only turn
into floats (or mpmath numbers) when a series is evaluated.
"""

from __future__ import annotations

import cmath
import math
import threading
import warnings
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np


class PrecisionError(ArithmeticError):
    pass


class TailWarning(UserWarning):
    pass


def _trim_leading(coeffs, val):
    i = 0
    while i < len(coeffs) and coeffs[i] == 0:
        i += 1
    return coeffs[i:], val + i


class QSeries:
    __slots__ = ("val", "coeffs", "prec", "scale")

    def __init__(self, coeffs, val: int = 0, prec: int | None = None, scale=1):
        coeffs = list(coeffs)
        if prec is None:
            prec = val + len(coeffs)
        coeffs = coeffs[: max(prec - val, 0)]
        coeffs, val = _trim_leading(coeffs, val)
        if not coeffs:
            val = prec
        coeffs += [0] * (prec - val - len(coeffs))
        self.val = val
        self.coeffs = tuple(coeffs)
        self.prec = prec
        self.scale = Fraction(scale)

    # --- construction helpers ---
    @classmethod
    def monomial(cls, n: int, prec: int, c=1, scale=1):
        return cls([c], val=n, prec=prec, scale=scale)

    @classmethod
    def from_dict(cls, d: dict, prec: int, scale=1):
        if not d:
            return cls([], val=prec, prec=prec, scale=scale)
        lo = min(d)
        arr = [0] * (prec - lo)
        for n, c in d.items():
            if n < prec:
                arr[n - lo] = c
        return cls(arr, val=lo, prec=prec, scale=scale)

    def coeff(self, n: int):
        if n >= self.prec:
            raise PrecisionError(f"coefficient {n} beyond precision {self.prec}")
        if n < self.val:
            return 0
        return self.coeffs[n - self.val]

    def items(self):
        for i, c in enumerate(self.coeffs):
            if c != 0:
                yield self.val + i, c

    def to_dict(self) -> dict:
        return dict(self.items())

    def __repr__(self):
        terms = [f"{c}*q^{n}" for n, c in list(self.items())[:6]]
        s = " + ".join(terms) if terms else "0"
        return f"QSeries({s} + O(q^{self.prec}), scale={self.scale})"

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return (self.scale == other.scale and self.prec == other.prec
                and self.to_dict() == other.to_dict())

    def __hash__(self):
        return hash((self.val, self.coeffs, self.prec, self.scale))

    def truncate(self, prec: int) -> "QSeries":
        if prec > self.prec:
            raise PrecisionError("cannot raise precision by truncation")
        return QSeries(self.coeffs, self.val, prec, self.scale)

    # --- arithmetic ---
    def _check(self, other):
        if self.scale != other.scale:
            raise ValueError("exponent scales differ")

    def __add__(self, other):
        if not isinstance(other, QSeries):
            if self.prec <= 0:
                return self
            return self + QSeries([other], 0, self.prec, self.scale)
        self._check(other)
        prec = min(self.prec, other.prec)
        lo = min(self.val, other.val, prec)
        arr = [0] * (prec - lo)
        for s in (self, other):
            for i, c in enumerate(s.coeffs):
                n = s.val + i
                if n >= prec:
                    break
                arr[n - lo] += c
        return QSeries(arr, lo, prec, self.scale)

    __radd__ = __add__

    def __neg__(self):
        return QSeries([-c for c in self.coeffs], self.val, self.prec, self.scale)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, QSeries):
            return QSeries([c * other for c in self.coeffs], self.val, self.prec, self.scale)
        self._check(other)
        prec = min(self.prec + other.val, other.prec + self.val)
        val = self.val + other.val
        n = prec - val
        if n <= 0:
            return QSeries([], prec, prec, self.scale)
        a = np.array(self.coeffs[:n], dtype=object)
        b = np.array(other.coeffs[:n], dtype=object)
        prod = np.convolve(a, b)[:n]
        return QSeries(list(prod), val, prec, self.scale)

    __rmul__ = __mul__

    def inverse(self):
        if self.val >= self.prec:
            raise ZeroDivisionError("series is zero to its precision")
        c0 = self.coeffs[0]
        n = self.prec - self.val
        a = self.coeffs
        inv0 = Fraction(1, 1) / c0 if isinstance(c0, (int, Fraction)) else 1 / c0
        if isinstance(inv0, Fraction) and inv0.denominator == 1:
            inv0 = int(inv0)
        b = [inv0] + [0] * (n - 1)
        arr = np.array(a, dtype=object)
        bb = np.array(b, dtype=object)
        for k in range(1, n):
            s = np.dot(arr[1:k + 1], bb[k - 1::-1][:k]) if k else 0
            v = -s * inv0
            if isinstance(v, Fraction) and v.denominator == 1:
                v = int(v)
            bb[k] = v
        return QSeries(list(bb), -self.val, self.prec - 2 * self.val, self.scale)

    def __truediv__(self, other):
        if not isinstance(other, QSeries):
            if isinstance(other, int):
                other = Fraction(other)
            return QSeries([_norm(c / other) for c in self.coeffs], self.val, self.prec, self.scale)
        return self * other.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = None
        base = self
        while e:
            if e & 1:
                result = base if result is None else result * base
            e >>= 1
            if e:
                base = base * base
        if result is None:
            return QSeries([1], 0, self.prec - self.val, self.scale)
        return result

    def derive(self):
        """q d/dq (in units of the exponent scale: returns sum n*scale*c(n) q^n)."""
        sc = self.scale
        out = [_norm((self.val + i) * sc * c) for i, c in enumerate(self.coeffs)]
        return QSeries(out, self.val, self.prec, self.scale)

    def subs_power(self, k: int):
        """f(q) -> f(q^k)."""
        arr = [0] * (k * (self.prec - self.val))
        for i, c in enumerate(self.coeffs):
            arr[k * i] = c
        return QSeries(arr, k * self.val, k * self.prec, self.scale)

    def shift(self, k: int):
        """Multiply by q^k."""
        return QSeries(self.coeffs, self.val + k, self.prec + k, self.scale)

    def rescale(self, new_scale):
        """Re-express in units of q^new_scale (exponents must stay integral)."""
        new_scale = Fraction(new_scale)
        r = self.scale / new_scale
        if r.denominator == 1:
            return QSeries(self.subs_power(int(r)).coeffs, self.val * int(r),
                           self.prec * int(r), new_scale)
        k = (1 / r)
        if k.denominator != 1:
            raise ValueError("incompatible scales")
        k = int(k)
        d = {}
        for n, c in self.items():
            if n % k:
                raise ValueError("exponent not representable in new scale")
            d[n // k] = c
        prec = -((-self.prec) // k)
        return QSeries.from_dict(d, prec, new_scale)

    # --- evaluation ---
    def max_abs_coeff(self):
        return max((abs(c) for c in self.coeffs), default=0)

    def evaluate(self, z, nonholo=None, with_tail: bool = False, tol: float | None = None):
        """Sum c(n) e(n*scale*z) (+ nonholo(y)).

        The tail estimate is the size of the last computed terms, which is
        a heuristic stand-in for the first omitted term.  With tol set, a
        tail above tol raises a TailWarning.
        """
        val, tail = _eval(self, complex(z))
        if tol is not None and tail > tol:
            warnings.warn(f"truncation tail {tail:.2e} exceeds {tol:.2e}; raise the precision", TailWarning)
        if nonholo is not None:
            val += nonholo(complex(z).imag)
        return (val, tail) if with_tail else val

    def evaluate_mp(self, z, nonholo=None):
        """mpmath evaluation at the current mpmath working precision."""
        z = mpmath.mpmathify(z)
        q = mpmath.expjpi(2 * z * mpmath.mpf(self.scale.numerator) / self.scale.denominator)
        total = mpmath.mpc(0)
        qn = q ** self.val if self.val else mpmath.mpc(1)
        for c in self.coeffs:
            if c:
                total += _mpc(c) * qn
            qn *= q
        if nonholo is not None:
            total += nonholo(z.imag)
        return total


def _norm(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def _mpc(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    return mpmath.mpmathify(c)


def _eval(S: QSeries, z: complex):
    sc = float(S.scale)
    logq = 2j * math.pi * z * sc
    big = any(isinstance(c, (int, Fraction)) and abs(c) > 1e250 for c in S.coeffs)
    if not big:
        c = np.array([complex(x) for x in S.coeffs])
        n = S.val + np.arange(len(c))
        terms = c * np.exp(logq * n)
        tail = float(np.max(np.abs(terms[-3:]))) if len(terms) else 0.0
        return complex(terms.sum()), tail
    with mpmath.workdps(30):
        v = S.evaluate_mp(mpmath.mpc(z.real, z.imag))
        last = 0.0
        q = abs(cmath.exp(logq))
        for i in range(1, 4):
            if len(S.coeffs) >= i:
                cc = S.coeffs[-i]
                last = max(last, float(abs(_mpc(cc)) * mpmath.mpf(q) ** (S.val + len(S.coeffs) - i)))
        return complex(v), last


# --- classical series ---

def _sigma_list(k: int, N: int):
    s = [0] * N
    for d in range(1, N):
        dk = d ** k
        for m in range(d, N, d):
            s[m] += dk
    return s


def eta_product(N: int) -> QSeries:
    """prod_{n>=1} (1 - q^n) by the pentagonal number theorem."""
    arr = [0] * N
    arr[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 < N:
        sign = -1 if k % 2 else 1
        for e in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if e < N:
                arr[e] += sign
        k += 1
    return QSeries(arr, 0, N)


_lock = threading.Lock()
_cache: dict = {}


def _memo(key, builder):
    v = _cache.get(key)
    if v is None:
        with _lock:
            v = _cache.get(key)
            if v is None:
                v = builder()
                _cache[key] = v
    return v


def classical(name: str, N: int = 60) -> QSeries:
    """Classical q-expansions known for exponents < N (in their own scale).

    eta has scale 1/24; all others are series in q.  jprime is q dj/dq; the
    factor 2 pi i of d/dz is applied by the caller at evaluation time.
    """
    builders = {
        "eta": _eta,
        "delta": _delta,
        "E4": lambda n: _eis(4, 240, n),
        "E6": lambda n: _eis(6, -504, n),
        "E2star": lambda n: _eis(2, -24, n),
        "j": _j,
        "jprime": lambda n: _j(n).derive(),
        "theta": _theta,
        "hcal_holo": _hcal,
    }
    if name not in builders:
        raise KeyError(name)
    return _memo((name, N), lambda: builders[name](N))


def _eta(N):
    P = eta_product(N)
    d = {}
    for n, c in P.items():
        d[24 * n + 1] = c
    return QSeries.from_dict(d, 24 * N + 1, Fraction(1, 24))


def _delta(N):
    return (eta_product(N) ** 24).shift(1)


def _eis(k, c, N):
    s = _sigma_list(k - 1, N)
    return QSeries([1] + [c * s[n] for n in range(1, N)], 0, N)


def _j(N):
    E4 = _eis(4, 240, N + 2)
    return (E4 ** 3) / _delta(N + 1)


def _theta(N):
    arr = [0] * N
    n = 0
    while n * n < N:
        arr[n * n] += 1 if n == 0 else 2
        n += 1
    return QSeries(arr, 0, N)


def _hcal(N):
    from .qforms import hurwitz_H
    return QSeries([hurwitz_H(n) for n in range(N)], 0, N)


def faber(m: int, N: int = 60) -> QSeries:
    """j_m = q^-m + O(q), the weakly holomorphic function with that principal part."""
    if m < 0:
        raise ValueError("m >= 0")
    return _memo(("faber", m, N), lambda: _faber(m, N))


def _faber(m, N):
    if m == 0:
        return QSeries([1], 0, N)
    j1 = _j(N + m) - 744
    cur = j1
    basis = {0: QSeries([1], 0, N + m), 1: j1}
    for k in range(2, m + 1):
        cur = basis[k - 1] * j1
        for e in range(k - 1, -1, -1):
            c = cur.coeff(-e)
            if c:
                cur = cur - basis[e] * c
        basis[k] = cur
    return basis[m].truncate(N)


# --- numerical evaluators used throughout ---

def qexp(z: complex) -> complex:
    return cmath.exp(2j * math.pi * z)


def E2star_value(z: complex, N: int = 60) -> complex:
    y = z.imag
    return classical("E2star", N).evaluate(z) - 3 / (math.pi * y)


def j_value(z: complex, N: int = 60) -> complex:
    return classical("j", N).evaluate(z)


def jprime_value(z: complex, N: int = 60) -> complex:
    """dj/dz."""
    return 2j * math.pi * classical("jprime", N).evaluate(z)


def to_json(S: QSeries) -> dict:
    def enc(c):
        if isinstance(c, Fraction):
            return f"{c.numerator}/{c.denominator}"
        if isinstance(c, complex):
            return [c.real, c.imag]
        return int(c) if isinstance(c, int) else c
    return {"valuation": S.val, "precision": S.prec,
            "scale": f"{S.scale.numerator}/{S.scale.denominator}",
            "coeffs": [enc(c) for c in S.coeffs]}


def from_json(d: dict) -> QSeries:
    def dec(c):
        if isinstance(c, str):
            return _norm(Fraction(c))
        if isinstance(c, list):
            return complex(c[0], c[1])
        return c
    return QSeries([dec(c) for c in d["coeffs"]], d["valuation"], d["precision"], Fraction(d["scale"]))


def denominator_residual(tau: complex, z: complex, N: int = 40, prec: int = 100) -> float:
    """|j'(z)/(j(z) - j(tau)) + 2 pi i sum_{n<=N} j_n(tau) e(nz)| for Im z > Im tau."""
    if z.imag <= tau.imag:
        raise ValueError("needs Im z > Im tau")
    lhs = jprime_value(z) / (j_value(z) - j_value(tau))
    s = sum(faber(n, prec).evaluate(tau) * qexp(n * z) for n in range(N + 1))
    return abs(lhs + 2j * math.pi * s)
