"""Integer binary quadratic forms and the lattice L'.

A triple (a, b, c) of integers is read either as the form ax^2 + bxy + cy^2
or as the lattice vector

    lambda = [[-b/2, -c], [a, b/2]]  in  L',

with Q(lambda) = det(lambda) = -disc/4.  L'/L is Z/2, the class being b mod 2.

Besides reduction, class sets and Hurwitz class numbers this module holds the
geometric functionals p_lambda, Q_lambda, R of a vector relative to a point
z in the upper half plane, and the majorant enumeration used by every
truncated lattice sum in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True, order=True)
class QForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def norm(self) -> Fraction:
        """Q(lambda) = -disc/4."""
        return Fraction(-self.disc, 4)

    def is_positive_definite(self) -> bool:
        return self.a > 0 and self.disc < 0

    def content(self) -> int:
        return math.gcd(math.gcd(self.a, self.b), self.c)

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    def act(self, m) -> "QForm":
        """Q o m, i.e. (x, y) -> Q(alpha x + beta y, gamma x + delta y)."""
        (al, be), (ga, de) = m
        a, b, c = self.a, self.b, self.c
        return QForm(
            a * al * al + b * al * ga + c * ga * ga,
            2 * a * al * be + b * (al * de + be * ga) + 2 * c * ga * de,
            a * be * be + b * be * de + c * de * de,
        )

    def __neg__(self) -> "QForm":
        return QForm(-self.a, -self.b, -self.c)

    def __iter__(self):
        return iter((self.a, self.b, self.c))


def _matmul(m, n):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


_ID = ((1, 0), (0, 1))


def reduce(Q: QForm):
    """Gauss reduction of a positive definite form.

    Returns (R, m) with R = Q o m reduced: |b| <= a <= c, and b >= 0
    whenever |b| = a or a = c.
    """
    if not isinstance(Q, QForm):
        Q = QForm(*Q)
    if not Q.is_positive_definite():
        raise DomainError(f"reduce needs a positive definite form, got {tuple(Q)}")
    m = _ID
    while True:
        a, b, c = Q
        if abs(b) > a or b == -a:
            # translate: b -> b + 2an lands in (-a, a]
            n = (a - b) // (2 * a)
            t = ((1, n), (0, 1))
            Q, m = Q.act(t), _matmul(m, t)
            continue
        if c < a or (c == a and b < 0):
            s = ((0, -1), (1, 0))
            Q, m = Q.act(s), _matmul(m, s)
            continue
        return Q, m


def is_reduced(Q: QForm) -> bool:
    a, b, c = Q
    if not (abs(b) <= a <= c):
        return False
    if (abs(b) == a or a == c) and b < 0:
        return False
    return True


def _check_disc(d: int):
    if d <= 0 or (-d) % 4 not in (0, 1):
        raise DomainError(f"-{d} is not a negative discriminant")


@lru_cache(maxsize=None)
def _class_reps(d: int, primitive: bool):
    reps = []
    amax = math.isqrt(d // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b + d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            Q = QForm(a, b, c)
            if primitive and Q.content() != 1:
                continue
            reps.append(Q)
    return tuple(sorted(reps))


def class_representatives(d: int, primitive: bool = False) -> list[QForm]:
    """Reduced positive definite forms of discriminant -d, one per class.

    Imprimitive forms are included unless ``primitive`` is set.
    """
    _check_disc(d)
    return list(_class_reps(d, primitive))


def stabilizer_order(Q: QForm) -> int:
    """Order of the stabilizer of Q in PSL_2(Z)."""
    R, _ = reduce(Q)
    a, b, c = R
    if b == 0 and a == c:
        return 2
    if a == b == c:
        return 3
    return 1


@lru_cache(maxsize=None)
def hurwitz_H(n: int) -> Fraction:
    """Hurwitz class number, with H(0) = -1/12."""
    if n < 0:
        raise DomainError("hurwitz_H needs n >= 0")
    if n == 0:
        return Fraction(-1, 12)
    if (-n) % 4 not in (0, 1):
        return Fraction(0)
    return sum((Fraction(1, stabilizer_order(Q)) for Q in class_representatives(n)), Fraction(0))


def cm_point(Q: QForm) -> complex:
    """Root of Q(z, 1) in the upper half plane."""
    if not isinstance(Q, QForm):
        Q = QForm(*Q)
    if not Q.is_positive_definite():
        raise DomainError("cm_point needs a positive definite form")
    return complex(-Q.b, math.sqrt(-Q.disc)) / (2 * Q.a)


# --- fundamental discriminants and Kronecker symbols ---

def is_fundamental(D: int) -> bool:
    if D == 1:
        return True
    if D == 0:
        return False
    if D % 4 == 1:
        return _squarefree(abs(D))
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        p += 1
    return True


def kronecker(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for a discriminant D and any integer n."""
    if n == 0:
        return 1 if abs(D) == 1 else 0
    res = 1
    if n < 0:
        n = -n
        if D < 0:
            res = -res
    v = (n & -n).bit_length() - 1
    n >>= v
    if v:
        if D % 2 == 0:
            return 0
        if v % 2 and D % 8 in (3, 5):
            res = -res
    # Jacobi symbol (D/n), n odd positive
    a = D % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                res = -res
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            res = -res
        a %= n
    return res if n == 1 else 0


@lru_cache(maxsize=64)
def _kron_table(D: int) -> np.ndarray:
    m = abs(D)
    return np.array([kronecker(D, r) for r in range(m)], dtype=np.int8)


def genus_character(Q, D: int) -> int:
    """Kohnen's genus character chi_D on forms whose discriminant D divides.

    chi_D(Q) = (D/n) for any n coprime to D represented by Q when
    gcd(a, b, c, D) = 1, and 0 otherwise.  The zero form has chi_1 = 1 and
    chi_D = 0 for D != 1.
    """
    if not isinstance(Q, QForm):
        Q = QForm(*Q)
    if not is_fundamental(D):
        raise DomainError(f"{D} is not a fundamental discriminant")
    disc = Q.disc
    if disc % D:
        raise DomainError(f"{D} does not divide disc {disc}")
    if (disc // D) % 4 not in (0, 1):
        raise DomainError(f"disc/D = {disc // D} is not a discriminant")
    if D == 1:
        return 1
    if math.gcd(Q.content(), abs(D)) != 1:
        return 0
    n = _represented_coprime(Q, D)
    return kronecker(D, n)


def _represented_coprime(Q: QForm, D: int) -> int:
    # try the coefficients first, then small coprime pairs
    for n in (Q.a, Q.c, Q.a + Q.b + Q.c, Q.a - Q.b + Q.c):
        if math.gcd(n, D) == 1:
            return n
    bound = 5 * abs(D * Q.disc) or 5 * abs(D)
    for r in range(2, bound + 1):
        for x in range(-r, r + 1):
            for y in (r - abs(x), -(r - abs(x))):
                if math.gcd(x, y) == 1:
                    n = Q(x, y)
                    if math.gcd(n, D) == 1:
                        return n
    raise DomainError(f"no value coprime to {D} represented by {tuple(Q)}")


_SMALL_PAIRS = np.array(
    [(x, y) for x in range(-4, 5) for y in range(0, 5) if math.gcd(x, y) == 1 and (y > 0 or x == 1)],
    dtype=np.int64,
)


def genus_character_array(a, b, c, D: int) -> np.ndarray:
    """Vectorized chi_D over arrays of forms (each assumed D | disc).

    Falls back to the scalar search for the rare forms that represent no
    small value coprime to D.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    if D == 1:
        return np.ones(a.shape, dtype=np.int8)
    m = abs(D)
    cont = np.gcd(np.gcd(a, b), c)
    out = np.zeros(a.shape, dtype=np.int8)
    todo = np.gcd(cont, m) == 1
    table = _kron_table(D)
    found = ~todo
    for x, y in _SMALL_PAIRS:
        if found.all():
            break
        n = a * x * x + b * x * y + c * y * y
        ok = (~found) & (np.gcd(n, m) == 1)
        if ok.any():
            r = np.mod(n[ok], m)
            # chi_D is a character mod |D| with chi_D(-1) = sgn(D), which
            # matches the Kronecker symbol at negative n
            out[ok] = table[r]
            found |= ok
    for idx in np.argwhere(~found):
        i = tuple(idx)
        out[i] = genus_character(QForm(int(a[i]), int(b[i]), int(c[i])), D)
    return out


# --- geometry relative to a point z ---

@dataclass(frozen=True)
class FormGeometry:
    p: float
    q_poly: complex
    r: float
    majorant: float


def geometry(Q, z: complex) -> FormGeometry:
    """p_lambda(z), Q_lambda(z), R(lambda, z) and the majorant M_z(lambda).

    p_lambda(z) = -(a|z|^2 + bx + c)/y.  The scalar F-tilde of the
    introduction uses Q_z = -p_lambda(z).
    """
    a, b, c = (int(t) for t in Q)
    x, y = z.real, z.imag
    if y <= 0:
        raise DomainError("z must lie in the upper half plane")
    p = -(a * (x * x + y * y) + b * x + c) / y
    qp = a * z * z + b * z + c
    r = 0.5 * p * p + 0.5 * (b * b - 4 * a * c)
    maj = 0.25 * p * p + abs(qp) ** 2 / (4 * y * y)
    return FormGeometry(p, qp, r, maj)


def majorant_gram(z: complex) -> np.ndarray:
    """Gram matrix G with M_z(a,b,c) = v^T G v."""
    x, y = z.real, z.imag
    # p = -(a r2 + b x + c)/y with r2 = |z|^2; Q_z = a z^2 + b z + c
    r2 = x * x + y * y
    lp = np.array([r2, x, 1.0]) / y          # -p = lp . v
    zz = z * z
    lq = np.array([zz, z, 1.0])             # Q_z = lq . v
    G = 0.25 * np.outer(lp, lp) + (np.outer(lq.real, lq.real) + np.outer(lq.imag, lq.imag)) / (4 * y * y)
    return G


def majorant_array(a, b, c, z: complex) -> np.ndarray:
    x, y = z.real, z.imag
    p = -(a * (x * x + y * y) + b * x + c) / y
    qp = a * z * z + b * z + c
    return 0.25 * p * p + (qp.real ** 2 + qp.imag ** 2) / (4 * y * y)


def enumerate_by_majorant(z: complex, T: float, q0=None, chunk: int = 2_000_000) -> np.ndarray:
    """All lambda != 0 with M_z(lambda) <= T, optionally with Q(lambda) = q0.

    Returns an (n, 3) integer array sorted by majorant, ties broken
    lexicographically.  q0 may be a Fraction or anything exactly
    representable as a quarter-integer.
    """
    if T <= 0:
        return np.zeros((0, 3), dtype=np.int64)
    G = majorant_gram(z)
    Ginv = np.linalg.inv(G)
    box = np.floor(np.sqrt(T * np.diag(Ginv)) + 1e-9).astype(np.int64)
    A, B, C = (int(t) for t in box)
    if q0 is None:
        out = _enum_all(z, T, A, B, C, chunk)
    else:
        disc = -4 * Fraction(q0)
        if disc.denominator != 1:
            raise DomainError("Q(lambda) must lie in Z/4")
        out = _enum_fixed(z, T, A, B, C, int(disc))
    if len(out) == 0:
        return out.reshape(0, 3)
    m = majorant_array(out[:, 0], out[:, 1], out[:, 2], z)
    order = np.lexsort((out[:, 2], out[:, 1], out[:, 0], np.round(m, 12)))
    return out[order]


def _enum_all(z, T, A, B, C, chunk):
    parts = []
    bs = np.arange(-B, B + 1)
    cs = np.arange(-C, C + 1)
    bb, cc = np.meshgrid(bs, cs, indexing="ij")
    bb = bb.ravel()
    cc = cc.ravel()
    for a in range(-A, A + 1):
        aa = np.full_like(bb, a)
        m = majorant_array(aa, bb, cc, z)
        keep = m <= T * (1 + 1e-12)
        if a == 0:
            keep &= ~((bb == 0) & (cc == 0))
        if keep.any():
            parts.append(np.stack([aa[keep], bb[keep], cc[keep]], axis=1))
    if not parts:
        return np.zeros((0, 3), dtype=np.int64)
    return np.concatenate(parts).astype(np.int64)


def _enum_fixed(z, T, A, B, C, disc):
    parts = []
    bs = np.arange(-B, B + 1, dtype=np.int64)
    for a in range(-A, A + 1):
        if a == 0:
            # b^2 = disc, c free
            s = math.isqrt(disc) if disc >= 0 else -1
            if s < 0 or s * s != disc:
                continue
            cand = {s, -s}
            cs = np.arange(-C, C + 1, dtype=np.int64)
            for b in cand:
                aa = np.zeros_like(cs)
                bb = np.full_like(cs, b)
                parts.append(np.stack([aa, bb, cs], axis=1))
            continue
        num = bs * bs - disc
        ok = num % (4 * a) == 0
        if not ok.any():
            continue
        b_ok = bs[ok]
        c_ok = num[ok] // (4 * a)
        parts.append(np.stack([np.full_like(b_ok, a), b_ok, c_ok], axis=1))
    if not parts:
        return np.zeros((0, 3), dtype=np.int64)
    out = np.concatenate(parts)
    out = out[~np.all(out == 0, axis=1)]
    m = majorant_array(out[:, 0], out[:, 1], out[:, 2], z)
    return out[m <= T * (1 + 1e-12)]
