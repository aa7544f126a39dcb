"""Metaplectic group, the Weil representation of L'/L = Z/2, and coset sums.

Elements of Mp_2(Z) are pairs (gamma, phi) with phi(tau)^2 = c tau + d.
We store phi as a sign relative to the principal square root, whose
argument lies in (-pi/2, pi/2].  The representation is

    rho(T~) e_mu = e(Q(mu)) e_mu,           Q(1) = -1/4,
    rho(S~) e_mu = sqrt(i)/sqrt(2) sum_nu e(-(mu, nu)) e_nu,

and rho of a general element comes from a Euclidean word in T~ and S~,
with the sign of the word's product compared against the requested branch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

_TAU0 = 0.1234 + 1.1j  # probe point for cocycle signs


def psqrt(w: complex) -> complex:
    """Principal square root with argument in (-pi/2, pi/2]."""
    w = complex(w)
    if w.imag == 0 and w.real < 0:
        return complex(0.0, math.sqrt(-w.real))
    return cmath.sqrt(w)


@dataclass(frozen=True)
class MetaElt:
    a: int
    b: int
    c: int
    d: int
    sign: int = 1

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("matrix must have determinant 1")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def matrix(self):
        return ((self.a, self.b), (self.c, self.d))

    def act(self, tau):
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def phi(self, tau) -> complex:
        if self.c == 0:
            return self.sign * (1 if self.d == 1 else 1j)
        return self.sign * psqrt(self.c * tau + self.d)

    def phi_mp(self, tau):
        w = self.c * tau + self.d
        if self.c == 0:
            return self.sign * (mpmath.mpc(1) if self.d == 1 else mpmath.mpc(0, 1))
        return self.sign * mpmath.sqrt(w)

    def __mul__(self, other: "MetaElt") -> "MetaElt":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        val = self.phi(other.act(_TAU0)) * other.phi(_TAU0)
        probe = MetaElt(a, b, c, d, 1).phi(_TAU0)
        sign = 1 if abs(val - probe) < abs(val + probe) else -1
        return MetaElt(a, b, c, d, sign)

    def inverse(self) -> "MetaElt":
        cand = MetaElt(self.d, -self.b, -self.c, self.a, 1)
        prod = cand * self
        return cand if prod.sign == 1 else MetaElt(self.d, -self.b, -self.c, self.a, -1)


IDENTITY = MetaElt(1, 0, 0, 1)
T = MetaElt(1, 1, 0, 1)
S = MetaElt(0, -1, 1, 0)
Z = S * S  # (-I, i)

_SQRT_I = cmath.exp(1j * math.pi / 4)
RHO_T = np.array([[1, 0], [0, -1j]], dtype=complex)
RHO_S = _SQRT_I / math.sqrt(2) * np.array([[1, 1], [1, -1]], dtype=complex)


def _tpow(n: int) -> MetaElt:
    return MetaElt(1, n, 0, 1)


def _rho_tpow(n: int) -> np.ndarray:
    return np.diag([1, (-1j) ** (n % 4)]).astype(complex)


def _word(a, b, c, d):
    """Tokens ('T', n) / ('S',) whose product has matrix [[a,b],[c,d]]."""
    word = []
    while c != 0:
        n = round(a / c)
        word.append(("T", n))
        word.append(("S",))
        a, b, c, d = c, d, -(a - n * c), -(b - n * d)
    if a == 1:
        word.append(("T", b))
    else:
        word += [("S",), ("S",), ("T", -b)]
    return word


@lru_cache(maxsize=200_000)
def _rho_cached(a, b, c, d, sign):
    elt = IDENTITY
    mat = np.eye(2, dtype=complex)
    for tok in _word(a, b, c, d):
        if tok[0] == "T":
            elt = elt * _tpow(tok[1])
            mat = mat @ _rho_tpow(tok[1])
        else:
            elt = elt * S
            mat = mat @ RHO_S
    assert (elt.a, elt.b, elt.c, elt.d) == (a, b, c, d)
    if elt.sign != sign:
        mat = -mat
    mat = _snap(mat)
    mat.setflags(write=False)
    return mat


def _snap(mat: np.ndarray) -> np.ndarray:
    # the image is finite: entries are 0 or zeta_8^k times 1 or 1/sqrt 2
    out = np.zeros_like(mat)
    for idx, e in np.ndenumerate(mat):
        r = abs(e)
        if r < 1e-9:
            continue
        rr = 1.0 if abs(r - 1) < 1e-9 else 1 / math.sqrt(2)
        if abs(r - rr) > 1e-9:
            raise ArithmeticError("unexpected Weil matrix entry")
        k = round(cmath.phase(e) / (math.pi / 4)) % 8
        out[idx] = rr * cmath.exp(1j * math.pi * k / 4)
    return out


def rho(elt: MetaElt, conjugate: bool = False) -> np.ndarray:
    """Weil matrix of elt on (e_0, e_1); the conjugate representation if asked."""
    m = _rho_cached(elt.a, elt.b, elt.c, elt.d, elt.sign)
    return m.conj() if conjugate else m


def rho_exact(elt: MetaElt, conjugate: bool = False):
    """rho as (k, r) pairs per entry: entry = r * zeta_8^k, r in {0, 1, 1/sqrt 2}."""
    m = rho(elt, conjugate)
    out = []
    for i in range(2):
        row = []
        for j in range(2):
            e = m[i, j]
            if abs(e) < 1e-9:
                row.append((0, 0))
            else:
                k = round(cmath.phase(e) / (math.pi / 4)) % 8
                row.append((k, 1 if abs(abs(e) - 1) < 1e-9 else 2))
        out.append(row)
    return out


def rho_mp(elt: MetaElt, conjugate: bool = False):
    """rho with entries at mpmath working precision."""
    ex = rho_exact(elt, conjugate)
    s2 = 1 / mpmath.sqrt(2)
    return [[mpmath.mpc(0) if r == 0 else mpmath.expjpi(mpmath.mpf(k) / 4) * (1 if r == 1 else s2)
             for (k, r) in row] for row in ex]


def slash(f, k: float, elt: MetaElt, rep: str = "rho"):
    """Return tau -> phi(tau)^(-2k) rho(elt)^(-1) f(gamma tau)."""
    if rep not in ("rho", "rho_bar", "trivial"):
        raise ValueError(rep)
    two_k = int(round(2 * k))
    if rep == "trivial":
        return lambda tau: elt.phi(tau) ** (-two_k) * np.asarray(f(elt.act(tau)))
    m = rho(elt, conjugate=(rep == "rho_bar"))
    minv = m.conj().T  # unitary
    return lambda tau: elt.phi(tau) ** (-two_k) * (minv @ np.asarray(f(elt.act(tau)), dtype=complex))


def _egcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def completion(c: int, d: int) -> MetaElt:
    """An element with bottom row (c, d), gcd(c, d) = 1, principal branch."""
    g, x, y = _egcd(d, -c)  # x d - y c = g -> a = x, b = y
    if abs(g) != 1:
        raise ValueError("gcd(c, d) must be 1")
    a, b = x * g, y * g
    return MetaElt(a, b, c, d, 1)


def coset_reps(c_max: int, d_max: int | None = None) -> list[MetaElt]:
    """Representatives of Gamma~_oo \\ Gamma~ with 0 <= c <= c_max.

    The c = 0 classes are represented by the identity alone; the sums in
    this package carry the 1/4 normalization, under which the four c = 0
    cosets and the pairs (+-gamma, +-phi) collapse to one term each when
    the summand is invariant under Z~.  Rows with c > 0 use |d| <= d_max
    (default c_max // 2, a box of width about c_max).
    """
    if c_max < 1:
        raise ValueError("c_max >= 1")
    if d_max is None:
        d_max = max(c_max // 2, 1)
    out = [IDENTITY]
    for c in range(1, c_max + 1):
        for d in range(-d_max, d_max + 1):
            if math.gcd(c, d) == 1:
                out.append(completion(c, d))
    return out


def coset_pairs(tau: complex, radius2: float):
    """(c, d) with c >= 1, gcd 1 and |c tau + d|^2 <= radius2."""
    u, v = tau.real, tau.imag
    out = []
    c = 1
    while c * c * v * v <= radius2:
        h = math.sqrt(max(radius2 - c * c * v * v, 0.0))
        lo = math.ceil(-c * u - h)
        hi = math.floor(-c * u + h)
        for d in range(lo, hi + 1):
            if math.gcd(c, d) == 1:
                out.append((c, d))
        c += 1
    return out


def quarter_sum(seed, k: float, tau: complex, radius2: float, rep: str = "rho"):
    """(1/4) sum over Gamma~_oo \\ Gamma~ of seed|gamma at tau.

    Equals seed(tau) + sum_{c>0, (c,d)=1} (seed|gamma)(tau), valid for
    Z~-invariant seeds; truncated at |c tau + d|^2 <= radius2.
    """
    total = np.asarray(seed(tau), dtype=complex).copy()
    for c, d in coset_pairs(tau, radius2):
        total += slash(seed, k, completion(c, d), rep)(tau)
    return total


def quarter_sum_mp(seed, k: float, tau, radius2: float, rep: str = "rho"):
    """quarter_sum at the working mpmath precision.

    seed(t) returns a pair of mpc values; tau may be complex or mpc.
    """
    tau = mpmath.mpc(tau)
    two_k = int(round(2 * k))
    total = list(seed(tau))
    for c, d in coset_pairs(complex(tau), radius2):
        g = completion(c, d)
        m = rho_mp(g, conjugate=(rep == "rho_bar"))
        val = seed((g.a * tau + g.b) / (c * tau + d))
        fac = g.phi_mp(tau) ** (-two_k)
        # rho is unitary: rho^-1 = conjugate transpose
        for i in range(2):
            total[i] += fac * (mpmath.conj(m[0][i]) * val[0] + mpmath.conj(m[1][i]) * val[1])
    return total


def scalar_bridge(vec_fn):
    """Vector form -> scalar form on Gamma_0(4): tau -> f_0(4 tau) + f_1(4 tau)."""
    def g(tau):
        val = np.asarray(vec_fn(4 * tau))
        return val[0] + val[1]
    return g


def vector_from_scalar(scalar_fn):
    """Inverse bridge on functions: components from tau/4 and tau/4 + 1/2.

    Uses f_0(tau) = (F(tau/4) + F((tau+2)/4))/2, f_1 = (F(tau/4) - F((tau+2)/4))/2,
    valid for plus-space support (component 1 carries exponents
    n = 1 or 3 mod 4 only, which flip sign under tau -> tau + 2 in q^(1/4)).
    """
    def f(tau):
        a = scalar_fn(tau / 4)
        b = scalar_fn((tau + 2) / 4)
        return np.array([(a + b) / 2, (a - b) / 2])
    return f


def split_plus(coeffs: dict, weight) -> tuple[dict, dict]:
    """Split scalar plus-space coefficients n -> c(n) into the two components.

    Exponent n of q becomes exponent n/4 of the vector form.  With
    eps = (-1)^(k - 1/2), exponents with eps*n = 0 mod 4 go to e_0 and those
    with eps*n = 1 mod 4 go to e_1.
    """
    eps = 1 if round(2 * weight - 1) % 4 == 0 else -1  # (-1)^(k - 1/2)
    c0, c1 = {}, {}
    for n, c in coeffs.items():
        r = (eps * n) % 4
        if r == 0:
            c0[n] = c
        elif r == 1:
            c1[n] = c
        elif c != 0:
            raise ValueError(f"coefficient at {n} violates the plus condition")
    return c0, c1
