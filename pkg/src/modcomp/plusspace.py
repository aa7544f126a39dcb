"""Kohnen plus space forms f_d (weight 1/2) and g_D (weight 3/2), and H.

Both bases come from exact echelonization over seed forms written in the
scalar variable q = e(tau) on Gamma_0(4):

    weight 3/2:  G1 = theta_1(tau) E4(4 tau) / eta(4 tau)^6  = q^-1 - 2 + ...
                 G4 = Serre derivative of G1 (E4 E6/Delta)(4 tau), with its
                      q^-5 term removed against G1 j(4 tau)
    weight 1/2:  theta, and F3 = Serre derivative of theta (E4 E6/Delta)(4 tau)
                 with its q^-4 term removed against theta j(4 tau)

multiplied by powers of j(4 tau).  Here theta_1(tau) = theta(tau + 1/2) and
the Serre derivative at weight k is (1/4) q d/dq - (k/12) E2(4 tau).  Every
basis element is kept both as a q-series and as an exact combination
sum_i c_i * seed * j(4 tau)^i, which is what the high precision evaluators
use.

Conventions: g_D = q^-D + sum_{d >= 0} B(D, d) q^d and
f_d = q^-d + sum_{D > 0} A(D, d) q^D (f_0 = theta).  Zagier duality reads
A(D, d) = -B(D, d); the trace relation is B(1, d) = -Tr_d(j - 744).
"""

from __future__ import annotations

import cmath
import math
import threading
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from . import qforms, qseries, weil
from .qseries import QSeries, classical
from .specialfn import upper_gamma


def _theta1(N):
    th = classical("theta", N)
    return QSeries([(-1) ** n * c for n, c in enumerate(th.coeffs)], 0, N)


def _serre(f: QSeries, k: Fraction, N: int) -> QSeries:
    E2_4 = classical("E2star", N).subs_power(4)
    return f.derive() * Fraction(1, 4) - E2_4 * f * (Fraction(k) / 12)


class _Builder:
    """Echelon bases for one weight.

    The elimination only looks at principal parts (exponents <= 0), so it
    runs on small exact dictionaries; q-series are materialized on demand
    from the resulting combinations.
    """

    def __init__(self, weight: Fraction):
        self.weight = Fraction(weight)
        self.lock = threading.RLock()
        self.combo: dict[int, dict] = {}      # leading exponent -> {(seed, i): coeff}
        self._seed_cache: dict = {}
        self._jpow_cache: dict = {}
        self._series_cache: dict = {}
        if self.weight == Fraction(3, 2):
            self.seed_lead = {"G1": -1, "G4": -4}
        else:
            self.seed_lead = {"theta": 0, "F3": -3}

    # seeds
    def seed_series(self, name: str, N: int) -> QSeries:
        with self.lock:
            for (nm, P), S in self._seed_cache.items():
                if nm == name and P >= N:
                    return S.truncate(N)
            P = max(N, 64)
            S = self._make_seed(name, P)
            self._seed_cache[(name, P)] = S
            return S.truncate(N)

    def _make_seed(self, name: str, P: int) -> QSeries:
        big = P + 12
        X = (classical("E4", big // 4 + 4) * classical("E6", big // 4 + 4)
             / classical("delta", big // 4 + 5)).subs_power(4)
        j4 = classical("j", big // 4 + 4).subs_power(4)
        if name in ("G1", "G4"):
            G1 = (_theta1(big) * classical("E4", big // 4 + 2).subs_power(4)
                  / (qseries.eta_product(big // 4 + 2).subs_power(4) ** 6).shift(1))
            if name == "G1":
                return G1.truncate(P)
            dH = _serre(G1 * X, Fraction(-1, 2), big)
            c5 = dH.coeff(-5)
            R = dH - G1 * j4 * c5
            return (R / R.coeff(-4)).truncate(P)
        th = classical("theta", big)
        if name == "theta":
            return th.truncate(P)
        dH = _serre(th * X, Fraction(-3, 2), big)
        c4 = dH.coeff(-4)
        R = dH - th * j4 * c4
        return (R / R.coeff(-3)).truncate(P)

    def jpow(self, i: int, N: int) -> QSeries:
        """j(4 tau)^i known for exponents < N."""
        with self.lock:
            key = (i, N)
            S = self._jpow_cache.get(key)
            if S is None:
                n4 = (N + 4 * i) // 4 + 3
                j4 = classical("j", n4).subs_power(4)
                S = (j4 ** i).truncate(N) if i else QSeries([1], 0, N)
                self._jpow_cache[key] = S
            return S

    def term(self, name: str, i: int, N: int) -> QSeries:
        lead = self.seed_lead[name]
        return (self.seed_series(name, N + 4 * i) * self.jpow(i, N - lead)).truncate(N)

    def valid(self, e: int) -> bool:
        """Is e (<= 0) a principal exponent of this weight's plus space?"""
        if self.weight == Fraction(3, 2):
            return e < 0 and (-e) % 4 in (0, 1)
        return e <= 0 and (-e) % 4 in (0, 3)

    def _principal(self, name, i) -> dict:
        T = self.term(name, i, 1)
        return {n: c for n, c in T.items() if n <= 0}

    def get_combo(self, e: int) -> dict:
        with self.lock:
            return self._combo(e)

    def _combo(self, e: int) -> dict:
        if e in self.combo:
            return self.combo[e]
        if not self.valid(e):
            raise ValueError(f"{e} is not a principal exponent for weight {self.weight}")
        for name, lead in self.seed_lead.items():
            if (lead - e) % 4 == 0 and lead >= e:
                i = (lead - e) // 4
                break
        comb = {(name, i): Fraction(1)}
        pp = self._principal(name, i)
        top = 0 if self.weight == Fraction(1, 2) else -1
        # each reduced basis element has principal part exactly q^f, so
        # clearing exponent f leaves the other principal coefficients alone
        for f in range(e + 1, top + 1):
            c = pp.get(f, 0)
            if not c:
                continue
            if not self.valid(f):
                raise ArithmeticError(f"plus condition violated at exponent {f}")
            for key, cc in self._combo(f).items():
                comb[key] = comb.get(key, 0) - c * cc
        comb = {k: v for k, v in comb.items() if v != 0}
        self.combo[e] = comb
        return comb

    def series(self, e: int, N: int) -> QSeries:
        with self.lock:
            for (ee, P), S in self._series_cache.items():
                if ee == e and P >= N:
                    return S.truncate(N)
            comb = self._combo(e)
            S = None
            for (name, i), c in sorted(comb.items()):
                t = self.term(name, i, N) * c
                S = t if S is None else S + t
            self._series_cache[(e, N)] = S
            return S


_builders: dict = {}
_blk = threading.Lock()


def _builder(weight) -> _Builder:
    weight = Fraction(weight)
    with _blk:
        b = _builders.get(weight)
        if b is None:
            b = _Builder(weight)
            _builders[weight] = b
        return b


def g_form(D: int, prec: int = 120) -> QSeries:
    """g_D as a scalar q-series known for exponents < prec."""
    if D <= 0 or D % 4 not in (0, 1):
        raise ValueError("D must be a positive discriminant")
    return _builder(Fraction(3, 2)).series(-D, prec)


def f_form(d: int, prec: int = 120) -> QSeries:
    """f_d as a scalar q-series; f_0 = theta."""
    if d < 0 or (-d) % 4 not in (0, 1):
        raise ValueError("-d must be a discriminant with d >= 0")
    return _builder(Fraction(1, 2)).series(-d, prec)


def gD_coefficients(D: int, d_max: int) -> dict:
    g = g_form(D, d_max + 1)
    return {d: g.coeff(d) for d in range(0, d_max + 1) if d % 4 in (0, 3)}


def fd_coefficients(d: int, D_max: int) -> dict:
    f = f_form(d, D_max + 1)
    return {D: f.coeff(D) for D in range(1, D_max + 1) if D % 4 in (0, 1)}


def duality_table(n_max: int = 40):
    """Rows (D, d, B(D,d), A(D,d)) for 0 < D, d <= n_max."""
    rows = []
    for D in range(1, n_max + 1):
        if D % 4 not in (0, 1):
            continue
        B = gD_coefficients(D, n_max)
        for d in range(1, n_max + 1):
            if d % 4 not in (0, 3):
                continue
            A = fd_coefficients(d, n_max)[D]
            rows.append((D, d, B[d], A))
    return rows


# --- evaluation ---

def _terms_needed(v_s: float, digits: float) -> int:
    return int(digits * math.log(10) / (2 * math.pi * v_s)) + 60


def eval_scalar(weight, e: int, tau_s, mp: bool = False, digits: float = 17):
    """Value at tau_s of the basis element with principal exponent e.

    Evaluated as sum_i c_i seed(tau_s) j(4 tau_s)^i from the exact
    combination.  With mp the result carries the current mpmath precision and
    ``digits`` sizes the q-series; without mp, combinations whose
    coefficients would swamp double precision are evaluated in mpmath.
    """
    b = _builder(weight)
    comb = b.get_combo(e)
    # the combination coefficients grow quickly with |e| while the terms
    # cancel down to the size of the result: carry their size as guard digits
    guard = 10 + max((len(str(abs(c.numerator))) - len(str(c.denominator)) for c in comb.values()), default=0)
    if not mp and guard > 14:
        with mpmath.workdps(20):
            return complex(eval_scalar(weight, e, mpmath.mpc(tau_s), True, digits))
    v_s = float(mpmath.im(tau_s)) if mp else tau_s.imag
    n = _terms_needed(v_s, digits + (guard if mp else 0) + 10)
    jser = classical("j", max(_terms_needed(4 * v_s, digits + (guard if mp else 0) + 10), 40))
    if mp:
        with mpmath.workdps(mpmath.mp.dps + guard):
            seeds = {name: b.seed_series(name, n).evaluate_mp(tau_s) for name in b.seed_lead}
            jv = jser.evaluate_mp(4 * tau_s)
            total = mpmath.mpc(0)
            for (name, i), c in comb.items():
                total += (mpmath.mpf(c.numerator) / c.denominator) * seeds[name] * jv ** i
        return +total
    seeds = {name: b.seed_series(name, n).evaluate(tau_s) for name in b.seed_lead}
    jv = jser.evaluate(4 * tau_s)
    return sum(float(c) * seeds[name] * jv ** i for (name, i), c in comb.items())


def eval_vector(weight, e: int, tau, mp: bool = False, digits: float = 17):
    """Vector-valued companion (components e_0, e_1) at tau."""
    a = eval_scalar(weight, e, tau / 4, mp, digits)
    b = eval_scalar(weight, e, (tau + 2) / 4, mp, digits)
    return [(a + b) / 2, (a - b) / 2]


def g_vector(D: int, tau, mp: bool = False, digits: float = 17):
    return eval_vector(Fraction(3, 2), -D, tau, mp, digits)


def f_vector(d: int, tau, mp: bool = False, digits: float = 17):
    return eval_vector(Fraction(1, 2), -d, tau, mp, digits)


# --- the Zagier class number generating function H ---

def hcal_scalar(tau: complex, N: int = 200) -> complex:
    """H(tau) = sum H(n) q^n + (1/(4 sqrt pi)) sum_{n>=1} n Gamma(-1/2, 4 pi n^2 v) q^(-n^2) + 1/(8 pi sqrt v)."""
    v = tau.imag
    total = classical("hcal_holo", N).evaluate(tau) + 1 / (8 * math.pi * math.sqrt(v))
    n = 1
    while True:
        t = n * upper_gamma(-0.5, 4 * math.pi * n * n * v) * cmath.exp(-2j * math.pi * n * n * tau)
        total += t / (4 * math.sqrt(math.pi))
        if abs(t) < 1e-18:
            return total
        n += 1


def hcal_vector(tau: complex, N: int = 200) -> np.ndarray:
    """Vector-valued H at tau (components e_0, e_1)."""
    a = hcal_scalar(tau / 4, N)
    b = hcal_scalar((tau + 2) / 4, N)
    return np.array([(a + b) / 2, (a - b) / 2])


def hcal_vector_mp(tau, N: int = 400):
    """High precision vector H at the working mpmath precision."""
    def scal(t):
        v = mpmath.im(t)
        hol = classical("hcal_holo", N).evaluate_mp(t)
        tot = hol + 1 / (8 * mpmath.pi * mpmath.sqrt(v))
        n = 1
        eps = mpmath.mpf(10) ** (-mpmath.mp.dps)
        while True:
            x = 4 * mpmath.pi * n * n * v
            t_ = n * mpmath.gammainc(mpmath.mpf(-0.5), x) * mpmath.expjpi(-2 * n * n * t)
            tot += t_ / (4 * mpmath.sqrt(mpmath.pi))
            if abs(t_) < eps and n > 2:
                break
            n += 1
        return tot
    a = scal(tau / 4)
    b = scal((tau + 2) / 4)
    return [(a + b) / 2, (a - b) / 2]


# --- oracles ---

def kloosterman_H(c: int, m: Fraction, n: Fraction) -> complex:
    """H_c(m, n) = e(-3 sgn(c)/8) sum_{d mod c}^* <rho^-1(gamma~) e_{4m}, e_{4n}> e((ma + dn)/c)."""
    if c == 0:
        raise ValueError("c != 0")
    m, n = Fraction(m), Fraction(n)
    mu, nu = int(4 * m) % 2, int(4 * n) % 2
    total = 0j
    ac = abs(c)
    for d in range(ac):
        if math.gcd(d, ac) != 1:
            continue
        g = weil.completion(c, d) if ac > 1 or d else weil.completion(c, 0)
        R = weil.rho(g)
        Rinv = R.conj().T
        ent = Rinv[nu, mu]
        ph = (m * g.a + d * n) / c
        total += ent * cmath.exp(2j * math.pi * float(ph % 1))
    return cmath.exp(-2j * math.pi * 3 * (1 if c > 0 else -1) / 8) * total


def _kloosterman_terms(c: int, pairs) -> list[float]:
    """c and -c contributions to the coefficient series for each (D, d)."""
    out = [0.0] * len(pairs)
    for sc in (c, -c):
        for dd in range(c):
            if math.gcd(dd, c) != 1:
                continue
            g = weil.completion(sc, dd)
            Rinv = weil.rho(g).conj().T
            for i, (D, d) in enumerate(pairs):
                ent = Rinv[d % 2, D % 2]
                if ent == 0:
                    continue
                ph = (Fraction(-D, 4) * g.a + dd * Fraction(d, 4)) / sc
                out[i] += (ent * cmath.exp(2j * math.pi * float(ph % 1))
                           * cmath.exp(-2j * math.pi * 3 * (1 if sc > 0 else -1) / 8)).real
    for i, (D, d) in enumerate(pairs):
        out[i] *= 2 / math.sqrt(2 * D * c) * math.sinh(2 * math.pi * math.sqrt(D * d / 4) / c)
    return out


def kloosterman_coefficient(D: int, d: int, C: int) -> float:
    """B(D, d) from the Kloosterman series truncated at |c| <= C.

    c_D(d/4) = 24 H(d) [D square] + 2 sum_{c != 0} H_c(-D/4, d/4) / sqrt(2 D |c|)
               * sinh(2 pi sqrt(D d/4) / |c|).
    """
    s = 24 * float(qforms.hurwitz_H(d)) if math.isqrt(D) ** 2 == D else 0.0
    for c in range(1, C + 1):
        s += _kloosterman_terms(c, [(D, d)])[0]
    return s


def kloosterman_oracle(pairs, C0: int = 50, C_max: int = 1600) -> dict:
    """Round the Kloosterman series for each (D, d), doubling C.

    A pair is settled once two successive truncations round to the same
    integer with distance <= 0.1.  Returns {(D, d): (value or None, C, dist)}.
    """
    pairs = list(pairs)
    sums = [24 * float(qforms.hurwitz_H(d)) if math.isqrt(D) ** 2 == D else 0.0 for D, d in pairs]
    prev = [None] * len(pairs)
    result = {}
    c_done, C = 0, C0
    while C <= C_max and len(result) < len(pairs):
        for c in range(c_done + 1, C + 1):
            for i, t in enumerate(_kloosterman_terms(c, pairs)):
                sums[i] += t
        c_done = C
        for i, pr in enumerate(pairs):
            if pr in result:
                continue
            r = round(sums[i])
            dist = abs(sums[i] - r)
            if dist <= 0.1 and prev[i] == r:
                result[pr] = (r, C, dist)
            prev[i] = r if dist <= 0.1 else None
        C *= 2
    for i, pr in enumerate(pairs):
        result.setdefault(pr, (None, c_done, abs(sums[i] - round(sums[i]))))
    return result


def cm_trace(d: int) -> float:
    """Tr_d(j - 744) = sum_{Q in Gamma \\ Q_-d} (j(z_Q) - 744)/omega_Q."""
    tot = 0.0
    for Q in qforms.class_representatives(d):
        z = qforms.cm_point(Q)
        tot += (qseries.j_value(z, 80) - 744).real / qforms.stabilizer_order(Q)
    return tot
