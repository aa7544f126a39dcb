"""Completed generating functions of meromorphic modular forms.

Vector-valued objects live on C[L'/L] = C e_0 + C e_1 and are returned as
length-2 complex arrays.  The main objects:

* F_{d,D}(z), the weight two meromorphic traces, and the Gaussian lattice
  corrections F~_{d,D}(z; v); their sum F*_{d,D} is smooth in z.
* A*(tau, z), the completed generating function of the F_d, through three
  expansions: (a) the scalar tau-sum on Gamma_0(4), (b) the vector
  tau-sum of F*_{d,D} e(d tau/4) e_d, (c) the z-expansion built from the
  weight 3/2 forms g_D, the class number generating function H and coset
  sums of the kernel K.  Route (c) equals -(1/4 pi) times route (b).
* The Millson/Shintani pair: the z-expansion built from the weight 1/2
  forms f_d and the tau-expansion built from the traces G_{d,D}.
* Higher weight: the cusp/meromorphic forms f_{k+1,d,D} and the completed
  series B_k*(tau, z), also as a theta function of a singular kernel.

Pole policy: a term with |Q_lambda(z)| < 1e-6 or |j(z) - j(z_Q)| < 1e-8
raises PoleError, and the F* evaluators then fall back to averaging over
small circles around z (the completed functions are smooth there).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from . import diffops, plusspace, qforms, qseries, specialfn, theta, weil
from .qforms import DomainError, QForm
from .theta import EvalBudget

FAMILIES = ("A_star_scalar", "A_star_vec_tau", "A_star_vec_z", "Millson_z", "Shintani_tau", "B_star")

POLE_Q = 1e-6
POLE_J = 1e-8


class PoleError(DomainError):
    """z is (numerically) a pole of a meromorphic term; use the smooth evaluator."""


@dataclass(frozen=True)
class CompletionSpec:
    family: str
    D: int = 1
    k: int = 0
    budget: EvalBudget = EvalBudget(tol=1e-12)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if not qforms.is_fundamental(self.D):
            raise DomainError(f"{self.D} is not a fundamental discriminant")
        if self.family == "A_star_scalar" and self.D != 1:
            raise DomainError("the scalar A* exists for D = 1 only")
        if self.family in ("Millson_z", "Shintani_tau") and self.D >= 0:
            raise DomainError("the Millson/Shintani pair needs D = -d < 0")
        if self.family == "B_star" and self.k < 1:
            raise DomainError("B_star needs k >= 1")

    @property
    def vanishes(self) -> bool:
        """Families whose theta kernel vanishes for this (k, D) evaluate to 0."""
        if self.family.startswith("A_star"):
            return self.D < 0
        if self.family == "B_star":
            return not parity_ok(self.k, self.D)
        return False


def _e(x):
    return cmath.exp(2j * math.pi * x)


# --- classical values at arbitrary points of H ---

def _reduce(z: complex):
    """(w, c, d) with w = gamma z in the standard fundamental domain."""
    m00, m01, m10, m11 = 1, 0, 0, 1
    for _ in range(1000):
        n = math.floor(z.real + 0.5)
        z -= n
        m00, m01 = m00 - n * m10, m01 - n * m11
        if abs(z) < 1 - 1e-14:
            z = -1 / z
            m00, m01, m10, m11 = -m10, -m11, m00, m01
        else:
            return z, m10, m11
    raise DomainError("reduction did not terminate")


def _classical_at(z: complex):
    """(j(z), j'(z), E2*(z)) using modularity to evaluate near the cusp."""
    w, c, d = _reduce(z)
    fac = (c * z + d) ** -2
    return qseries.j_value(w), qseries.jprime_value(w) * fac, qseries.E2star_value(w) * fac


@lru_cache(maxsize=None)
def _cm_data(N: int, D: int, scalar: bool):
    """(j(z_Q), chi_D(Q)/omega_Q) over classes of discriminant -N."""
    out = []
    for Q in qforms.class_representatives(N):
        signs = (Q, -Q) if scalar else (Q,)
        wt = sum(qforms.genus_character(S, D) for S in signs) / qforms.stabilizer_order(Q)
        if wt:
            out.append((qseries.j_value(qforms.cm_point(Q)), wt))
    return tuple(out)


def _trace(N: int, D: int, z: complex, scalar: bool = False) -> complex:
    """sum over classes of disc -N of (chi_D(Q)/omega_Q) j'(z)/(j(z) - j(z_Q))."""
    jz, jp, _ = _classical_at(z)
    tot = 0j
    for jq, wt in _cm_data(N, D, scalar):
        den = jz - jq
        if abs(den) < POLE_J:
            raise PoleError(f"z is within {POLE_J:g} of a pole (j(z) = j(z_Q))")
        tot += wt / den
    return jp * tot


def F_meromorphic(d: int, D: int, z: complex, scalar: bool = False) -> complex:
    """F_{d,D}(z): -4i sum_{Q > 0} chi_D(Q)/omega_Q j'(z)/(j(z) - j(z_Q)).

    d = 0, D = 1 gives (2 pi/3) E2*(z); every other d <= 0 gives 0.  With
    ``scalar`` (D = 1 only) the normalization of the Gamma_0(4) series is
    used: -2i times the sum over positive and negative definite classes,
    and (2 pi/6) E2* at d = 0.
    """
    z = complex(z)
    if scalar and D != 1:
        raise DomainError("the scalar normalization exists for D = 1 only")
    if d < 0 or D < 0:
        return 0j
    if d == 0:
        if D != 1:
            return 0j
        return (2 * math.pi / (6 if scalar else 3)) * _classical_at(z)[2]
    if (-d * D) % 4 not in (0, 1):
        return 0j
    return (-2j if scalar else -4j) * _trace(d * D, D, z, scalar)


@lru_cache(maxsize=512)
def _fixed_points(z: complex, T: float, q4: int, D: int):
    """Lambda with Q(lambda) = q4/4, M_z <= T, chi_D != 0: arrays a, b, c, chi."""
    disc = -q4
    if disc % D or (disc // D) % 4 not in (0, 1):
        raise DomainError(f"no lattice vectors of discriminant {disc} for D = {D}")
    pts = qforms.enumerate_by_majorant(z, T, Fraction(q4, 4))
    a, b, c = pts[:, 0], pts[:, 1], pts[:, 2]
    chi = qforms.genus_character_array(a, b, c, D).astype(float)
    nz = chi != 0
    return a[nz], b[nz], c[nz], chi[nz]


def _geometry(a, b, c, z):
    x, y = z.real, z.imag
    af, bf, cf = a.astype(float), b.astype(float), c.astype(float)
    p = -(af * (x * x + y * y) + bf * x + cf) / y
    qz = af * z * z + bf * z + cf
    R = 0.5 * (np.abs(qz) / y) ** 2
    return p, qz, R


def _fixed_cap(q0: float, absD: int, v: float, tol: float, degree: int = 2) -> float:
    return theta._rounded_cap(max(q0, 0.0) + theta._cap(absD, v, tol, degree))


def F_tilde(d: int, D: int, z: complex, v: float, tol: float = 1e-13,
            T: float | None = None, scalar: bool = False, with_bound: bool = False):
    """Lattice correction F~_{d,D}(z; v).

    Vector normalization: 2 sum_{lambda in L_{dD/4}, lambda != 0} chi_D(lambda)
    p_lambda(z)/Q_lambda(z) exp(-2 pi v R(lambda, z)/|D|).  Scalar (D = 1):
    -2 sum_{Q in Q_{-d}, Q != 0} Q_z/Q(z,1) exp(-4 pi v |Q(z,1)|^2/y^2) with
    Q_z = (a|z|^2 + bx + c)/y.  With ``with_bound`` returns (value, tail bound).
    """
    z = complex(z)
    if v <= 0:
        raise DomainError("v must be positive")
    absD = abs(D)
    if scalar:
        if D != 1:
            raise DomainError("the scalar normalization exists for D = 1 only")
        q0, alpha_v = d / 4, 4 * v
    else:
        q0, alpha_v = d * D / 4, v
    if (-4 * q0) % absD or ((-4 * q0) // D) % 4 not in (0, 1):
        return (0j, 0.0) if with_bound else 0j
    if T is None:
        T = _fixed_cap(q0, absD, alpha_v, tol)
    a, b, c, chi = _fixed_points(z, T, int(round(4 * q0)), D)
    if len(a) == 0:
        return (0j, 0.0) if with_bound else 0j
    p, qz, R = _geometry(a, b, c, z)
    if np.min(np.abs(qz)) < POLE_Q:
        raise PoleError("z is within 1e-6 of a CM point of a summand")
    if scalar:
        # Q_z = -p and exp(-4 pi v |Q|^2/y^2) = exp(-8 pi v R)
        val = complex(-2 * np.sum(-p / qz * np.exp(-8 * math.pi * v * R)))
    else:
        val = complex(2 * np.sum(chi * p / qz * np.exp(-2 * math.pi * v * R / absD)))
    if not with_bound:
        return val
    alpha = 2 * math.pi * alpha_v / absD
    bound = theta._tail_bound(z, T, absD, alpha_v, 2) * math.exp(alpha * max(q0, 0.0))
    return val, bound


# --- smooth values near poles ---

def smooth_value(fn, z0: complex, rho: float = 1e-2, n_angles: int = 8):
    """Value at z0 of a smooth fn from circle averages, one Richardson step.

    The mean over n equally spaced points on |z - z0| = r equals
    fn(z0) + c r^2 + O(r^4) for smooth fn.  Averages at r, r/2, r/4 give two
    extrapolants; the second is returned with their difference as error.
    """
    z0 = complex(z0)

    def avg(r):
        return sum(fn(z0 + r * cmath.exp(2j * math.pi * (i + 0.5) / n_angles)) for i in range(n_angles)) / n_angles

    a1, a2, a4 = avg(rho), avg(rho / 2), avg(rho / 4)
    r1 = (4 * a2 - a1) / 3
    r2 = (4 * a4 - a2) / 3
    return r2, float(np.max(np.abs(np.asarray(r1 - r2))))


def smooth_value_at_CM(d: int, D: int, z_Q: complex, v: float, rho: float = 1e-2,
                       n_angles: int = 8, tol: float = 1e-13):
    """lim_{z -> z_Q} (F_{d,D} + F~_{d,D})(z; v) as (value, error estimate)."""
    return smooth_value(lambda w: F_meromorphic(d, D, w) + F_tilde(d, D, w, v, tol), z_Q, rho, n_angles)


def F_star(d: int, D: int, z: complex, v: float, tol: float = 1e-13, scalar: bool = False) -> complex:
    """F*_{d,D}(z; v) = F_{d,D}(z) + F~_{d,D}(z; v), smooth in z."""
    try:
        return F_meromorphic(d, D, z, scalar) + F_tilde(d, D, z, v, tol, scalar=scalar)
    except PoleError:
        val, _ = smooth_value(lambda w: F_meromorphic(d, D, w, scalar) + F_tilde(d, D, w, v, tol, scalar=scalar), z)
        return val


# --- A*: route (b), the vector tau-expansion ---

def _d_cap(v_eff: float, tol: float) -> int:
    """|d| beyond which exp(-2 pi |d| v_eff) (times slack) is below tol."""
    return int(math.ceil((math.log(1 / tol) + 6) / (2 * math.pi * v_eff)))


def A_star_tau(D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-12)) -> np.ndarray:
    """sum_d F*_{d,D}(z; v) e(d tau/4) e_d (vector normalization, without the factor -1/(4 pi))."""
    tau, z = complex(tau), complex(z)
    if D < 0:
        return np.zeros(2, dtype=complex)
    v = tau.imag
    dm = budget.d_max if budget.d_max is not None else _d_cap(v / 4, budget.tol)
    out = np.zeros(2, dtype=complex)
    for d in range(-dm, dm + 1):
        if (-d) % 4 not in (0, 1):
            continue
        out[d % 2] += F_star(d, D, z, v, budget.tol * 1e-2) * _e(d * tau / 4)
    return out


def theta_sharp_km_tau(D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-12)) -> np.ndarray:
    """The KM preimage from the tau-expansion: -(1/4 pi) A_star_tau."""
    return -A_star_tau(D, tau, z, budget) / (4 * math.pi)


# --- A*: route (a), the scalar tau-expansion on Gamma_0(4) ---

def A_star_scalar(tau: complex, z: complex, as_displayed: bool = False,
                  budget: EvalBudget = EvalBudget(tol=1e-12)) -> complex:
    """Scalar completed generating function of the F_d.

    Default: -(1/4 pi) sum_d (F_d(z) + F~_d(z; v)) e(d tau) with the d = 0
    term (2 pi/3) E2*(z); this is the Gamma_0(4) form attached to the
    KM preimage and the one satisfying the differential equations with
    the Siegel and Kudla-Millson thetas.  ``as_displayed`` returns the
    bare sum with (2 pi/6) E2* instead.
    """
    tau, z = complex(tau), complex(z)
    v = tau.imag
    dm = budget.d_max if budget.d_max is not None else _d_cap(v, budget.tol)
    tot = 0j
    for d in range(-dm, dm + 1):
        if (-d) % 4 not in (0, 1):
            continue
        val = F_star(d, 1, z, v, budget.tol * 1e-2, scalar=True)
        if d == 0 and not as_displayed:
            val += F_meromorphic(0, 1, z, scalar=True)
        tot += val * _e(d * tau)
    return tot if as_displayed else -tot / (4 * math.pi)


# --- coset sums with the kernel K and erfc ---

def _log_mag_K(w: float, V: float) -> float:
    """log |K_w(V)| at low precision."""
    with mpmath.workdps(15):
        k = specialfn.kernel_K_mp(w, V)
        return float(mpmath.log(abs(k))) if k != 0 else -math.inf


def _log_mag_erfc(w: float, V: float) -> float:
    with mpmath.workdps(15):
        s = mpmath.sqrt(mpmath.pi) * (1 if w >= 0 else -1) * (w / mpmath.sqrt(V) - mpmath.sqrt(V))
        e = mpmath.erfc(s)
        return float(mpmath.log(e)) if e != 0 else -math.inf


def _coset_radius(log_seed, v: float, weight: float, log_tol: float) -> float:
    """Smallest power-of-two radius^2 r beyond which the coset tail is below tol.

    A coset with |c tau + d|^2 = r has Im(gamma tau) = v/r and contributes
    r^(-weight/2) |seed(v/r)|; there are about 3r/v cosets with radius^2 in
    [r, 2r].  The tail is declared small once five successive shells are.
    """
    r = 1.0
    for _ in range(60):
        ok = True
        for j in range(5):
            rr = r * 2 ** j
            if log_seed(v / rr) - 0.5 * weight * math.log(rr) + math.log(3 * rr / v) > log_tol:
                ok = False
                break
        if ok:
            return r
        r *= 2
    raise DomainError("coset sum does not converge at this point")


def _dps_for(log_mag: float, log_tol: float) -> int:
    return int(max(20, (log_mag - log_tol) / math.log(10) + 12))


# --- A*: route (c), the z-expansion ---

def _g_tilde_minus_g(N: int, tau: complex, w: float, log_tol: float, holo: bool):
    """Vector g~_N(tau, w) - [holo] g_N(tau) at mpmath precision, as complex."""
    v = tau.imag
    comp = N % 2

    def log_seed(vv):
        return _log_mag_K(w, N * vv) + math.pi * N * vv / 2

    r2 = _coset_radius(log_seed, v, 1.5, log_tol)
    # the largest coset term sits at the reduced point
    log_mag = max(math.pi * N * _reduce(tau)[0].imag / 2, 0.0)
    dps = _dps_for(log_mag, log_tol)
    with mpmath.workdps(dps):
        t = mpmath.mpc(tau)
        Nq = mpmath.mpf(N) / 4

        def seed(tt):
            val = specialfn.kernel_K_mp(w, N * mpmath.im(tt)) * mpmath.expjpi(-2 * Nq * tt)
            return [val, mpmath.mpc(0)] if comp == 0 else [mpmath.mpc(0), val]

        gt = weil.quarter_sum_mp(seed, 1.5, t, r2, "rho")
        if holo:
            gv = plusspace.g_vector(N, t, mp=True, digits=dps)
            gt = [gt[i] - gv[i] for i in range(2)]
        return np.array([complex(gt[0]), complex(gt[1])])


def _g_tilde_zero(D: int, tau: complex, y: float, tol: float) -> np.ndarray:
    """g~_0(tau, y) = (1/4 pi) sum_n (D/n) sum_gamma (v^(-1/2) exp(-pi n^2 y^2/(vD)) e_0)|gamma."""
    v = tau.imag
    out = np.zeros(2, dtype=complex)
    n = 1
    while True:
        ch = qforms.kronecker(D, n)
        a = math.pi * n * n * y * y / D
        if a / v > math.log(1 / tol) + 10:
            break
        if ch:
            def seed(t, a=a):
                vv = t.imag
                return np.array([vv ** -0.5 * math.exp(-a / vv), 0j])
            r2 = _coset_radius(lambda vv, a=a: -0.5 * math.log(vv) - a / vv, v, 1.5, math.log(tol))
            out += ch * weil.quarter_sum(seed, 1.5, tau, r2)
        n += 1
    # the full sum over Gamma~_oo \ Gamma~ is four quarter sums
    return out * 4 / (4 * math.pi)


def _divisors(m: int):
    m = abs(m)
    return [n for n in range(1, m + 1) if m % n == 0]


def _m_cap(y: float, tol: float) -> int:
    """m with m^4 exp(-pi m y/2) below tol (growth m^4 e^(3 pi m y/2) against e^(-2 pi m y))."""
    m = 1
    while m ** 4 * math.exp(-math.pi * m * y / 2) > tol or m < 3:
        m += 1
    return m


def _sum_z_terms(term, const, m_max: int, tol: float, return_terms: bool):
    """const + sum_{0 < |m| <= m_max} term(m), each direction stopped after two nonzero terms below tol."""
    total = const.copy()
    terms = {0: const}
    for sign in (1, -1):
        small = 0
        for k in range(1, m_max + 1):
            t = term(sign * k)
            if t is None:
                continue
            terms[sign * k] = t
            total += t
            small = small + 1 if np.max(np.abs(t)) < tol else 0
            if small >= 2:
                break
    return (total, terms) if return_terms else total


def A_star_z(D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-10),
             return_terms: bool = False):
    """The KM preimage from its z-expansion.

    2 [D = 1] H(tau) + g~_0(tau, y)
      + 2 sqrt(D) sum_{m > 0} sum_{n | m} (D/(m/n)) n (g~_{Dn^2}(tau, my) - g_{Dn^2}(tau)) e(mz)
      + 2 sqrt(D) sum_{m < 0} sum_{n | m} (D/(m/n)) n g~_{Dn^2}(tau, my) e(mz),
    with g~_N(tau, w) = (1/4) sum_gamma (K_w(N v) e(-N tau/4) e_N)|_{3/2} gamma.
    The differences g~ - g cancel to many digits and are formed in mpmath.
    """
    tau, z = complex(tau), complex(z)
    if D < 0:
        return np.zeros(2, dtype=complex)
    y = z.imag
    tol = budget.tol
    m_max = budget.m_max if budget.m_max is not None else _m_cap(y, tol)
    const = _g_tilde_zero(D, tau, y, tol)
    if D == 1:
        const = const + 2 * plusspace.hcal_vector(tau)

    def term(m):
        coef = np.zeros(2, dtype=complex)
        # absolute accuracy tol for the term, relative to e(mz)
        log_tol = math.log(tol) + 2 * math.pi * m * y
        hit = False
        for n in _divisors(m):
            ch = qforms.kronecker(D, abs(m) // n)
            if ch == 0:
                continue
            hit = True
            coef += ch * n * _g_tilde_minus_g(D * n * n, tau, m * y, log_tol, holo=m > 0)
        return 2 * math.sqrt(D) * coef * _e(m * z) if hit else None

    return _sum_z_terms(term, const, m_max, tol, return_terms)


# --- the Millson / Shintani pair (weight 1/2 in tau for rho_bar) ---

def _check_minus_d(d: int):
    if d <= 0 or not qforms.is_fundamental(-d):
        raise DomainError("-d must be a negative fundamental discriminant")


def G_meromorphic(d: int, D: int, z: complex) -> complex:
    """G_{d,D}(z) = -2i/(pi sqrt D) sum_{Q > 0} chi_{-d}(Q)/omega_Q j'(z)/(j(z) - j(z_Q)); 0 for D <= 0."""
    _check_minus_d(d)
    if D <= 0 or D % 4 not in (0, 1):
        return 0j
    return -2j / (math.pi * math.sqrt(D)) * _trace(d * D, -d, complex(z))


def G_tilde(d: int, D: int, z: complex, v: float, tol: float = 1e-13) -> complex:
    """-(sqrt d/pi) sum_{lambda in L_{dD/4}, lambda != 0} chi_{-d}(lambda)/Q_lambda(z) exp(-2 pi v R/d)."""
    _check_minus_d(d)
    z = complex(z)
    if D % 4 not in (0, 1):
        return 0j
    T = _fixed_cap(d * D / 4, d, v, tol, 0)
    a, b, c, chi = _fixed_points(z, T, d * D, -d)
    if len(a) == 0:
        return 0j
    _, qz, R = _geometry(a, b, c, z)
    if np.min(np.abs(qz)) < POLE_Q:
        raise PoleError("z is within 1e-6 of a CM point of a summand")
    return complex(-math.sqrt(d) / math.pi * np.sum(chi / qz * np.exp(-2 * math.pi * v * R / d)))


def G_star(d: int, D: int, z: complex, v: float, tol: float = 1e-13) -> complex:
    fn = lambda w: G_meromorphic(d, D, w) + G_tilde(d, D, w, v, tol)
    try:
        return fn(complex(z))
    except PoleError:
        return smooth_value(fn, z)[0]


def shintani_completion_tau(d: int, tau: complex, z: complex,
                            budget: EvalBudget = EvalBudget(tol=1e-12)) -> np.ndarray:
    """sum_D G*_{d,D}(z; v) e(D tau/4) e_D, the Shintani preimage by its tau-expansion."""
    _check_minus_d(d)
    tau, z = complex(tau), complex(z)
    v = tau.imag
    Dm = budget.d_max if budget.d_max is not None else _d_cap(v / 4, budget.tol)
    out = np.zeros(2, dtype=complex)
    for D in range(-Dm, Dm + 1):
        if D % 4 not in (0, 1):
            continue
        out[D % 2] += G_star(d, D, z, v, budget.tol * 1e-2) * _e(D * tau / 4)
    return out


def _erfc_seed_mp(N: int, w, comp: int):
    rN = mpmath.mpf(N)

    def seed(tt):
        vv = mpmath.im(tt)
        s = mpmath.sqrt(mpmath.pi) * mpmath.sign(w) * (w / mpmath.sqrt(vv * rN) - mpmath.sqrt(vv * rN))
        val = mpmath.expjpi(-2 * rN / 4 * tt) * mpmath.erfc(s)
        return [val, mpmath.mpc(0)] if comp == 0 else [mpmath.mpc(0), val]
    return seed


def _f_tilde_minus_f(N: int, tau: complex, w: float, log_tol: float, alpha: float):
    """Vector f~_N(tau, w) - alpha f_N(tau) (alpha = 0: f~ alone), formed in mpmath."""
    v = tau.imag
    comp = (-N) % 4

    def log_seed(vv):
        return _log_mag_erfc(w, N * vv) + math.pi * N * vv / 2

    r2 = _coset_radius(log_seed, v, 0.5, log_tol)
    dps = _dps_for(max(math.pi * N * _reduce(tau)[0].imag / 2, 0.0), log_tol)
    with mpmath.workdps(dps):
        t = mpmath.mpc(tau)
        ft = weil.quarter_sum_mp(_erfc_seed_mp(N, mpmath.mpf(w), comp), 0.5, t, r2, "rho_bar")
        if alpha:
            fv = plusspace.f_vector(N, t, mp=True, digits=dps)
            ft = [ft[i] - alpha * fv[i] for i in range(2)]
        return np.array([complex(ft[0]), complex(ft[1])])


def _f_tilde_zero(d: int, tau: complex, y: float, tol: float) -> np.ndarray:
    """f~_0(tau, y) = (1/4) sum_n (-d/n) sum_gamma (erfc(y n sqrt(pi)/sqrt(v d)) e_0)|_{1/2} gamma."""
    v = tau.imag
    out = np.zeros(2, dtype=complex)
    n = 1
    while True:
        a = math.pi * n * n * y * y / d
        if a / v > math.log(1 / tol) + 10:
            break
        ch = qforms.kronecker(-d, n)
        if ch:
            def seed(t, a=a):
                return np.array([math.erfc(math.sqrt(a / t.imag)), 0j])
            r2 = _coset_radius(lambda vv, a=a: -a / vv, v, 0.5, math.log(tol))
            out += ch * weil.quarter_sum(seed, 0.5, tau, r2, "rho_bar")
        n += 1
    return out


def theta_vector(tau: complex, tol: float = 1e-16) -> np.ndarray:
    """sum_n e(n^2 tau/4) e_{n mod 2}, the weight 1/2 theta function for rho_bar."""
    tau = complex(tau)
    out = np.array([1.0 + 0j, 0j])
    n = 1
    while math.exp(-math.pi * n * n * tau.imag / 2) > tol:
        out[n % 2] += 2 * _e(n * n * tau / 4)
        n += 1
    return out


def millson_completion(d: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-10),
                       return_terms: bool = False):
    """The Millson preimage by its z-expansion.

    f~_0(tau, y) - H(d) theta(tau)
      - 2 sum_{m > 0} sum_{n | m} (-d/(m/n)) (f_{dn^2}(tau) - f~_{dn^2}(tau, my)/2) e(mz)
      - sum_{m < 0} sum_{n | m} (-d/(|m|/n)) f~_{dn^2}(tau, my) e(mz),
    with f~_N(tau, w) = (1/4) sum_gamma (e(-N tau/4) erfc(sqrt(pi) sgn(w)(w/sqrt(Nv) - sqrt(Nv))) e_{-N})|_{1/2} gamma,
    f~_0 as in _f_tilde_zero, theta = sum_n e(n^2 tau/4) e_{n mod 2} and
    H(d) = L(0, chi_{-d}) for fundamental -d.
    """
    _check_minus_d(d)
    tau, z = complex(tau), complex(z)
    y = z.imag
    tol = budget.tol
    m_max = budget.m_max if budget.m_max is not None else _m_cap(y, tol)
    const = _f_tilde_zero(d, tau, y, tol) - float(qforms.hurwitz_H(d)) * theta_vector(tau)

    def term(m):
        coef = np.zeros(2, dtype=complex)
        log_tol = math.log(tol) + 2 * math.pi * m * y
        hit = False
        for n in _divisors(m):
            ch = qforms.kronecker(-d, abs(m) // n)
            if ch == 0:
                continue
            hit = True
            # f~ - 2 f for m > 0, f~ alone for m < 0
            coef += ch * _f_tilde_minus_f(d * n * n, tau, m * y, log_tol, 2.0 if m > 0 else 0.0)
        return coef * _e(m * z) if hit else None

    return _sum_z_terms(term, const, m_max, tol, return_terms)


# --- higher weight: f_{k+1,d,D} and B_k* ---

def parity_ok(k: int, D: int) -> bool:
    """(-1)^k D < 0, the condition under which the weight k objects are nonzero."""
    return (-1) ** k * D < 0


def cusp_dim(weight: int) -> int:
    """dim S_weight(SL_2(Z)) for even weight >= 2."""
    if weight < 12:
        return 0
    return weight // 12 - 1 if weight % 12 == 2 else weight // 12


@lru_cache(maxsize=None)
def _cot_polys(K: int):
    """P_m with (d/dx)^m pi cot(pi x) = pi^(m+1) P_m(cot pi x): P_0 = c, P_{m+1} = -(1 + c^2) P_m'."""
    ps = [np.array([0.0, 1.0])]
    for _ in range(1, K):
        ps.append(-np.polynomial.polynomial.polymul([1.0, 0.0, 1.0], np.polynomial.polynomial.polyder(ps[-1])))
    return tuple(ps)


def _periodized(w: np.ndarray, Q: QForm, K: int) -> np.ndarray:
    """sum_n Q(w + n, 1)^(-K) for positive definite Q, by partial fractions.

    With roots al, be of Q(x, 1) = a (x - al)(x - be), each power
    (x - r)^(-j) periodizes to (-1)^(j-1)/(j-1)! pi^j P_{j-1}(cot pi(x - r)).
    """
    a, b, c = Q
    al = complex(-b, math.sqrt(-Q.disc)) / (2 * a)
    be = al.conjugate()
    ps = _cot_polys(K)
    tot = np.zeros(np.shape(w), dtype=complex)
    for r, other in ((al, be), (be, al)):
        cot = 1 / np.tan(np.pi * (w - r))
        for j in range(1, K + 1):
            coef = math.comb(2 * K - j - 1, K - j) * (-1) ** (K - j) / (r - other) ** (2 * K - j)
            hur = (-1) ** (j - 1) / math.factorial(j - 1) * math.pi ** j * np.polynomial.polynomial.polyval(cot, ps[j - 1])
            tot += coef * hur
    return tot / a ** K


@lru_cache(maxsize=64)
def _orbit_points(z: complex, R2: float):
    """(c z + d, gamma z) over Gamma_oo \\ PSL_2(Z) with |c z + d|^2 <= R2."""
    pairs = [(0, 1)] + weil.coset_pairs(z, R2)
    cd = np.array(pairs, dtype=np.int64)
    j = cd[:, 0] * z + cd[:, 1]
    gz = np.empty(len(cd), dtype=complex)
    gz[0] = z
    for i in range(1, len(cd)):
        c, d = int(cd[i, 0]), int(cd[i, 1])
        a = pow(d, -1, c) if c > 1 else 0
        gz[i] = a / c - 1 / (c * j[i])
    return j, gz


def _orbit_radius(tol: float) -> float:
    # the truncation error decays like R2^(-3/2) (checked against R2 doubling)
    return float(min(max(tol ** (-2 / 3), 400.0), 2e5))


def _f_definite(K: int, N: int, D: int, z: complex, R2: float) -> complex:
    """sum over all definite Q of disc -N of chi_D(Q)/Q(z,1)^K, as an orbit sum.

    Q and -Q contribute equally under the parity condition, so this is twice
    sum_{[Q0] > 0} chi_D(Q0)/omega_Q0 sum_{gamma} (cz + d)^(-2K) Q0(gamma z, 1)^(-K).
    """
    j, gz = _orbit_points(z, R2)
    tot = 0j
    for Q in qforms.class_representatives(N):
        chi = qforms.genus_character(Q, D)
        if not chi:
            continue
        al = qforms.cm_point(Q)
        # distance of the orbit points to the translates of z_Q
        dz = gz - al
        dz = dz - np.round(dz.real)
        qabs = np.abs(j) ** 2 * Q.a * np.abs(dz) * np.abs(dz + 2j * al.imag)
        if np.min(qabs) < POLE_Q:
            raise PoleError("z is within 1e-6 of a CM point of a summand")
        tot += chi / qforms.stabilizer_order(Q) * np.sum(j ** (-2 * K) * _periodized(gz, Q, K))
    return complex(2 * tot)


def _dirichlet_L(s: int, D: int) -> float:
    m = abs(D)
    if m == 1:
        return float(mpmath.zeta(s))
    return float(sum(qforms.kronecker(D, r) * mpmath.zeta(s, mpmath.mpf(r) / m) for r in range(1, m)) / mpmath.mpf(m) ** s)


def _eisenstein(K: int, z: complex) -> complex:
    """E_{2K}(z) = 1 - (4K/B_{2K}) sum sigma_{2K-1}(n) q^n, through the reduced point."""
    w, c, d = _reduce(complex(z))
    q = cmath.exp(2j * math.pi * w)
    fac = -4 * K / float(mpmath.bernoulli(2 * K))
    s, n = 1 + 0j, 1
    while True:
        t = fac * sum(m ** (2 * K - 1) for m in _divisors(n)) * q ** n
        s += t
        if abs(t) < 1e-18 * abs(s) and n > 4:
            break
        n += 1
    return s * (c * z + d) ** (-2 * K)


def _riesz_lattice(q4: int, D: int, z: complex, T: float, term) -> tuple[complex, float]:
    """Slowly convergent shell sum sum_{Q(lambda) = q4/4} term(chi, Q_lambda(z), R).

    Riesz means sum term (1 - M/T')^2 at T' = T/2, T, 2T have a 1/T' bias,
    removed by one Richardson step; returns (value, error estimate).
    """
    a, b, c, chi = _fixed_points(z, 2 * T, q4, D)
    if len(a) == 0:
        return 0j, 0.0
    _, qz, R = _geometry(a, b, c, z)
    M = qforms.majorant_array(a.astype(float), b.astype(float), c.astype(float), z)
    vals = term(chi, qz, R)
    S = {t: complex(np.sum(vals * np.clip(1 - M / t, 0, None) ** 2)) for t in (T / 2, T, 2 * T)}
    r1 = 2 * S[T] - S[T / 2]
    r2 = 2 * S[2 * T] - S[T]
    return r2, abs(r2 - r1)


def f_higher(k: int, d: int, D: int, z: complex, budget: EvalBudget = EvalBudget(tol=1e-10)) -> complex:
    """f_{k+1,d,D}(z) = sum over Q of disc d|D|, Q != 0, of chi_D(Q)/Q(z,1)^(k+1).

    d < 0: meromorphic, by orbit sums over the definite classes; d = 0:
    2 L(k+1, chi_D) E_{2k+2}; d > 0: a cusp form of weight 2k+2, which is
    0 when that space is trivial and otherwise a Riesz-summed lattice sum
    with cap budget.T (default 12800).  Parity violating (k, D) give 0.
    """
    if k < 1:
        raise DomainError("f_higher needs k >= 1")
    if not qforms.is_fundamental(D):
        raise DomainError(f"{D} is not a fundamental discriminant")
    z = complex(z)
    K = k + 1
    if not parity_ok(k, D):
        warnings.warn(f"(-1)^k D > 0 for k = {k}, D = {D}: the series vanishes identically")
        return 0j
    N = d * abs(D)
    if N % D or (N // D) % 4 not in (0, 1):
        return 0j
    if d < 0:
        return _f_definite(K, -N, D, z, budget.c_max or _orbit_radius(budget.tol))
    if d == 0:
        return 2 * _dirichlet_L(K, D) * _eisenstein(K, z)
    if cusp_dim(2 * K) == 0:
        return 0j
    val, _ = _riesz_lattice(-N, D, z, budget.T or 12800.0, lambda chi, qz, R: chi / qz ** K)
    return val


def g_higher(k: int, d: int, D: int, z: complex, v: float, tol: float = 1e-13) -> complex:
    """g_{k+1,d,D}(v, z) = (1/k!) sum_{Q in Q_{-d|D|}, Q != 0} chi_D(Q)/Q(z,1)^(k+1) Gamma(k+1, 4 pi v |Q(z,1)|^2/(y^2 |D|))."""
    z = complex(z)
    K = k + 1
    absD = abs(D)
    q4 = d * absD
    if (-q4) % D or ((-q4) // D) % 4 not in (0, 1) or not parity_ok(k, D):
        return 0j
    # 4 pi v |Q|^2/(y^2 |D|) = 8 pi v R/|D| and R = M - Q(lambda)
    T = theta._rounded_cap(max(q4 / 4, 0.0) + (math.log(1 / tol) + 3 * K) * absD / (8 * math.pi * v) + 1)
    a, b, c, chi = _fixed_points(z, T, q4, D)
    if len(a) == 0:
        return 0j
    _, qz, R = _geometry(a, b, c, z)
    if np.min(np.abs(qz)) < POLE_Q:
        raise PoleError("z is within 1e-6 of a CM point of a summand")
    # Gamma(K, x)/k! is the regularized upper gamma since Gamma(K) = k!
    return complex(np.sum(chi / qz ** K * specialfn.gamma_ratio_array(K, 8 * math.pi * v * R / absD)))


def _b_prefactor(k: int, D: int) -> float:
    return math.factorial(k) * abs(D) ** ((k + 1) / 2) / math.pi ** (k + 1)


def _b_indices(k: int, dm: int):
    return [d for d in range(-dm, dm + 1) if ((-1) ** k * d) % 4 in (0, 1)]


def b_coefficient(k: int, d: int, D: int, z: complex, v: float, budget: EvalBudget = EvalBudget(tol=1e-10)) -> complex:
    """k! |D|^((k+1)/2)/pi^(k+1) (f~_{k+1,-d,D}(v, z) - g_{k+1,d,D}(v, z)), smooth in z.

    f~ carries Gamma(k+1/2, 4 pi |d| v)/Gamma(k+1/2) when -d > 0.  Near a pole
    of f the difference is evaluated by circle averages.
    """
    z = complex(z)

    def fn(w):
        f = 0j
        if d >= 0 or cusp_dim(2 * k + 2):
            f = f_higher(k, -d, D, w, budget)
            if d < 0:
                f *= specialfn.gamma_ratio_array(k + 0.5, np.array([4 * math.pi * abs(d) * v]))[0]
        return f - g_higher(k, d, D, w, v, budget.tol * 1e-2)

    try:
        val = fn(z)
    except PoleError:
        val = smooth_value(fn, z)[0]
    return _b_prefactor(k, D) * val


def B_star(k: int, D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-10)) -> complex:
    """B_k*(tau, z) = sum_d b_d(v, z) e(d tau) over (-1)^k d = 0, 1 (mod 4); weight -k+1/2 on Gamma_0(4) in tau, 2k+2 in z."""
    tau, z = complex(tau), complex(z)
    if not parity_ok(k, D):
        warnings.warn(f"(-1)^k D > 0 for k = {k}, D = {D}: B_k* vanishes identically")
        return 0j
    v = tau.imag
    dm = budget.d_max if budget.d_max is not None else _d_cap(v, budget.tol)
    return sum(b_coefficient(k, d, D, z, v, budget) * _e(d * tau) for d in _b_indices(k, dm))


def B_star_vector(k: int, D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-10)) -> np.ndarray:
    """Vector companion sum_d b_d(v/4, z) e(d tau/4) e_d, with B_star = its scalar bridge."""
    tau, z = complex(tau), complex(z)
    out = np.zeros(2, dtype=complex)
    if not parity_ok(k, D):
        return out
    v = tau.imag / 4
    dm = budget.d_max if budget.d_max is not None else _d_cap(v, budget.tol)
    for d in _b_indices(k, dm):
        out[d % 2] += b_coefficient(k, d, D, z, v, budget) * _e(d * tau / 4)
    return out


def singular_theta(k: int, D: int, tau: complex, z: complex, budget: EvalBudget = EvalBudget(tol=1e-8, T=6400.0)):
    """Theta function of the singular kernel, sum over lambda != 0 of

        k! |D|^((k+1)/2) chi_D(lambda)/(pi^(k+1) Q_lambda(z)^(k+1)) e(Q(lambda) tau/|D|) h(lambda),
        h = 1 - Gamma(k+1, x)/k!                                        (Q(lambda) >= 0),
        h = Gamma(k+1/2, -4 pi Q(lambda) v/|D|)/Gamma(k+1/2) - Gamma(k+1, x)/k!  (Q(lambda) < 0),

    with x = 2 pi v R(lambda, z)/|D|.  Each shell Q(lambda) = d|D|/4 is a
    Riesz-summed lattice sum at cap budget.T.  Returns (vector value, error
    estimate); it reproduces B_star_vector as a single lattice sum.
    """
    tau, z = complex(tau), complex(z)
    out = np.zeros(2, dtype=complex)
    if not parity_ok(k, D):
        return out, 0.0
    K = k + 1
    absD = abs(D)
    v = tau.imag
    dm = budget.d_max if budget.d_max is not None else _d_cap(v / 4, budget.tol)
    err = 0.0
    for d in _b_indices(k, dm):
        q = d * absD / 4
        head = 1.0 if q >= 0 else specialfn.gamma_ratio_array(k + 0.5, np.array([-4 * math.pi * q * v / absD]))[0]

        def term(chi, qz, R, head=head):
            return chi / qz ** K * (head - specialfn.gamma_ratio_array(K, 2 * math.pi * v * R / absD))

        val, e = _riesz_lattice(d * absD, D, z, budget.T or 6400.0, term)
        fac = _b_prefactor(k, D) * _e(d * tau / 4)
        out[d % 2] += fac * val
        err += abs(fac) * e
    return out, err


def shintani_perp_relation(k: int, D: int, tau: complex, z: complex,
                           budget: EvalBudget = EvalBudget(tol=1e-10)) -> float:
    """Relative residual of L_{2k+2,z} B_vec(tau, z) = 2 Theta_{M,k,D}(tau, z)."""
    tau, z = complex(tau), complex(z)
    if not parity_ok(k, D):
        return 0.0
    st = diffops.Stencil(h=budget.h if budget.h else 1e-3 * z.imag)
    lhs, _ = diffops.lower(lambda w: B_star_vector(k, D, tau, w, budget), z, 2 * k + 2, st)
    rhs = 2 * theta.theta_vec(theta.ThetaKind("millson", D, k), tau, z)
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))


def A_star(spec: CompletionSpec, tau: complex, z: complex):
    """Evaluate the completion selected by spec at (tau, z).

    A_star_scalar: the Gamma_0(4) scalar sum (complex); A_star_vec_tau: the
    raw vector tau-sum of F*_{d,D} (route b); A_star_vec_z: the z-expansion
    (route c, equal to -(1/4 pi) route b); Millson_z / Shintani_tau with
    D = -d; B_star: the scalar B_k*.
    """
    f, D, b = spec.family, spec.D, spec.budget
    if f == "A_star_scalar":
        return A_star_scalar(tau, z, budget=b)
    if f == "A_star_vec_tau":
        return A_star_tau(D, tau, z, b)
    if f == "A_star_vec_z":
        return A_star_z(D, tau, z, b)
    if f == "Millson_z":
        return millson_completion(-D, tau, z, b)
    if f == "Shintani_tau":
        return shintani_completion_tau(-D, tau, z, b)
    return B_star(spec.k, D, tau, z, b)
