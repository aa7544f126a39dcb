"""Twisted theta functions of the lattice L as truncated lattice sums.

For a fundamental discriminant D the vector-valued theta function is

    Theta(phi) = sum_mu sum_{lambda} chi_D(lambda) phi(lambda) e_mu,

over lambda in L' with D | disc(lambda) and disc/D = 0, 1 (mod 4); such a
lambda sits in component mu = disc/D mod 4.  Every kernel is
phi0 * exp(-2 pi v (Q(lambda) + R(lambda, z))/|D|) with a polynomial phi0,
so all sums are truncated at a majorant cap T and carry a tail bound.

Also here: the scalar Siegel and Kudla-Millson thetas on Gamma_0(4), the
coset expansions of the Kudla-Millson and Millson thetas, and residual
checks for modularity and the differential equations linking the kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import diffops, qforms, weil
from .qforms import DomainError

KINDS = ("siegel", "km", "shintani", "millson")


@dataclass(frozen=True)
class EvalBudget:
    """Truncation parameters shared by the evaluators.

    T is a majorant cap (None: chosen from tol); c_max caps coset sums by
    |c tau + d|^2 (None: chosen from tol); d_max / m_max cap Fourier sums;
    N is a q-precision; h is the finite difference step (None: relative
    default).
    """

    tol: float = 1e-14
    T: float | None = None
    c_max: float | None = None
    d_max: int | None = None
    m_max: int | None = None
    N: int = 60
    h: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("tol", "T", "c_max", "d_max", "m_max", "N", "h")}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalBudget":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class ThetaKind:
    kind: str
    D: int
    k: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not qforms.is_fundamental(self.D):
            raise DomainError(f"{self.D} is not a fundamental discriminant")
        if self.k < 0 or (self.kind in ("siegel", "km") and self.k != 0):
            raise ValueError("k must be 0 for siegel/km and >= 0 otherwise")

    @property
    def vanishes(self) -> bool:
        if self.kind in ("siegel", "km"):
            return self.D < 0
        return (-1) ** self.k * self.D > 0

    @property
    def rep(self) -> str:
        return "rho" if self.D > 0 else "rho_bar"

    @property
    def weights(self) -> tuple[float, int]:
        """(weight in tau, weight in z)."""
        k = self.k
        return {"siegel": (-0.5, 0), "km": (1.5, 0),
                "shintani": (-1.5 - k, 2 * k + 2), "millson": (0.5 - k, 2 * k)}[self.kind]


@dataclass
class ThetaValue:
    value: np.ndarray
    tail_bound: float
    T: float
    n_terms: int = field(default=0)

    def to_dict(self) -> dict:
        v = self.value
        return {"value": [v[0].real, v[0].imag, v[1].real, v[1].imag],
                "tail_bound": self.tail_bound, "T": self.T, "n_terms": self.n_terms}


# --- lattice points ---

def _cap(absD: int, v: float, tol: float, degree: int) -> float:
    """Majorant cap T with exp(-2 pi v T/|D|) T^(degree/2 + 3/2) below tol."""
    alpha = 2 * math.pi * v / absD
    T = math.log(1 / tol) / alpha
    for _ in range(4):
        T = (math.log(1 / tol) + (degree / 2 + 1.5) * math.log(max(T, 1.0))) / alpha
    return T


@lru_cache(maxsize=256)
def _points(z: complex, T: float, D: int):
    """Summation set with M_z <= T: arrays a, b, c, component, chi."""
    pts = qforms.enumerate_by_majorant(z, T)
    if D == 1:
        pts = np.vstack([np.zeros((1, 3), dtype=np.int64), pts])
    a, b, c = pts[:, 0], pts[:, 1], pts[:, 2]
    disc = b * b - 4 * a * c
    keep = (disc % abs(D) == 0)
    q = np.where(keep, disc // D, 0)
    keep &= np.isin(np.mod(q, 4), (0, 1))
    a, b, c, q = a[keep], b[keep], c[keep], q[keep]
    chi = qforms.genus_character_array(a, b, c, D).astype(float)
    nz = chi != 0
    out = tuple(np.ascontiguousarray(t[nz]) for t in (a, b, c))
    comp = np.mod(q[nz], 4).astype(np.int64)
    for t in out + (comp,):
        t.setflags(write=False)
    chi = chi[nz]
    chi.setflags(write=False)
    return out + (comp, chi)


def _rounded_cap(T: float) -> float:
    # share enumerations across nearby evaluation points
    return math.ceil(T * 4) / 4


def _tail_bound(z: complex, T: float, absD: int, v: float, degree: int) -> float:
    G = qforms.majorant_gram(z)
    det = max(np.linalg.det(G), 1e-300)
    alpha = 2 * math.pi * v / absD
    # number of points with M in [t, t+dt] ~ 2 pi sqrt(t)/sqrt(det) dt, each
    # term at most (c0 t)^(degree/2) exp(-alpha t)
    c0 = 4 * max(1.0, v / z.imag ** 2) * max(1.0, z.imag ** 2) / absD
    s = 0.0
    t, dt = T, 1 / alpha
    for _ in range(60):
        s += 2 * math.pi * math.sqrt(t) / math.sqrt(det) * (1 + c0 * t) ** (degree / 2 + 1) * math.exp(-alpha * t) * dt
        t += dt
    return s


def _geometry_arrays(a, b, c, z):
    x, y = z.real, z.imag
    af, bf, cf = a.astype(float), b.astype(float), c.astype(float)
    p = -(af * (x * x + y * y) + bf * x + cf) / y
    qz = af * z * z + bf * z + cf
    qzb = af * np.conj(z) ** 2 + bf * np.conj(z) + cf
    disc = bf * bf - 4 * af * cf
    Q = -disc / 4
    R = 0.5 * p * p + 0.5 * disc
    return p, qz, qzb, Q, R


def _polynomial(kind: ThetaKind, v, y, p, qz, qzb, absD):
    k = kind.k
    if kind.kind == "siegel":
        return np.full(p.shape, v, dtype=complex)
    if kind.kind == "km":
        return (v * p * p / absD - 1 / (2 * math.pi)).astype(complex)
    if kind.kind == "shintani":
        return v ** (k + 2) * qzb ** (k + 1) / (y ** (2 * k + 2) * absD ** ((k + 1) / 2))
    return v ** (k + 1) * p * qzb ** k / (y ** (2 * k) * absD ** ((k + 1) / 2))


def _degree(kind: ThetaKind) -> int:
    return {"siegel": 0, "km": 2, "shintani": 2 * kind.k + 2, "millson": 2 * kind.k + 1}[kind.kind]


def theta_eval(kind: ThetaKind, tau: complex, z: complex, budget: EvalBudget = EvalBudget()) -> ThetaValue:
    """Truncated lattice sum of the theta function of the given kind."""
    tau, z = complex(tau), complex(z)
    if tau.imag <= 0 or z.imag <= 0:
        raise DomainError("tau and z must lie in the upper half plane")
    if kind.vanishes:
        return ThetaValue(np.zeros(2, dtype=complex), 0.0, 0.0, 0)
    absD = abs(kind.D)
    v, y = tau.imag, z.imag
    T = budget.T if budget.T is not None else _rounded_cap(_cap(absD, v, budget.tol, _degree(kind)))
    a, b, c, comp, chi = _points(z, T, kind.D)
    p, qz, qzb, Q, R = _geometry_arrays(a, b, c, z)
    poly = _polynomial(kind, v, y, p, qz, qzb, absD)
    terms = chi * poly * np.exp(2j * math.pi * Q * tau.real / absD - 2 * math.pi * v * (Q + R) / absD)
    val = np.array([terms[comp == 0].sum(), terms[comp == 1].sum()])
    return ThetaValue(val, _tail_bound(z, T, absD, v, _degree(kind)), T, len(terms))


def theta_vec(kind: ThetaKind, tau, z, budget: EvalBudget = EvalBudget()) -> np.ndarray:
    return theta_eval(kind, tau, z, budget).value


# --- scalar versions of the introduction (Gamma_0(4), D = 1) ---

def scalar_siegel(tau: complex, z: complex, tol: float = 1e-14) -> complex:
    """4v sum_d sum_{Q in Q_-d} exp(-4 pi v |Q(z,1)|^2/y^2) e(d tau), all Q incl. 0."""
    return _scalar(tau, z, tol, "siegel")


def scalar_km(tau: complex, z: complex, tol: float = 1e-14) -> complex:
    """sum_d sum_Q (4v Q_z^2 - 1/(2 pi)) exp(-4 pi v |Q(z,1)|^2/y^2) e(d tau)."""
    return _scalar(tau, z, tol, "km")


def _scalar(tau, z, tol, which):
    tau, z = complex(tau), complex(z)
    v, y, x = tau.imag, z.imag, z.real
    # |e(d tau)| exp(-4 pi v |Q|^2/y^2) = exp(-8 pi v M_z(Q))
    T = _rounded_cap(_cap(1, 4 * v, tol, 2))
    pts = qforms.enumerate_by_majorant(z, T)
    pts = np.vstack([np.zeros((1, 3), dtype=np.int64), pts])
    a, b, c = (pts[:, i].astype(float) for i in range(3))
    d = 4 * a * c - b * b
    qzv = a * z * z + b * z + c
    Qz = (a * (x * x + y * y) + b * x + c) / y
    g = np.exp(-4 * math.pi * v * np.abs(qzv) ** 2 / y ** 2 + 2j * math.pi * d * tau)
    if which == "siegel":
        return complex(4 * v * g.sum())
    return complex(((4 * v * Qz * Qz - 1 / (2 * math.pi)) * g).sum())


# --- coset expansions ---

def _eps(D: int) -> complex:
    return 1.0 if D > 0 else 1j


def coset_expansion(kind: ThetaKind, tau: complex, z: complex, tol: float = 1e-13) -> np.ndarray:
    """Kudla-Millson or Millson (k = 0) theta from its Gamma~_oo \\ Gamma~ expansion.

    Theta_KM = -(y^3/(2|D|)) eps(D) sum_n n^2 (D/n) sum_gamma
                 (exp(-pi y^2 n^2/(v|D|)) v^(-3/2) sum_b e(-|D| b^2 taubar/4 - b n x) e_{Db}) |_{3/2} gamma,
    Theta_M  = -(y^2/(2i sqrt|D|)) eps(D) sum_n n (D/n) sum_gamma (same with v^(-1/2)) |_{1/2} gamma.

    The full coset sum is four times the quarter sum over c >= 0.  The
    Kudla-Millson prefactor carries 1/(2|D|); with 1/|D| the expansion is
    exactly twice the lattice sum.
    """
    tau, z = complex(tau), complex(z)
    if kind.kind not in ("km", "millson") or kind.k != 0:
        raise ValueError("coset expansions exist for km and millson with k = 0")
    if kind.vanishes:
        return np.zeros(2, dtype=complex)
    D, absD = kind.D, abs(kind.D)
    x, y = z.real, z.imag
    wt = 1.5 if kind.kind == "km" else 0.5
    vpow = -1.5 if kind.kind == "km" else -0.5
    npow = 2 if kind.kind == "km" else 1
    pref = (-(y ** 3) / (2 * absD) if kind.kind == "km" else -(y ** 2) / (2j * math.sqrt(absD))) * _eps(D)
    L = math.log(1 / tol)
    total = np.zeros(2, dtype=complex)
    n = 1
    while True:
        # the identity coset has the largest Gaussian exp(-pi y^2 n^2/(v|D|))
        if math.pi * y * y * n * n / (tau.imag * absD) > L + 10:
            break
        chi = qforms.kronecker(D, n)
        if chi:
            seed = _coset_seed(n, x, y, D, vpow, tol)
            # terms live where |c tau + d|^2 <= v |D| (L + margin)/(pi y^2 n^2)
            r2 = tau.imag * absD * (L + 12) / (math.pi * y * y * n * n)
            s = weil.quarter_sum(seed, wt, tau, r2, kind.rep)
            total += 4 * chi * n ** npow * s
        n += 1
    return pref * total


def _coset_seed(n, x, y, D, vpow, tol):
    absD = abs(D)
    L = math.log(1 / tol)

    def seed(t):
        v = t.imag
        g = math.exp(-math.pi * y * y * n * n / (v * absD)) * v ** vpow
        out = np.zeros(2, dtype=complex)
        if g == 0.0:
            return out
        bmax = int(math.sqrt(2 * (L + 5) / (math.pi * absD * v))) + 2
        bs = np.arange(-bmax, bmax + 1)
        ph = np.exp(2j * math.pi * (-absD * bs * bs * np.conj(t) / 4 - bs * n * x))
        comp = np.mod(D * bs, 2)
        out[0] = ph[comp == 0].sum()
        out[1] = ph[comp == 1].sum()
        return g * out

    return seed


# --- residual checks ---

def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def modularity_residual(kind: ThetaKind, tau: complex, z: complex, budget: EvalBudget = EvalBudget()) -> dict:
    """Relative residuals of the tau and z transformation laws under S and T."""
    k_tau, k_z = kind.weights
    f = lambda t: theta_vec(kind, t, z, budget)
    out = {}
    for name, elt in (("tau_S", weil.S), ("tau_T", weil.T)):
        out[name] = _rel(weil.slash(f, k_tau, elt, kind.rep)(tau), f(tau))
    base = theta_vec(kind, tau, z, budget)
    out["z_S"] = _rel(theta_vec(kind, tau, -1 / z, budget), z ** k_z * base)
    out["z_T"] = _rel(theta_vec(kind, tau, z + 1, budget), base)
    return out


def diffeq_residuals(pair: str, D: int, tau: complex, z: complex,
                     budget: EvalBudget = EvalBudget(tol=1e-15)) -> dict:
    """Residuals of the differential equations linking the kernels.

    pair 'S-KM': L_{3/2,tau} KM = (1/4 pi) Delta_{0,z} S and R_{-1/2,tau} S = -pi KM.
    pair 'Sh-M': L_{1/2,tau} M = (1/2) L_{2,z} Sh and R_{-3/2,tau} Sh = (1/2) R_{0,z} M.
    Residuals are relative to the size of the right-hand side.
    """
    tau, z = complex(tau), complex(z)
    st = diffops.Stencil(h=budget.h)
    if pair == "S-KM":
        S, KM = ThetaKind("siegel", D), ThetaKind("km", D)
        lhs1, _ = diffops.lower(lambda t: theta_vec(KM, t, z, budget), tau, 1.5, st)
        sz = diffops.Stencil(h=budget.h if budget.h else 1e-3 * z.imag)
        lap, _ = diffops.laplace(lambda w: theta_vec(S, tau, w, budget), z, 0, sz)
        rhs1 = lap / (4 * math.pi)
        lhs2, _ = diffops.raise_(lambda t: theta_vec(S, t, z, budget), tau, -0.5, st)
        rhs2 = -math.pi * theta_vec(KM, tau, z, budget)
        return {"lower": _rel(lhs1, rhs1), "raise": _rel(lhs2, rhs2)}
    if pair == "Sh-M":
        Sh, M = ThetaKind("shintani", D), ThetaKind("millson", D)
        lhs1, _ = diffops.lower(lambda t: theta_vec(M, t, z, budget), tau, 0.5, st)
        l2, _ = diffops.lower(lambda w: theta_vec(Sh, tau, w, budget), z, 2, st)
        lhs2, _ = diffops.raise_(lambda t: theta_vec(Sh, t, z, budget), tau, -1.5, st)
        r0, _ = diffops.raise_(lambda w: theta_vec(M, tau, w, budget), z, 0, st)
        return {"lower": _rel(lhs1, 0.5 * l2), "raise": _rel(lhs2, 0.5 * r0)}
    raise ValueError("pair must be 'S-KM' or 'Sh-M'")
