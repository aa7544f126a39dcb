"""Maass operators by central finite differences.

Functions are black boxes H -> C or H -> C^n (numpy arrays act
componentwise).  With tau = u + iv,

    d/dtau = (d_u - i d_v)/2,   d/dtaubar = (d_u + i d_v)/2,
    L_k = -2i v^2 d/dtaubar,    R_k = 2i d/dtau + k/v,
    xi_k f = v^(k-2) conj(L_k f),
    Delta_k = -v^2 (d_uu + d_vv) + i k v (d_u + i d_v).

Every operator returns (value, error estimate).  The estimate is the
difference between the step h and step 2h results (one Richardson level
is applied to both when requested).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# central difference weights on offsets -2..2
_D1 = {2: (0, -0.5, 0, 0.5, 0), 4: (1 / 12, -2 / 3, 0, 2 / 3, -1 / 12)}
_D2 = {2: (0, 1, -2, 1, 0), 4: (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)}
_OFFS = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class Stencil:
    h: float | None = None     # absolute step; default 1e-4 * Im(tau0)
    order: int = 4
    richardson: bool = True

    def step(self, tau0: complex) -> float:
        return self.h if self.h is not None else 1e-4 * tau0.imag


def _partials(f, tau0, h, order):
    """(f_u, f_v, f_uu, f_vv) at tau0 with step h."""
    if order not in _D1:
        raise ValueError("order must be 2 or 4")
    fu = np.zeros_like(np.asarray(f(tau0), dtype=complex))
    fv, fuu, fvv = fu.copy(), fu.copy(), fu.copy()
    center = None
    for k, off in enumerate(_OFFS):
        if off == 0:
            center = np.asarray(f(tau0), dtype=complex)
            fuu = fuu + _D2[order][k] * center
            fvv = fvv + _D2[order][k] * center
            continue
        if _D1[order][k] == 0 and _D2[order][k] == 0:
            continue
        a = np.asarray(f(tau0 + off * h), dtype=complex)
        b = np.asarray(f(tau0 + 1j * off * h), dtype=complex)
        fu = fu + _D1[order][k] * a
        fv = fv + _D1[order][k] * b
        fuu = fuu + _D2[order][k] * a
        fvv = fvv + _D2[order][k] * b
    return fu / h, fv / h, fuu / h ** 2, fvv / h ** 2, center


def _combine(op, k, tau0, parts):
    fu, fv, fuu, fvv, f0 = parts
    v = tau0.imag
    if op == "lower":
        return -2j * v * v * (fu + 1j * fv) / 2
    if op == "raise":
        return 2j * (fu - 1j * fv) / 2 + k / v * f0
    if op == "xi":
        return v ** (k - 2) * np.conj(-2j * v * v * (fu + 1j * fv) / 2)
    if op == "laplace":
        return -v * v * (fuu + fvv) + 1j * k * v * (fu + 1j * fv)
    if op == "d_tau":
        return (fu - 1j * fv) / 2
    if op == "d_taubar":
        return (fu + 1j * fv) / 2
    raise ValueError(f"unknown operator {op!r}")


def apply(op: str, f, tau0: complex, k: float = 0.0, stencil: Stencil = Stencil()):
    """Apply op in {lower, raise, xi, laplace, d_tau, d_taubar} at weight k.

    Returns (value, error_estimate); value is a complex scalar or array.
    """
    tau0 = complex(tau0)
    h = stencil.step(tau0)
    p = stencil.order

    def at(step):
        return _combine(op, k, tau0, _partials(f, tau0, step, stencil.order))

    a1, a2 = at(h), at(2 * h)
    if stencil.richardson:
        # error ~ h^p: extrapolate h, 2h and compare against h, 2h -> 4h
        a4 = at(4 * h)
        r1 = (2 ** p * a1 - a2) / (2 ** p - 1)
        r2 = (2 ** p * a2 - a4) / (2 ** p - 1)
        val, err = r1, np.max(np.abs(r1 - r2))
    else:
        val, err = a1, np.max(np.abs(a1 - a2))
    if np.ndim(val) == 0:
        val = complex(val)
    return val, float(err)


def lower(f, tau0, k, stencil: Stencil = Stencil()):
    return apply("lower", f, tau0, k, stencil)


def raise_(f, tau0, k, stencil: Stencil = Stencil()):
    return apply("raise", f, tau0, k, stencil)


def xi(f, tau0, k, stencil: Stencil = Stencil()):
    return apply("xi", f, tau0, k, stencil)


def laplace(f, tau0, k, stencil: Stencil = Stencil()):
    return apply("laplace", f, tau0, k, stencil)


def operator_identity_check(f, tau0, k, stencil: Stencil = Stencil(h=1e-3)):
    """Residuals of -Delta_k = L_{k+2} R_k + k = R_{k-2} L_k at tau0.

    The compositions are nested finite differences, so a larger step than
    the default is used.  Returns residuals against the direct Laplacian,
    relative to max(|f|, |Delta_k f|) at tau0.
    """
    tau0 = complex(tau0)
    inner = Stencil(h=stencil.step(tau0) / 4, order=stencil.order, richardson=stencil.richardson)
    direct, _ = laplace(f, tau0, k, stencil)
    Rf = lambda t: raise_(f, t, k, inner)[0]
    Lf = lambda t: lower(f, t, k, inner)[0]
    LR, _ = lower(Rf, tau0, k + 2, stencil)
    RL, _ = raise_(Lf, tau0, k - 2, stencil)
    f0 = np.asarray(f(tau0))
    scale = max(float(np.max(np.abs(f0))), float(np.max(np.abs(direct))), 1e-300)
    return {
        "L_R": float(np.max(np.abs(-direct - (LR + k * f0)))) / scale,
        "R_L": float(np.max(np.abs(-direct - RL))) / scale,
    }
