"""Real special functions used by the completions.

erfc, the upper incomplete gamma function at half-integral order, the
generalized exponential integral, W_k and the kernel K_w(v).  Float
versions are used for lattice sums; the ``_mp`` variants serve the coset
expansions, which need many digits because of cancellation.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import special as _sp

from .qforms import DomainError

SQRT_PI = math.sqrt(math.pi)


def erfc(x):
    """Complementary error function (numpy aware)."""
    return _sp.erfc(x)


def _is_half_integer(s) -> bool:
    return abs(2 * s - round(2 * s)) < 1e-12


def upper_gamma(s: float, x: float) -> float:
    """Gamma(s, x) for s in Z/2 and x > 0.

    Recurrence from Gamma(1, x) = e^-x or Gamma(1/2, x) = sqrt(pi) erfc(sqrt x).
    For negative orders at large x the downward recurrence cancels badly,
    so a continued fraction takes over there.
    """
    if x <= 0:
        raise DomainError("upper_gamma needs x > 0")
    if not _is_half_integer(s):
        raise DomainError("upper_gamma supports s in Z/2 only")
    two_s = int(round(2 * s))
    if two_s <= 0 and x > 2.0:
        return _gamma_cf(two_s / 2, x)
    if two_s % 2:
        base_s, g = 0.5, SQRT_PI * math.erfc(math.sqrt(x))
    elif two_s > 0:
        base_s, g = 1.0, math.exp(-x)
    else:
        base_s, g = 0.0, float(_sp.exp1(x))
    t = base_s
    while t < s - 1e-12:
        g = t * g + x ** t * math.exp(-x)
        t += 1
    while t > s + 1e-12:
        g = (g - x ** (t - 1) * math.exp(-x)) / (t - 1)
        t -= 1
    return g


def _gamma_cf(s, x):
    # modified Lentz on Gamma(s,x) = e^-x x^s / (x + 1 - s - 1(1-s)/(x + 3 - s - ...))
    tiny = 1e-300
    b = x + 1 - s
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < 1e-16:
            break
    return math.exp(-x + s * math.log(x)) * h


def upper_gamma_array(s: float, x):
    return np.vectorize(lambda t: upper_gamma(s, t), otypes=[float])(x)


def gamma_ratio_array(s: float, x: np.ndarray) -> np.ndarray:
    """Gamma(s, x)/Gamma(s) for s > 0 (regularized), vectorized."""
    return _sp.gammaincc(s, x)


def expint_E(r: float, x: float) -> float:
    """Generalized exponential integral E_r(x) = x^(r-1) Gamma(1-r, x), x > 0."""
    if x <= 0:
        raise DomainError("expint_E needs x > 0")
    return x ** (r - 1) * upper_gamma(1 - r, x)


def W_k(x: float, k: float) -> float:
    """W_k(x) = (-2x)^(1-k) E_k(-2x), real part taken.

    For x < 0 the expression is Gamma(1-k, 2|x|).  For x > 0 the argument
    of E_k is negative; we read the real part as applying to the whole
    product, i.e. W_k(x) = Re Gamma(1-k, -2x) with the principal branch,
    which keeps W_k real.
    """
    if x == 0:
        raise DomainError("W_k is not defined at 0")
    if x < 0:
        return upper_gamma(1 - k, -2 * x)
    with mpmath.workdps(30):
        return float(mpmath.re(mpmath.gammainc(1 - k, -2 * x)))


def kernel_K(w: float, v: float) -> float:
    """K_w(v) = (w^2/v^(3/2)) int_1^oo exp(-pi (wt/sqrt v - sqrt v)^2) t dt.

    Closed form: sgn(w)/2 erfc(sgn(w) sqrt(pi) s) + exp(-pi s^2)/(2 pi sqrt v),
    s = w/sqrt v - sqrt v.  At w = 0 the closed form is used as is
    (sgn 0 = 0).
    """
    if v <= 0:
        raise DomainError("kernel_K needs v > 0")
    w = float(w)
    sv = math.sqrt(v)
    s = w / sv - sv
    sg = (w > 0) - (w < 0)
    return 0.5 * sg * math.erfc(sg * SQRT_PI * s) + math.exp(-math.pi * s * s) / (2 * math.pi * sv)


def kernel_K_quad(w: float, v: float) -> float:
    """Quadrature of the defining integral (test oracle)."""
    from scipy.integrate import quad
    if v <= 0:
        raise DomainError("kernel_K needs v > 0")
    sv = math.sqrt(v)
    f = lambda t: math.exp(-math.pi * (w * t / sv - sv) ** 2) * t
    # peak of the Gaussian at t0 = v/w for w > 0
    pts = [v / w] if w > 0 and v / w > 1 else None
    val, _ = quad(f, 1, np.inf, epsabs=0, epsrel=1e-13, limit=400) if pts is None else (
        quad(f, 1, pts[0], epsabs=0, epsrel=1e-13, limit=400)[0]
        + quad(f, pts[0], np.inf, epsabs=0, epsrel=1e-13, limit=400)[0], 0)
    return w * w / v ** 1.5 * val


def kernel_K_mp(w, v):
    """mpmath version of kernel_K at the working precision."""
    w = mpmath.mpf(w)
    v = mpmath.mpf(v)
    sv = mpmath.sqrt(v)
    s = w / sv - sv
    sg = mpmath.sign(w)
    return sg / 2 * mpmath.erfc(sg * mpmath.sqrt(mpmath.pi) * s) + mpmath.exp(-mpmath.pi * s * s) / (2 * mpmath.pi * sv)
