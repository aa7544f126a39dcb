"""Named identity suites with residual reports.

Each suite is a fixed list of cases.  A case names an identity, the sample
point, the budget it is evaluated with and its tolerance, and runs a
module-level check function returning a residual.  A failing or raising
case is recorded and the suite carries on.  Cases are independent and can
be run in a process pool; the report keeps the declared order.
"""

from __future__ import annotations

import cmath
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from . import completions, diffops, plusspace, qforms, qseries, theta, weil
from .config import Config
from .theta import EvalBudget, ThetaKind

SUITES = ("duality", "class-numbers", "denominator", "harmonic-examples", "theta-transforms",
          "theta-diffeqs", "astar-prop12", "astar-two-expansions", "astar-modularity",
          "cm-smoothness", "millson-shintani", "higher-weight", "growth-sanity")


@dataclass
class Case:
    identity: str
    point: dict
    residual: float
    tolerance: float
    budget: dict
    passed: bool
    seconds: float = 0.0
    note: str = ""


@dataclass
class VerifyReport:
    suite: str
    cases: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "pass": self.passed, "cases": [asdict(c) for c in self.cases]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), default=_json_default, **kw)

    def summary(self) -> str:
        worst = max((c.residual / c.tolerance if c.tolerance else (0.0 if c.residual == 0 else math.inf)
                     for c in self.cases), default=0.0)
        n_ok = sum(c.passed for c in self.cases)
        return f"{self.suite}: {n_ok}/{len(self.cases)} cases pass, worst residual/tolerance {worst:.3g}"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def _pt(tau=None, z=None, **kw) -> dict:
    out = {}
    if tau is not None:
        out["tau"] = [tau.real, tau.imag]
    if z is not None:
        out["z"] = [z.real, z.imag]
    out.update(kw)
    return out


# --- check functions (module level so that they pickle) ---

def chk_duality(n_max):
    """Largest |A(D,d) + B(D,d)| over the table (exact integers)."""
    rows = plusspace.duality_table(n_max)
    return max(abs(A + B) for _, _, B, A in rows), f"{len(rows)} pairs"


def chk_hurwitz_anchor(n, expected):
    return abs(qforms.hurwitz_H(n) - Fraction(expected)), ""


def chk_kronecker_hurwitz(n_max):
    """sum_s H(4n - s^2) = 2 sigma(n) - sum_{t | n} min(t, n/t) for n <= n_max."""
    worst = Fraction(0)
    for n in range(1, n_max + 1):
        lhs = sum((qforms.hurwitz_H(4 * n - s * s) for s in range(-math.isqrt(4 * n), math.isqrt(4 * n) + 1)
                   if 4 * n - s * s >= 0), Fraction(0))
        divs = [t for t in range(1, n + 1) if n % t == 0]
        rhs = 2 * sum(divs) - sum(min(t, n // t) for t in divs)
        worst = max(worst, abs(lhs - rhs))
    return worst, ""


def brute_force_classes(d: int) -> set:
    """Reduced representatives of disc -d found by reducing every form in a box.

    Every class has a representative with a, |b| <= sqrt(d/3) and c <= (d + 1)/4,
    so the box a, |b| <= sqrt(d) + 1, c <= d + 1 sees every class.
    """
    out = set()
    B = math.isqrt(d) + 1
    for a in range(1, B + 1):
        for b in range(-B, B + 1):
            num = b * b + d
            if num % (4 * a):
                continue
            c = num // (4 * a)
            out.add(qforms.reduce(qforms.QForm(a, b, c))[0])
    return out


def chk_class_cardinalities(n_max):
    worst = 0
    for d in range(3, n_max + 1):
        if (-d) % 4 not in (0, 1):
            continue
        worst = max(worst, abs(len(qforms.class_representatives(d)) - len(brute_force_classes(d))))
    return worst, ""


def chk_denominator(tau, z, N, prec):
    return qseries.denominator_residual(tau, z, N, prec), ""


def chk_xi_hcal(tau):
    """|xi_{3/2} H + theta/(16 pi)| with theta = sum_n q^(n^2)."""
    val, _ = diffops.xi(plusspace.hcal_scalar, tau, 1.5)
    th = qseries.classical("theta", 60).evaluate(tau)
    return abs(val + th / (16 * math.pi)), ""


def chk_xi_E2(tau):
    val, _ = diffops.xi(qseries.E2star_value, tau, 2)
    return abs(val - 3 / math.pi), ""


def chk_laplace_hcal(tau):
    val, _ = diffops.laplace(plusspace.hcal_scalar, tau, 1.5, diffops.Stencil(h=1e-3 * tau.imag))
    return abs(val), ""


def chk_theta_modularity(kind, D, k, tau, z, tol):
    res = theta.modularity_residual(ThetaKind(kind, D, k), tau, z, EvalBudget(tol=tol))
    return max(res.values()), ", ".join(f"{key} {val:.2e}" for key, val in res.items())


def chk_theta_diffeq(pair, D, tau, z, tol):
    res = theta.diffeq_residuals(pair, D, tau, z, EvalBudget(tol=tol))
    return max(res.values()), ", ".join(f"{key} {val:.2e}" for key, val in res.items())


def chk_prop12(which, tau, z):
    """The three differential equations of the scalar A*, relative residuals."""
    if which == "lower_tau":
        lhs, _ = diffops.lower(lambda t: completions.A_star_scalar(t, z), tau, 1.5)
        r0, _ = diffops.raise_(lambda w: theta.scalar_siegel(tau, w), z, 0)
        rhs = -r0 / (16 * math.pi)
        return abs(lhs - rhs) / abs(rhs), f"|rhs| {abs(rhs):.3g}"
    if which == "lower_z":
        lhs, _ = diffops.lower(lambda w: completions.A_star_scalar(tau, w), z, 2)
        rhs = theta.scalar_km(tau, z)
        return abs(lhs - rhs) / abs(rhs), f"|rhs| {abs(rhs):.3g}"
    lt, _ = diffops.laplace(lambda t: completions.A_star_scalar(t, z), tau, 1.5,
                            diffops.Stencil(h=1e-3 * tau.imag))
    lz, _ = diffops.laplace(lambda w: completions.A_star_scalar(tau, w), z, 2,
                            diffops.Stencil(h=1e-3 * z.imag))
    return abs(4 * lt - lz) / abs(lz), f"|Delta_z A*| {abs(lz):.3g}"


def chk_two_expansions(D, tau, z):
    b = completions.A_star_tau(D, tau, z) * (-1 / (4 * math.pi))
    c = completions.A_star_z(D, tau, z)
    return _rel(c, b), ""


def chk_scalar_bridge(tau, z):
    a = completions.A_star_scalar(tau, z)
    br = weil.scalar_bridge(lambda t: completions.A_star_tau(1, t, z))(tau) * (-1 / (4 * math.pi))
    return abs(a - br) / abs(a), ""


def chk_astar_z_modularity(D, tau, z):
    c1 = completions.A_star_z(D, tau, z)
    c2 = completions.A_star_z(D, tau, -1 / z)
    return _rel(c2, z ** 2 * c1), "route c, z -> -1/z, weight 2"


def chk_astar_tau_modularity(D, tau, z):
    f = lambda t: completions.A_star_tau(D, t, z)
    return _rel(weil.slash(f, 1.5, weil.S, "rho")(tau), f(tau)), "route b, S, weight 3/2"


def chk_cm_smooth(d, D, z_Q, v, rho):
    a, e1 = completions.smooth_value_at_CM(d, D, z_Q, v, rho)
    b, e2 = completions.smooth_value_at_CM(d, D, z_Q, v, rho / 2)
    return abs(a - b), f"limit {complex(b):.10g}, estimates {e1:.1e}/{e2:.1e}"


def chk_millson_equality(d, tau, z):
    m = completions.millson_completion(d, tau, z)
    s = completions.shintani_completion_tau(d, tau, z)
    return _rel(m, 0.5 * s), ""


def chk_millson_lowering(d, tau, z):
    L, _ = diffops.lower(lambda t: completions.millson_completion(d, t, z), tau, 0.5,
                         diffops.Stencil(h=1e-3 * tau.imag))
    Sh = theta.theta_vec(ThetaKind("shintani", -d), tau, z)
    return _rel(L, 0.5 * Sh), ""


def _quiet(fn, *args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*args)


def _vanish_note(k, D):
    return "" if completions.parity_ok(k, D) else "vanishes identically ((-1)^k D > 0)"


def chk_bstar_z(k, D, tau, z):
    B = _quiet(completions.B_star_vector, k, D, tau, z)
    Bz = _quiet(completions.B_star_vector, k, D, tau, -1 / z)
    return _rel(Bz, z ** (2 * k + 2) * B), _vanish_note(k, D)


def chk_bstar_tau(k, D, tau, z):
    f = lambda t: _quiet(completions.B_star_vector, k, D, t, z)
    rep = ThetaKind("shintani", D, k).rep
    return _rel(weil.slash(f, -k + 0.5, weil.S, rep)(tau), f(tau)), _vanish_note(k, D)


def chk_singular(k, D, tau, z):
    if not completions.parity_ok(k, D):
        S, _ = completions.singular_theta(k, D, tau, z)
        return float(np.max(np.abs(S))), _vanish_note(k, D)
    S, err = completions.singular_theta(k, D, tau, z)
    B = completions.B_star_vector(k, D, tau, z)
    return _rel(S, B), f"truncation estimate {err:.1e}"


def chk_perp_lowering(k, D, tau, z):
    return completions.shintani_perp_relation(k, D, tau, z), _vanish_note(k, D)


@lru_cache(maxsize=None)
def growth_ratio(D: int, tau0: complex) -> float:
    """|G_D(tau0)|/D, G_D = g_D minus the quarter coset sum of its principal part."""
    dps = int(math.pi * D * 1.3 / 2 / math.log(10)) + 30
    with mpmath.workdps(dps):
        t = mpmath.mpc(tau0)
        g = plusspace.g_vector(D, t, mp=True, digits=dps)

        def seed(tt):
            val = mpmath.expjpi(-mpmath.mpf(D) / 2 * tt)
            return [val, mpmath.mpc(0)] if D % 2 == 0 else [mpmath.mpc(0), val]

        s = weil.quarter_sum_mp(seed, 1.5, t, float(D), "rho")
        return max(abs(complex(g[i] - s[i])) for i in range(2)) / D


def chk_growth(D, tau0):
    return growth_ratio(D, tau0), ""


def chk_growth_trend(Ds, tau0):
    """max over D > D0 of ratio(D)/ratio(D0), D0 the first sample >= 100."""
    ratios = {D: growth_ratio(D, tau0) for D in Ds}
    D0 = min(D for D in Ds if D >= 100)
    base = ratios[D0]
    worst = max(ratios[D] for D in Ds if D > D0) / base
    return worst, "ratios " + ", ".join(f"{D}:{r:.3g}" for D, r in ratios.items())


# --- suite definitions ---

@dataclass
class _Spec:
    identity: str
    point: dict
    fn: object
    args: tuple
    tol: float
    budget: dict


def _suite_cases(name: str, cfg: Config, quick: bool) -> list:
    tol = cfg.tolerance(name)
    cases = []
    add = lambda ident, point, fn, args, t, budget: cases.append(_Spec(ident, point, fn, args, t, budget))
    if name == "duality":
        n = 20 if quick else 40
        add("A(D,d) + B(D,d) = 0, 0 < D, d <= n", _pt(n=n), chk_duality, (n,), tol, {"exact": True})
    elif name == "class-numbers":
        for n, h in ((0, "-1/12"), (3, "1/3"), (4, "1/2")):
            add(f"H({n}) = {h}", _pt(n=n), chk_hurwitz_anchor, (n, h), tol, {"exact": True})
        n = 50 if quick else 200
        add("sum_s H(4n - s^2) = 2 sigma(n) - sum_{t|n} min(t, n/t)", _pt(n_max=n // 4),
            chk_kronecker_hurwitz, (n // 4,), tol, {"exact": True})
        add("class counts = brute-force exhaustion", _pt(d_max=n), chk_class_cardinalities, (n,), tol,
            {"exact": True})
    elif name == "denominator":
        tau, z = 0.1 + 1.0j, 0.05 + 1.5j
        add("j'(z)/(j(z) - j(tau)) + 2 pi i sum_n j_n(tau) e(nz) = 0", _pt(tau, z, N=40),
            chk_denominator, (tau, z, 40, 100), tol, {"N": 40, "q_precision": 100})
    elif name == "harmonic-examples":
        st = diffops.Stencil()
        b = {"h_rel": 1e-4, "order": st.order, "richardson": st.richardson}
        add("xi_{3/2} H = -theta/(16 pi)", _pt(0.1 + 0.9j), chk_xi_hcal, (0.1 + 0.9j,), tol["xi_hcal"], b)
        add("xi_2 E2* = 3/pi", _pt(0.3 + 1.2j), chk_xi_E2, (0.3 + 1.2j,), tol["xi_E2"], b)
        add("Delta_{3/2} H = 0", _pt(0.1 + 0.9j), chk_laplace_hcal, (0.1 + 0.9j,), tol["laplace_hcal"],
            dict(b, h_rel=1e-3))
    elif name == "theta-transforms":
        pts = [(0.1 + 1.1j, 0.2 + 1.3j), (-0.3 + 0.8j, 0.45 + 0.9j), (0.37 + 1.6j, -0.1 + 1.05j)]
        if quick:
            pts = pts[:1]
        for kind in theta.KINDS:
            for D in (1, 5, -3, -4):
                if ThetaKind(kind, D).vanishes:
                    continue
                for tau, z in pts:
                    add(f"{kind} theta: tau and z transformation laws under S, T", _pt(tau, z, D=D, kind=kind),
                        chk_theta_modularity, (kind, D, 0, tau, z, 1e-14), tol, {"tol": 1e-14})
    elif name == "theta-diffeqs":
        pts = [(0.1 + 1.1j, 0.2 + 1.3j), (-0.3 + 0.8j, 0.45 + 0.9j), (0.37 + 1.6j, -0.1 + 1.05j)]
        if quick:
            pts = pts[:1]
        for pair, Ds in (("S-KM", (1, 5)), ("Sh-M", (-3, -4))):
            for D in Ds:
                for tau, z in pts:
                    add(f"{pair} differential equations", _pt(tau, z, D=D, pair=pair),
                        chk_theta_diffeq, (pair, D, tau, z, 1e-15), tol, {"tol": 1e-15, "h_rel": 1e-4})
    elif name == "astar-prop12":
        pts = [(0.1 + 0.3j, 0.2 + 1.3j), (-0.15 + 0.35j, 0.35 + 1.1j)]
        if quick:
            pts = pts[:1]
        labels = {"lower_tau": "L_{3/2,tau} A* = -(1/16 pi) R_{0,z} Theta_S",
                  "lower_z": "L_{2,z} A* = Theta_KM",
                  "laplace": "4 Delta_{3/2,tau} A* = Delta_{2,z} A*"}
        for tau, z in pts:
            for which, label in labels.items():
                add(label, _pt(tau, z), chk_prop12, (which, tau, z), tol[which],
                    {"tol": 1e-12, "h_rel": 1e-3 if which == "laplace" else 1e-4})
    elif name == "astar-two-expansions":
        pts = [(1, 0.07 + 1.2j, 0.15 + 1.4j), (5, 0.07 + 1.2j, 0.15 + 1.4j), (1, 0.21 + 1.05j, -0.33 + 1.25j)]
        if quick:
            pts = pts[:1]
        for D, tau, z in pts:
            add("z-expansion = -(1/4 pi) tau-expansion", _pt(tau, z, D=D), chk_two_expansions, (D, tau, z), tol,
                {"tau_route_tol": 1e-12, "z_route_tol": 1e-10})
        tau, z = 0.07 + 0.3j, 0.15 + 1.4j
        add("scalar A* = bridge of the vector tau-expansion", _pt(tau, z), chk_scalar_bridge, (tau, z), tol,
            {"tol": 1e-12})
    elif name == "astar-modularity":
        pts = [(0.3 + 0.954j, 0.15 + 1.4j), (-0.2 + 1.1j, 0.3 + 0.98j)]
        if quick:
            pts = pts[:1]
        for tau, z in pts:
            add("A*(tau, -1/z) = z^2 A*(tau, z)", _pt(tau, z, D=1), chk_astar_z_modularity, (1, tau, z), tol,
                {"z_route_tol": 1e-10})
            add("A*|_{3/2,rho} S = A*", _pt(tau, z, D=1), chk_astar_tau_modularity, (1, tau, z), tol,
                {"tau_route_tol": 1e-12})
    elif name == "cm-smoothness":
        add("F*_{4,1} limit at z = i stable under radius halving", _pt(z=1j, d=4, D=1, v=1.0),
            chk_cm_smooth, (4, 1, 1j, 1.0, 1e-2), tol, {"rho": 1e-2, "angles": 8, "tol": 1e-13})
        # weight two forces the value 0 at z = i; z = i sqrt 2 is not an elliptic point
        zq = 1j * 2 ** 0.5
        add("F*_{8,1} limit at z = i sqrt(2) stable under radius halving", _pt(z=zq, d=8, D=1, v=1.0),
            chk_cm_smooth, (8, 1, zq, 1.0, 1e-2), tol, {"rho": 1e-2, "angles": 8, "tol": 1e-13})
    elif name == "millson-shintani":
        pts = [(0.05 + 1.1j, 0.12 + 1.3j), (-0.3 + 0.9j, 0.4 + 1.2j)]
        if quick:
            pts = pts[:1]
        for tau, z in pts:
            add("Millson z-expansion = (1/2) Shintani tau-expansion", _pt(tau, z, d=3),
                chk_millson_equality, (3, tau, z), tol, {"tol": 1e-10})
        tau, z = pts[0]
        add("L_{1/2,tau} (Millson completion) = (1/2) Theta_Sh", _pt(tau, z, d=3),
            chk_millson_lowering, (3, tau, z), tol, {"tol": 1e-10, "h_rel": 1e-3})
    elif name == "higher-weight":
        tau, z = 0.3 + 0.954j, 0.13 + 1.21j
        combos = [(1, -3), (1, 5), (2, -3)]
        if quick:
            combos = combos[:2]
        for k, D in combos:
            b = {"tol": 1e-10}
            add(f"B_{k}* weight {2 * k + 2} in z", _pt(tau, z, k=k, D=D), chk_bstar_z, (k, D, tau, z), tol, b)
            add(f"B_{k}* weight 1/2 - {k} in tau under S", _pt(tau, z, k=k, D=D), chk_bstar_tau,
                (k, D, tau, z), tol, b)
            add(f"L_{{{2 * k + 2},z}} B_{k}* = 2 Theta_M", _pt(tau, z, k=k, D=D), chk_perp_lowering,
                (k, D, tau, z), tol, dict(b, h_rel=1e-3))
            add("singular-kernel theta = B* (vector)", _pt(tau, z, k=k, D=D), chk_singular, (k, D, tau, z), tol,
                {"tol": 1e-8, "T": 6400.0})
    elif name == "growth-sanity":
        tau0 = 0.2 + 1.3j
        Ds = (1, 5, 20, 100, 200) if quick else (1, 5, 20, 100, 200, 300, 400)
        for D in Ds:
            add("|G_D(tau0)|/D bounded", _pt(tau0, D=D), chk_growth, (D, tau0), tol, {"dps": "pi D 1.3/(2 ln 10) + 30"})
        add("|G_D|/D non-increasing beyond D = 100 (ratio to D = 100)", _pt(tau0, D=list(Ds)),
            chk_growth_trend, (Ds, tau0), 1.0, {"dps": "pi D 1.3/(2 ln 10) + 30"})
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return cases


def _run_case(spec: _Spec) -> Case:
    t0 = time.perf_counter()
    try:
        res, note = spec.fn(*spec.args)
        res = float(res)
        ok = bool(res <= spec.tol) and math.isfinite(res)
    except Exception as exc:  # recorded, never aborts the suite
        res, note, ok = math.nan, f"{type(exc).__name__}: {exc}", False
    return Case(spec.identity, spec.point, res, spec.tol, spec.budget, ok, time.perf_counter() - t0, note)


def run_suite(name: str, config: Config | None = None, quick: bool = False, workers: int = 1) -> VerifyReport:
    """Run a named suite and return its report.

    quick trims the sample points for fast smoke runs; workers > 1 runs the
    cases in a process pool.
    """
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    cfg = config or Config()
    specs = _suite_cases(name, cfg, quick)
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cases = list(ex.map(_run_case, specs))
    else:
        cases = [_run_case(s) for s in specs]
    return VerifyReport(name, cases)
