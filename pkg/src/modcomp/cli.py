"""Command line interface.

    modcomp coeffs gd --D 1 --dmax 10
    modcomp class-numbers --max 20
    modcomp theta --kind km --D 5 --tau 0.1+1.1i --z 0.2+1.3i
    modcomp eval astar --expansion z --D 1 --tau 0.07+1.2i --z 0.15+1.4i
    modcomp table fd-series --d 4 --zgrid grid.csv --v 1.0
    modcomp verify --suite duality --out report.json

Exit codes: 0 success (warnings are reported in a "warnings" field),
1 a verification suite failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__, completions, plusspace, qforms, theta, verify
from .config import Config, default_threads
from .theta import EvalBudget, ThetaKind


class UsageError(Exception):
    pass


def parse_complex(s: str) -> complex:
    """Parse '0.1+1.2i', '0.1+1.2j' or '1.2i'."""
    try:
        return complex(s.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}")


def _cplx(w: complex) -> list:
    return [float(w.real), float(w.imag)]


def _vec(x) -> object:
    arr = np.asarray(x)
    if arr.ndim == 0:
        return _cplx(complex(arr))
    return [_cplx(complex(t)) for t in arr]


# --- output helpers ---

def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit_table(header, rows, fmt: str, out: str | None, extra: dict | None = None):
    if fmt == "csv":
        _emit(_csv_text(header, rows), out)
    else:
        payload = dict(extra or {})
        payload["rows"] = [dict(zip(header, r)) for r in rows]
        _emit(json.dumps(payload, indent=2, default=str) + "\n", out)


def _figure(path: str, plot):
    """Render with matplotlib (imported only when a figure is requested)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4.5))
    plot(fig, ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# --- subcommands ---

def cmd_coeffs(args, cfg):
    if args.form == "gd":
        if args.D is None or args.dmax is None:
            raise UsageError("coeffs gd needs --D and --dmax")
        if args.D <= 0 or args.D % 4 not in (0, 1):
            raise UsageError("--D must be a positive discriminant")
        table = plusspace.gD_coefficients(args.D, args.dmax)
        header, rows = ["D", "d", "B(D,d)"], [(args.D, d, c) for d, c in sorted(table.items())]
    else:
        if args.d is None or args.Dmax is None:
            raise UsageError("coeffs fd needs --d and --Dmax")
        if args.d < 0 or (-args.d) % 4 not in (0, 1):
            raise UsageError("--d must satisfy d >= 0 and -d = 0, 1 mod 4")
        table = plusspace.fd_coefficients(args.d, args.Dmax)
        header, rows = ["d", "D", "A(D,d)"], [(args.d, D, c) for D, c in sorted(table.items())]
    rows = [tuple(str(x) for x in r) for r in rows]
    _emit_table(header, rows, args.format or cfg.format, args.out)
    return 0


def cmd_class_numbers(args, cfg):
    if args.max < 0:
        raise UsageError("--max must be >= 0")
    fmt = args.format or "csv"
    if args.forms:
        rows = []
        for d in range(3, args.max + 1):
            if (-d) % 4 not in (0, 1):
                continue
            for Q in qforms.class_representatives(d, primitive=args.primitive):
                rows.append((d, Q.a, Q.b, Q.c, qforms.stabilizer_order(Q)))
        _emit_table(["d", "a", "b", "c", "omega"], rows, fmt, args.out)
    else:
        rows = [(n, str(qforms.hurwitz_H(n))) for n in range(args.max + 1)]
        _emit_table(["n", "H(n)"], rows, fmt, args.out)
    return 0


def cmd_theta(args, cfg):
    try:
        kind = ThetaKind(args.kind, args.D, args.k)
    except ValueError as exc:
        raise UsageError(str(exc))
    tv = theta.theta_eval(kind, args.tau, args.z, cfg.budget())
    payload = {"kind": args.kind, "D": args.D, "k": args.k, "tau": _cplx(args.tau), "z": _cplx(args.z),
               "value": _vec(tv.value), "tail_bound": tv.tail_bound, "T": tv.T, "terms": tv.n_terms}
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _eval_astar(args, budget):
    D, tau, z = args.D, args.tau, args.z
    stages = {}
    if args.expansion == "scalar":
        if D != 1:
            raise UsageError("the scalar expansion exists for D = 1 only")
        value = completions.A_star(completions.CompletionSpec("A_star_scalar", 1, budget=budget), tau, z)
        dm = budget.d_max or completions._d_cap(tau.imag, budget.tol)
        stages["tau_fourier"] = {"d_max": dm, "bound": math.exp(-2 * math.pi * (dm + 1) * tau.imag)}
    elif args.expansion == "tau":
        # reported in the same normalization as the z-expansion
        value = -completions.A_star_tau(D, tau, z, budget) / (4 * math.pi)
        dm = budget.d_max or completions._d_cap(tau.imag / 4, budget.tol)
        stages["tau_fourier"] = {"d_max": dm, "bound": math.exp(-2 * math.pi * (dm + 1) * tau.imag / 4)}
    else:
        value, terms = completions.A_star_z(D, tau, z, budget, return_terms=True)
        for name, sign in (("z_fourier_positive", 1), ("z_fourier_negative", -1)):
            ms = sorted((m for m in terms if m * sign > 0), key=abs)
            last = ms[-2:] if ms else []
            stages[name] = {"m_last": ms[-1] if ms else 0,
                            "bound": max((float(np.max(np.abs(terms[m]))) for m in last), default=0.0)}
    stages["lattice_tol"] = budget.tol
    return value, stages


def cmd_eval(args, cfg):
    if args.budget_file:
        with open(args.budget_file) as fh:
            raw = json.load(fh)
        budget = EvalBudget.from_dict(raw.get("budget", raw))
    else:
        budget = cfg.budget()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.what == "astar":
            value, stages = _eval_astar(args, budget)
        elif args.what == "millson":
            value, stages = completions.millson_completion(-args.D, args.tau, args.z, budget), {}
        elif args.what == "shintani":
            value, stages = completions.shintani_completion_tau(-args.D, args.tau, args.z, budget), {}
        else:
            value, stages = completions.B_star(args.k, args.D, args.tau, args.z, budget), {}
    payload = {"object": args.what, "D": args.D, "tau": _cplx(args.tau), "z": _cplx(args.z),
               "value": _vec(value), "tail_bounds": stages, "budget": budget.to_dict(),
               "warnings": [str(w.message) for w in caught]}
    if args.what == "astar":
        payload["expansion"] = args.expansion
    if args.what == "bstar":
        payload["k"] = args.k
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return 0


def _read_grid(path: str) -> list[complex]:
    """CSV with columns x,y (a header row is optional)."""
    pts = []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                pts.append(complex(float(row[0]), float(row[1])))
            except ValueError:
                continue
    return pts


def _grid(args) -> list[complex]:
    if args.zgrid:
        return _read_grid(args.zgrid)
    xs = np.linspace(args.x[0], args.x[1], args.n)
    ys = np.linspace(args.y[0], args.y[1], args.n)
    return [complex(x, y) for y in ys for x in xs]


def cmd_table(args, cfg):
    pts = _grid(args)
    if not pts:
        raise UsageError("empty z grid")
    if any(p.imag <= 0 for p in pts):
        raise UsageError("grid points must lie in the upper half plane")
    rows = []
    if args.kind == "fd-series":
        if args.d is None:
            raise UsageError("table fd-series needs --d")
        for w in pts:
            val = completions.F_star(args.d, args.D, w, args.v, cfg.tol)
            rows.append((w.real, w.imag, val.real, val.imag, abs(val)))
        header = ["x", "y", "re", "im", "abs"]
        title = f"|F*_{{{args.d},{args.D}}}(z; {args.v})|"
    else:
        if args.tau is None:
            raise UsageError("table astar-grid needs --tau")
        for w in pts:
            val = completions.A_star_z(args.D, args.tau, w, cfg.budget())
            rows.append((w.real, w.imag, val[0].real, val[0].imag, val[1].real, val[1].imag,
                         float(np.linalg.norm(val))))
        header = ["x", "y", "re0", "im0", "re1", "im1", "abs"]
        title = f"|A*(tau, z)|, tau = {args.tau}"
    _emit_table(header, rows, args.format or "csv", args.out)
    if args.figure:
        arr = np.array([(r[0], r[1], r[-1]) for r in rows])

        def plot(fig, ax):
            sc = ax.scatter(arr[:, 0], arr[:, 1], c=arr[:, 2], cmap="viridis", s=18)
            fig.colorbar(sc, ax=ax)
            ax.set_xlabel("Re z")
            ax.set_ylabel("Im z")
            ax.set_title(title)

        _figure(args.figure, plot)
    return 0


def cmd_verify(args, cfg):
    names = verify.SUITES if args.suite == "all" else (args.suite,)
    reports = [verify.run_suite(n, cfg, quick=args.quick, workers=args.threads) for n in names]
    for r in reports:
        print(r.summary(), file=sys.stderr)
    fmt = args.format or "json"
    if fmt == "csv":
        rows = [(r.suite, c.identity, json.dumps(c.point), c.residual, c.tolerance, c.passed, c.note)
                for r in reports for c in r.cases]
        _emit(_csv_text(["suite", "identity", "point", "residual", "tolerance", "pass", "note"], rows), args.out)
    else:
        payload = reports[0].to_dict() if len(reports) == 1 else {"suites": [r.to_dict() for r in reports]}
        _emit(json.dumps(payload, indent=2, default=verify._json_default) + "\n", args.out)
    if args.figure:
        cases = [(f"{r.suite}:{i}", c) for r in reports for i, c in enumerate(r.cases)]

        def plot(fig, ax):
            ratio = [max(c.residual / c.tolerance, 1e-18) if c.tolerance else (1e-18 if c.residual == 0 else 1e3)
                     for _, c in cases]
            ax.semilogy(range(len(ratio)), ratio, "o")
            ax.axhline(1.0, color="red", lw=1)
            ax.set_xlabel("case")
            ax.set_ylabel("residual / tolerance")

        _figure(args.figure, plot)
    return 0 if all(r.passed for r in reports) else 1


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (caps, tolerances, output format)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--threads", type=int, default=default_threads(),
                        help="worker cap (default from MODCOMP_THREADS, else 1)")
    common.add_argument("--figure", help="also render a PNG figure (needs matplotlib)")

    p = argparse.ArgumentParser(prog="modcomp", description="Completed generating functions of "
                                "meromorphic modular forms: coefficients, evaluation and verification.",
                                epilog="verify suites: " + ", ".join(verify.SUITES))
    p.add_argument("--version", action="version", version=f"modcomp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", parents=[common], help="Fourier coefficients of g_D or f_d")
    c.add_argument("form", choices=("gd", "fd"))
    c.add_argument("--D", type=int)
    c.add_argument("--dmax", type=int)
    c.add_argument("--d", type=int)
    c.add_argument("--Dmax", type=int)

    c = sub.add_parser("class-numbers", parents=[common], help="Hurwitz class numbers H(n) or class tables")
    c.add_argument("--max", type=int, required=True)
    c.add_argument("--forms", action="store_true", help="list reduced forms (d, a, b, c, omega)")
    c.add_argument("--primitive", action="store_true", help="primitive forms only (with --forms)")

    c = sub.add_parser("theta", parents=[common], help="evaluate a theta function")
    c.add_argument("--kind", choices=theta.KINDS, required=True)
    c.add_argument("--D", type=int, required=True)
    c.add_argument("--k", type=int, default=0)
    c.add_argument("--tau", type=parse_complex, required=True)
    c.add_argument("--z", type=parse_complex, required=True)

    c = sub.add_parser("eval", parents=[common], help="evaluate a completed generating function")
    c.add_argument("what", choices=("astar", "millson", "shintani", "bstar"))
    c.add_argument("--expansion", choices=("scalar", "tau", "z"), default="z")
    c.add_argument("--D", type=int, default=1, help="discriminant (millson/shintani: D = -d < 0)")
    c.add_argument("--k", type=int, default=1)
    c.add_argument("--tau", type=parse_complex, required=True)
    c.add_argument("--z", type=parse_complex, required=True)
    c.add_argument("--budget-file", help="JSON EvalBudget (or a config with a 'budget' key)")

    c = sub.add_parser("table", parents=[common], help="CSV grids for plotting")
    c.add_argument("kind", choices=("fd-series", "astar-grid"))
    c.add_argument("--d", type=int)
    c.add_argument("--D", type=int, default=1)
    c.add_argument("--v", type=float, default=1.0)
    c.add_argument("--tau", type=parse_complex)
    c.add_argument("--zgrid", help="CSV of grid points x,y")
    c.add_argument("--x", type=float, nargs=2, default=(-0.5, 0.5))
    c.add_argument("--y", type=float, nargs=2, default=(0.9, 2.0))
    c.add_argument("--n", type=int, default=11, help="points per axis without --zgrid")

    c = sub.add_parser("verify", parents=[common], help="run an identity suite",
                       description="Suites: " + ", ".join(verify.SUITES) + ", or all.")
    c.add_argument("--suite", required=True, choices=verify.SUITES + ("all",), metavar="NAME",
                   help="one of: " + ", ".join(verify.SUITES) + ", all")
    c.add_argument("--quick", action="store_true", help="fewer sample points")
    return p


COMMANDS = {"coeffs": cmd_coeffs, "class-numbers": cmd_class_numbers, "theta": cmd_theta,
            "eval": cmd_eval, "table": cmd_table, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        cfg = Config.load(args.config)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ValueError, OSError) as exc:
        print(f"modcomp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
