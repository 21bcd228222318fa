"""Command-line interface: build, solve, sweep, verify and fit.

Exit codes: 0 success, 2 configuration error, 3 numeric failure
(solver/quadrature), 4 validation failure (close packing or verification
threshold).  All artifacts are plain CSV/JSON with 17-significant-digit
round-trip formatting.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import geometry, lubrication, scenarios
from .errors import SuspnetError
from .network_qp import BoundaryData
from .solver import SolveResult

EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 2, 3, 4


def _fmt(x):
    return f"{float(x):.17g}"


def _outdir(args):
    out = args.out or os.environ.get("SUSPNET_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _scenario(args, delta):
    if args.config:
        with open(args.config) as fh:
            config, domain, dref = geometry.config_from_json(fh.read())
        net = geometry.build_network(config, domain, dref)
        A = BoundaryData(a=args.a, b=args.b, c=args.c)
        return scenarios.Scenario("config", net, A, config.mu)
    if not args.builtin:
        raise SystemExit("one of --builtin or --config is required")
    if args.builtin not in scenarios.BUILTIN:
        raise SuspnetError(f"unknown builtin {args.builtin!r}; "
                           f"choices: {sorted(scenarios.BUILTIN)}")
    return scenarios.BUILTIN[args.builtin](
        delta, R=args.radius, mu=args.mu, rings=args.rings, N=args.N,
        jitter=args.jitter, seed=args.seed)


def _result_json(res: SolveResult, sc):
    return {
        "scenario": sc.name,
        "I_total": res.I_total,
        "I_split": {"I1": res.I_split[0], "I2": res.I_split[1],
                    "I3": res.I_split[2]},
        "max_beta": res.max_beta,
        "max_omega": res.max_omega,
        "residuals": res.residuals,
        "microflow": res.groups,
        "multipliers": list(res.multipliers),
        "dropped_rows": res.dropped_rows,
        "state": {
            "U": [[float(a), float(b)] for a, b in res.state.U],
            "omega": [float(v) for v in res.state.omega],
            "beta": [float(v) for v in res.state.beta],
        },
    }


def cmd_build(args):
    out = _outdir(args)
    sc = _scenario(args, args.delta)
    with open(os.path.join(out, "necks.csv"), "w") as fh:
        fh.write(geometry.network_to_csv(sc.net))
    with open(os.path.join(out, "config.json"), "w") as fh:
        fh.write(geometry.config_to_json(sc.net.config, sc.net.domain,
                                         sc.net.delta_ref))
    bad = geometry.validate_close_packing(sc.net, args.c1, args.c2)
    if bad:
        print(f"close-packing violations on {len(bad)} edges", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def cmd_solve(args):
    out = _outdir(args)
    sc = _scenario(args, args.delta)
    res = sc.solve(tol=args.tol_solve)
    with open(os.path.join(out, "result.json"), "w") as fh:
        json.dump(_result_json(res, sc), fh, indent=1)
    with open(os.path.join(out, "necks.csv"), "w") as fh:
        fh.write(geometry.network_to_csv(sc.net))
    if args.dump_model:
        from .network_qp import assemble_Q
        model = assemble_Q(sc.net, sc.mu, sc.A, dirichlet=sc.dirichlet,
                           fixed_beta=sc.imposed_beta)
        with open(os.path.join(out, "model.csv"), "w") as fh:
            fh.write("neck_i,neck_j,term,delta_power,value\n")
            for (k, term, p, val) in model.provenance:
                e = sc.net.edges[k]
                fh.write(f"{e.i},{e.j},{term},{-p},{_fmt(val)}\n")
    return 0


def _sweep_worker(payload):
    name, kw, delta, tol = payload
    sc = scenarios.BUILTIN[name](delta, **kw)
    res = sc.solve(tol=tol)
    return delta, res


def cmd_sweep(args):
    out = _outdir(args)
    deltas = np.logspace(np.log10(args.delta_min), np.log10(args.delta_max),
                         args.points)
    kw = dict(R=args.radius, mu=args.mu, rings=args.rings, N=args.N,
              jitter=args.jitter, seed=args.seed)
    if args.jobs > 1 and args.builtin:
        payloads = [(args.builtin, kw, float(d), args.tol_solve)
                    for d in sorted(deltas, reverse=True)]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_worker, payloads))
        rows = []
        for d, res in results:
            tot = res.I_total if res.I_total else 1.0
            gr = res.groups
            rows.append(scenarios.SweepRow(
                d, res.I_total, *res.I_split, res.max_beta, res.max_omega,
                gr.get("Q_sh_in", 0.0) / tot,
                (gr.get("Q_sq_in", 0.0) + gr.get("Q_sq_b", 0.0)) / tot,
                (gr.get("Q_per_in", 0.0) + gr.get("Q_per_b", 0.0)) / tot))
        table = scenarios.SweepTable(rows)
    else:
        table = scenarios.run_sweep(lambda d: _scenario(args, d), deltas,
                                    tol=args.tol_solve)
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write(table.to_csv())
    if args.fit:
        window = None
        if args.fit_window:
            window = tuple(float(v) for v in args.fit_window.split(","))
        fit = scenarios.fit_exponent(table, window)
        with open(os.path.join(out, "fit.json"), "w") as fh:
            json.dump({"slope": fit.slope, "intercept": fit.intercept,
                       "r2": fit.r2, "window": list(fit.window)}, fh,
                      indent=1)
    return 0


def cmd_verify_coefficients(args):
    out = _outdir(args)
    deltas = list(lubrication.VERIFY_DELTAS)
    if args.delta and args.delta not in deltas:
        deltas.append(args.delta)
        deltas.sort(reverse=True)
    rows = lubrication.verify_coefficients(R=args.radius, mu=args.mu,
                                           deltas=tuple(deltas))
    with open(os.path.join(out, "coefficients.csv"), "w") as fh:
        fh.write("term,delta_power,closed_form,quadrature_fit,rel_error\n")
        for term, p, ref, got, rel in rows:
            fh.write(f"{term},{p},{_fmt(ref)},{_fmt(got)},{_fmt(rel)}\n")
    worst = max(r[4] for r in rows)
    print(f"verified {len(rows)} coefficients, worst rel_error {worst:.3e}")
    return 0 if worst < args.tol_verify else EXIT_VALIDATION


def cmd_korn(args):
    out = _outdir(args)
    sc = _scenario(args, args.delta)
    fixed = set(sc.dirichlet)
    C, mode, flag = scenarios.korn_check(sc.net, fixed)
    with open(os.path.join(out, "korn.json"), "w") as fh:
        json.dump({"constant": C, "flag": flag,
                   "mode": [float(v) for v in np.asarray(mode)]}, fh,
                  indent=1)
    print(f"korn constant {C:.6g} ({flag})")
    return 0 if flag in ("ok", "all-fixed") else EXIT_VALIDATION


def cmd_fit(args):
    out = _outdir(args)
    with open(args.table) as fh:
        lines = fh.read().strip().splitlines()[1:]
    rows = []
    for ln in lines:
        vals = [float(v) for v in ln.split(",")]
        rows.append(scenarios.SweepRow(*vals))
    table = scenarios.SweepTable(rows)
    window = None
    if args.fit_window:
        window = tuple(float(v) for v in args.fit_window.split(","))
    fit = scenarios.fit_exponent(table, window)
    with open(os.path.join(out, "fit.json"), "w") as fh:
        json.dump({"slope": fit.slope, "intercept": fit.intercept,
                   "r2": fit.r2, "window": list(fit.window)}, fh, indent=1)
    print(f"slope {fit.slope:.6g} (r2 {fit.r2:.6g})")
    return 0


def make_parser():
    ap = argparse.ArgumentParser(prog="suspnet",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--builtin", choices=sorted(scenarios.BUILTIN))
        p.add_argument("--config")
        p.add_argument("--delta", type=float, default=1e-3)
        p.add_argument("--radius", type=float, default=1.0)
        p.add_argument("--mu", type=float, default=1.0)
        p.add_argument("--rings", type=int, default=3)
        p.add_argument("--N", type=int, default=3)
        p.add_argument("--jitter", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--a", type=float, default=1.0)
        p.add_argument("--b", type=float, default=0.0)
        p.add_argument("--c", type=float, default=0.0)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--tol-solve", type=float, default=1e-10)
        p.add_argument("--tol-rank", type=float, default=1e-12)
        p.add_argument("--tol-verify", type=float, default=0.01)

    p = sub.add_parser("build", help="build a network and dump its necks")
    common(p)
    p.add_argument("--c1", type=float, default=0.5)
    p.add_argument("--c2", type=float, default=2.0)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("solve", help="solve one scenario")
    common(p)
    p.add_argument("--dump-model", action="store_true")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="solve across a delta range")
    common(p)
    p.add_argument("--delta-min", type=float, required=True)
    p.add_argument("--delta-max", type=float, required=True)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--fit", action="store_true")
    p.add_argument("--fit-window")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("verify-coefficients",
                       help="re-derive the coefficient table by quadrature")
    common(p)
    p.set_defaults(fn=cmd_verify_coefficients)

    p = sub.add_parser("korn", help="discrete Korn constant of a network")
    common(p)
    p.set_defaults(fn=cmd_korn)

    p = sub.add_parser("fit", help="fit a blow-up exponent to a sweep table")
    common(p)
    p.add_argument("--table", required=True)
    p.add_argument("--fit-window")
    p.set_defaults(fn=cmd_fit)
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SuspnetError as exc:
        kind = type(exc).__name__
        report = {"error": kind, "message": str(exc)}
        print(json.dumps(report), file=sys.stderr)
        from .errors import (BadGeometry, ClosePackingViolated,
                             QuadratureNotConverged, SingularKKT,
                             InconsistentConstraints)
        if isinstance(exc, (QuadratureNotConverged, SingularKKT,
                            InconsistentConstraints)):
            return EXIT_NUMERIC
        if isinstance(exc, (BadGeometry, ClosePackingViolated)):
            return EXIT_CONFIG
        return EXIT_VALIDATION
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
