"""Command line entry point: ``volterra-msm``.

Subcommands: ``methods list|analyze``, ``solve``, ``sweep``, ``balance``.
A JSON config file (``--config``) may supply any option; explicit flags win.
Exit codes: 0 success, 2 domain errors (unknown names, inadmissible input),
3 numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import harness
from .errors import DomainError, NumericalError
from .methods import REGISTRY, builtin, check_admitted, classify_stability
from .solver import make_samples, solve
from .stepsize import balancing_constants

log = logging.getLogger("volterra_msm")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="PRNG seed (default 0)")
    p.add_argument("--csv", default=None, metavar="PATH", help="write CSV here ('-' for stdout)")
    p.add_argument("--json", action="store_true", default=None, help="print JSON to stdout")
    p.add_argument("--config", default=None, metavar="PATH", help="JSON file with option values")
    p.add_argument("-v", "--verbose", action="store_true", default=None)
    return p


def _parse_nu(text: str) -> tuple[int, ...]:
    if ":" in text:
        lo, hi = text.split(":")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="volterra-msm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    mp = sub.add_parser("methods", parents=[common], help="list or analyze multistep methods")
    mp.add_argument("action", choices=["list", "analyze"])
    mp.add_argument("name", nargs="?")

    sp = sub.add_parser("solve", parents=[common], help="solve one problem at one grid size")
    sp.add_argument("--problem", type=int)
    sp.add_argument("--method")
    sp.add_argument("--n", type=int)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--path", choices=["weightform", "recursive"])

    wp = sub.add_parser("sweep", parents=[common], help="a-priori step size sweep (h = 2^-nu, delta = h^(p0+1))")
    wp.add_argument("--problem", type=int)
    wp.add_argument("--method")
    wp.add_argument("--nu", type=_parse_nu, help="e.g. 5:12 or 5,6,7")
    wp.add_argument("--n-seeds", type=int, help="seeds seed..seed+n-1 (default 5)")

    bp = sub.add_parser("balance", parents=[common], help="balancing-principle step size choice")
    bp.add_argument("--problem", type=int)
    bp.add_argument("--method")
    bp.add_argument("--delta", type=float, nargs="+")
    bp.add_argument("--beta", type=float)
    bp.add_argument("--kappa", type=int)
    bp.add_argument("--n-seeds", type=int, help="seeds seed..seed+n-1 (default 1)")
    return ap


_DEFAULTS = {
    "seed": 0,
    "json": False,
    "verbose": False,
    "path": "weightform",
    "kappa": 1,
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise DomainError("config file must hold a JSON object")
    for key, val in cfg.items():
        key = key.replace("-", "_")
        if key == "nu" and isinstance(val, str):
            val = _parse_nu(val)
        if key == "delta" and args.command == "balance" and not isinstance(val, list):
            val = [val]
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    for key, val in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise DomainError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _emit_csv(target: str | None, header, rows, fmt=str):
    if not target:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    _write(target, buf.getvalue())


def _write(target: str, text: str):
    if target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)


def _cmd_methods(args) -> dict:
    if args.action == "list":
        out = []
        for name in REGISTRY:
            meth = builtin(name)
            rep = classify_stability(meth)
            out.append(
                {
                    "name": name,
                    "m": meth.m,
                    "mu": meth.mu,
                    "p0": meth.p0,
                    "nullstable": rep.nullstable,
                    "sigma_von_neumann": rep.sigma_von_neumann,
                    "sigma_schur": rep.sigma_schur,
                }
            )
        if not args.json:
            print(f"{'name':<16}{'m':>3}{'mu':>4}{'p0':>4}  nullstable  sigma_vN  sigma_Schur")
            for r in out:
                print(
                    f"{r['name']:<16}{r['m']:>3}{r['mu']:>4}{r['p0']:>4}  "
                    f"{str(r['nullstable']):<10}  {str(r['sigma_von_neumann']):<8}  {r['sigma_schur']}"
                )
        return {"methods": out}
    _require(args, "name")
    meth = builtin(args.name)
    rep = classify_stability(meth)
    info = {"name": meth.name, "a": list(meth.a), "b": list(meth.b), "m": meth.m, "mu": meth.mu, "p0": meth.p0}
    info.update(rep.as_dict())
    try:
        check_admitted(meth)
        info["admitted"] = True
    except DomainError as exc:
        info["admitted"] = False
        info["reason"] = str(exc)
    if not args.json:
        for k, v in info.items():
            print(f"{k:>18}: {v}")
    return info


def _cmd_solve(args) -> dict:
    _require(args, "problem", "method", "n", "delta")
    prob = harness.problem(args.problem)
    meth = builtin(args.method)
    samples = make_samples(prob, args.n, args.delta, args.seed)
    res = solve(prob, samples, meth, args.path)
    header = ["n", "x_n", "u_delta"]
    offset = args.n - meth.mu + 1 - len(res.u)
    rows = []
    for i, (x, u) in enumerate(zip(res.grid, res.u)):
        row = [i + offset, x, u]
        if res.u_exact is not None:
            row += [res.u_exact[i], abs(u - res.u_exact[i])]
        rows.append(row)
    if res.u_exact is not None:
        header += ["u_exact", "abs_err"]
    _emit_csv(args.csv, header, rows, lambda v: str(v) if isinstance(v, int) else f"{v:.17g}")
    summary = {
        "problem": args.problem,
        "method": meth.name,
        "N": res.N,
        "h": res.h,
        "delta": args.delta,
        "seed": args.seed,
        "max_err": res.max_error,
        "cond_start": res.diagnostics["cond_start"],
    }
    if not args.json:
        print(f"N = {res.N}, h = {res.h:.6g}, delta = {args.delta:.3g}, max error = {res.max_error:.3e}")
    return summary


def _cmd_sweep(args) -> dict:
    _require(args, "problem", "method", "nu")
    n = args.n_seeds or 5
    spec = harness.ExperimentSpec(
        args.problem, args.method, "apriori_sweep", nu_range=tuple(args.nu), seeds=tuple(range(args.seed, args.seed + n))
    )
    rows = harness.run_apriori_sweep(spec)
    text = harness.rows_to_csv(rows, spec.mode)
    if args.csv:
        _write(args.csv, text)
    if not args.json and args.csv != "-":
        sys.stdout.write(text)
    return {"rows": harness.row_dicts(rows, spec.mode)}


def _cmd_balance(args) -> dict:
    _require(args, "problem", "method", "delta")
    n = args.n_seeds or 1
    prob = harness.problem(args.problem)
    meth = builtin(args.method)
    spec = harness.ExperimentSpec(
        args.problem,
        args.method,
        "balance_sweep",
        delta_list=tuple(args.delta),
        seeds=tuple(range(args.seed, args.seed + n)),
        beta=args.beta,
        kappa=args.kappa,
    )
    if args.beta is not None:
        c = balancing_constants(prob, meth, meth.m + meth.mu)
        if not args.beta > 2 * c.C2:
            log.warning("beta = %g does not exceed 2*C2 = %.6g", args.beta, 2 * c.C2)
    rows = harness.run_balance_sweep(spec)
    text = harness.rows_to_csv(rows, spec.mode)
    if args.csv:
        _write(args.csv, text)
    if not args.json and args.csv != "-":
        sys.stdout.write(text)
    return {"rows": harness.row_dicts(rows, spec.mode)}


_COMMANDS = {"methods": _cmd_methods, "solve": _cmd_solve, "sweep": _cmd_sweep, "balance": _cmd_balance}


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(type(o).__name__)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        result = _COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        json.dump(result, sys.stdout, default=_jsonable, indent=2)
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
