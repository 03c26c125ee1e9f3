"""Command-line entry point.

Every run builds a manifest (subcommand, parameters, seed, precision, tool
version, wall time), prints the report and appends it to a file under
``--out`` named by a hash of the manifest. Exit codes: 0 all checks
passed, 1 a check failed, 2 usage error, 3 scale limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PreconditionError, ScaleLimitError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SCALE = 0, 1, 2, 3
CONSTRUCTIONS = ("A", "A0", "A2", "full")


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int
    precision: int
    version: str = __version__
    wall_seconds: float = 0.0

    def key(self) -> str:
        """Hash of everything except the wall time."""
        body = json.dumps({"subcommand": self.subcommand, "params": self.params, "seed": self.seed,
                           "precision": self.precision, "version": self.version},
                          sort_keys=True, default=_jsonable)
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def as_dict(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params, "seed": self.seed,
                "precision": self.precision, "version": self.version,
                "wall_seconds": round(self.wall_seconds, 4), "key": self.key()}


@dataclass
class Outcome:
    passed: bool
    report: dict
    rows: list = field(default_factory=list)  # for CSV output


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, Path):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _family_from_args(args, n_attr="n", k_attr="k"):
    from .family import construct, read_family
    if getattr(args, "family", None):
        return read_family(args.family)
    if getattr(args, "construct", None):
        n, k = getattr(args, n_attr), getattr(args, k_attr)
        if n is None or k is None or args.s is None:
            raise PreconditionError("--construct needs --n, --k and --s")
        return construct(args.construct, n, k, args.s)
    raise PreconditionError("give --family FILE or --construct NAME")


# ── subcommands ─────────────────────────────────────────────────────────────

def cmd_bounds(args, out_dir: Path) -> Outcome:
    from .certify.bounds import universal_bounds
    from .family import Params
    rep = universal_bounds(Params(args.n, args.k, args.s), args.gamma)
    rows = rep.as_rows()
    best = rep.minimum(rigorous_only=True)
    passed = rep.all_above_conjectured(rigorous_only=True)
    return Outcome(passed, {"conjectured": rep.conjectured, "rows": rows,
                            "minimum_rigorous": None if best is None else best.name,
                            "rigorous_bounds_above_conjectured": passed,
                            "asymptotic_bounds_above_conjectured": rep.all_above_conjectured()}, rows)


def cmd_exact(args, out_dir: Path) -> Outcome:
    from .combinatorics import binom, conjectured_m
    from .extremal import exact_m
    from .family import Params, write_family
    p = Params(args.n, args.k, args.s)
    kw = {"relaxed": args.relaxed}
    if args.budget_nodes:
        kw["budget"] = args.budget_nodes
    res = exact_m(p, args.mode, **kw)
    below = p.n < p.k * (p.s + 1)
    conj = binom(p.n, p.k) if below else conjectured_m(p)
    body = f"{p.n} {p.k} {p.s} {args.mode}".encode()
    witness = out_dir / f"witness-{hashlib.sha256(body).hexdigest()[:16]}.txt"
    out_dir.mkdir(parents=True, exist_ok=True)
    if not witness.exists():
        write_family(res.witness, witness)
    rep = {"params": {"n": p.n, "k": p.k, "s": p.s, "mode": args.mode},
           "optimum": res.optimum, "conjectured": conj, "agree": res.optimum == conj,
           "witness_file": str(witness), "nodes": res.nodes_explored,
           "seconds": round(res.seconds, 4)}
    return Outcome(res.optimum == conj, rep, [rep["params"] | {k: rep[k] for k in
                                                              ("optimum", "conjectured", "agree")}])


def cmd_certify(args, out_dir: Path) -> Outcome:
    from .certify import appendix, bounds
    if args.target == "appendix":
        item = args.item
        prec = args.precision
        if item == "A":
            res = appendix.item_A(prec=prec)
        elif item == "B":
            res = appendix.item_B(bridge=args.bridge, prec=prec)
        elif item == "C":
            res = appendix.item_C(prec=prec)
        elif item == "tail":
            res = appendix.tail_sum_certificate(prec=prec)
        else:
            res = appendix.stability_sweep(prec=prec)
        d = res.as_dict()
        return Outcome(res.passed, d, [{"name": d["name"], "passed": d["passed"],
                                        "max_radius": d["max_radius"], "seconds": d["seconds"]}])
    if args.target == "dirac":
        found = bounds.dirac_grid(range(max(2, args.k_min), args.k_max + 1))
        missing = [k for k, _, r in found if r is None]
        worst = min((r for _, _, r in found if r is not None), key=lambda r: r.value_margin, default=None)
        rows = [r.as_dict() if r else {"k": k, "d": d, "gamma": None} for k, d, r in found]
        rep = {"k_range": [args.k_min, args.k_max], "count": len(found), "missing": missing,
               "tightest": None if worst is None else worst.as_dict()}
        if args.rows:
            rep["rows"] = rows
        return Outcome(not missing, rep, rows)
    raise PreconditionError(f"unknown certify target {args.target!r}")


def cmd_simulate(args, out_dir: Path) -> Outcome:
    from .concentration import azuma_tail_check, eta_stats, sample_eta, stopping_ratio_check
    from .family import Family, all_kset_masks
    if args.family or args.construct:
        g = _family_from_args(args, "m", "l")
    else:
        rng = np.random.default_rng(args.seed)
        allm = all_kset_masks(args.m, args.l)
        keep = rng.random(len(allm)) < args.density
        g = Family(args.m, args.l, tuple(m for m, x in zip(allm, keep) if x))
    eta = sample_eta(g, args.t, args.trials, args.seed, args.threads)
    st = eta_stats(g, args.t, args.trials, args.seed, threads=args.threads)
    rows = [{"kind": "variance", "threshold": "", "empirical": st.empirical_var,
             "bound": st.variance_bound, "slack": 4 * st.var_se, "pass": st.variance_ok}]
    rows += [{"kind": "chebyshev", **r.as_dict()} for r in st.chebyshev]
    rows += [{"kind": "azuma", **r.as_dict()} for r in azuma_tail_check(g, args.t, args.trials, eta=eta)]
    passed = st.status == "pass" and all(r["pass"] for r in rows)
    rep = {"m": g.n, "l": g.k, "t": args.t, "size": len(g), "alpha": st.alpha,
           "trials": args.trials, "mean": st.empirical_mean, "expected_mean": st.expected_mean,
           "variance": st.empirical_var, "variance_bound": st.variance_bound, "status": st.status}
    if args.stopping is not None:
        sr = stopping_ratio_check(g, args.t, args.stopping, args.trials, args.seed, args.threads)
        d = sr.as_dict()
        rows.append({"kind": "stopping", "threshold": args.stopping, "empirical": d["lhs"],
                     "bound": d["rhs"], "slack": d["slack"], "pass": d["passed"]})
        passed &= d["passed"]
        rep["stopping"] = d
    rep["rows"] = rows
    return Outcome(passed, rep, rows)


def cmd_lp(args, out_dir: Path) -> Outcome:
    from .fractional import certificate_json
    f = _family_from_args(args)
    cert = certificate_json(f)
    passed = cert["strong_duality"]
    if args.s is not None:
        below = Fraction(cert["value"]) < args.s + 1
        cert["below_s_plus_1"] = below
        passed &= below
    cert["n"], cert["k"], cert["size"] = f.n, f.k, len(f)
    return Outcome(passed, cert, [{"value": cert["value"], "strong_duality": cert["strong_duality"],
                                   "below_s_plus_1": cert.get("below_s_plus_1")}])


def cmd_shadow(args, out_dir: Path) -> Outcome:
    from .combinatorics import shadow_report
    if args.s is None:
        raise PreconditionError("--s is required")
    f = _family_from_args(args)
    rep = shadow_report(f, args.s, args.budget_nodes or None).as_dict()
    return Outcome(rep["ok"], rep, [rep])


def cmd_spectral(args, out_dir: Path) -> Outcome:
    from .family import Family, all_kset_masks
    from .kneser import check_alon_chung, kneser_params
    kp = kneser_params(args.m, args.l)
    fams = []
    if args.family:
        fams.append(_family_from_args(args))
    rng = np.random.default_rng(args.seed)
    allm = all_kset_masks(args.m, args.l)
    for _ in range(args.random):
        keep = rng.random(len(allm)) < rng.random()
        fams.append(Family(args.m, args.l, tuple(m for m, x in zip(allm, keep) if x)))
    rows = []
    for g in fams:
        r = check_alon_chung(g, args.m)
        rows.append({"size": len(g), "edges": r.edges, "alpha": r.alpha, "deviation": r.deviation,
                     "bound": r.bound, "margin": r.margin, "holds": r.holds,
                     "joint_holds": r.joint_holds})
    passed = all(r["holds"] and r["joint_holds"] for r in rows)
    rep = {"m": kp.m, "l": kp.l, "M": kp.M, "D": kp.D, "lambda": kp.lam, "ratio": kp.ratio,
           "checked": len(rows), "all_hold": passed}
    if rows:
        rep["min_margin"] = min(r["margin"] for r in rows)
    if args.rows:
        rep["rows"] = rows
    return Outcome(passed, rep, rows)


# ── parser and dispatch ─────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--precision", type=int, default=128, help="ball precision in bits")
    common.add_argument("--budget-nodes", type=int, default=0, help="search node budget (0: default)")
    common.add_argument("--out", type=Path, default=Path("reports"))
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--quiet", action="store_true", help="do not print the report")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", type=Path, help="family file (header 'n k count')")
    fam.add_argument("--construct", choices=CONSTRUCTIONS)

    p = argparse.ArgumentParser(prog="emclab", description="Matching-number extremal problems: "
                                "exact search, bounds, concentration checks and certificates.")
    p.add_argument("--version", action="version", version=f"emclab {__version__}")
    sub = p.add_subparsers(dest="command")

    b = sub.add_parser("bounds", parents=[common], help="table of upper bounds on m(n,k,s)")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--s", type=int, required=True)
    b.add_argument("--gamma", type=_frac, nargs="*",
                   default=[Fraction(6, 5), Fraction(4, 3), Fraction(3, 2), Fraction(5, 3)])
    b.set_defaults(func=cmd_bounds, default_format="csv")

    e = sub.add_parser("exact", parents=[common], help="exact m(n,k,s) at tiny scale")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--s", type=int, required=True)
    e.add_argument("--mode", choices=("full", "initial"), default="full")
    e.add_argument("--relaxed", action="store_true", help="admit n < k(s+1)")
    e.set_defaults(func=cmd_exact, default_format="json")

    c = sub.add_parser("certify", parents=[common], help="rigorous numeric certificates")
    c.add_argument("target", choices=("appendix", "dirac"))
    c.add_argument("--item", choices=("A", "B", "C", "tail", "sweep"), default="A")
    c.add_argument("--bridge", action="store_true", help="item B: also cover the gaps of the grid")
    c.add_argument("--k-min", type=int, default=2)
    c.add_argument("--k-max", type=int, default=10_000)
    c.add_argument("--rows", action="store_true", help="include per-row details in JSON")
    c.set_defaults(func=cmd_certify, default_format="json")

    s = sub.add_parser("simulate", parents=[common, fam], help="random t-matching concentration")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--s", type=int, help="for --construct")
    s.add_argument("--density", type=float, default=0.3, help="random family density")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--stopping", type=float, default=None, help="also run the stopping-ratio check at C")
    s.set_defaults(func=cmd_simulate, default_format="csv")

    lp = sub.add_parser("lp", parents=[common, fam], help="fractional matching number with certificates")
    lp.add_argument("--n", type=int)
    lp.add_argument("--k", type=int)
    lp.add_argument("--s", type=int)
    lp.set_defaults(func=cmd_lp, default_format="json")

    sh = sub.add_parser("shadow", parents=[common, fam], help="shadow and tail-decomposition checks")
    sh.add_argument("--n", type=int)
    sh.add_argument("--k", type=int)
    sh.add_argument("--s", type=int)
    sh.set_defaults(func=cmd_shadow, default_format="json")

    sp = sub.add_parser("spectral", parents=[common, fam], help="Kneser graph parameters and edge counts")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--random", type=int, default=0, help="number of random subfamilies to check")
    sp.add_argument("--rows", action="store_true")
    sp.set_defaults(func=cmd_spectral, default_format="json")
    return p


def _params_of(args) -> dict:
    skip = {"func", "default_format", "out", "format", "seed", "precision", "quiet", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _jsonable(v) if isinstance(v, (Fraction, Path)) else v for c, v in r.items()})
    return buf.getvalue()


def _emit(manifest: RunManifest, outcome: Outcome, fmt: str, out_dir: Path, quiet: bool) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{manifest.subcommand}-{manifest.key()}.{'jsonl' if fmt == 'json' else 'csv'}"
    if fmt == "json":
        record = {"manifest": manifest.as_dict(), "passed": outcome.passed, "report": outcome.report}
        text = json.dumps(record, default=_jsonable, sort_keys=True)
        if not quiet:
            print(json.dumps(record, default=_jsonable, indent=2, sort_keys=True))
        with path.open("a") as fh:
            fh.write(text + "\n")
    else:
        body = _to_csv(outcome.rows)
        head = "# manifest " + json.dumps(manifest.as_dict(), default=_jsonable, sort_keys=True)
        if not quiet:
            print(head)
            print(body, end="")
        with path.open("a") as fh:
            fh.write(head + "\n" + body)
    return path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors this way
        return EXIT_USAGE if exc.code else EXIT_PASS
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    manifest = RunManifest(args.command, _params_of(args), args.seed, args.precision)
    t0 = time.perf_counter()
    try:
        outcome = args.func(args, args.out)
    except ScaleLimitError as exc:
        print(f"scale limit: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (PreconditionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest.wall_seconds = time.perf_counter() - t0
    outcome.report.setdefault("passed", outcome.passed)
    path = _emit(manifest, outcome, args.format or args.default_format, args.out, args.quiet)
    print(f"report appended to {path}", file=sys.stderr)
    return EXIT_PASS if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
