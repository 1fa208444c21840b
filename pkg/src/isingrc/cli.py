"""Command-line driver.

Exit status: 0 when every check passes, 1 when a check fails, 2 for bad
input (unparsable graph, invalid parameters), 3 when a size guard refuses
the request.  Output is JSON lines (or CSV) and depends only on the flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable

from . import analysis, chains, measures, paths
from .battery import NAMED
from .graph import DEFAULT_MAX_EDGES, Graph, GraphError, GuardError, check_guard, read_graph
from .measures import Params, as_fraction
from .reports import Check, dumps, frac_str, jsonable

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _add_common(sub: argparse.ArgumentParser, eps: bool = False) -> None:
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", type=Path, help="graph file: 'n m' then one 'u v' line per edge")
    src.add_argument("--builtin", choices=sorted(NAMED), help="use a built-in test graph instead of a file")
    par = sub.add_mutually_exclusive_group(required=True)
    par.add_argument("--beta", type=_fraction, help="Ising coupling (> 1)")
    par.add_argument("--p", type=_fraction, dest="p_rc", help="random-cluster edge probability in (0, 1]")
    sub.add_argument("--q", type=_fraction, default=Fraction(2), help="cluster weight (default 2)")
    if eps:
        sub.add_argument("--eps", type=_fraction, default=Fraction(1, 4), help="mixing threshold (default 1/4)")
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--out", type=Path, help="write here instead of standard output")
    sub.add_argument("--guard-m", type=int, default=DEFAULT_MAX_EDGES, help="refuse exhaustive work above this many edges")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isingrc", description="Exact checks and samplers for the Ising / random-cluster / even-subgraph models.")
    cmds = ap.add_subparsers(dest="command", required=True)

    v = cmds.add_parser("verify", help="run every applicable exact check")
    _add_common(v)

    e = cmds.add_parser("exact", help="partition functions and exact laws")
    _add_common(e)

    s = cmds.add_parser("sample", help="run a chain")
    _add_common(s)
    s.add_argument("--kind", choices=chains.KINDS, default="rc")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=0)
    s.add_argument("--initial", type=int, default=0, help="starting edge subset as a bitmask")
    s.add_argument("--trace", action="store_true", help="emit one record per step")
    s.add_argument("--samples", type=int, help="histogram this many states instead of a single run")
    s.add_argument("--burn-in", type=int, default=0)
    s.add_argument("--thinning", type=int, default=1)

    m = cmds.add_parser("mix", help="exact mixing time against the bounds")
    _add_common(m, eps=True)
    m.add_argument("--kind", choices=chains.KINDS, default="rc")

    c = cmds.add_parser("congestion", help="congestion of the canonical path families")
    _add_common(c)
    c.add_argument("--family", choices=("rc", "worm"), default="rc")
    c.add_argument("--transitions-csv", type=Path, help="also dump per-transition traffic to this CSV file")

    b = cmds.add_parser("bench", help="autocorrelation of the single-bond-flip chain against Swendsen-Wang")
    _add_common(b)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--steps", type=int, default=20000, help="sweeps per chain")
    b.add_argument("--observable", choices=("edges", "clusters"), default="edges")
    return ap


def load_graph(args) -> Graph:
    if args.builtin:
        return NAMED[args.builtin]()
    try:
        return read_graph(args.graph)
    except OSError as exc:
        raise InputError(f"cannot read graph file: {exc}") from exc


def load_params(args, g: Graph) -> Params:
    try:
        if args.beta is not None:
            return Params.from_beta(args.beta, g.n, args.q)
        return Params(args.p_rc, g.n, args.q)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def run_header(command: str, g: Graph, params: Params, **extra) -> dict:
    return {
        "record": "run",
        "command": command,
        "graph": g.describe(),
        "n": g.n,
        "m": g.m,
        "params": params.as_dict(),
        "mode": "rational",
        **extra,
    }


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


class Emitter:
    """Collects records and writes them as JSON lines or CSV."""

    def __init__(self, fmt: str, header: dict, columns: list[str] | None = None):
        self.fmt = fmt
        self.header = header
        self.columns = columns
        self.rows: list[dict] = []

    def add(self, rec: dict) -> None:
        self.rows.append(rec)

    def extend(self, recs: Iterable[dict]) -> None:
        self.rows.extend(recs)

    def render(self) -> str:
        buf = io.StringIO()
        if self.fmt == "json":
            buf.write(dumps(self.header) + "\n")
            for rec in self.rows:
                buf.write(dumps(rec) + "\n")
            return buf.getvalue()
        buf.write("# " + dumps(self.header) + "\n")
        cols = self.columns or sorted({k for r in self.rows for k in r})
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for rec in self.rows:
            w.writerow({k: _cell(jsonable(rec.get(k))) for k in cols})
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"))
    if v is None:
        return ""
    return v


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


CHECK_COLUMNS = ["check", "graph", "lhs", "rhs", "relation", "mode", "tolerance", "pass"]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _skip(check: str, g: Graph, reason: str) -> dict:
    return {"check": check, "graph": g.describe(), "skipped": reason}


def verify_checks(g: Graph, params: Params, guard: int) -> tuple[list[Check], list[dict]]:
    """Every exact check that applies to ``g`` at ``params``, plus notes on skipped ones."""
    measures.require_q2(params.q)
    check_guard(g, guard, "verification")
    name = g.describe()
    pe = params.p_even
    pdict = {"p_rc": params.p_rc, "p_even": pe}
    checks: list[Check] = []
    skipped: list[dict] = []

    if params.beta is not None:
        checks += measures.verify_equivalence(g, params.beta, guard)
    else:
        skipped.append(_skip("equivalence", g, "infinite coupling at p_rc = 1"))
    checks += measures.even_count_check(g, guard)
    checks += measures.distortion_checks(g, pe, guard)
    checks += measures.hole_checks(g, pe, guard)
    checks.append(measures.empty_state_check(g, params.p_rc, guard))

    flow = paths.worm_flow(g, pe, guard)
    illegal = sum(1 for pth in flow.paths if paths.path_legality(g, pth))
    checks.append(Check("worm_paths.legality", name, pdict, illegal, 0, detail={"paths": len(flow.paths)}))
    worm = paths.worm_certificates(g, pe, guard)
    checks.append(
        Check("worm_paths.traffic", name, pdict, sum(not r.passed for r in worm), 0, detail={"transitions": len(worm)})
    )
    lifted = paths.lifted_certificates(g, pe, guard)
    checks.append(
        Check("lifted_flow.traffic", name, pdict, sum(not r.passed for r in lifted), 0, detail={"transitions": len(lifted)})
    )

    if params.p_rc < 1:
        rep = paths.congestion(g, pe, "rc")
        checks.append(
            Check(
                "lifted_flow.congestion",
                name,
                pdict,
                rep.max_congestion,
                rep.bound,
                "<=",
                detail={"witness_transition": list(rep.witness or ()), "path_length": rep.path_length, "off_support": rep.off_support},
            )
        )
    else:
        skipped.append(_skip("lifted_flow.congestion", g, "single-bond-flip chain needs p_rc < 1"))

    if g.m <= min(guard, paths.BRUTE_FORCE_MAX_EDGES):
        fv = paths.flow_validity(g, pe)
        checks.append(
            Check(
                "lifted_flow.endpoint_law",
                name,
                pdict,
                fv.mismatches + fv.marginal_failures,
                0,
                detail={"pairs": fv.pairs, "truncated_mismatches": fv.truncated_mismatches},
            )
        )
    else:
        skipped.append(_skip("lifted_flow.endpoint_law", g, f"trajectory enumeration limited to m <= {paths.BRUTE_FORCE_MAX_EDGES}"))

    if g.m <= min(guard, analysis.MATRIX_MAX_EDGES):
        kinds = ("rc", "worm", "sw") if params.p_rc < 1 else ("worm",)
        for kind in kinds:
            checks += analysis.matrix_checks(analysis.build_matrix(g, params, kind))
    else:
        skipped.append(_skip("matrix", g, f"transition matrices limited to m <= {analysis.MATRIX_MAX_EDGES}"))

    checks.sort(key=lambda c: c.check)
    return checks, skipped


def cmd_verify(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    checks, skipped = verify_checks(g, params, args.guard_m)
    out = Emitter(args.format, run_header("verify", g, params), CHECK_COLUMNS)
    out.extend(c.to_record() for c in checks)
    out.extend(skipped)
    failed = sum(not c.passed for c in checks)
    out.add({"record": "summary", "checks": len(checks), "failed": failed, "skipped": len(skipped), "pass": failed == 0})
    _write(out.render(), args.out)
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_exact(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    check_guard(g, args.guard_m, "exact enumeration")
    p, q, pe = params.p_rc, params.q, params.p_even
    header = run_header("exact", g, params)
    if args.format == "csv":
        pi_rc = measures.rc_measure(g, p, q, args.guard_m)
        rows = [{"subset_bitmask": s, "pi_rc": w} for s, w in enumerate(pi_rc)]
        if q == 2:
            pi_even = measures.even_measure(g, pe, args.guard_m)
            pi_worm = measures.worm_measure(g, pe, args.guard_m)
            for r in rows:
                r["pi_even"] = pi_even.get(r["subset_bitmask"], Fraction(0))
                r["pi_worm"] = pi_worm.get(r["subset_bitmask"], Fraction(0))
        out = Emitter("csv", header, list(rows[0]))
        out.extend(rows)
        _write(out.render(), args.out)
        return EXIT_OK

    def value(name: str, v: Fraction) -> dict:
        return {"quantity": name, "value": v, "mode": "rational"}

    out = Emitter("json", header)
    out.add(value("Z_rc", measures.rc_partition(g, p, q, args.guard_m)))
    if q == 2:
        beta = params.beta
        if beta is not None:
            out.add(value("Z_ising", measures.ising_partition(g, beta, args.guard_m)))
            out.add(value("Z_rc_rescaled", beta**g.m * measures.rc_partition(g, p, 2, args.guard_m)))
            out.add(value("Z_even_rescaled", 2**g.n * beta**g.m * measures.even_partition(g, pe, args.guard_m)))
        out.add(value("Z_even", measures.even_partition(g, pe, args.guard_m)))
        out.add(value("Z_two_holes", measures.stratum_partition(g, pe, 2, args.guard_m)))
        out.add(value("Z_worm", measures.worm_partition(g, pe, args.guard_m)))
    _write(out.render(), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    if args.initial < 0 or args.initial >> g.m:
        raise InputError(f"initial state {args.initial} is not a subset of the {g.m} edges")
    try:
        cfg = chains.ChainConfig(g, params, args.kind, args.seed, args.steps)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    header = run_header("sample", g, params, kind=args.kind, seed=args.seed, steps=args.steps, initial=args.initial)

    if args.samples is not None:
        counts = chains.empirical_distribution(cfg, args.initial, args.samples, args.thinning, args.burn_in, args.guard_m)
        header.update(samples=args.samples, burn_in=args.burn_in, thinning=args.thinning)
        rows = [{"subset_bitmask": s, "count": c, "frequency": f} for s, c, f in chains.histogram_rows(counts)]
        exact = measures.worm_measure(g, params.p_even) if args.kind == "worm" else measures.rc_measure(g, params.p_rc, params.q)
        header["tv_to_exact"] = chains.empirical_tv(counts, exact)
        header["tv_mode"] = "float"
        out = Emitter(args.format, header, ["subset_bitmask", "count", "frequency"])
        out.extend(rows)
        _write(out.render(), args.out)
        return EXIT_OK

    try:
        final, trace = chains.run_chain(cfg, args.initial, trace=args.trace)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Emitter(args.format, header, ["t", "edge", "kind", "accepted"])
    out.extend(tr.to_record() for tr in trace)
    if args.format == "json":
        out.add({"record": "final", "state": final, "edges": [e for e in range(g.m) if final >> e & 1]})
    _write(out.render(), args.out)
    return EXIT_OK


def cmd_mix(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    if args.kind == "sw":
        measures.require_q2(params.q)
    if args.kind in ("rc", "sw") and params.p_rc == 1:
        raise InputError(f"{args.kind} chain needs p_rc < 1")
    mat = analysis.build_matrix(g, params, args.kind, min(args.guard_m, analysis.MATRIX_MAX_EDGES))
    rho = None
    if args.kind == "rc" and params.q == 2 and g.m:
        rho = paths.congestion(g, params.p_even, "rc").max_congestion
    rep = analysis.mixing_time(mat, args.eps, rho)
    out = Emitter(args.format, run_header("mix", g, params, eps=args.eps))
    out.add(rep.to_record())
    _write(out.render(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_congestion(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    measures.require_q2(params.q)
    check_guard(g, args.guard_m, "congestion")
    pe = params.p_even
    if args.family == "rc" and params.p_rc == 1:
        raise InputError("single-bond-flip chain needs p_rc < 1")
    rep = paths.congestion(g, pe, args.family)
    out = Emitter(args.format, run_header("congestion", g, params, family=args.family))
    out.add(rep.to_record())
    _write(out.render(), args.out)
    if args.transitions_csv is not None:
        per = rep.per_transition if args.family == "worm" else paths.lifted_certificates(g, pe)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["from", "to", "kind", "traffic", "bounds", "pass"])
        for r in per:
            bounds = ";".join(f"{k}={frac_str(v)}" for k, v in r.bounds.items())
            w.writerow([r.transition[0], r.transition[1], r.kind, frac_str(r.traffic), bounds, r.passed])
        args.transitions_csv.write_text(buf.getvalue())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_bench(args) -> int:
    g = load_graph(args)
    params = load_params(args, g)
    measures.require_q2(params.q)
    if args.steps < 10:
        raise InputError("bench needs at least 10 sweeps")
    rows = []
    for kind, per_sweep in (("rc", max(g.m, 1)), ("sw", 1)):
        try:
            cfg = chains.ChainConfig(g, params, kind, args.seed)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        series = chains.observable_series(cfg, 0, args.steps * per_sweep, args.observable)
        # one sweep of the single-bond-flip chain is m steps
        sweeps = series[per_sweep - 1 :: per_sweep]
        tau = chains.integrated_autocorrelation(sweeps)
        rows.append(
            {
                "chain": kind,
                "observable": args.observable,
                "sweeps": args.steps,
                "steps_per_sweep": per_sweep,
                "tau_int_sweeps": round(tau, 6),
                "mean": round(float(sweeps.mean()), 6),
                "mode": "float",
            }
        )
    header = run_header("bench", g, params, seed=args.seed)
    out = Emitter(args.format, header, ["chain", "observable", "sweeps", "steps_per_sweep", "tau_int_sweeps", "mean", "mode"])
    out.extend(rows)
    _write(out.render(), args.out)
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "verify": cmd_verify,
    "exact": cmd_exact,
    "sample": cmd_sample,
    "mix": cmd_mix,
    "congestion": cmd_congestion,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except GuardError as exc:
        print(f"isingrc: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except GraphError as exc:
        print(f"isingrc: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, ValueError) as exc:
        print(f"isingrc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
