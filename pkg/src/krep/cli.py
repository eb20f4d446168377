"""Command-line entry point: ``krep <subcommand> ...``.

Exit codes: 0 pass, 2 a checked property failed, 3 the parameters are outside
the feasible regime.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from .construct import pipeline
from .cover import (CoverMultiset, SetRepresentation, cover_to_representation, exact_phi_k,
                    is_k_cover, representation_to_cover)
from .errors import BudgetExceeded, InfeasibleRegime
from .experiment import ExperimentSpec, run_experiment
from .fpc import FractionalPseudocover, check_fpc, cover_to_fpc, eliminate_large, lower_bound_holds
from .graph import RandomSource, read_graph, sample_gnp_half
from .quasiclique import (QuasicliqueParams, check_alpha_t_good, enumerate_Q, expected_counts,
                          pair_counts, relaxed_count_family)
from .concentration import chernoff_bound, compare_to_bound, empirical_tail
from .sampler import sis_estimate_counts

EXIT_OK, EXIT_PROPERTY, EXIT_INFEASIBLE = 0, 2, 3


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif not isinstance(v, list):
            yield key, v


def _emit(args, payload, *, rows=None, columns=None, text=None):
    if text is not None:
        out = text
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if rows is not None:
            w.writerow(columns)
            w.writerows(rows)
        else:
            w.writerow(["key", "value"])
            w.writerows(_flatten(payload))
        out = buf.getvalue()
    else:
        out = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _params(g, args) -> QuasicliqueParams:
    return QuasicliqueParams(g.n, Fraction(args.alpha), args.t)


def cmd_gen(args):
    g = sample_gnp_half(args.n, RandomSource(args.seed, args.stream))
    _emit(args, None, text=g.to_text())
    return EXIT_OK


def cmd_exact(args):
    g = read_graph(args.graph)
    try:
        res = exact_phi_k(g, args.k, max_nodes=args.max_nodes)
    except BudgetExceeded as exc:
        _emit(args, {"status": "budget-exceeded", "upper_bound": len(exc.best)})
        return EXIT_PROPERTY
    cert = is_k_cover(g, res.cover, args.k)
    _emit(args, {"k": args.k, "phi": res.value, "nodes": res.nodes, "valid": cert.valid,
                 "cover": [[m, *[v for v in range(g.n) if s >> v & 1]] for s, m in res.cover.entries]})
    return EXIT_OK if cert.valid else EXIT_PROPERTY


def cmd_convert(args):
    if args.cover:
        c = CoverMultiset.from_text(Path(args.cover).read_text())
        n = args.n if args.n is not None else c.max_vertex() + 1
        rep = cover_to_representation(c, n)
        payload = rep.to_json()
        status = EXIT_OK
        if args.graph:
            g = read_graph(args.graph)
            cert = is_k_cover(g, c, args.k)
            payload["certificate"] = cert.to_json()
            status = EXIT_OK if cert.valid else EXIT_PROPERTY
        _emit(args, payload)
        return status
    rep = SetRepresentation.from_json(json.loads(Path(args.representation).read_text()))
    c = representation_to_cover(rep, len(rep.assignments))
    _emit(args, None, text=c.to_text())
    return EXIT_OK


def cmd_count(args):
    g = read_graph(args.graph)
    p = _params(g, args)
    fam = enumerate_Q(g, (), p)
    relaxed = relaxed_count_family(g, (), p)
    pc = pair_counts(fam, g.n)
    edge = [c for (u, v), c in pc.items() if g.has_edge(u, v)]
    non = [c for (u, v), c in pc.items() if not g.has_edge(u, v)]
    payload = {"params": p.to_json(), **expected_counts(p).to_json(),
               "observed": {"Q": len(fam), "relaxed": len(relaxed)},
               "per_pair_stats": {
                   "edge_mean": sum(edge) / len(edge) if edge else None,
                   "non_edge_mean": sum(non) / len(non) if non else None,
                   "edge_min": min(edge, default=None), "edge_max": max(edge, default=None),
                   "non_edge_min": min(non, default=None), "non_edge_max": max(non, default=None)}}
    _emit(args, payload)
    return EXIT_OK


def cmd_goodness(args):
    g = read_graph(args.graph)
    p = _params(g, args)
    rep = check_alpha_t_good(g, p, args.delta if args.delta is not None else p.goodness_tolerance())
    _emit(args, rep.to_json())
    return EXIT_OK if rep.good else EXIT_PROPERTY


def cmd_sample(args):
    g = read_graph(args.graph)
    p = _params(g, args)
    gamma = Fraction(args.gamma) if args.gamma else p.alpha
    res = sis_estimate_counts(g, tuple(args.U), gamma, p, args.trials, RandomSource(args.seed))
    _emit(args, res.to_json())
    return EXIT_OK


def cmd_construct(args):
    g = read_graph(args.graph)
    rng = RandomSource(args.seed)
    if args.epsilon is not None:
        tr = pipeline(g, args.k, rng, epsilon=args.epsilon, retries=args.retries)
    elif args.alpha is not None and args.t is not None:
        tr = pipeline(g, args.k, rng, alpha=Fraction(args.alpha), t=args.t, retries=args.retries)
    else:
        raise SystemExit("construct needs --epsilon or both --alpha and --t")
    _emit(args, tr.to_json())
    return EXIT_OK if tr.valid else EXIT_PROPERTY


def cmd_fpc(args):
    if args.fpc:
        a = FractionalPseudocover.from_json(json.loads(Path(args.fpc).read_text()))
    else:
        g = read_graph(args.graph)
        c = CoverMultiset.from_text(Path(args.cover).read_text())
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            a = cover_to_fpc(g, c, args.k, rng=RandomSource(args.seed))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    chk = check_fpc(a)
    payload = {"check": chk.to_json(), "weight": str(a.weight)}
    status = EXIT_OK if chk.holds else EXIT_PROPERTY
    if args.eliminate and a.is_exact() and chk.p1:
        out, trace = eliminate_large(a)
        payload["eliminated"] = out.to_json()
        payload["trace"] = trace.to_json()
        payload["lower_bound_holds"] = lower_bound_holds(out)
    _emit(args, payload)
    return status


def cmd_tails(args):
    gen = RandomSource(args.seed).generator()
    if args.distribution == "binomial":
        x = gen.binomial(args.N, args.p, size=args.samples)
        mean = args.N * args.p
    else:
        x = gen.hypergeometric(args.good, args.bad, args.draws, size=args.samples)
        mean = args.draws * args.good / (args.good + args.bad)
    rows = []
    for eps in args.eps:
        freq = empirical_tail(x, mean, eps * mean, strict=False)
        bound = chernoff_bound(args.distribution, mean, eps=eps)
        rows.append([eps, mean, freq, bound, compare_to_bound(freq, bound, 3, args.samples)])
    cols = ["eps", "mean", "frequency", "bound", "pass"]
    _emit(args, {"rows": [dict(zip(cols, r)) for r in rows]}, rows=rows, columns=cols)
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_PROPERTY


def cmd_experiment(args):
    data = json.loads(Path(args.spec).read_text())
    data.setdefault("master_seed", args.seed)
    spec = ExperimentSpec.from_json(data)
    res = run_experiment(spec)
    if args.format == "csv":
        text = res.csv_text()
    else:
        text = res.json_text()
    if args.out:
        Path(args.out).write_text(text)
    elif not spec.output:
        sys.stdout.write(text)
    return EXIT_PROPERTY if res.report["passed"] is False else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # flags may go before or after the subcommand; the subcommand copy must not
        # overwrite a value given before it, hence SUPPRESS there
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--seed", type=int, default=d(0), help="master seed (64-bit)")
        p.add_argument("--out", default=d(None), help="write output here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=d("json"))
        return p

    common = global_flags(suppress=True)

    ap = argparse.ArgumentParser(prog="krep", description=__doc__, parents=[global_flags(False)],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=fn)
        return p

    def qc(p):
        p.add_argument("--graph", required=True)
        p.add_argument("--alpha", required=True, help="rational, e.g. 1/2")
        p.add_argument("--t", type=int, required=True)

    p = add("gen", cmd_gen, "sample G(n, 1/2)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)

    p = add("exact", cmd_exact, "exact minimum k-cover of a small graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--max-nodes", type=int, default=5_000_000)

    p = add("convert", cmd_convert, "cover <-> set representation")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cover")
    g.add_argument("--representation")
    p.add_argument("--n", type=int)
    p.add_argument("--graph", help="also certify the cover against this graph")
    p.add_argument("--k", type=int, default=1)

    p = add("count", cmd_count, "quasiclique counts vs expectations")
    qc(p)

    p = add("goodness", cmd_goodness, "(alpha, t)-goodness check")
    qc(p)
    p.add_argument("--delta", type=float)

    p = add("sample", cmd_sample, "importance-sampling estimate of admissible tuple counts")
    qc(p)
    p.add_argument("--gamma")
    p.add_argument("--U", type=int, nargs=2, required=True, metavar=("U", "V"))
    p.add_argument("--trials", type=int, default=10_000)

    p = add("construct", cmd_construct, "randomised cover + repair")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha")
    p.add_argument("--t", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--retries", type=int, default=1)

    p = add("fpc", cmd_fpc, "evaluate / eliminate a fractional pseudocover")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--fpc", help="FPC JSON file")
    g.add_argument("--cover", help="cover file to convert (needs --graph and --k)")
    p.add_argument("--graph")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--eliminate", action="store_true")

    p = add("tails", cmd_tails, "empirical tails vs Chernoff bounds")
    p.add_argument("--distribution", choices=("binomial", "hypergeometric"), default="binomial")
    p.add_argument("--N", type=int, default=190)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--good", type=int, default=10)
    p.add_argument("--bad", type=int, default=10)
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.2, 0.3])
    p.add_argument("--samples", type=int, default=100_000)

    p = add("experiment", cmd_experiment, "run an experiment spec (JSON)")
    p.add_argument("--spec", required=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleRegime as exc:
        print(f"infeasible regime: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
