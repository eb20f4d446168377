"""Seeded experiment runner emitting a JSON report and a per-trial CSV."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .concentration import chernoff_bound, compare_to_bound, empirical_tail
from .construct import pipeline
from .fpc import check_fpc, cover_to_fpc
from .graph import RandomSource, check_property_P1, sample_edge_vectors, sample_gnp_half
from .quasiclique import QuasicliqueParams, check_alpha_t_good, relaxed_counts_batch
from .sampler import sis_estimate_counts

KINDS = ("p1-check", "goodness", "counting", "sampler", "construct", "fpc", "tails")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["kind", "master_seed", "trials", "params", "summary", "passed", "csv_columns"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "master_seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "summary": {"type": "object"},
        "passed": {"type": ["boolean", "null"]},
        "csv_columns": {"type": "array", "items": {"type": "string"}},
    },
    "additionalProperties": False,
}


@dataclass
class ExperimentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    trials: int = 1
    master_seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        if "master_seed" not in data:
            raise ValueError("spec must carry a master_seed")
        return cls(data["kind"], dict(data.get("params", {})), int(data.get("trials", 1)),
                   int(data["master_seed"]), data.get("output"))


@dataclass
class ExperimentResult:
    report: dict
    columns: list[str]
    rows: list[list]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _params(p: dict) -> QuasicliqueParams:
    return QuasicliqueParams(int(p["n"]), Fraction(str(p["alpha"])), int(p["t"]))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _p1(spec, src):
    n = int(spec.params["n"])
    per_size = int(spec.params.get("per_size", 1000))
    rows = []
    for i in range(spec.trials):
        g = sample_gnp_half(n, src.stream(i))
        rep = check_property_P1(g, per_size=per_size, rng=src.stream(i).substream(1), max_report=0)
        rows.append([i, g.num_edges(), rep.examined, rep.violation_count, rep.holds])
    rate = sum(r[4] for r in rows) / len(rows)
    return ["trial", "edges", "examined", "violations", "holds"], rows, {"hold_rate": rate}, None


def _goodness(spec, src):
    p = _params(spec.params)
    delta = float(spec.params.get("delta", p.goodness_tolerance()))
    rows = []
    for i in range(spec.trials):
        g = sample_gnp_half(p.n, src.stream(i))
        rep = check_alpha_t_good(g, p, delta)
        rows.append([i, rep.total, rep.worst_edge, rep.worst_non_edge, rep.worst_total, rep.good])
    rate = sum(r[5] for r in rows) / len(rows)
    return (["trial", "Q", "worst_edge", "worst_non_edge", "worst_total", "good"], rows,
            {"good_rate": rate, "delta": delta, "asymptotic_delta": p.goodness_tolerance()}, None)


def _counting(spec, src):
    n, t, T = int(spec.params["n"]), int(spec.params["t"]), int(spec.params["T"])
    pairs = math.comb(t, 2)
    N0 = Fraction(math.comb(n, t) * math.comb(pairs, T), 2 ** pairs)
    ev = sample_edge_vectors(n, spec.trials, src)
    totals, per_pair = relaxed_counts_batch(ev, n, t, T)
    mean, se = _mean_se(totals)
    edge_mean = float((per_pair * ev).sum() / max(ev.sum(), 1))
    non_mean = float((per_pair * (1 - ev)).sum() / max((1 - ev).sum(), 1))
    summary = {"mean": mean, "std_error": se, "N0": float(N0), "N0_exact": str(N0),
               "z": (mean - float(N0)) / se if se else 0.0,
               "edge_mean": edge_mean, "non_edge_mean": non_mean,
               "edge_non_edge_ratio": edge_mean / non_mean if non_mean else None}
    rows = [[i, int(c)] for i, c in enumerate(totals)]
    return ["trial", "count"], rows, summary, abs(summary["z"]) <= 3


def _sampler(spec, src):
    p = _params(spec.params)
    gamma = Fraction(str(spec.params.get("gamma", p.alpha)))
    g = sample_gnp_half(p.n, src.stream(0))
    edges = g.edges()
    if not edges:
        raise ValueError("sampled graph has no edges")
    e = tuple(spec.params.get("U", edges[0]))
    res = sis_estimate_counts(g, e, gamma, p, spec.trials, src.stream(1))
    rows = [[j, d["estimate"], d["std_error"], d["trials"]] for j, d in sorted(res.per_j.items())]
    summary = {k: v for k, v in res.to_json().items() if k != "per_j"}
    return ["j", "estimate", "std_error", "trials"], rows, summary, None


def _construct(spec, src):
    n, k = int(spec.params["n"]), int(spec.params["k"])
    retries = int(spec.params.get("retries", 1))
    rows = []
    for i in range(spec.trials):
        g = sample_gnp_half(n, src.stream(i))
        if "epsilon" in spec.params:
            tr = pipeline(g, k, src.stream(i).substream(1), epsilon=float(spec.params["epsilon"]),
                          retries=retries)
        else:
            tr = pipeline(g, k, src.stream(i).substream(1), alpha=Fraction(str(spec.params["alpha"])),
                          t=int(spec.params["t"]), retries=retries)
        rows.append([i, len(tr.C_initial), len(tr.C_1), len(tr.C_final), tr.X, tr.Y, tr.Z,
                     tr.E1, tr.E2, tr.valid])
    ok = all(r[-1] for r in rows)
    mean_final, se_final = _mean_se([r[3] for r in rows])
    return (["trial", "initial", "C1", "final", "X", "Y", "Z", "E1", "E2", "certified"], rows,
            {"mean_final_size": mean_final, "std_error": se_final}, ok)


def _fpc(spec, src):
    n, k = int(spec.params["n"]), int(spec.params["k"])
    rows = []
    for i in range(spec.trials):
        g = sample_gnp_half(n, src.stream(i))
        tr = pipeline(g, k, src.stream(i).substream(1), alpha=Fraction(str(spec.params["alpha"])),
                      t=int(spec.params["t"]))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # the regime warning is reported via the P1 column
            a = cover_to_fpc(g, tr.C_final, k, check_density=False)
        chk = check_fpc(a)
        rows.append([i, len(tr.C_final), float(chk.p1_sum[0]), float(chk.p2_sum[0]),
                     float(chk.threshold[0]), chk.p1, chk.p2])
    return (["trial", "cover_size", "P1_sum", "P2_sum", "P2_threshold", "P1", "P2"], rows,
            {"P1_rate": sum(bool(r[5]) for r in rows) / len(rows),
             "P2_rate": sum(bool(r[6]) for r in rows) / len(rows)}, None)


def _tails(spec, src):
    kind = spec.params.get("distribution", "binomial")
    eps_list = [float(e) for e in spec.params.get("eps", [0.1, 0.2, 0.3])]
    gen = src.generator()
    if kind == "binomial":
        N, prob = int(spec.params.get("N", 190)), float(spec.params.get("p", 0.5))
        x = gen.binomial(N, prob, size=spec.trials)
        mean = N * prob
    elif kind == "hypergeometric":
        good, bad, draws = (int(spec.params[k]) for k in ("good", "bad", "draws"))
        x = gen.hypergeometric(good, bad, draws, size=spec.trials)
        mean = draws * good / (good + bad)
    else:
        raise ValueError(f"unknown distribution {kind!r}")
    rows = []
    for eps in eps_list:
        freq = empirical_tail(x, mean, eps * mean, strict=False)
        bound = chernoff_bound(kind, mean, eps=eps)
        rows.append([eps, mean, freq, bound, compare_to_bound(freq, bound, 3, spec.trials)])
    return (["eps", "mean", "frequency", "bound", "pass"], rows,
            {"distribution": kind, "mean": mean}, all(r[4] for r in rows))


_HANDLERS = {"p1-check": _p1, "goodness": _goodness, "counting": _counting, "sampler": _sampler,
             "construct": _construct, "fpc": _fpc, "tails": _tails}


def run_experiment(spec: ExperimentSpec, *, write: bool = True) -> ExperimentResult:
    """Run one experiment; trial i always draws from stream i of the master seed.

    When ``spec.output`` is set and ``write`` is true, ``<output>.json`` and
    ``<output>.csv`` are written.
    """
    src = RandomSource(spec.master_seed)
    columns, rows, summary, passed = _HANDLERS[spec.kind](spec, src)
    report = {"kind": spec.kind, "master_seed": spec.master_seed, "trials": spec.trials,
              "params": {k: v if isinstance(v, (int, float, list, str)) else str(v)
                         for k, v in spec.params.items()},
              "summary": summary, "passed": passed, "csv_columns": columns}
    jsonschema.validate(report, REPORT_SCHEMA)
    result = ExperimentResult(report, columns, rows)
    if spec.output and write:
        base = Path(spec.output)
        base.with_suffix(".json").write_text(result.json_text())
        base.with_suffix(".csv").write_text(result.csv_text())
    return result

