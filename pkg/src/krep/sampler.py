"""Sequential random process over admissible tuples, exact path probabilities
and importance-sampling counts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np

from .degseq import backward_degrees, enumerate_J_gamma, in_J_gamma
from .errors import BudgetExceeded
from .graph import Graph, RandomSource, as_generator, as_mask, extension_mask, mask_of, members
from .quasiclique import QuasicliqueParams, is_quasiclique

EXACT_PERMUTATION_LIMIT = 40_320  # 8!
BATCH = 1 << 16


@dataclass
class SampledTuple:
    vertices: tuple[int, ...]
    path_sizes: tuple[int, ...]
    failed_at: int | None = None  # the s whose extension set was empty

    @property
    def exact_prob(self) -> Fraction:
        if self.failed_at is not None:
            return Fraction(0)
        p = Fraction(1)
        for w in self.path_sizes:
            p /= w
        return p

    @property
    def weight(self) -> int:
        """Product of the branching factors; 0 on failure."""
        return 0 if self.failed_at is not None else math.prod(self.path_sizes)


def _check_start(g: Graph, e) -> tuple[int, int]:
    u, v = e
    if u == v or not (0 <= u < g.n and 0 <= v < g.n):
        raise ValueError(f"bad starting pair {e}")
    return u, v


def run_process(g: Graph, e, j, rng) -> SampledTuple:
    """z_1, z_2 = e, then z_{s+1} uniform on W^{j_s} of {z_1..z_s} for s = 2..t-1."""
    gen = as_generator(rng)
    z = list(_check_start(g, e))
    prefix = mask_of(z)
    sizes = []
    for s, js in enumerate(j, 2):
        W = members(extension_mask(g, prefix, js))
        if not W:
            return SampledTuple(tuple(z), tuple(sizes), failed_at=s)
        sizes.append(len(W))
        x = W[int(gen.integers(len(W)))]
        z.append(x)
        prefix |= 1 << x
    return SampledTuple(tuple(z), tuple(sizes))


@dataclass
class ProcessBatch:
    """Many independent runs of the process with the same (e, j)."""

    tuples: np.ndarray  # (runs, t), -1 past a failure
    weights: np.ndarray  # (runs,) product of branching factors, 0 on failure
    failed: np.ndarray  # (runs,) bool
    final_counts: np.ndarray  # (runs, n) neighbours of each vertex inside the tuple


def run_process_batch(g: Graph, e, j, runs: int, rng) -> ProcessBatch:
    """Vectorised ``run_process``; same law, different consumption of randomness."""
    gen = as_generator(rng)
    u, v = _check_start(g, e)
    a = g.adjacency_matrix().astype(np.int16)
    n = g.n
    t = len(j) + 2
    inside = np.zeros((runs, n), dtype=bool)
    inside[:, [u, v]] = True
    counts = np.tile(a[u] + a[v], (runs, 1))
    tuples = np.full((runs, t), -1, dtype=np.int64)
    tuples[:, 0], tuples[:, 1] = u, v
    weights = np.ones(runs, dtype=np.float64)
    failed = np.zeros(runs, dtype=bool)
    rows = np.arange(runs)
    for step, js in enumerate(j):
        cand = (counts == js) & ~inside
        size = cand.sum(axis=1)
        failed |= size == 0
        weights *= size
        r = np.floor(gen.random(runs) * np.maximum(size, 1)).astype(np.int64)
        pick = np.argmax(np.cumsum(cand, axis=1) > r[:, None], axis=1)
        live = ~failed
        tuples[live, step + 2] = pick[live]
        inside[rows[live], pick[live]] = True
        counts[live] += a[pick[live]]
    weights[failed] = 0
    return ProcessBatch(tuples, weights, failed, counts)


def exact_tuple_probability(g: Graph, e, j, tup) -> Fraction:
    """Probability that the process returns exactly ``tup``: prod 1/|W| along its prefixes."""
    tup = tuple(tup)
    if tup[:2] != tuple(e) or len(tup) != len(j) + 2:
        raise ValueError("tuple does not extend e with the right length")
    if backward_degrees(g, tup, 2) != tuple(j):
        raise ValueError(f"tuple {tup} does not follow the backward degree sequence {tuple(j)}")
    p = Fraction(1)
    prefix = mask_of(tup[:2])
    for s, js in enumerate(j, 2):
        p /= extension_mask(g, prefix, js).bit_count()
        prefix |= 1 << tup[s]
    return p


@dataclass
class ProcessDistribution:
    outcomes: dict  # tuple -> Fraction
    failure: Fraction

    def total(self) -> Fraction:
        return sum(self.outcomes.values(), Fraction(0)) + self.failure


def exact_process_distribution(g: Graph, e, j) -> ProcessDistribution:
    """Full law of the process by walking its tree with rational weights."""
    out: dict = {}
    fail = Fraction(0)
    j = tuple(j)

    def walk(z: list[int], prefix: int, p: Fraction):
        nonlocal fail
        s = len(z)
        if s == len(j) + 2:
            out[tuple(z)] = p
            return
        W = members(extension_mask(g, prefix, j[s - 2]))
        if not W:
            fail += p
            return
        q = p / len(W)
        for x in W:
            z.append(x)
            walk(z, prefix | 1 << x, q)
            z.pop()

    e = _check_start(g, e)
    walk(list(e), mask_of(e), Fraction(1))
    return ProcessDistribution(out, fail)


def enumerate_tuples(g: Graph, e, t: int, *, budget: int = 2_000_000):
    """Every ordered t-tuple of distinct vertices starting with e, with its backward sequence.

    Brute force over all orderings; the independent oracle for process outputs.
    """
    e = _check_start(g, e)
    rest = [v for v in range(g.n) if v not in e]
    total = math.perm(len(rest), t - 2)
    if total > budget:
        raise BudgetExceeded(f"{total} tuples exceed budget {budget}")
    for tail in permutations(rest, t - 2):
        tup = (*e, *tail)
        yield tup, backward_degrees(g, tup, 2)


def count_B(g: Graph, e, gamma, params: QuasicliqueParams) -> dict:
    """Exhaustive |B_gamma(e; j)| per j, and the quasiclique-restricted counts."""
    e_U = int(g.has_edge(*e))
    by_j: dict = {}
    by_j_q: dict = {}
    quasi: dict = {}
    for tup, seq in enumerate_tuples(g, e, params.t):
        if not in_J_gamma(seq, gamma, params, 2, e_U)[0]:
            continue
        by_j[seq] = by_j.get(seq, 0) + 1
        key = as_mask(tup)
        if key not in quasi:
            quasi[key] = is_quasiclique(g, tup, params)[0]
        if quasi[key]:
            by_j_q[seq] = by_j_q.get(seq, 0) + 1
    return {"B": sum(by_j.values()), "Q": sum(by_j_q.values()), "per_j": by_j, "per_j_Q": by_j_q}


# ---------------------------------------------------------------------------
# sequential importance sampling


def _mean_se(values: list[float], n: int) -> tuple[float, float]:
    if n == 0:
        return 0.0, 0.0
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _quasi_mask(batch: ProcessBatch, params: QuasicliqueParams) -> np.ndarray:
    lo, hi = params.degree_window()
    ok = ~batch.failed
    if not ok.any():
        return ok
    tup = np.where(batch.tuples < 0, 0, batch.tuples)
    deg = np.take_along_axis(batch.final_counts, tup, axis=1)
    return ok & (deg.min(axis=1) >= math.ceil(lo)) & (deg.max(axis=1) <= math.floor(hi))


@dataclass
class SISResult:
    estimate: float
    std_error: float
    estimate_Q: float
    std_error_Q: float
    trials: int
    failures: int
    per_j: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "std_error": self.std_error,
            "estimate_Q": self.estimate_Q,
            "std_error_Q": self.std_error_Q,
            "trials": self.trials,
            "failures": self.failures,
            "per_j": self.per_j,
        }


def sis_estimate_counts(g: Graph, U, gamma, params: QuasicliqueParams, trials: int,
                        rng: RandomSource, *, budget: int = 1_000_000) -> SISResult:
    """Unbiased estimates of |B_gamma(U)| and |Q_gamma(U)|.

    Each trial draws j uniformly from J_gamma(U), runs the process and scores
    |J| * prod |W| (0 on failure); the quasiclique count additionally multiplies
    by the indicator that the tuple spans a member of Q_G. Trials are handed out
    in fixed-size batches, batch b on substream b.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    e = _check_start(g, U)
    e_U = int(g.has_edge(*e))
    J = enumerate_J_gamma(gamma, params, 2, e_U, budget=budget)
    if not J:
        return SISResult(0.0, 0.0, 0.0, 0.0, trials, trials)
    scores: list[float] = []
    scores_q: list[float] = []
    per_j_scores: dict = {seq: [] for seq in J}
    failures = 0
    for b, start in enumerate(range(0, trials, BATCH)):
        size = min(BATCH, trials - start)
        gen = rng.substream(b).generator()
        pick = gen.integers(len(J), size=size)
        bscore = np.zeros(size)
        bq = np.zeros(size)
        for ji in np.unique(pick):
            sel = np.flatnonzero(pick == ji)
            batch = run_process_batch(g, e, J[ji], len(sel), gen)
            w = batch.weights * len(J)
            bscore[sel] = w
            bq[sel] = w * _quasi_mask(batch, params)
            failures += int(batch.failed.sum())
            per_j_scores[J[ji]].extend((batch.weights).tolist())
        scores.extend(bscore.tolist())
        scores_q.extend(bq.tolist())
    est, se = _mean_se(scores, trials)
    est_q, se_q = _mean_se(scores_q, trials)
    per_j = {}
    for seq, vals in per_j_scores.items():
        m, s = _mean_se(vals, len(vals))
        per_j[",".join(map(str, seq))] = {"estimate": m, "std_error": s, "trials": len(vals)}
    return SISResult(est, se, est_q, se_q, trials, failures, per_j)


# ---------------------------------------------------------------------------
# d_s statistics


def measure_ds(g: Graph, tup, s: int) -> int:
    """d_s: neighbours of z_s (1-based) among the tuple's vertices."""
    tup = tuple(tup)
    if not 1 <= s <= len(tup):
        raise IndexError(f"s={s} outside 1..{len(tup)}")
    return (g.adj[tup[s - 1]] & mask_of(tup)).bit_count()


def ds_identity_holds(g: Graph, tup, j) -> bool:
    """d_s = j_{s-1} + #{i > s : z_i ~ z_s} for every s, with j_0 = 0 and j_1 = 1
    prepended (j_1 = 1 presumes z_1 z_2 is an edge)."""
    tup = tuple(tup)
    ext = (0, int(g.has_edge(tup[0], tup[1])), *j)
    for s in range(1, len(tup) + 1):
        z = tup[s - 1]
        forward = sum(1 for i in range(s + 1, len(tup) + 1) if g.has_edge(z, tup[i - 1]))
        if measure_ds(g, tup, s) != ext[s - 1] + forward:
            return False
    return True


def ds_matrix(g: Graph, batch: ProcessBatch) -> np.ndarray:
    """(successful runs, t) array of d_1..d_t."""
    ok = ~batch.failed
    return np.take_along_axis(batch.final_counts[ok], batch.tuples[ok], axis=1)


# ---------------------------------------------------------------------------
# fraction experiments


@dataclass
class FractionEstimate:
    fraction: float
    std_error: float
    trials: int
    exact: Fraction | None = None

    def to_json(self) -> dict:
        return {"fraction": self.fraction, "std_error": self.std_error, "trials": self.trials,
                "exact": None if self.exact is None else str(self.exact)}


def T_gamma_exact(params: QuasicliqueParams, gamma) -> Fraction:
    """|T_gamma| / |T| in closed form: each j contributes prod_s C(s, j_s) labelled graphs."""
    J = enumerate_J_gamma(gamma, params, 2, 1)
    good = sum(math.prod(math.comb(s, js) for s, js in enumerate(seq, 2)) for seq in J)
    return Fraction(good, math.comb(params.pairs - 1, params.T - 1))


def _pair_list(t: int) -> list[tuple[int, int]]:
    return [p for p in combinations(range(t), 2) if p != (0, 1)]


def _seq_of_pairs(t: int, chosen) -> tuple[int, ...]:
    back = [0] * t
    for _, b in chosen:
        back[b] += 1
    return tuple(back[2:])


def T_gamma_enumerated(params: QuasicliqueParams, gamma, *, budget: int = 2_000_000) -> Fraction:
    """|T_gamma| / |T| by listing every T-edge graph on [t] that contains {0, 1}."""
    pairs = _pair_list(params.t)
    total = math.comb(len(pairs), params.T - 1)
    if total > budget:
        raise BudgetExceeded(f"{total} graphs exceed budget {budget}")
    good = sum(in_J_gamma(_seq_of_pairs(params.t, ch), gamma, params, 2, 1)[0]
               for ch in combinations(pairs, params.T - 1))
    return Fraction(good, total)


def sample_T_gamma_fraction(params: QuasicliqueParams, gamma, trials: int, rng, *,
                            exact_limit: int = 100_000) -> FractionEstimate:
    """Fraction of uniform T-edge graphs on [t] containing {0, 1} whose backward
    sequence (natural vertex order) lies in J_gamma; exact when small."""
    if trials < 1:
        raise ValueError("trials must be positive")
    pairs = _pair_list(params.t)
    exact = None
    if math.comb(len(pairs), params.T - 1) <= exact_limit:
        exact = T_gamma_enumerated(params, gamma)
    gen = as_generator(rng)
    idx = np.argsort(gen.random((trials, len(pairs))), axis=1)[:, :params.T - 1]
    later = np.array([b for _, b in pairs])
    back = np.zeros((trials, params.t), dtype=np.int64)
    np.add.at(back, (np.repeat(np.arange(trials), params.T - 1), later[idx].ravel()), 1)
    hits = sum(in_J_gamma(tuple(row[2:]), gamma, params, 2, 1)[0] for row in back.tolist())
    f = hits / trials
    return FractionEstimate(f, math.sqrt(f * (1 - f) / trials), trials, exact)


def permutation_admissible_fraction(g: Graph, Q, e, params: QuasicliqueParams, trials: int, rng,
                                    gamma=None) -> FractionEstimate:
    """Share of orderings of Q with (x_1, x_2) = e that are gamma-admissible (gamma defaults
    to alpha). All (t-2)! orderings are tried when that is at most 8!; otherwise
    ``trials`` uniform ones are sampled."""
    gamma = params.alpha if gamma is None else Fraction(gamma)
    Q = tuple(sorted(Q))
    e = _check_start(g, e)
    if len(Q) != params.t or not set(e) <= set(Q) or not is_quasiclique(g, Q, params)[0]:
        raise ValueError(f"{Q} is not in Q_G({e})")
    rest = [v for v in Q if v not in e]
    e_U = int(g.has_edge(*e))

    def ok(tail) -> bool:
        return in_J_gamma(backward_degrees(g, (*e, *tail), 2), gamma, params, 2, e_U)[0]

    if math.factorial(len(rest)) <= EXACT_PERMUTATION_LIMIT:
        good = sum(ok(p) for p in permutations(rest))
        exact = Fraction(good, math.factorial(len(rest)))
        return FractionEstimate(float(exact), 0.0, math.factorial(len(rest)), exact)
    gen = as_generator(rng)
    hits = sum(ok([rest[i] for i in gen.permutation(len(rest))]) for _ in range(trials))
    f = hits / trials
    return FractionEstimate(f, math.sqrt(f * (1 - f) / trials), trials)


def sampled_permutation_fraction(g: Graph, Q, e, params: QuasicliqueParams, trials: int, rng,
                                 gamma=None) -> FractionEstimate:
    """Monte Carlo version of ``permutation_admissible_fraction`` regardless of size."""
    gamma = params.alpha if gamma is None else Fraction(gamma)
    e = _check_start(g, e)
    rest = [v for v in sorted(Q) if v not in e]
    e_U = int(g.has_edge(*e))
    gen = as_generator(rng)
    hits = 0
    for _ in range(trials):
        tail = [rest[i] for i in gen.permutation(len(rest))]
        hits += in_J_gamma(backward_degrees(g, (*e, *tail), 2), gamma, params, 2, e_U)[0]
    f = hits / trials
    return FractionEstimate(f, math.sqrt(f * (1 - f) / trials), trials)
