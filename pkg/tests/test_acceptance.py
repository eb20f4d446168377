"""The eight acceptance criteria, one test each, at their stated tolerances."""
import math
import time
from fractions import Fraction as F
from itertools import combinations

import numpy as np

from krep.concentration import (binomial_entropy_bound_holds, chernoff_bound, compare_to_bound,
                                empirical_tail, extension_mean_bound_check, extension_mean_grid_check,
                                quadratic_entropy_bound_holds, upper_tail, azuma_bound)
from krep.construct import repair, sample_candidate_cover, selection_probability
from krep.cover import (CoverMultiset, cover_to_representation, exact_phi_k, is_k_cover,
                        is_k_representation, representation_to_cover)
from krep.degseq import enumerate_J_gamma
from krep.fpc import FractionalPseudocover, aggregate, check_fpc, eliminate_large, unit_p1
from krep.graph import Graph, RandomSource, sample_edge_vectors, sample_gnp_half
from krep.quasiclique import QuasicliqueParams, enumerate_Q, relaxed_counts_batch
from krep.sampler import (count_B, ds_matrix, enumerate_tuples, exact_process_distribution,
                          run_process_batch, sis_estimate_counts)
from oracles import clique_cover_number, nonisomorphic_graphs


def pair_counts_oracle(n, sets):
    """Coverage of every pair straight from Python sets."""
    return {(u, v): sum(1 for s in sets if u in s and v in s) for u, v in combinations(range(n), 2)}


# ---------------------------------------------------------------------------
# 1


def test_criterion_1_bijection(record):
    failures = []
    gen = RandomSource(1).generator()
    for i in range(10_000):
        n = int(gen.integers(1, 9))
        k = int(gen.integers(1, 4))
        m = int(gen.integers(0, 10))
        sets = [frozenset(np.flatnonzero(gen.random(n) < gen.random()).tolist()) for _ in range(m)]
        c = CoverMultiset.from_sets(sets)
        counts = pair_counts_oracle(n, sets)
        if i % 2:
            g = Graph.from_edges(n, [p for p, cnt in counts.items() if cnt >= k])
        else:
            g = sample_gnp_half(n, gen)
        rep = cover_to_representation(c, n)
        ok = representation_to_cover(rep, n) == c
        ok &= cover_to_representation(representation_to_cover(rep, n), n).canonical() == rep.canonical()
        ok &= all(len(rep.assignments[u] & rep.assignments[v]) == cnt for (u, v), cnt in counts.items())
        expected = all((cnt >= k) == g.has_edge(u, v) for (u, v), cnt in counts.items())
        ok &= is_k_cover(g, c, k).valid == is_k_representation(g, rep, k) == expected
        if i % 2:
            ok &= expected
        if not ok:
            failures.append((i, n, k))
    assert record(1, "cover/representation bijection on 10^4 instances, n <= 8", not failures,
                  f"{len(failures)} failures")


# ---------------------------------------------------------------------------
# 2


def test_criterion_2_exact_solver(record):
    start = time.perf_counter()
    graphs = nonisomorphic_graphs(5)
    bad = []
    for edges in graphs:
        g = Graph.from_edges(5, edges)
        phi1 = exact_phi_k(g, 1)
        if phi1.value != clique_cover_number(5, edges) or not is_k_cover(g, phi1.cover, 1).valid:
            bad.append(("phi1", edges))
        for k in (2, 3):
            res = exact_phi_k(g, k)
            if not is_k_cover(g, res.cover, k).valid or len(res.cover) != res.value:
                bad.append((f"certificate k={k}", edges))
            if edges and res.value > phi1.value + k - 1:
                bad.append((f"phi{k} > phi1 + k - 1", edges))
    spots = (exact_phi_k(Graph.cycle(4), 1).value, exact_phi_k(Graph.complete(4), 1).value,
             exact_phi_k(Graph.complete(3), 2).value)
    elapsed = time.perf_counter() - start
    ok = len(graphs) == 34 and not bad and spots == (4, 1, 2) and elapsed < 60
    assert record(2, "exact solver vs clique-cover oracle on all 34 graphs with n = 5", ok,
                  f"{len(graphs)} graphs, {len(bad)} mismatches, spots {spots}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3


def test_criterion_3_counting(record):
    ev = sample_edge_vectors(20, 10_000, RandomSource(3))
    totals, _ = relaxed_counts_batch(ev, 20, 4, 6)
    n0 = math.comb(20, 4) / 64
    mean = totals.mean()
    se = totals.std(ddof=1) / math.sqrt(len(totals))
    ok_mean = n0 == 75.703125 and abs(mean - n0) <= 3 * se

    ev = sample_edge_vectors(20, 10_000, RandomSource(3, 10_000))
    _, per_pair = relaxed_counts_batch(ev, 20, 4, 4)
    edge_mean = (per_pair * ev).sum() / ev.sum()
    non_mean = (per_pair * (1 - ev)).sum() / (1 - ev).sum()
    ratio = edge_mean / non_mean
    ok_ratio = abs(ratio - 2) <= 0.2
    assert record(3, "N0 mean within 3 SE and edge/non-edge ratio within 10% of 2", ok_mean and ok_ratio,
                  f"mean {mean:.4f} vs {n0} (SE {se:.4f}); ratio {ratio:.4f}")


# ---------------------------------------------------------------------------
# 4

SAMPLER_PARAMS = QuasicliqueParams(10, F(3, 10), 5)
SAMPLER_GAMMA = F(3, 10)


def sampler_instances(count=20):
    """The first ``count`` graphs G(10, 1/2) (by stream index) whose admissible-tuple count is positive."""
    out, seed = [], 0
    while len(out) < count:
        g = sample_gnp_half(10, RandomSource(400, seed))
        e = g.edges()[0]
        exact = count_B(g, e, SAMPLER_GAMMA, SAMPLER_PARAMS)
        if exact["B"]:
            out.append((seed, g, e, exact))
        seed += 1
    return out


def _encode(rows: np.ndarray) -> np.ndarray:
    return rows @ (10 ** np.arange(rows.shape[1] - 1, -1, -1))


def test_criterion_4_sampler(record):
    p, gamma = SAMPLER_PARAMS, SAMPLER_GAMMA
    problems = []
    worst_z = 0.0
    instances = sampler_instances()
    for seed, g, e, exact in instances:
        J = enumerate_J_gamma(gamma, p, 2, 1)
        # (a) exact law sums to one; support equals the brute-force tuple list
        tuples = list(enumerate_tuples(g, e, p.t))
        dists = {}
        for j in J:
            d = exact_process_distribution(g, e, j)
            dists[j] = d
            if d.total() != 1 or set(d.outcomes) != {tup for tup, seq in tuples if seq == j}:
                problems.append((seed, "exact", j))
        # (b) 10^6 runs of the sequence with the largest support
        j = max(J, key=lambda s: (len(dists[s].outcomes), s))
        d = dists[j]
        runs = 1_000_000
        batch = run_process_batch(g, e, j, runs, RandomSource(401, seed))
        keys, counts = np.unique(_encode(batch.tuples[~batch.failed]), return_counts=True)
        observed = dict(zip(keys.tolist(), counts.tolist()))
        expected = {int(_encode(np.array([tup]))[0]): prob for tup, prob in d.outcomes.items()}
        if set(observed) - set(expected):
            problems.append((seed, "impossible tuple", j))
        for key, prob in list(expected.items()) + [(-1, d.failure)]:
            cnt = int(batch.failed.sum()) if key == -1 else observed.get(key, 0)
            pf = float(prob)
            sd = math.sqrt(pf * (1 - pf) / runs)
            dev = abs(cnt / runs - pf)
            if sd == 0:
                if dev:
                    problems.append((seed, "degenerate frequency", j))
                continue
            worst_z = max(worst_z, dev / sd)
            if dev > 5 * sd:
                problems.append((seed, "frequency", j, key))
        # (c) SIS against the exhaustive count
        res = sis_estimate_counts(g, e, gamma, p, 100_000, RandomSource(402, seed))
        if abs(res.estimate - exact["B"]) > 3 * res.std_error:
            problems.append((seed, "SIS", res.estimate, exact["B"], res.std_error))
    assert record(4, "sampler exactness on 20 ten-vertex instances", not problems,
                  f"{len(instances)} instances, {len(problems)} problems, worst frequency z {worst_z:.2f}")


# ---------------------------------------------------------------------------
# 5


def test_criterion_5_repair(record):
    failures = []
    gen = RandomSource(5).generator()
    for i in range(1000):
        k = int(gen.integers(1, 5))
        if i % 4 == 0:
            # quasiclique sampler on a graph large enough that q < 1
            n = int(gen.integers(30, 41))
            g = sample_gnp_half(n, gen)
            p = QuasicliqueParams(n, F(1, 2), 4)
            selection_probability(p, k)
            c = sample_candidate_cover(g, p, k, gen, family=enumerate_Q(g, (), p))
        else:
            n = int(gen.integers(2, 13))
            g = sample_gnp_half(n, gen)
            m = int(gen.integers(0, 3 * n))
            c = CoverMultiset.from_sets(np.flatnonzero(gen.random(n) < gen.random()).tolist()
                                        for _ in range(m))
        tr = repair(g, c, k)
        cov = pair_counts_oracle(n, tr.C_final.sets())
        certified = all((cnt >= k) if g.has_edge(u, v) else (cnt <= k - 1) for (u, v), cnt in cov.items())
        ok = certified and tr.valid
        ok &= len(tr.C_final) <= len(c) + k * tr.E2
        ok &= tr.E2 <= tr.X + tr.E1
        if not ok:
            failures.append(i)
    assert record(5, "repair certifies 10^3 fuzzed instances with exact trace inequalities", not failures,
                  f"{len(failures)} failures")


# ---------------------------------------------------------------------------
# 6


def random_valid_fpc(gen) -> FractionalPseudocover:
    k = int(gen.integers(2, 7))
    x0 = 8 * k - 2
    n = int(gen.integers(3, 2000))

    def frac(lo, hi):
        den = int(gen.integers(1, 50))
        return F(int(gen.integers(math.ceil(lo * den), math.floor(hi * den) + 1)), den)

    large = [(x0 + frac(F(1, 49), 2 * x0), frac(F(1, 49), 3)) for _ in range(int(gen.integers(1, 5)))]
    small = [(frac(F(1, 49), x0 - F(1, 49)), frac(F(1, 49), 3)) for _ in range(int(gen.integers(1, 8)))]
    small = [(x, w) for x, w in small if 0 < x < x0]
    if not small:
        small = [(F(x0, 2), F(1))]
    need = sum(-w * unit_p1(x, x0) for x, w in large)
    supply = sum(w * unit_p1(x, x0) for x, w in small)
    scale = max(F(1), need / supply * frac(1, 2))
    items = large + [(x, w * scale) for x, w in small]
    a = FractionalPseudocover(n, k, tuple(items))
    chk = check_fpc(a)
    while not chk.p2:  # grow all weights until (P2) holds; (P1) keeps its sign
        items = [(x, 2 * w) for x, w in items]
        a = FractionalPseudocover(n, k, tuple(items))
        chk = check_fpc(a)
    assert chk.p1 and chk.p2 and a.large()
    return a


def test_criterion_6_fpc_elimination(record):
    failures = []
    gen = RandomSource(6).generator()
    for i in range(1000):
        a = random_valid_fpc(gen)
        out, trace = eliminate_large(a)
        after = check_fpc(out)
        ok = not out.large() and out.weight == a.weight
        ok &= after.p1 is True and after.p1_sum[0] >= 0 and after.p2 is True
        ok &= all(step["checks"]["cubes"] and step["checks"]["fourths"] for step in trace.steps)
        ok &= len(trace.steps) == len(a.large())
        if not ok:
            failures.append(i)
    worked, _ = eliminate_large(FractionalPseudocover(100, 2, ((28, 1), (7, 200))))
    example = aggregate(worked) == {F(14): F(129), F(7): F(72)}
    assert record(6, "large-item elimination on 10^3 random valid FPCs and the worked example",
                  not failures and example, f"{len(failures)} failures, worked example {example}")


# ---------------------------------------------------------------------------
# 7


def chernoff_grid():
    grid = []
    for N, prob in [(190, 0.5), (100, 0.3), (500, 0.1), (50, 0.8), (1000, 0.05)]:
        for eps in (0.05, 0.1, 0.2, 0.35):
            grid.append(("binomial", (N, prob), eps))
    for good, bad, draws in [(100, 100, 50), (30, 70, 40), (500, 500, 100), (45, 144, 9), (10, 10, 10)]:
        for eps in (0.05, 0.1, 0.2, 0.35):
            grid.append(("hypergeometric", (good, bad, draws), eps))
    # upper tail points with lambda > 7 mean
    for N, prob, lam in [(1000, 0.001, 8), (200, 0.005, 8), (100, 0.02, 15), (50, 0.01, 4), (400, 0.0025, 9)]:
        grid.append(("binomial", (N, prob), ("lam", lam)))
    for good, bad, draws, lam in [(5, 495, 100, 8), (2, 198, 50, 4), (10, 990, 100, 9),
                                  (3, 297, 30, 3), (20, 1980, 50, 5)]:
        grid.append(("hypergeometric", (good, bad, draws), ("lam", lam)))
    return grid


def test_criterion_7_concentration(record):
    samples = 100_000
    gen = RandomSource(7).generator()
    grid = chernoff_grid()
    misses = []
    for kind, args, what in grid:
        if kind == "binomial":
            x = gen.binomial(*args, size=samples)
            mean = args[0] * args[1]
        else:
            x = gen.hypergeometric(*args, size=samples)
            mean = args[2] * args[0] / (args[0] + args[1])
        if isinstance(what, tuple):
            freq, bound = upper_tail(x, what[1]), chernoff_bound(kind, mean, lam=what[1])
        else:
            freq, bound = empirical_tail(x, mean, what * mean), chernoff_bound(kind, mean, eps=what)
        if not compare_to_bound(freq, bound, 3, samples):
            misses.append((kind, args, what, freq, bound))

    # d_s around its sample mean on sampled admissible tuples, against 2 exp(-gamma^2 t / 32)
    azuma_misses = []
    for t, alpha, gamma in [(5, F(3, 10), F(3, 10)), (6, F(3, 10), F(3, 10)), (8, F(1, 4), F(1, 4))]:
        p = QuasicliqueParams(60, alpha, t)
        J = enumerate_J_gamma(gamma, p, 2, 1)
        g = sample_gnp_half(60, RandomSource(7, t))
        e = g.edges()[0]
        ds = np.concatenate([ds_matrix(g, run_process_batch(g, e, j, 20_000, RandomSource(7, 100 + t).substream(i)))
                             for i, j in enumerate(J[:20])])
        bound = azuma_bound([2] * t, float(gamma) * t / 2)
        assert math.isclose(bound, 2 * math.exp(-float(gamma) ** 2 * t / 32))
        for s in range(t):
            col = ds[:, s]
            freq = empirical_tail(col, col.mean(), float(gamma) * t / 2)
            if not compare_to_bound(freq, bound, 3, len(col)):
                azuma_misses.append((t, s, freq, bound))
    ok = len(grid) == 50 and not misses and not azuma_misses
    assert record(7, "Chernoff envelopes on a 50-point grid and the d_s Azuma envelope", ok,
                  f"{len(misses)} Chernoff misses, {len(azuma_misses)} Azuma misses")


# ---------------------------------------------------------------------------
# 8


def test_criterion_8_inequalities(record):
    fact_a = [(s, j) for s in range(1, 401) for j in range(0, s + 1) if not binomial_entropy_bound_holds(s, j)]
    fact_b = [i for i in range(0, 1001) if not quadratic_entropy_bound_holds(F(i, 2000))]
    region = extension_mean_bound_check(400)
    grid = extension_mean_grid_check([4.0 * 1.25 ** i for i in range(60)], 400)
    ok = not fact_a and not fact_b and region.holds and grid.holds
    assert record(8, "entropy facts and the extension-mean binomial inequality on their full grids", ok,
                  f"entropy failures {len(fact_a)}+{len(fact_b)}; region pairs {region.pairs} "
                  f"failures {len(region.failures)}; grid pairs {grid.pairs} failures {len(grid.failures)}")
