import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from krep.errors import BudgetExceeded
from krep.graph import Graph, RandomSource, sample_edge_vectors, sample_gnp_half
from krep.quasiclique import (QuasicliqueParams, admissible_alphas, check_alpha_t_good,
                              enumerate_Q, expected_count, expected_counts, is_quasiclique,
                              relaxed_count_family, relaxed_counts_batch)

F = Fraction


def test_params_invariants():
    p = QuasicliqueParams(100, F(1, 2), 4)
    assert p.T == 6 and p.pairs == 6
    with pytest.raises(ValueError):
        QuasicliqueParams(100, F(1, 5), 4)  # 0.7 * 6 is not an integer
    with pytest.raises(ValueError):
        QuasicliqueParams(100, F(3, 5), 4)
    with pytest.raises(ValueError):
        QuasicliqueParams(3, F(1, 2), 4)
    assert all(QuasicliqueParams(50, a, 7).T for a in admissible_alphas(7))


def test_quasiclique_examples():
    assert is_quasiclique(Graph.complete(4), range(4), QuasicliqueParams(10, F(1, 2), 4))[0]
    ok, why = is_quasiclique(Graph.cycle(4), range(4), QuasicliqueParams(10, F(1, 6), 4))
    assert not ok and "degree 2" in why
    k4_minus = Graph.from_edges(4, [e for e in combinations(range(4), 2) if e != (0, 1)])
    ok, why = is_quasiclique(k4_minus, range(4), QuasicliqueParams(10, F(1, 3), 4))
    assert not ok and "degree 2" in why
    with pytest.raises(ValueError):
        is_quasiclique(Graph.complete(5), range(5), QuasicliqueParams(10, F(1, 2), 4))


def test_degree_window_exact():
    lo, hi = QuasicliqueParams(10, F(1, 6), 4).degree_window()
    assert lo == F(13, 6) and hi == F(19, 6)


def test_enumerate_examples():
    p = QuasicliqueParams(5, F(1, 2), 4)
    assert enumerate_Q(Graph.complete(5), (), p) == list(combinations(range(5), 4))
    assert enumerate_Q(Graph.cycle(5), (), p) == []
    g = sample_gnp_half(9, RandomSource(3))
    f = g.non_edges()[0]
    assert enumerate_Q(g, f, QuasicliqueParams(9, F(1, 2), 4)) == []


def test_relaxed_examples():
    p = QuasicliqueParams(8, F(1, 2), 4)
    g = sample_gnp_half(8, RandomSource(11))
    assert relaxed_count_family(g, (), p) == enumerate_Q(g, (), p)
    p6 = QuasicliqueParams(4, F(1, 6), 4)
    assert relaxed_count_family(Graph.cycle(4), (), p6) == [(0, 1, 2, 3)]
    assert enumerate_Q(Graph.cycle(4), (), p6) == []
    assert relaxed_count_family(Graph.empty(6), (), QuasicliqueParams(6, F(1, 6), 4)) == []


def brute_Q(g, U, p, degree_check=True):
    out = []
    for S in combinations(range(g.n), p.t):
        if not set(U) <= set(S):
            continue
        if degree_check:
            if is_quasiclique(g, S, p)[0]:
                out.append(S)
        elif g.induced_edges(S) == p.T:
            out.append(S)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_enumeration_matches_brute_force(seed):
    g = sample_gnp_half(10, RandomSource(seed))
    for t in (4, 5, 6):
        for alpha in admissible_alphas(t)[:4]:
            p = QuasicliqueParams(10, alpha, t)
            for U in [(), g.edges()[0], g.non_edges()[0]]:
                q = enumerate_Q(g, U, p)
                r = relaxed_count_family(g, U, p)
                assert q == brute_Q(g, U, p)
                assert r == brute_Q(g, U, p, degree_check=False)
                assert set(q) <= set(r)


def test_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_Q(Graph.complete(40), (), QuasicliqueParams(40, F(1, 2), 10), budget=1000)


def test_expected_count_values():
    p = QuasicliqueParams(10, F(1, 2), 4)
    assert expected_counts(p).N0 == F(210, 64)
    assert expected_counts(p).N2 == 0
    assert expected_counts(QuasicliqueParams(100, F(1, 2), 4)).N1 == F(4753, 32)
    assert float(expected_counts(QuasicliqueParams(100, F(1, 2), 4)).N1) == 148.53125


@given(st.integers(4, 40), st.integers(2, 9), st.data())
def test_edge_non_edge_ratio(n, t, data):
    if t > n:
        return
    alpha = data.draw(st.sampled_from(admissible_alphas(t)))
    p = QuasicliqueParams(n, alpha, t)
    c = expected_counts(p)
    if c.N2:
        assert c.N1 / c.N2 == F(p.T, p.pairs - p.T)
    # the general form with U = {} and U = a pair reproduces the named counts
    assert expected_count(p, 0, 0) == c.N0
    # each pair is an edge with probability 1/2: double counting over pairs
    assert c.N0 * math.comb(t, 2) == math.comb(n, 2) * (c.N1 + c.N2) / 2


def test_expected_count_is_exact_mean_small():
    # exhaustive over all 2^10 graphs on 5 vertices: average relaxed count equals N0
    p = QuasicliqueParams(5, F(1, 6), 4)
    total = 0
    pairs = list(combinations(range(5), 2))
    for bits in range(1 << 10):
        g = Graph.from_edges(5, [e for i, e in enumerate(pairs) if bits >> i & 1])
        total += len(relaxed_count_family(g, (), p))
    assert F(total, 1 << 10) == expected_counts(p).N0


def test_goodness_examples():
    n = 9
    p = QuasicliqueParams(n, F(1, 2), 4)
    rep = check_alpha_t_good(Graph.complete(n), p, 0.01)
    assert rep.total == math.comb(n, 4) and not rep.good
    assert abs(QuasicliqueParams(100, F(1, 2), 4).goodness_tolerance() - 0.9999983) < 1e-7
    g = sample_gnp_half(n, RandomSource(1))
    assert check_alpha_t_good(g, p, 1e9).good
    j = check_alpha_t_good(g, p, 1.0).to_json()
    assert set(j) >= {"params", "N0", "N1", "N2", "observed", "good"}


def test_batch_matches_per_graph():
    ev = sample_edge_vectors(9, 30, RandomSource(5))
    totals, per_pair = relaxed_counts_batch(ev, 9, 4, 4)
    p = QuasicliqueParams(9, F(1, 6), 4)
    pairs = list(combinations(range(9), 2))
    for i in range(30):
        g = sample_gnp_half(9, RandomSource(5, i))
        fam = relaxed_count_family(g, (), p)
        assert totals[i] == len(fam)
        for pi, (u, v) in enumerate(pairs[:6]):
            assert per_pair[i, pi] == sum(1 for S in fam if u in S and v in S)


def test_monte_carlo_mean_t4_T6():
    ev = sample_edge_vectors(20, 10_000, RandomSource(77))
    totals, _ = relaxed_counts_batch(ev, 20, 4, 6)
    se = totals.std(ddof=1) / math.sqrt(len(totals))
    assert abs(totals.mean() - 75.703125) <= 3 * se
