import json
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from krep.cover import (CoverMultiset, SetRepresentation, certificate_json, check_phi_monotone,
                        cover_to_representation, coverage, exact_phi_k, is_k_cover,
                        is_k_representation, representation_to_cover)
from krep.errors import BudgetExceeded
from krep.graph import Graph, RandomSource, sample_gnp_half

from oracles import all_graphs, clique_cover_number, min_k_cover_brute

K3 = Graph.complete(3)
P3 = Graph.path(3)  # edges 01, 12
V3 = 0b111


def test_coverage_examples():
    assert coverage(CoverMultiset(((V3, 2),)), (0, 1)) == 2
    assert coverage(CoverMultiset.from_sets([{0, 1}, {1, 2}]), (0, 2)) == 0
    assert coverage(CoverMultiset.from_sets([{0, 1, 2}, {0, 1}]), (0, 1)) == 2
    with pytest.raises(ValueError):
        coverage(CoverMultiset(), (0, 0))
    with pytest.raises(ValueError):
        coverage(CoverMultiset(), (0, 1, 2))


def test_is_k_cover_examples():
    assert is_k_cover(K3, CoverMultiset(((V3, 1),)), 1).valid
    assert is_k_cover(K3, CoverMultiset(((V3, 2),)), 2).valid
    cert = is_k_cover(P3, CoverMultiset(((V3, 1),)), 1)
    assert not cert.valid
    assert cert.violations == [{"pair": [0, 2], "kind": "non-edge", "count": 1}]
    assert json.loads(certificate_json(cert))["valid"] is False


def test_multiset_is_canonical():
    a = CoverMultiset(((3, 1), (5, 2), (3, 1)))
    b = CoverMultiset(((5, 2), (3, 2)))
    assert a == b and hash(a) == hash(b) and len(a) == 4
    assert CoverMultiset.from_text(a.to_text()) == a
    with pytest.raises(ValueError):
        CoverMultiset.from_text("m 2\n1 0 1\n")


def test_representation_transcription():
    r = cover_to_representation(CoverMultiset.from_sets([{0, 1}, {1, 2}]))
    assert r.m == 2
    assert r.assignments == (frozenset({1}), frozenset({1, 2}), frozenset({2}))


multisets = st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(1, (1 << n) - 1), st.integers(1, 2)), max_size=6)))


@given(multisets)
def test_roundtrip_identity(data):
    n, entries = data
    c = CoverMultiset(tuple(entries))
    r = cover_to_representation(c, n)
    assert representation_to_cover(r, n) == c
    assert SetRepresentation.from_json(r.to_json()) == r
    for u, v in combinations(range(n), 2):
        assert len(r.assignments[u] & r.assignments[v]) == coverage(c, (u, v))


@given(st.integers(2, 7), st.integers(0, 2**32), st.integers(1, 3))
def test_k_cover_iff_k_representation(n, seed, k):
    g = sample_gnp_half(n, RandomSource(seed))
    c = exact_phi_k(g, k).cover
    r = cover_to_representation(c, n)
    assert is_k_cover(g, c, k).valid
    assert is_k_representation(g, r, k)


def test_spot_values():
    assert exact_phi_k(Graph.complete(4), 1).value == 1
    assert exact_phi_k(Graph.cycle(4), 1).value == 4
    assert exact_phi_k(K3, 2).value == 2
    assert exact_phi_k(Graph.empty(5), 3).value == 0


def test_phi1_equals_clique_cover_all_small_graphs():
    for n in range(1, 6):
        for edges in all_graphs(n):
            g = Graph.from_edges(n, edges)
            res = exact_phi_k(g, 1)
            assert res.value == clique_cover_number(n, edges), (n, edges)
            assert is_k_cover(g, res.cover, 1).valid
            assert res.value <= n * n // 4


def test_phi2_matches_multiset_brute_force():
    for edges in all_graphs(4):
        g = Graph.from_edges(4, edges)
        res = exact_phi_k(g, 2)
        assert is_k_cover(g, res.cover, 2).valid
        assert min_k_cover_brute(4, edges, 2, res.value) == res.value, edges


def test_monotone_examples():
    assert check_phi_monotone(K3, 2)
    assert check_phi_monotone(P3, 2)
    witness = exact_phi_k(P3, 1).cover + CoverMultiset(((V3, 1),))
    assert is_k_cover(P3, witness, 2).valid
    for k in (1, 2, 3):
        assert check_phi_monotone(Graph.cycle(5), k)


def test_budget_exceeded_carries_upper_bound():
    g = sample_gnp_half(8, RandomSource(4))
    with pytest.raises(BudgetExceeded) as info:
        exact_phi_k(g, 3, max_nodes=5)
    assert is_k_cover(g, info.value.best, 3).valid
