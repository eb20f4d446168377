"""k-covers, set representations and an exact solver for tiny graphs."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded
from .graph import Graph, as_mask, members


@dataclass(frozen=True)
class CoverMultiset:
    """Multiset of vertex subsets, stored canonically as sorted (bitmask, multiplicity)."""

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        merged = Counter()
        for mask, mult in self.entries:
            if mult < 0:
                raise ValueError("multiplicities must be non-negative")
            if mult:
                merged[int(mask)] += mult
        object.__setattr__(self, "entries", tuple(sorted(merged.items())))

    @classmethod
    def from_sets(cls, sets: Iterable) -> "CoverMultiset":
        return cls(tuple((as_mask(s), 1) for s in sets))

    def __len__(self):
        return sum(m for _, m in self.entries)

    def __iter__(self):
        """Members with multiplicity, as bitmasks, in canonical order."""
        for mask, mult in self.entries:
            for _ in range(mult):
                yield mask

    def sets(self) -> list[frozenset]:
        return [frozenset(members(m)) for m in self]

    def __add__(self, other: "CoverMultiset") -> "CoverMultiset":
        return CoverMultiset(self.entries + other.entries)

    def multiplicity(self, subset) -> int:
        return dict(self.entries).get(as_mask(subset), 0)

    def without(self, removed: "CoverMultiset") -> "CoverMultiset":
        have = dict(self.entries)
        for mask, mult in removed.entries:
            if have.get(mask, 0) < mult:
                raise ValueError("cannot remove more copies than present")
            have[mask] -= mult
        return CoverMultiset(tuple(have.items()))

    def is_submultiset(self, other: "CoverMultiset") -> bool:
        have = dict(other.entries)
        return all(have.get(m, 0) >= k for m, k in self.entries)

    def max_vertex(self) -> int:
        return max((m.bit_length() - 1 for m, _ in self.entries), default=-1)

    # file format ---------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"m {len(self.entries)}"]
        for mask, mult in self.entries:
            lines.append(" ".join(str(x) for x in [mult, *members(mask)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CoverMultiset":
        rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
        rows = [r for r in rows if r]
        if not rows or rows[0][0] != "m" or len(rows[0]) != 2:
            raise ValueError("expected header 'm <count>'")
        count = int(rows[0][1])
        body = rows[1:]
        if len(body) != count:
            raise ValueError(f"header announces {count} sets, found {len(body)}")
        return cls(tuple((as_mask(int(v) for v in r[1:]), int(r[0])) for r in body))


def pair_mask(W) -> int:
    mask = as_mask(W)
    if mask.bit_count() != 2:
        raise ValueError("W must be a pair of distinct vertices")
    return mask


def coverage(c: CoverMultiset, W) -> int:
    """|C(W)|: members containing the pair W, counted with multiplicity."""
    w = pair_mask(W)
    return sum(mult for mask, mult in c.entries if mask & w == w)


@dataclass
class Certificate:
    valid: bool
    k: int
    violations: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"valid": self.valid, "k": self.k, "violations": self.violations}


def is_k_cover(g: Graph, c: CoverMultiset, k: int, *, all_violations: bool = False) -> Certificate:
    """Every edge covered >= k times and every non-edge <= k-1 times.

    By default stops at the first violating pair (in lexicographic pair order).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if c.max_vertex() >= g.n:
        raise ValueError("cover uses vertices outside V(g)")
    out = []
    for u, v in combinations(range(g.n), 2):
        cnt = coverage(c, (u, v))
        edge = g.has_edge(u, v)
        if (edge and cnt < k) or (not edge and cnt > k - 1):
            out.append({"pair": [u, v], "kind": "edge" if edge else "non-edge", "count": cnt})
            if not all_violations:
                break
    return Certificate(not out, k, out)


# ---------------------------------------------------------------------------
# set representations


@dataclass(frozen=True)
class SetRepresentation:
    """Per-vertex subsets S_v of the ground set {1..m}."""

    m: int
    assignments: tuple[frozenset, ...]

    def __post_init__(self):
        for s in self.assignments:
            if any(not 1 <= i <= self.m for i in s):
                raise ValueError(f"assignment {sorted(s)} leaves ground set 1..{self.m}")

    def canonical(self):
        """Form invariant under relabelling of the ground set."""
        cols = sorted(tuple(v for v, s in enumerate(self.assignments) if i in s)
                      for i in range(1, self.m + 1))
        return len(self.assignments), tuple(cols)

    def to_json(self) -> dict:
        return {"m": self.m, "sets": [sorted(s) for s in self.assignments]}

    @classmethod
    def from_json(cls, data: dict) -> "SetRepresentation":
        return cls(int(data["m"]), tuple(frozenset(int(i) for i in s) for s in data["sets"]))


def cover_to_representation(c: CoverMultiset, n: int | None = None) -> SetRepresentation:
    """S_u = {i : u in C_i}, with C_1..C_m the members in canonical order."""
    if n is None:
        n = c.max_vertex() + 1
    ordered = list(c)
    sets = [set() for _ in range(n)]
    for i, mask in enumerate(ordered, 1):
        for u in members(mask):
            sets[u].add(i)
    return SetRepresentation(len(ordered), tuple(frozenset(s) for s in sets))


def representation_to_cover(r: SetRepresentation, n: int) -> CoverMultiset:
    """C_i = {v : i in S_v} for i = 1..m."""
    if len(r.assignments) != n:
        raise ValueError(f"representation has {len(r.assignments)} vertices, expected {n}")
    masks = [0] * r.m
    for v, s in enumerate(r.assignments):
        for i in s:
            masks[i - 1] |= 1 << v
    return CoverMultiset(tuple((m, 1) for m in masks))


def is_k_representation(g: Graph, r: SetRepresentation, k: int) -> bool:
    """|S_u & S_v| >= k exactly on the edges of g."""
    if len(r.assignments) != g.n:
        raise ValueError("representation size does not match the graph")
    return all((len(r.assignments[u] & r.assignments[v]) >= k) == g.has_edge(u, v)
               for u, v in combinations(range(g.n), 2))


# ---------------------------------------------------------------------------
# exact k-covering number


@dataclass
class PhiResult:
    value: int
    cover: CoverMultiset
    nodes: int


def _candidates(g: Graph, k: int):
    """Vertex subsets worth using in a k-cover, as (mask, edge bits, non-edge bits).

    A subset that could absorb another vertex without adding a non-edge is
    dominated by the enlarged set (more edges covered, same non-edge load), so
    only subsets closed in that sense are kept. Subsets containing a non-edge
    are useless when k = 1.
    """
    n = g.n
    edges = g.edges()
    non_edges = g.non_edges()
    out = []
    for mask in range(1, 1 << n):
        if mask.bit_count() < 2:
            continue
        if any(not mask >> v & 1 and g.adj[v] & mask == mask for v in range(n)):
            continue
        ebits = 0
        for i, (u, v) in enumerate(edges):
            if mask >> u & 1 and mask >> v & 1:
                ebits |= 1 << i
        if not ebits:
            continue
        fbits = 0
        for i, (u, v) in enumerate(non_edges):
            if mask >> u & 1 and mask >> v & 1:
                fbits |= 1 << i
        if fbits and k == 1:
            continue
        out.append((mask, ebits, fbits))
    # larger sets first
    out.sort(key=lambda c: (-c[0].bit_count(), c[0]))
    return edges, non_edges, out


def exact_phi_k(g: Graph, k: int, *, max_nodes: int = 5_000_000) -> PhiResult:
    """Minimum cardinality of a k-cover, by iterative deepening branch and bound.

    Each level branches on the most deficient edge (lowest index on ties) and
    tries every admissible candidate containing it. Non-edges carry a residual
    budget of k-1 coverings. A transposition table keyed on the coverage
    state removes re-orderings of the same multiset. The deepening starts at
    the LP-relaxation bound, and the residual LP prunes nodes near the root.

    Raises BudgetExceeded, carrying the trivial upper-bound cover, once more
    than ``max_nodes`` search nodes have been expanded.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    edges, non_edges, cands = _candidates(g, k)
    E = len(edges)
    if E == 0:
        return PhiResult(0, CoverMultiset(), 0)

    by_edge = [[c for c in cands if c[1] >> i & 1] for i in range(E)]
    max_gain = max(c[1].bit_count() for c in cands)
    trivial = CoverMultiset(tuple((as_mask(e), k) for e in edges))

    nodes = 0
    failed: dict = {}
    chosen: list[int] = []
    lp_depth = 3  # LP bounds are worth their cost only near the root

    def search(deficit: tuple, used: tuple, remaining: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise BudgetExceeded(f"exact_phi_k exceeded {max_nodes} nodes", best=trivial)
        worst = max(deficit)
        if worst == 0:
            return True
        if worst > remaining:
            return False
        total = sum(deficit)
        if -(-total // max_gain) > remaining:
            return False
        key = (deficit, used)
        if failed.get(key, -1) >= remaining:
            return False
        if len(chosen) <= lp_depth and lp(deficit, [k - 1 - u for u in used]) > remaining:
            failed[key] = max(failed.get(key, -1), remaining)
            return False
        e = deficit.index(worst)
        for mask, ebits, fbits in by_edge[e]:
            if fbits and any(used[i] >= k - 1 for i in _bits(fbits)):
                continue
            nd = tuple(d - 1 if d and ebits >> i & 1 else d for i, d in enumerate(deficit))
            nu = used if not fbits else tuple(u + (fbits >> i & 1) for i, u in enumerate(used))
            chosen.append(mask)
            if search(nd, nu, remaining - 1):
                return True
            chosen.pop()
        failed[key] = max(failed.get(key, -1), remaining)
        return False

    start_def = tuple([k] * E)
    start_used = tuple([0] * len(non_edges))
    lp = _LPBound(cands, E, len(non_edges))
    lower = max(k, -(-k * E // max_gain), lp(start_def, [k - 1] * len(non_edges)))
    for m in range(lower, k * E + 1):
        chosen.clear()
        if search(start_def, start_used, m):
            cover = CoverMultiset(tuple((c, 1) for c in chosen))
            return PhiResult(len(chosen), cover, nodes)
    raise AssertionError("k copies of every edge always form a k-cover")


class _LPBound:
    """LP relaxation of the residual covering problem; its ceiling bounds the
    number of further sets needed from a search state."""

    def __init__(self, cands, n_edges: int, n_non_edges: int):
        shape = (-1, len(cands))
        self.a_edge = np.array([[c[1] >> i & 1 for c in cands] for i in range(n_edges)],
                               dtype=float).reshape(shape)
        self.a_non = np.array([[c[2] >> i & 1 for c in cands] for i in range(n_non_edges)],
                              dtype=float).reshape(shape)
        self.n_cands = len(cands)

    def __call__(self, deficit, budget) -> int:
        need = np.array(deficit, dtype=float)
        if not need.any():
            return 0
        A = np.vstack([-self.a_edge, self.a_non])
        b = np.concatenate([-need, np.array(budget, dtype=float)])
        res = linprog(np.ones(self.n_cands), A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if res.status == 2:  # infeasible residual problem
            return math.inf
        if res.status != 0:
            return 0
        return math.ceil(res.fun - 1e-7)


def _bits(x: int):
    i = 0
    while x:
        if x & 1:
            yield i
        x >>= 1
        i += 1


def check_phi_monotone(g: Graph, k: int, *, max_nodes: int = 5_000_000) -> bool:
    """Phi_k <= Phi_1 + k - 1, via the witness (clique cover + k-1 copies of V)."""
    phi1 = exact_phi_k(g, 1, max_nodes=max_nodes)
    phik = exact_phi_k(g, k, max_nodes=max_nodes)
    witness = phi1.cover + CoverMultiset((((1 << g.n) - 1, k - 1),))
    if not is_k_cover(g, witness, k).valid:
        return False
    return phik.value <= len(witness) == phi1.value + k - 1


def certificate_json(cert: Certificate) -> str:
    return json.dumps(cert.to_json(), sort_keys=True)
