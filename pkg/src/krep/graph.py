"""Graphs on labelled vertices, G(n, 1/2) sampling and density checks.

Vertices are ``0..n-1``; vertex subsets are passed around either as
iterables of ints or as int bitmasks (bit ``v`` set iff ``v`` is in the set).
Adjacency is stored as one bitmask per vertex so that ``|N(v) & S|`` is a
single popcount.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

import numpy as np

from .constants import check_log_base, log


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def as_mask(subset) -> int:
    return subset if isinstance(subset, int) else mask_of(subset)


# ---------------------------------------------------------------------------
# random streams


@dataclass(frozen=True)
class RandomSource:
    """A reproducible random stream keyed by ``(master_seed, stream_index)``.

    Streams with different indices are statistically independent, so trials
    can be handed out in any order without changing any individual result.
    """

    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, *self.path))
        return np.random.Generator(np.random.PCG64(seq))

    def stream(self, index: int) -> "RandomSource":
        """Independent sibling stream under the same master seed."""
        return RandomSource(self.master_seed, index)

    def substream(self, index: int) -> "RandomSource":
        """Independent child stream nested under this one."""
        return RandomSource(self.master_seed, self.stream_index, (*self.path, index))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomSource or numpy Generator, got {type(rng).__name__}")


# ---------------------------------------------------------------------------
# graph


class Graph:
    """Immutable simple undirected graph with bitset rows."""

    __slots__ = ("n", "adj", "_matrix")

    def __init__(self, n: int, adj: Iterable[int]):
        adj = tuple(int(a) for a in adj)
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        if len(adj) != n:
            raise ValueError(f"expected {n} adjacency rows, got {len(adj)}")
        full = (1 << n) - 1
        for u, row in enumerate(adj):
            if row & ~full:
                raise ValueError(f"row {u} references vertices outside 0..{n - 1}")
            if row >> u & 1:
                raise ValueError(f"self-loop at vertex {u}")
            for v in members(row):
                if not adj[v] >> u & 1:
                    raise ValueError(f"adjacency is not symmetric at ({u}, {v})")
        self.n = n
        self.adj = adj
        self._matrix = None

    # constructors -----------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        rows = [0] * n
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, rows)

    @classmethod
    def from_matrix(cls, matrix) -> "Graph":
        a = np.asarray(matrix)
        n = a.shape[0]
        return cls.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n) if a[u, v]))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, [0] * n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, [full ^ (1 << v) for v in range(n)])

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, ((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    # queries ----------------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def neighbors(self, v: int) -> int:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in members(self.adj[u] >> (u + 1) << (u + 1))]

    def non_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v in combinations(range(self.n), 2) if not self.adj[u] >> v & 1]

    def num_edges(self) -> int:
        return sum(a.bit_count() for a in self.adj) // 2

    def induced_edges(self, subset) -> int:
        """e(X): number of edges with both ends in ``subset``."""
        mask = as_mask(subset)
        return sum((self.adj[v] & mask).bit_count() for v in members(mask)) // 2

    def induced_degree(self, v: int, subset) -> int:
        return (self.adj[v] & as_mask(subset)).bit_count()

    def adjacency_matrix(self) -> np.ndarray:
        if self._matrix is None:
            a = np.zeros((self.n, self.n), dtype=np.uint8)
            for u, v in self.edges():
                a[u, v] = a[v, u] = 1
            a.setflags(write=False)
            self._matrix = a
        return self._matrix

    def edge_vector(self) -> np.ndarray:
        """Edge indicators over pairs (u, v), u < v, in lexicographic order."""
        iu = np.triu_indices(self.n, 1)
        return self.adjacency_matrix()[iu].copy()

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.adj == other.adj

    def __hash__(self):
        return hash((self.n, self.adj))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges()})"

    # text format --------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        n = None
        edges = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n is None:
                if len(parts) != 2 or parts[0] != "n":
                    raise ValueError(f"line {lineno}: expected header 'n <count>'")
                n = int(parts[1])
                continue
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'u v'")
            edges.append((int(parts[0]), int(parts[1])))
        if n is None:
            raise ValueError("missing header 'n <count>'")
        return cls.from_edges(n, edges)


def read_graph(path) -> Graph:
    with open(path) as fh:
        return Graph.from_text(fh.read())


def write_graph(g: Graph, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(g.to_text())


def sample_gnp_half(n: int, rng) -> Graph:
    """Draw G(n, 1/2): every pair is an edge independently with probability 1/2."""
    if n < 1:
        raise ValueError("n must be positive")
    bits = as_generator(rng).integers(0, 2, size=n * (n - 1) // 2, dtype=np.uint8)
    return graph_from_edge_vector(n, bits)


def graph_from_edge_vector(n: int, bits) -> Graph:
    rows = [0] * n
    k = 0
    for u in range(n):
        for v in range(u + 1, n):
            if bits[k]:
                rows[u] |= 1 << v
                rows[v] |= 1 << u
            k += 1
    return Graph(n, rows)


def sample_edge_vectors(n: int, count: int, source: RandomSource) -> np.ndarray:
    """Edge vectors of ``count`` G(n, 1/2) samples.

    Row i equals ``sample_gnp_half(n, source.stream(source.stream_index + i)).edge_vector()``.
    """
    out = np.empty((count, n * (n - 1) // 2), dtype=np.uint8)
    for i in range(count):
        out[i] = source.stream(source.stream_index + i).generator().integers(
            0, 2, size=out.shape[1], dtype=np.uint8)
    return out


# ---------------------------------------------------------------------------
# property P1: every vertex subset has density 1/2 +- 2 sqrt(log n / |X|)


def p1_window(n: int, x: int, relaxed: bool = False) -> tuple[float, float]:
    """Allowed range of e(X) for |X| = x.

    The strict form is (1/2 +- 2 sqrt(log n / x)) * C(x, 2); the relaxed form
    widens to (1/2 +- 3 sqrt(log n / x)) * x^2 / 2.
    """
    if relaxed:
        r = 3.0 * math.sqrt(log(n) / x)
        base = x * x / 2.0
    else:
        r = 2.0 * math.sqrt(log(n) / x)
        base = x * (x - 1) / 2.0
    return (0.5 - r) * base, (0.5 + r) * base


@dataclass
class P1Violation:
    subset: tuple[int, ...]
    edges: int
    lower: float
    upper: float


@dataclass
class P1Report:
    n: int
    mode: str  # "exhaustive" or "sampled"
    relaxed: bool
    examined: int
    violation_count: int
    violations: list[P1Violation]

    @property
    def holds(self) -> bool:
        return self.violation_count == 0


EXHAUSTIVE_P1_LIMIT = 20


def _subset_edge_counts(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """e(X) and |X| for every X in 2^[n], indexed by bitmask."""
    n = g.n
    size = np.zeros(1 << n, dtype=np.int32)
    edges = np.zeros(1 << n, dtype=np.int32)
    for v in range(n):
        lo = 1 << v
        prev = np.arange(lo, dtype=np.int64)
        size[lo:2 * lo] = size[:lo] + 1
        low_nbrs = g.adj[v] & (lo - 1)
        edges[lo:2 * lo] = edges[:lo] + size[prev & low_nbrs]
    return edges, size


def check_property_P1(g: Graph, log_base: str = "natural", *, relaxed: bool = False,
                      per_size: int = 100_000, rng=None, max_report: int = 1000) -> P1Report:
    """Check e(X) against its density window for vertex subsets X, |X| >= 2.

    Every subset is examined when n <= 20. Above that, each size class with
    more than ``per_size`` members is probed with ``per_size`` uniform random
    subsets (prefixes of random permutations) and smaller classes are
    enumerated.
    """
    check_log_base(log_base)
    n = g.n
    if n < 2:
        raise ValueError("property P1 needs n >= 2")
    lo = np.full(n + 1, -np.inf)
    hi = np.full(n + 1, np.inf)
    for x in range(2, n + 1):
        lo[x], hi[x] = p1_window(n, x, relaxed)

    violations: list[P1Violation] = []
    count = 0
    if n <= EXHAUSTIVE_P1_LIMIT:
        e, s = _subset_edge_counts(g)
        bad = np.nonzero((s >= 2) & ((e < lo[s]) | (e > hi[s])))[0]
        count = len(bad)
        for m in bad[:max_report]:
            m = int(m)
            violations.append(P1Violation(tuple(members(m)), int(e[m]), lo[s[m]], hi[s[m]]))
        examined = int(np.count_nonzero(s >= 2))
        return P1Report(n, "exhaustive", relaxed, examined, count, violations)

    if rng is None:
        raise ValueError("sampled P1 check (n > 20) needs an rng")
    gen = as_generator(rng)
    a = g.adjacency_matrix().astype(np.int32)
    examined = 0
    small = [x for x in range(2, n + 1) if math.comb(n, x) <= per_size]
    for x in small:
        for combo in combinations(range(n), x):
            examined += 1
            ex = g.induced_edges(combo)
            if ex < lo[x] or ex > hi[x]:
                count += 1
                if len(violations) < max_report:
                    violations.append(P1Violation(combo, ex, lo[x], hi[x]))
    big = set(range(2, n + 1)) - set(small)
    if big:
        perms = np.argsort(gen.random((per_size, n)), axis=1)
        inside = np.zeros((per_size, n), dtype=np.int32)
        ecount = np.zeros(per_size, dtype=np.int64)
        rows = np.arange(per_size)
        for x in range(1, n + 1):
            v = perms[:, x - 1]
            ecount += (a[v] * inside).sum(axis=1)
            inside[rows, v] = 1
            if x in big:
                examined += per_size
                bad = np.nonzero((ecount < lo[x]) | (ecount > hi[x]))[0]
                count += len(bad)
                for r in bad[: max(0, max_report - len(violations))]:
                    violations.append(P1Violation(tuple(sorted(int(u) for u in perms[r, :x])),
                                                  int(ecount[r]), lo[x], hi[x]))
    return P1Report(n, "sampled", relaxed, examined, count, violations)


# ---------------------------------------------------------------------------
# extension sets W_S^j and W_{S,x}^j


@dataclass(frozen=True)
class ExtensionProfile:
    S: frozenset
    j: int
    W: frozenset
    per_x: dict

    def identity_holds(self) -> bool:
        return self.j * len(self.W) == sum(len(w) for w in self.per_x.values())


def extension_mask(g: Graph, S_mask: int, j: int) -> int:
    """Bitmask of vertices outside S with exactly j neighbours in S."""
    out = 0
    for v in range(g.n):
        if not S_mask >> v & 1 and (g.adj[v] & S_mask).bit_count() == j:
            out |= 1 << v
    return out


def extension_profile(g: Graph, S, j: int) -> ExtensionProfile:
    S_mask = as_mask(S)
    if S_mask >> g.n:
        raise ValueError("S is not a subset of V(g)")
    s = S_mask.bit_count()
    if not 0 <= j <= s:
        raise ValueError(f"j={j} outside 0..{s}")
    W = extension_mask(g, S_mask, j)
    per_x = {x: frozenset(members(W & g.adj[x])) for x in members(S_mask)}
    return ExtensionProfile(frozenset(members(S_mask)), j, frozenset(members(W)), per_x)


def mu_omega(n: int, s: int, j: int) -> tuple[Fraction, Fraction]:
    """Expected |W_S^j| and |W_{S,x}^j| for |S| = s in G(n, 1/2)."""
    if s > n:
        raise ValueError(f"s={s} exceeds n={n}")
    if not 0 <= j <= s:
        raise ValueError(f"j={j} outside 0..{s}")
    scale = Fraction(n - s, 2**s)
    mu = scale * math.comb(s, j)
    omega = scale * math.comb(s - 1, j - 1) if j >= 1 else Fraction(0)
    return mu, omega
