"""alpha-quasicliques: predicate, enumeration, expected counts, goodness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .constants import A_CONST, C_CONST, log
from .errors import BudgetExceeded
from .graph import Graph, as_mask, members

DEFAULT_BUDGET = 5_000_000


@dataclass(frozen=True)
class QuasicliqueParams:
    """Bundle (n, alpha, t) with the derived edge target T = (1/2 + alpha) C(t, 2).

    ``alpha`` is kept as an exact rational; T must come out integral.
    """

    n: int
    alpha: Fraction
    t: int
    T: int = field(init=False)

    def __post_init__(self):
        alpha = Fraction(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not 0 < alpha <= Fraction(1, 2):
            raise ValueError(f"alpha={alpha} outside (0, 1/2]")
        if self.t < 2:
            raise ValueError("t must be at least 2")
        if self.t > self.n:
            raise ValueError(f"t={self.t} exceeds n={self.n}")
        T = (Fraction(1, 2) + alpha) * math.comb(self.t, 2)
        if T.denominator != 1:
            raise ValueError(f"(1/2 + {alpha}) * C({self.t}, 2) = {T} is not an integer")
        object.__setattr__(self, "T", int(T))

    c_const = C_CONST
    A_const = A_CONST

    @property
    def pairs(self) -> int:
        return math.comb(self.t, 2)

    def degree_window(self) -> tuple[Fraction, Fraction]:
        mid = Fraction(1, 2) + self.alpha
        half = Fraction(3, 4) * self.alpha
        return (mid - half) * self.t, (mid + half) * self.t

    def asymptotic_t(self) -> float:
        """c * alpha^-2 * log n, the size the asymptotic analysis prescribes."""
        return C_CONST * float(self.alpha) ** -2 * log(self.n)

    def in_asymptotic_regime(self) -> bool:
        return abs(self.t - self.asymptotic_t()) <= 1

    def goodness_tolerance(self) -> float:
        """n^{-A alpha^2}."""
        return self.n ** (-A_CONST * float(self.alpha) ** 2)

    def to_json(self) -> dict:
        return {"n": self.n, "alpha": str(self.alpha), "t": self.t, "T": self.T}


def admissible_alphas(t: int) -> list[Fraction]:
    """alpha in (0, 1/2] making (1/2 + alpha) C(t, 2) integral."""
    p = math.comb(t, 2)
    return [Fraction(T, p) - Fraction(1, 2) for T in range(p // 2 + 1, p + 1)
            if Fraction(T, p) - Fraction(1, 2) > 0]


def is_quasiclique(g: Graph, S, p: QuasicliqueParams) -> tuple[bool, str]:
    mask = as_mask(S)
    if mask.bit_count() != p.t:
        raise ValueError(f"|S|={mask.bit_count()} but t={p.t}")
    e = g.induced_edges(mask)
    if e != p.T:
        return False, f"e(S)={e} != T={p.T}"
    lo, hi = p.degree_window()
    for v in members(mask):
        d = g.induced_degree(v, mask)
        if not lo <= d <= hi:
            return False, f"vertex {v} has degree {d} outside [{lo}, {hi}]"
    return True, "ok"


def _u_data(g: Graph, U) -> tuple[int, int, int]:
    mask = as_mask(U)
    l = mask.bit_count()
    if l not in (0, 2):
        raise ValueError("|U| must be 0 or 2")
    return mask, l, g.induced_edges(mask)


def _combo_array(pool: list[int], r: int) -> np.ndarray:
    total = math.comb(len(pool), r)
    if r == 0:
        return np.zeros((1, 0), dtype=np.int64)
    flat = np.fromiter((v for c in combinations(pool, r) for v in c), dtype=np.int64, count=total * r)
    return flat.reshape(total, r)


def _scan(g: Graph, U, p: QuasicliqueParams, budget: int, degree_check: bool) -> list[tuple[int, ...]]:
    mask, l, _ = _u_data(g, U)
    if mask >> g.n:
        raise ValueError("U is not a subset of V(g)")
    pool = [v for v in range(g.n) if not mask >> v & 1]
    total = math.comb(len(pool), p.t - l)
    if total > budget:
        raise BudgetExceeded(f"C({len(pool)}, {p.t - l}) = {total} subsets exceeds budget {budget}")
    a = g.adjacency_matrix()
    fixed = members(mask)
    lo, hi = p.degree_window()
    lo_i, hi_i = math.ceil(lo), math.floor(hi)
    out = []
    combos = _combo_array(pool, p.t - l)
    for start in range(0, len(combos), 100_000):
        chunk = combos[start:start + 100_000]
        if fixed:
            chunk = np.hstack([np.tile(fixed, (len(chunk), 1)), chunk])
        sub = a[chunk[:, :, None], chunk[:, None, :]]
        deg = sub.sum(axis=2, dtype=np.int32)
        ok = deg.sum(axis=1) == 2 * p.T
        if degree_check:
            ok &= (deg.min(axis=1) >= lo_i) & (deg.max(axis=1) <= hi_i)
        for row in chunk[ok]:
            out.append(tuple(sorted(int(v) for v in row)))
    out.sort()
    return out


def enumerate_Q(g: Graph, U, p: QuasicliqueParams, *, budget: int = DEFAULT_BUDGET) -> list[tuple[int, ...]]:
    """Members of Q_G containing U, as sorted vertex tuples in ascending order."""
    return _scan(g, U, p, budget, degree_check=True)


def relaxed_count_family(g: Graph, U, p: QuasicliqueParams, *, budget: int = DEFAULT_BUDGET) -> list[tuple[int, ...]]:
    """t-subsets containing U with exactly T induced edges (no degree condition).

    Its expected size over G(n, 1/2) is exactly the matching expected_counts value.
    """
    return _scan(g, U, p, budget, degree_check=False)


def expected_count(p: QuasicliqueParams, l: int, e_U: int) -> Fraction:
    """C(n-l, t-l) * C(C(t,2) - C(l,2), T - e(U)) * 2^{C(l,2) - C(t,2)}."""
    if l not in (0, 2):
        raise ValueError("l must be 0 or 2")
    if e_U not in (0, 1) or (l == 0 and e_U):
        raise ValueError("e(U) must be 0 or 1, and 0 when U is empty")
    lp = math.comb(l, 2)
    top = p.pairs - lp
    k = p.T - e_U
    ways = math.comb(top, k) if 0 <= k <= top else 0
    return Fraction(math.comb(p.n - l, p.t - l) * ways, 2 ** (p.pairs - lp))


@dataclass(frozen=True)
class CountTriple:
    N0: Fraction
    N1: Fraction
    N2: Fraction

    def to_json(self) -> dict:
        return {"N0": str(self.N0), "N1": str(self.N1), "N2": str(self.N2)}


def expected_counts(p: QuasicliqueParams) -> CountTriple:
    return CountTriple(expected_count(p, 0, 0), expected_count(p, 2, 1), expected_count(p, 2, 0))


# ---------------------------------------------------------------------------
# (alpha, t)-goodness


@dataclass
class GoodnessReport:
    params: QuasicliqueParams
    delta: float
    asymptotic_delta: float
    counts: CountTriple
    total: int
    per_pair: dict  # (u, v) -> count
    worst_edge: float
    worst_non_edge: float
    worst_total: float

    @property
    def worst(self) -> float:
        return max(self.worst_edge, self.worst_non_edge, self.worst_total)

    @property
    def good(self) -> bool:
        return self.worst <= self.delta

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "delta": self.delta,
            "asymptotic_delta": self.asymptotic_delta,
            **self.counts.to_json(),
            "observed": {"Q": self.total},
            "worst_relative_deviation": {
                "edge": self.worst_edge, "non_edge": self.worst_non_edge, "total": self.worst_total},
            "good": self.good,
        }


def _rel_dev(observed: int, target: Fraction) -> float:
    if target == 0:
        return 0.0 if observed == 0 else math.inf
    return abs(float((observed - target) / target))


def pair_counts(family: list[tuple[int, ...]], n: int) -> dict:
    counts = {pair: 0 for pair in combinations(range(n), 2)}
    for S in family:
        for pair in combinations(S, 2):
            counts[pair] += 1
    return counts


def check_alpha_t_good(g: Graph, p: QuasicliqueParams, delta: float, *,
                       budget: int = DEFAULT_BUDGET) -> GoodnessReport:
    """Compare |Q_G(e)|, |Q_G(f)|, |Q_G| with N1, N2, N0 using relative tolerance ``delta``."""
    if p.n != g.n:
        raise ValueError("params.n does not match the graph")
    fam = enumerate_Q(g, (), p, budget=budget)
    counts = expected_counts(p)
    per_pair = pair_counts(fam, g.n)
    we = wf = 0.0
    for (u, v), cnt in per_pair.items():
        if g.has_edge(u, v):
            we = max(we, _rel_dev(cnt, counts.N1))
        else:
            wf = max(wf, _rel_dev(cnt, counts.N2))
    return GoodnessReport(p, delta, p.goodness_tolerance(), counts, len(fam), per_pair,
                          we, wf, _rel_dev(len(fam), counts.N0))


# ---------------------------------------------------------------------------
# batched counting over many sampled graphs


def subset_pair_index(n: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """All t-subsets of [n] (rows, lexicographic) and, per subset, the indices of
    its C(t,2) pairs in the lexicographic pair order."""
    combos = _combo_array(list(range(n)), t)
    index = np.full((n, n), -1, dtype=np.int64)
    iu = np.triu_indices(n, 1)
    index[iu] = np.arange(len(iu[0]))
    a, b = np.triu_indices(t, 1)
    return combos, index[combos[:, a], combos[:, b]]


def relaxed_counts_batch(edge_vectors: np.ndarray, n: int, t: int, T: int, *,
                         chunk: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """For each sampled graph: the number of t-subsets with exactly T edges, and
    per pair the number of such subsets containing it.

    Returns ``(totals, per_pair)`` with shapes ``(samples,)`` and ``(samples, C(n,2))``.
    Agrees with ``relaxed_count_family`` graph by graph.
    """
    _, pidx = subset_pair_index(n, t)
    npairs = n * (n - 1) // 2
    incidence = np.zeros((len(pidx), npairs), dtype=np.float32)
    rows = np.repeat(np.arange(len(pidx)), pidx.shape[1])
    incidence[rows, pidx.ravel()] = 1
    totals = np.empty(len(edge_vectors), dtype=np.int64)
    per_pair = np.empty((len(edge_vectors), npairs), dtype=np.int64)
    for start in range(0, len(edge_vectors), chunk):
        ev = edge_vectors[start:start + chunk]
        hits = (ev[:, pidx].sum(axis=2, dtype=np.int16) == T).astype(np.float32)
        totals[start:start + chunk] = hits.sum(axis=1)
        per_pair[start:start + chunk] = np.rint(hits @ incidence).astype(np.int64)
    return totals, per_pair
