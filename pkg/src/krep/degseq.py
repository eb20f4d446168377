"""Backward degree sequences, admissible tuples and the extension property P(alpha, t)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .constants import C_CONST, log
from .errors import BudgetExceeded
from .graph import Graph, as_generator, mask_of, mu_omega
from .quasiclique import QuasicliqueParams


def window_start(n: int) -> float:
    """c log n: the window condition binds for every s at or above this."""
    return C_CONST * log(n)


def j_window(params: QuasicliqueParams, gamma: Fraction, s: int) -> tuple[int, int]:
    """Integer range allowed for j_s (ignoring the sum condition)."""
    lo, hi = 0, s
    if s >= window_start(params.n):
        mid = Fraction(1, 2) + params.alpha
        lo = max(lo, math.ceil((mid - gamma) * s))
        hi = min(hi, math.floor((mid + gamma) * s))
    return lo, hi


@dataclass(frozen=True)
class BackwardDegreeSequence:
    """(j_l, ..., j_{t-1}) together with the data that decides its admissibility."""

    entries: tuple[int, ...]
    params: QuasicliqueParams
    gamma: Fraction
    l: int = 2
    e_U: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        object.__setattr__(self, "entries", tuple(int(j) for j in self.entries))

    def __getitem__(self, s: int) -> int:
        """j_s, indexed by s (not by position)."""
        if not self.l <= s < self.params.t:
            raise IndexError(s)
        return self.entries[s - self.l]

    def is_admissible(self) -> bool:
        return in_J_gamma(self.entries, self.gamma, self.params, self.l, self.e_U)[0]


def in_J_gamma(seq, gamma, params: QuasicliqueParams, l: int = 2, e_U: int = 1) -> tuple[bool, str]:
    """Membership in J_gamma(U), with the first failed condition on rejection."""
    gamma = Fraction(gamma)
    seq = tuple(seq)
    if len(seq) != params.t - l:
        raise ValueError(f"expected {params.t - l} entries, got {len(seq)}")
    for s, j in enumerate(seq, l):
        if not 0 <= j <= s:
            return False, f"condition (1): j_{s}={j} outside 0..{s}"
    mid = Fraction(1, 2) + params.alpha
    start = window_start(params.n)
    for s, j in enumerate(seq, l):
        if s >= start and not (mid - gamma) * s <= j <= (mid + gamma) * s:
            return False, f"condition (2): j_{s}={j} outside [{(mid - gamma) * s}, {(mid + gamma) * s}]"
    if sum(seq) != params.T - e_U:
        return False, f"condition (3): sum {sum(seq)} != T - e(U) = {params.T - e_U}"
    return True, "ok"


def enumerate_J_gamma(gamma, params: QuasicliqueParams, l: int = 2, e_U: int = 1, *,
                      budget: int = 1_000_000) -> list[tuple[int, ...]]:
    """All members of J_gamma(U) in lexicographic order."""
    gamma = Fraction(gamma)
    steps = list(range(l, params.t))
    windows = [j_window(params, gamma, s) for s in steps]
    # suffix bounds on the remaining sum
    min_rest = [0] * (len(steps) + 1)
    max_rest = [0] * (len(steps) + 1)
    for i in range(len(steps) - 1, -1, -1):
        min_rest[i] = min_rest[i + 1] + windows[i][0]
        max_rest[i] = max_rest[i + 1] + windows[i][1]
    target = params.T - e_U
    out: list[tuple[int, ...]] = []
    nodes = 0
    prefix: list[int] = []

    def walk(i: int, remaining: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"J_gamma enumeration exceeded {budget} nodes")
        if i == len(steps):
            if remaining == 0:
                out.append(tuple(prefix))
            return
        lo, hi = windows[i]
        for j in range(max(lo, remaining - max_rest[i + 1]), min(hi, remaining - min_rest[i + 1]) + 1):
            prefix.append(j)
            walk(i + 1, remaining - j)
            prefix.pop()

    walk(0, target)
    return out


def backward_degrees(g: Graph, tup, l: int = 2) -> tuple[int, ...]:
    """j_s = |N(x_{s+1}) & {x_1..x_s}| for s = l..t-1."""
    tup = tuple(tup)
    if len(set(tup)) != len(tup):
        raise ValueError("tuple entries must be distinct")
    out = []
    prefix = mask_of(tup[:l])
    for s in range(l, len(tup)):
        out.append((g.adj[tup[s]] & prefix).bit_count())
        prefix |= 1 << tup[s]
    return tuple(out)


def is_admissible(g: Graph, tup, gamma, params: QuasicliqueParams, U=(0, 1)) -> bool:
    """Whether ``tup`` lies in B_gamma(U). U is the ordered prefix the tuple must extend."""
    U = tuple(U)
    l = len(U)
    if l not in (0, 2):
        raise ValueError("|U| must be 0 or 2")
    tup = tuple(tup)
    if tup[:l] != U:
        raise ValueError(f"tuple {tup} does not start with U={U}")
    if len(tup) != params.t:
        raise ValueError(f"tuple length {len(tup)} != t={params.t}")
    e_U = int(l == 2 and g.has_edge(*U))
    return in_J_gamma(backward_degrees(g, tup, l), gamma, params, l, e_U)[0]


# ---------------------------------------------------------------------------
# property P(alpha, t)


def property_P_pairs(params: QuasicliqueParams) -> list[tuple[int, int]]:
    """(s, j) pairs covered by the two regions of the extension property."""
    start = window_start(params.n)
    out = []
    for s in range(0, params.t):
        if s <= start:
            out.extend((s, j) for j in range(0, s + 1))
        else:
            lo = math.ceil(Fraction(s, 2))
            hi = math.floor((Fraction(1, 2) + 2 * params.alpha) * s)
            out.extend((s, j) for j in range(lo, min(hi, s) + 1))
    return out


@dataclass
class PropertyPReport:
    delta: float
    examined_sets: int
    worst_W: float = 0.0
    worst_Wx: float = 0.0
    per_pair: dict = field(default_factory=dict)  # (s, j) -> (worst W deviation, worst W_x deviation)
    exhaustive: bool = True

    @property
    def holds(self) -> bool:
        return max(self.worst_W, self.worst_Wx) <= self.delta

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "examined_sets": self.examined_sets,
            "exhaustive": self.exhaustive,
            "worst_W": self.worst_W,
            "worst_Wx": self.worst_Wx,
            "holds": self.holds,
            "per_pair": [{"s": s, "j": j, "W": w, "Wx": wx} for (s, j), (w, wx) in sorted(self.per_pair.items())],
        }


def _dev(observed: np.ndarray, target: Fraction) -> float:
    if observed.size == 0:
        return 0.0
    if target == 0:
        return 0.0 if not observed.any() else math.inf
    t = float(target)
    return float(np.max(np.abs(observed - t)) / t)


def check_property_P(g: Graph, params: QuasicliqueParams, delta: float | None = None, *,
                     max_sets: int = 200_000, rng=None) -> PropertyPReport:
    """Check |W_S^j| = (1 +- delta) mu and |W_{S,x}^j| = (1 +- delta) omega.

    All sets S of each relevant size are examined when there are at most
    ``max_sets`` of them (always the case for n <= 14); otherwise ``max_sets``
    uniformly random sets of that size are drawn from ``rng``.
    """
    n = g.n
    if delta is None:
        delta = n ** -0.2
    a = g.adjacency_matrix().astype(np.int32)
    pairs = property_P_pairs(params)
    by_s: dict[int, list[int]] = {}
    for s, j in pairs:
        by_s.setdefault(s, []).append(j)
    report = PropertyPReport(delta, 0)
    gen = None
    for s, js in sorted(by_s.items()):
        total = math.comb(n, s)
        if total <= max_sets:
            combos = np.array(list(combinations(range(n), s)), dtype=np.int64).reshape(total, s)
        else:
            if gen is None:
                if rng is None:
                    raise BudgetExceeded(f"C({n}, {s}) sets exceed max_sets={max_sets} and no rng given")
                gen = as_generator(rng)
            combos = np.sort(np.argsort(gen.random((max_sets, n)), axis=1)[:, :s], axis=1)
            report.exhaustive = False
        report.examined_sets += len(combos)
        inside = np.zeros((len(combos), n), dtype=bool)
        np.put_along_axis(inside, combos, True, axis=1)
        cnt = a[:, combos].sum(axis=2).T  # (sets, n): neighbours of v inside S
        rows_x = a[combos]  # (sets, s, n)
        for j in js:
            mu, omega = mu_omega(n, s, j)
            W = (cnt == j) & ~inside
            dw = _dev(W.sum(axis=1), mu)
            dwx = _dev(np.einsum("mv,msv->ms", W.astype(np.int32), rows_x), omega) if s else 0.0
            report.per_pair[(s, j)] = (dw, dwx)
            report.worst_W = max(report.worst_W, dw)
            report.worst_Wx = max(report.worst_Wx, dwx)
    return report
