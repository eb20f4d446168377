"""Randomised quasiclique cover followed by a two-step repair into a certified k-cover."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .constants import C_CONST, log
from .cover import CoverMultiset, is_k_cover
from .errors import InfeasibleRegime, PropertyViolation
from .graph import Graph, RandomSource, as_generator, as_mask, members
from .quasiclique import QuasicliqueParams, admissible_alphas, enumerate_Q, expected_counts


def selection_probability(params: QuasicliqueParams, k: int) -> Fraction:
    """q = k (1 + alpha) / N1; InfeasibleRegime unless q < 1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    N1 = expected_counts(params).N1
    if N1 == 0:
        raise InfeasibleRegime(f"N1 = 0 for {params.to_json()}")
    q = k * (1 + params.alpha) / N1
    if q >= 1:
        raise InfeasibleRegime(f"q = {float(q):.6g} >= 1 for {params.to_json()}, k={k}")
    return q


def sample_candidate_cover(g: Graph, params: QuasicliqueParams, k: int, rng, *,
                           family: list[tuple[int, ...]] | None = None) -> CoverMultiset:
    """Keep each member of Q_G independently with probability q."""
    q = selection_probability(params, k)
    if family is None:
        family = enumerate_Q(g, (), params)
    keep = as_generator(rng).random(len(family)) < float(q)
    return CoverMultiset(tuple((as_mask(S), 1) for S, kept in zip(family, keep) if kept))


def coverage_matrix(g: Graph, c: CoverMultiset) -> np.ndarray:
    """n x n matrix of |C({u, v})| (diagonal meaningless)."""
    cov = np.zeros((g.n, g.n), dtype=np.int64)
    for mask, mult in c.entries:
        idx = members(mask)
        cov[np.ix_(idx, idx)] += mult
    return cov


def _pair_views(g: Graph, cov: np.ndarray):
    iu = np.triu_indices(g.n, 1)
    is_edge = g.adjacency_matrix()[iu].astype(bool)
    return iu, is_edge, cov[iu]


def defect_stats(g: Graph, c: CoverMultiset, k: int) -> tuple[int, int, int]:
    """X = edges covered < k times, Y = non-edges covered >= k times,
    Z = non-edges covered > k log n times."""
    if c.max_vertex() >= g.n:
        raise ValueError("cover uses vertices outside V(g)")
    _, is_edge, vals = _pair_views(g, coverage_matrix(g, c))
    X = int(np.sum(is_edge & (vals < k)))
    Y = int(np.sum(~is_edge & (vals >= k)))
    Z = int(np.sum(~is_edge & (vals > k * log(g.n)))) if g.n >= 2 else 0
    return X, Y, Z


@dataclass
class ConstructionTrace:
    k: int
    C_initial: CoverMultiset
    C_1: CoverMultiset
    C_final: CoverMultiset
    X: int
    Y: int
    Z: int
    E1: int
    E2: int
    added_edge_copies: int
    removed: CoverMultiset
    q: Fraction | None = None
    params: QuasicliqueParams | None = None
    extra: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.extra.get("certified", False)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "q": None if self.q is None else str(self.q),
            "params": None if self.params is None else self.params.to_json(),
            "sizes": {"initial": len(self.C_initial), "C1": len(self.C_1), "final": len(self.C_final),
                      "removed": len(self.removed)},
            "X": self.X, "Y": self.Y, "Z": self.Z,
            "E1": self.E1, "E2": self.E2,
            "added_edge_copies": self.added_edge_copies,
            **self.extra,
            "cover": [[mult, *members(mask)] for mask, mult in self.C_final.entries],
        }


def repair(g: Graph, c: CoverMultiset, k: int) -> ConstructionTrace:
    """Step 1: drop every member containing a non-edge covered >= k times.
    Step 2: add k copies of each edge that is now covered < k times.

    The result is always a k-cover; the bookkeeping inequalities are asserted.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    X, Y, Z = defect_stats(g, c, k)
    cov = coverage_matrix(g, c)
    iu, is_edge, vals = _pair_views(g, cov)
    bad = [(int(u), int(v)) for u, v, e, x in zip(*iu, is_edge, vals) if not e and x >= k]
    bad_masks = [(1 << u) | (1 << v) for u, v in bad]
    removed = CoverMultiset(tuple((m, mult) for m, mult in c.entries
                                  if any(m & b == b for b in bad_masks)))
    C1 = c.without(removed)

    removed_cov = coverage_matrix(g, removed)[iu]
    E1 = int(np.sum(is_edge & (removed_cov > 0)))
    cov1 = vals - removed_cov
    deficient = [(int(u), int(v)) for u, v, e, x in zip(*iu, is_edge, cov1) if e and x < k]
    E2 = len(deficient)
    added = CoverMultiset(tuple(((1 << u) | (1 << v), k) for u, v in deficient))
    C_final = C1 + added

    pair_budget = sum(mult * math.comb(mask.bit_count(), 2) for mask, mult in removed.entries)
    tmax = max((mask.bit_count() for mask, _ in removed.entries), default=0)
    checks = {
        "C1_subset": C1.is_submultiset(c),
        "E1_le_pairs_in_removed": E1 <= pair_budget <= tmax ** 2 * len(removed),
        "E2_le_X_plus_E1": E2 <= X + E1,
        "size_bound": len(C_final) <= len(c) + k * E2,
        "added_copies": len(added) == k * E2,
    }
    cert = is_k_cover(g, C_final, k)
    failed = [name for name, ok in checks.items() if not ok]
    if failed or not cert.valid:
        raise PropertyViolation(f"repair bookkeeping failed: {failed or cert.violations}")
    return ConstructionTrace(k, c, C1, C_final, X, Y, Z, E1, E2, len(added), removed,
                             extra={"checks": checks, "certified": True})


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class ParameterChoice:
    params: QuasicliqueParams
    alpha_target: float | None
    t_target: float | None
    in_regime: bool | None

    def to_json(self) -> dict:
        return {"params": self.params.to_json(), "alpha_target": self.alpha_target,
                "t_target": self.t_target, "k_in_regime": self.in_regime}


def k_in_regime(n: int, k: int, epsilon: float) -> bool:
    """(log log n)^{1/epsilon} <= k <= log n."""
    if n < 3:
        return False
    return log(log(n)) ** (1 / epsilon) <= k <= log(n)


def choose_params(n: int, k: int, epsilon: float) -> ParameterChoice:
    """alpha = k^{-1/2 + epsilon}, t = round(c alpha^-2 log n), then the admissible
    alpha (integral T) nearest to the target."""
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    alpha = k ** (-0.5 + epsilon)
    t_real = C_CONST * alpha ** -2 * log(n)
    t = round(t_real)
    if t < 2:
        raise InfeasibleRegime(f"t = round({t_real:.4g}) < 2 at n={n}, k={k}, epsilon={epsilon}")
    if t > n:
        raise InfeasibleRegime(f"t = {t} exceeds n = {n}")
    options = admissible_alphas(t)
    best = min(options, key=lambda a: (abs(float(a) - alpha), a))
    return ParameterChoice(QuasicliqueParams(n, best, t), alpha, t_real, k_in_regime(n, k, epsilon))


def pipeline(g: Graph, k: int, rng: RandomSource, *, epsilon: float | None = None,
             alpha=None, t: int | None = None, retries: int = 1) -> ConstructionTrace:
    """Sample ``retries`` candidate covers on substreams 0..retries-1, keep the one with the
    lexicographically smallest (X, Y, Z) (earliest on ties), and repair it."""
    if retries < 1:
        raise ValueError("retries must be positive")
    if alpha is not None and t is not None:
        choice = ParameterChoice(QuasicliqueParams(g.n, Fraction(alpha), t), None, None, None)
    elif epsilon is not None:
        choice = choose_params(g.n, k, epsilon)
    else:
        raise ValueError("give either epsilon or both alpha and t")
    params = choice.params
    q = selection_probability(params, k)
    family = enumerate_Q(g, (), params)
    best = None
    for i in range(retries):
        c = sample_candidate_cover(g, params, k, rng.substream(i), family=family)
        key = defect_stats(g, c, k)
        if best is None or key < best[0]:
            best = (key, i, c)
    _, index, c = best
    trace = repair(g, c, k)
    trace.q = q
    trace.params = params
    trace.extra.update({
        "choice": choice.to_json(),
        "retry_index": index,
        "retries": retries,
        "Q_size": len(family),
        "expected_initial_size": float(q * len(family)),
    })
    if epsilon is not None and g.n >= 3:
        trace.extra["reference_upper"] = g.n ** 2 / (k ** (1 - 4 * epsilon) * log(g.n) ** 2)
    return trace
