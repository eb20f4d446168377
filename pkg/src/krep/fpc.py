"""Fractional pseudocovers: evaluation, conversion from k-covers and the
large-item elimination that yields the weight lower bound."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import iv
from mpmath.libmp import to_rational

from .cover import CoverMultiset, is_k_cover
from .errors import PropertyViolation
from .graph import Graph, RandomSource, check_property_P1

_IV = type(iv)()
_IV.prec = 128
MAX_RELATIVE_WIDTH = Fraction(1, 10**12)


class NoSmallMass(PropertyViolation):
    """Small items cannot balance a large one; impossible while (P1) holds."""


def _bounds(x) -> tuple[Fraction, Fraction]:
    lo, hi = x._mpi_
    return Fraction(*to_rational(lo)), Fraction(*to_rational(hi))


@dataclass(frozen=True)
class XInterval:
    """A positive irrational x known to lie in [lo, hi]."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ValueError("interval must be positive and ordered")

    def __float__(self):
        return float((self.lo + self.hi) / 2)

    @property
    def relative_width(self) -> Fraction:
        return (self.hi - self.lo) / self.lo


def _x_bounds(x) -> tuple[Fraction, Fraction]:
    return (x.lo, x.hi) if isinstance(x, XInterval) else (x, x)


@dataclass(frozen=True)
class FractionalPseudocover:
    """Items (x_i, w_i) for a given (n, k). x is a positive Fraction or an XInterval."""

    n: int
    k: int
    items: tuple = ()

    def __post_init__(self):
        items = []
        for x, w in self.items:
            x = x if isinstance(x, XInterval) else Fraction(x)
            w = Fraction(w)
            if not isinstance(x, XInterval) and x <= 0:
                raise ValueError(f"x must be positive, got {x}")
            if w < 0:
                raise ValueError(f"w must be non-negative, got {w}")
            items.append((x, w))
        object.__setattr__(self, "items", tuple(items))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n < 3:
            raise ValueError("n must be at least 3")

    @property
    def x0(self) -> int:
        return 8 * self.k - 2

    @property
    def weight(self) -> Fraction:
        return sum((w for _, w in self.items), Fraction(0))

    def large(self) -> list[int]:
        """Indices of items with x > x0 and positive weight."""
        return [i for i, (x, w) in enumerate(self.items) if w > 0 and _x_bounds(x)[1] > self.x0]

    def is_exact(self) -> bool:
        return not any(isinstance(x, XInterval) for x, _ in self.items)

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, XInterval):
                return {"x_lo": str(x.lo), "x_hi": str(x.hi)}
            return {"x": str(x)}
        return {"n": self.n, "k": self.k, "items": [{**enc(x), "w": str(w)} for x, w in self.items]}

    @classmethod
    def from_json(cls, data: dict) -> "FractionalPseudocover":
        items = []
        for it in data["items"]:
            if "x" in it:
                x = Fraction(it["x"])
            else:
                x = XInterval(Fraction(it["x_lo"]), Fraction(it["x_hi"]))
            items.append((x, Fraction(it["w"])))
        return cls(int(data["n"]), int(data["k"]), tuple(items))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def aggregate(a: FractionalPseudocover) -> dict:
    """{x: total weight} over exact items with positive weight."""
    out: dict = {}
    for x, w in a.items:
        if isinstance(x, XInterval):
            raise ValueError("aggregate needs exact items")
        if w:
            out[x] = out.get(x, Fraction(0)) + w
    return out


# ---------------------------------------------------------------------------
# (P1) / (P2)


def p2_threshold(n: int, k: int) -> tuple[Fraction, Fraction]:
    """Rational bracket around k n^2 / (3 (9 log n)^2)."""
    v = _IV.mpf(k) * n * n / (3 * (9 * _IV.log(n)) ** 2)
    return _bounds(v)


def _p1_term(x, w, x0):
    lo, hi = _x_bounds(x)
    return w * (lo ** 3 - hi ** 4 / x0), w * (hi ** 3 - lo ** 4 / x0)


def _p2_term(x, w):
    lo, hi = _x_bounds(x)
    return w * (lo ** 3 + lo ** 4 / 2), w * (hi ** 3 + hi ** 4 / 2)


def _decide(lo, hi, thr_lo, thr_hi) -> bool | None:
    if lo >= thr_hi:
        return True
    if hi < thr_lo:
        return False
    return None


@dataclass
class FPCCheck:
    p1_sum: tuple[Fraction, Fraction]
    p2_sum: tuple[Fraction, Fraction]
    threshold: tuple[Fraction, Fraction]
    p1: bool | None  # None only if the brackets straddle the boundary
    p2: bool | None

    @property
    def holds(self) -> bool:
        return bool(self.p1) and bool(self.p2)

    def to_json(self) -> dict:
        return {
            "P1_sum": [str(v) for v in self.p1_sum], "P1": self.p1,
            "P2_sum": [str(v) for v in self.p2_sum], "P2": self.p2,
            "threshold": [str(v) for v in self.threshold],
            "P1_float": float(self.p1_sum[0]), "P2_float": float(self.p2_sum[0]),
            "threshold_float": float(self.threshold[0]),
        }


def check_fpc(a: FractionalPseudocover) -> FPCCheck:
    """Exact (P1) sum; (P2) sum against a rational bracket of its irrational threshold."""
    x0 = a.x0
    p1 = [_p1_term(x, w, x0) for x, w in a.items]
    p2 = [_p2_term(x, w) for x, w in a.items]
    p1_lo = sum((t[0] for t in p1), Fraction(0))
    p1_hi = sum((t[1] for t in p1), Fraction(0))
    p2_lo = sum((t[0] for t in p2), Fraction(0))
    p2_hi = sum((t[1] for t in p2), Fraction(0))
    thr = p2_threshold(a.n, a.k)
    return FPCCheck((p1_lo, p1_hi), (p2_lo, p2_hi), thr,
                    _decide(p1_lo, p1_hi, 0, 0), _decide(p2_lo, p2_hi, *thr))


def weight_lower_bound(n: int, k: int) -> float:
    """k n^2 / (3 (8k-2)^4 (9 log n)^2)."""
    if n < 3 or k < 2:
        raise ValueError("need n >= 3 and k >= 2")
    return k * n * n / (3 * (8 * k - 2) ** 4 * (9 * math.log(n)) ** 2)


# ---------------------------------------------------------------------------
# conversion


def conversion_regime_holds(n: int, k: int) -> bool:
    """3 sqrt(log n / n) < 1 / (8k - 6)."""
    return 3 * math.sqrt(math.log(n) / n) < 1 / (8 * k - 6)


def cover_to_fpc(g: Graph, c: CoverMultiset, k: int, *, check_density: bool = True,
                 rng=None) -> FractionalPseudocover:
    """Items (sqrt(|C_i| / (9 log n)), 1), one per member with multiplicity.

    Each x is carried as a 128-bit interval. Warnings are raised (not errors) when
    g fails the density property or (n, k) is outside the regime where the
    converted family is guaranteed to satisfy (P1).
    """
    if not is_k_cover(g, c, k).valid:
        raise ValueError("c is not a k-cover of g")
    if g.n < 3:
        raise ValueError("n must be at least 3")
    if check_density:
        rep = check_property_P1(g, per_size=2_000, rng=rng or RandomSource(0), max_report=1)
        if not rep.holds:
            warnings.warn(f"graph violates the density property on {rep.violation_count} subsets",
                          stacklevel=2)
    if not conversion_regime_holds(g.n, k):
        warnings.warn(f"3 sqrt(log n / n) >= 1/(8k-6) at n={g.n}, k={k}: (P1) is not guaranteed",
                      stacklevel=2)
    denom = 9 * _IV.log(g.n)
    cache: dict = {}
    items = []
    for mask, mult in c.entries:
        size = mask.bit_count()
        if size == 0:
            raise ValueError("cover contains the empty set")
        if size not in cache:
            lo, hi = _bounds(_IV.sqrt(_IV.mpf(size) / denom))
            x = XInterval(lo, hi)
            if x.relative_width >= MAX_RELATIVE_WIDTH:
                raise PropertyViolation(f"interval for |C|={size} too wide: {float(x.relative_width)}")
            cache[size] = x
        items.extend([(cache[size], Fraction(1))] * mult)
    return FractionalPseudocover(g.n, k, tuple(items))


# ---------------------------------------------------------------------------
# elimination of large items


def unit_p1(x: Fraction, x0: int) -> Fraction:
    """x^3 - x^4 / x0, the (P1) contribution of unit weight at x."""
    return x ** 3 - x ** 4 / x0


@dataclass
class Balance:
    m: int
    S: list[int]
    beta: dict  # index -> Fraction
    lam: Fraction
    need: Fraction

    def to_json(self) -> dict:
        return {"m": self.m, "S": self.S, "beta": {str(i): str(b) for i, b in self.beta.items()},
                "lambda": str(self.lam), "need": str(self.need)}


def balance_large_item(a: FractionalPseudocover, m: int) -> Balance:
    """Pick small items S and 0 < beta_i <= w_i with
    sum_S beta_i (x_i^3 - x_i^4/x0) + w_m (x_m^3 - x_m^4/x0) = 0.

    Small items are taken greedily by per-unit contribution (largest first, lower
    index on ties) until their mass covers the deficit; every chosen weight is
    then scaled by the same lambda.
    """
    if not a.is_exact():
        raise ValueError("balancing needs exact items")
    x0 = a.x0
    xm, wm = a.items[m]
    if xm <= x0:
        raise ValueError(f"item {m} is not large (x={xm} <= x0={x0})")
    need = -wm * unit_p1(xm, x0)
    if need == 0:
        return Balance(m, [], {}, Fraction(0), need)
    small = [i for i, (x, w) in enumerate(a.items) if x < x0 and w > 0]
    small.sort(key=lambda i: (-unit_p1(a.items[i][0], x0), i))
    S, mass = [], Fraction(0)
    for i in small:
        S.append(i)
        mass += a.items[i][1] * unit_p1(a.items[i][0], x0)
        if mass >= need:
            break
    if mass < need:
        raise NoSmallMass(f"small items supply {mass} < {need} needed for item {m}")
    lam = need / mass
    beta = {i: lam * a.items[i][1] for i in S}
    return Balance(m, S, beta, lam, need)


@dataclass
class EliminationTrace:
    steps: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"iterations": len(self.steps), "steps": self.steps}


def eliminate_large(a: FractionalPseudocover) -> tuple[FractionalPseudocover, EliminationTrace]:
    """Merge every large item with part of the small mass into a single item at x0.

    Large items are handled in decreasing x. Weight and the (P1) sum are kept
    exactly; the (P2) sum never drops; the power-mean inequalities
    w0' x0^3 >= M and w0' x0^4 >= M x0 are checked at each step.
    Merged items may end up with weight above 1.
    """
    if not a.is_exact():
        raise ValueError("elimination needs exact items (convert intervals first)")
    before = check_fpc(a)
    if before.p1 is not True:
        raise ValueError("(P1) must hold before elimination")
    x0 = a.x0
    items = list(a.items)
    trace = EliminationTrace()
    order = sorted(a.large(), key=lambda i: (-items[i][0], i))
    total_w = a.weight
    for m in order:
        cur = FractionalPseudocover(a.n, a.k, tuple(items))
        p1_before = check_fpc(cur).p1_sum[0]
        p2_before = check_fpc(cur).p2_sum[0]
        bal = balance_large_item(cur, m)
        xm, wm = items[m]
        w0 = wm + sum(bal.beta.values(), Fraction(0))
        M = sum((b * items[i][0] ** 3 for i, b in bal.beta.items()), Fraction(0)) + wm * xm ** 3
        for i, b in bal.beta.items():
            items[i] = (items[i][0], items[i][1] - b)
        items[m] = (Fraction(x0), w0)
        nxt = FractionalPseudocover(a.n, a.k, tuple(items))
        after = check_fpc(nxt)
        checks = {
            "weight_conserved": nxt.weight == total_w,
            "P1_conserved": after.p1_sum[0] == p1_before,
            "P2_nondecreasing": after.p2_sum[0] >= p2_before,
            "cubes": w0 * x0 ** 3 >= M,
            "fourths": w0 * x0 ** 4 >= M * x0,
            "weights_nonnegative": all(w >= 0 for _, w in items),
        }
        trace.steps.append({**bal.to_json(), "x_m": str(xm), "w_m": str(wm), "w0": str(w0),
                            "M": str(M), "checks": checks})
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise PropertyViolation(f"elimination step for item {m} failed {bad}")
    out = FractionalPseudocover(a.n, a.k, tuple(items))
    if out.large():
        raise PropertyViolation("large items remain after elimination")
    return out, trace


def lower_bound_holds(a: FractionalPseudocover) -> bool | None:
    """w(A) x0^4 >= k n^2 / (3 (9 log n)^2) for an FPC without large items."""
    lhs = a.weight * Fraction(a.x0) ** 4
    lo, hi = p2_threshold(a.n, a.k)
    return _decide(lhs, lhs, lo, hi)
