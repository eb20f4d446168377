"""Tail bounds as testable predicates, and the entropy/binomial inequalities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .constants import C_CONST


def chernoff_bound(kind: str, mean: float, eps: float | None = None, lam: float | None = None) -> float:
    """Two-sided 2 exp(-eps^2 mean / 3) for 0 < eps < 1, or upper tail exp(-lam) for lam > 7 mean.

    ``kind`` is "binomial" or "hypergeometric"; both obey the same bounds.
    """
    if kind not in ("binomial", "hypergeometric"):
        raise ValueError(f"unknown distribution kind {kind!r}")
    if mean < 0:
        raise ValueError("mean must be non-negative")
    if (eps is None) == (lam is None):
        raise ValueError("give exactly one of eps and lam")
    if eps is not None:
        if not 0 < eps < 1:
            raise ValueError("need 0 < eps < 1")
        return 2 * math.exp(-eps * eps * mean / 3)
    if not lam > 7 * mean:
        raise ValueError("need lam > 7 * mean")
    return math.exp(-lam)


def azuma_bound(increments, lam: float) -> float:
    """2 exp(-lam^2 / (2 sum c_i^2)) for a martingale with |X_i - X_{i-1}| <= c_i."""
    c = np.asarray(increments, dtype=float)
    if c.size == 0 or np.any(c < 0) or not np.any(c > 0):
        raise ValueError("increments must be non-negative and not all zero")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return 2 * math.exp(-lam * lam / (2 * float(np.sum(c * c))))


def empirical_tail(samples, center: float, radius: float, *, strict: bool = True) -> float:
    """Share of samples with |x - center| > radius (>= when strict is False)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    dev = np.abs(x - center)
    return float(np.mean(dev > radius if strict else dev >= radius))


def upper_tail(samples, threshold: float) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    return float(np.mean(x > threshold))


def compare_to_bound(frequency: float, bound: float, multiplier: float, samples: int) -> bool:
    """frequency <= b + multiplier sqrt(b (1 - b) / N), with b = bound clamped to [0, 1]."""
    b = min(max(bound, 0.0), 1.0)
    return frequency <= b + multiplier * math.sqrt(b * (1 - b) / samples)


# ---------------------------------------------------------------------------
# entropy facts


def binary_entropy(p) -> float:
    """H(p) in bits, with 0 log 0 = 0."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return float(sum(-q * mpmath.log(q, 2) for q in (mpmath.mpf(p), 1 - mpmath.mpf(p)) if q > 0))


def binomial_entropy_bound_holds(s: int, j: int) -> bool:
    """C(s, j) / 2^s >= 2^{s (H(j/s) - 1)} / (s + 1), checked exactly.

    Multiplying through, this is (s+1) C(s,j) j^j (s-j)^(s-j) >= s^s.
    """
    if not 0 <= j <= s or s < 1:
        raise ValueError("need 0 <= j <= s and s >= 1")
    return (s + 1) * math.comb(s, j) * j ** j * (s - j) ** (s - j) >= s ** s


def quadratic_entropy_bound_holds(beta) -> bool:
    """H(1/2 + beta) - 1 >= -4 beta^2, evaluated with 60 significant digits."""
    beta = Fraction(beta)
    if not 0 <= beta <= Fraction(1, 2):
        raise ValueError("need 0 <= beta <= 1/2")
    with mpmath.workdps(60):
        b = mpmath.mpf(beta.numerator) / beta.denominator
        p, q = mpmath.mpf(1) / 2 + b, mpmath.mpf(1) / 2 - b
        h = sum(-x * mpmath.log(x, 2) for x in (p, q) if x > 0)
        return bool(h - 1 + 4 * b * b >= 0)


def entropy_facts(s: int, j: int, beta) -> tuple[bool, bool]:
    if not 1 <= j <= s:
        raise ValueError("need 1 <= j <= s")
    return binomial_entropy_bound_holds(s, j), quadratic_entropy_bound_holds(beta)


# ---------------------------------------------------------------------------
# C(s-1, j-1) / 2^s >= n^{-1/5} on its region


def _log_ratio(s: int, j: int) -> float:
    """log(C(s-1, j-1) / 2^s), natural log."""
    return math.lgamma(s) - math.lgamma(j) - math.lgamma(s - j + 1) - s * math.log(2)


@dataclass
class RegionCheck:
    pairs: int
    failures: list
    tightest: tuple  # (margin, s, j, log n)

    @property
    def holds(self) -> bool:
        return not self.failures


def extension_mean_bound_check(s_max: int = 400) -> RegionCheck:
    """Check C(s-1, j-1) / 2^s >= n^{-1/5} for every 1 <= s <= s_max and every n for
    which (s, j) lies in one of the two regions:

    (a) 1 <= s <= c log n, 1 <= j <= s;
    (b) c log n <= s <= t - 1 with t = c alpha^-2 log n, s/2 <= j <= (1/2 + 2 alpha) s,
        for some alpha with (log n)^{-1/2} <= alpha <= 1/2.

    The right-hand side falls as n grows, so for each (s, j) only the smallest
    admissible log n matters; that value is found in closed form and the
    inequality is tested there (in log space, so any n is reachable).
    """
    c = C_CONST
    failures = []
    pairs = 0
    tightest = (math.inf, 0, 0, 0.0)
    for s in range(1, s_max + 1):
        for j in range(1, s + 1):
            lhs = _log_ratio(s, j)
            candidates = [s / c]  # region (a): smallest log n with s <= c log n
            if 2 * j >= s:
                beta = j / s - 0.5
                L = max((s + 1) * beta * beta / (4 * c), math.sqrt((s + 1) / c), 4.0)
                # region (b): alpha = max(beta/2, L^-1/2) must satisfy alpha <= 1/2 and s <= t - 1
                if L <= s / c:
                    candidates.append(L)
            for L in candidates:
                pairs += 1
                margin = lhs + L / 5
                if margin < 0:
                    failures.append((s, j, L))
                if margin < tightest[0]:
                    tightest = (margin, s, j, L)
    return RegionCheck(pairs, failures, tightest)


def extension_mean_grid_check(log_ns, s_max: int = 400) -> RegionCheck:
    """Same inequality on an explicit grid of log n values, with alpha ranging
    over [(log n)^{-1/2}, 1/2]: for each s, j may go up to (1/2 + 2 alpha_max(s)) s
    where alpha_max(s) is the largest alpha with s <= t - 1."""
    c = C_CONST
    failures = []
    pairs = 0
    tightest = (math.inf, 0, 0, 0.0)
    for L in log_ns:
        for s in range(1, s_max + 1):
            if s <= c * L:
                js = range(1, s + 1)
            else:
                amax = min(0.5, math.sqrt(c * L / (s + 1)))
                if amax < L ** -0.5:
                    continue
                js = range(math.ceil(s / 2), min(s, math.floor((0.5 + 2 * amax) * s)) + 1)
            for j in js:
                pairs += 1
                margin = _log_ratio(s, j) + L / 5
                if margin < 0:
                    failures.append((s, j, L))
                if margin < tightest[0]:
                    tightest = (margin, s, j, L)
    return RegionCheck(pairs, failures, tightest)
