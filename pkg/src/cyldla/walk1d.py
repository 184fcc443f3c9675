"""Exact and simulated facts about one-dimensional random walks.

These are the trust anchors for the cylinder walk's vertical coordinate:
closed forms are kept in exact rational arithmetic, and an exhaustive path
enumerator provides an independent ground-truth oracle for small step
counts.  The first-passage sampler at the bottom drives the exact
fast-forward of excursions in the cluster simulator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_EXACT_HALF_STEPS = 32  # closed forms use big-integer binomials up to 2n = 64
MAX_ENUM_STEPS = 20


@dataclass(frozen=True)
class LazyWalkParams:
    """Lazy walk on the integers: hold with probability 1 - alpha, else +-1."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


def ballot_probability(n: int) -> Fraction:
    """P[S(i) >= 0 for all 1 <= i <= 2n] for the simple +-1 walk from 0.

    Equals 2^(-2n) * C(2n, n), which is also the probability that the walk
    has not hit -1 by time 2n.
    """
    if not 1 <= n <= MAX_EXACT_HALF_STEPS:
        raise ValueError(f"n must be in [1, {MAX_EXACT_HALF_STEPS}], got {n}")
    return Fraction(math.comb(2 * n, n), 4**n)


def zero_count_cdf(n: int, m: int) -> Fraction:
    """P[L(2n) < m] where L counts visits to 0 among steps 1..2n.

    Closed form 2^(-2n) * sum_{j=0}^{m-1} 2^j * C(2n - j, n), valid for
    1 <= m <= n.
    """
    if not 1 <= n <= MAX_EXACT_HALF_STEPS:
        raise ValueError(f"n must be in [1, {MAX_EXACT_HALF_STEPS}], got {n}")
    if not 1 <= m <= n:
        raise ValueError(f"m must satisfy 1 <= m <= n, got m={m}, n={n}")
    total = sum(2**j * math.comb(2 * n - j, n) for j in range(m))
    return Fraction(total, 4**n)


def _simple_paths(steps: int) -> np.ndarray:
    idx = np.arange(2**steps, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(steps)) & 1
    return (2 * bits - 1).astype(np.int8)


def _lazy_paths(steps: int) -> np.ndarray:
    idx = np.arange(3**steps, dtype=np.int64)
    digits = (idx[:, None] // (3 ** np.arange(steps))) % 3
    return (digits - 1).astype(np.int8)


def enumerate_paths(steps: int, event, kind: str = "simple", alpha: float | None = None):
    """Exact probability of ``event`` by exhaustive path enumeration.

    ``event`` receives the partial-sum array of shape (num_paths, steps + 1)
    including S(0) = 0 and must return a boolean mask.  The simple alphabet
    (+-1, uniform) returns an exact ``Fraction``; the lazy alphabet
    (-1/0/+1 with weights alpha/2, 1-alpha, alpha/2) returns a float.
    Memory grows like 2^steps (simple) or 3^steps (lazy); the hard cap is
    ``steps <= 20``.
    """
    if not 0 <= steps <= MAX_ENUM_STEPS:
        raise ValueError(f"steps must be in [0, {MAX_ENUM_STEPS}], got {steps}")
    if kind == "simple":
        inc = _simple_paths(steps)
        paths = np.concatenate(
            [np.zeros((inc.shape[0], 1), dtype=np.int16), np.cumsum(inc, axis=1, dtype=np.int16)],
            axis=1,
        )
        mask = np.asarray(event(paths), dtype=bool)
        return Fraction(int(mask.sum()), 2**steps)
    if kind == "lazy":
        if alpha is None:
            raise ValueError("lazy enumeration needs alpha")
        LazyWalkParams(alpha)
        inc = _lazy_paths(steps)
        paths = np.concatenate(
            [np.zeros((inc.shape[0], 1), dtype=np.int16), np.cumsum(inc, axis=1, dtype=np.int16)],
            axis=1,
        )
        mask = np.asarray(event(paths), dtype=bool)
        zeros = (inc == 0).sum(axis=1)
        weights = (1.0 - alpha) ** zeros * (alpha / 2.0) ** (steps - zeros)
        return float(weights[mask].sum())
    raise ValueError(f"kind must be 'simple' or 'lazy', got {kind!r}")


def simulate_lazy_walk(params: LazyWalkParams, steps: int, seed) -> np.ndarray:
    """Reproducible lazy-walk path S(0..steps); ``seed`` may be a Generator."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(steps)
    inc = np.where(u < params.alpha / 2.0, 1, np.where(u < params.alpha, -1, 0))
    path = np.zeros(steps + 1, dtype=np.int64)
    np.cumsum(inc, out=path[1:])
    return path


def simulate_lazy_walks(params: LazyWalkParams, steps: int, walks: int, seed) -> np.ndarray:
    """Vectorized batch of lazy-walk paths, shape (walks, steps + 1)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random((walks, steps))
    inc = np.where(u < params.alpha / 2.0, 1, np.where(u < params.alpha, -1, 0))
    out = np.zeros((walks, steps + 1), dtype=np.int64)
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


@dataclass(frozen=True)
class MaxTailBound:
    """Kolmogorov-inequality bound on the running maximum of a lazy walk."""

    threshold: float  # sqrt(beta * alpha * m)
    bound: float  # 1 / beta
    variance: float  # Var[S(m)] = alpha * m


def lazy_max_tail(alpha: float, m: int, beta: float) -> MaxTailBound:
    """Bound P[max_{1<=i<=m} |S(i)| >= sqrt(beta*alpha*m)] <= 1/beta."""
    LazyWalkParams(alpha)
    if m < 1:
        raise ValueError("m must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    return MaxTailBound(math.sqrt(beta * alpha * m), 1.0 / beta, alpha * m)


def zeros_constant(alpha: float, eps: float) -> float:
    """Constant C with P[L(ceil(C n^2)) < n] <= eps for every n >= 1.

    L counts zero visits of the lazy walk with move probability ``alpha``.
    C is assembled from the explicit inequality chain

        2*exp(-(alpha^2/2) * C * n^2) + sqrt(2)*n / sqrt(alpha*C*n^2 - 4n) <= eps,

    which requires C > 4/alpha; both terms decrease in n, so the binding
    case is n = 1.  Found by bisection on that scalar inequality.
    """
    LazyWalkParams(alpha)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")

    def worst(c: float) -> float:
        return 2.0 * math.exp(-(alpha**2) * c / 2.0) + math.sqrt(2.0) / math.sqrt(alpha * c - 4.0)

    lo = 4.0 / alpha
    hi = lo + 1.0
    while worst(hi) > eps:
        hi = lo + 2.0 * (hi - lo)
    left = lo
    for _ in range(200):
        mid = 0.5 * (left + hi)
        if mid <= lo or worst(mid) > eps:
            left = mid
        else:
            hi = mid
    return hi


# --- first-passage law of the fair +-1 walk ---------------------------------
#
# rho = number of moves a simple +-1 walk takes to first reach one step below
# its start.  rho is odd, and P(rho > 2k) = 2^(-2k) * C(2k, k).  The sampler
# inverts this tail with log-gamma arithmetic, so it supports the full heavy
# tail without tables.

_SMALL_TAIL = [1.0]
for _k in range(1, 65):
    _SMALL_TAIL.append(_SMALL_TAIL[-1] * (2 * _k - 1) / (2 * _k))

_LN2 = math.log(2.0)


def first_passage_tail(k: int) -> float:
    """P(rho > 2k): probability the walk needs more than 2k moves."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k < len(_SMALL_TAIL):
        return _SMALL_TAIL[k]
    return math.exp(math.lgamma(2 * k + 1) - 2.0 * math.lgamma(k + 1) - 2 * k * _LN2)


def sample_first_passage_moves(rng: np.random.Generator) -> int:
    """Draw rho: the odd number of +-1 moves to first reach start - 1.

    Inverse-CDF sampling on the exact tail; the returned value can be
    astronomically large (the law has infinite mean), which callers must
    tolerate.
    """
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    # find smallest j with tail(j + 1) < u, i.e. rho = 2j + 1
    if first_passage_tail(1) < u:
        return 1
    lo = 1  # tail(lo) >= u
    hi = 2
    while first_passage_tail(hi) >= u:
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if first_passage_tail(mid) >= u:
            lo = mid
        else:
            hi = mid
    return 2 * lo + 1
