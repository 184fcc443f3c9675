"""Simple random walk on a graph cylinder and its excursion statistics.

The cylinder over a base graph G has vertices (g, zeta) with zeta in the
naturals; one step moves to a uniform option among the d same-layer neighbor
slots plus up and down (down is unavailable at zeta = 0).  Excursions are the
walk segments between consecutive visits to a reference layer; a same-layer
hop returns immediately and forms its own one-step excursion.

Two simulation styles live here:

* a literal stepper (:func:`step`, :func:`run_until`) that materializes
  traces, used for generic predicates and as a cross-check;
* exact-law machinery for the heavy-tailed part of the walk.  The vertical
  first-return time of an excursion has infinite mean, so bulk estimators
  cannot afford to step through it.  :func:`sample_excursion_shape` draws the
  (vertical moves, same-layer moves) pair of one excursion from its exact
  joint law, and :class:`GTransitionSampler` advances the base coordinate by
  an arbitrary number of same-layer moves in one shot via the spectral
  decomposition of the base walk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import RegularGraph
from .stats import BoundCheck, EstimateSummary, make_bound_check
from .walk1d import sample_first_passage_moves

DEFAULT_EXCURSION_CAP = 1_000_000
DEFAULT_START_OFFSET = 1_000_000
_NEGBIN_EXACT_LIMIT = 10**12
_UNIFORM_TV_CUT = 1e-14
_DIRECT_HOP_LIMIT = 64


@dataclass(frozen=True)
class CylinderPosition:
    g: int
    zeta: int

    def __post_init__(self) -> None:
        if self.zeta < 0:
            raise ValueError("layer index must be >= 0")


@dataclass(frozen=True)
class ExcursionRecord:
    """One excursion: trace indices, side of the first step, same-layer moves."""

    start_index: int
    end_index: int
    sign: int  # +1 above, -1 below, 0 for a one-step same-layer hop
    g_steps: int


@dataclass
class WalkTrace:
    positions: list[tuple[int, int]]
    stop_reason: str  # "hit-target" or "cap-exceeded"
    g_step_count: int


def step(g: RegularGraph, pos: CylinderPosition, rng: np.random.Generator) -> CylinderPosition:
    """One uniform step; d+2 options above the floor, d+1 at zeta = 0."""
    if pos.zeta >= 1:
        s = int(rng.integers(0, g.d + 2))
        if s == 0:
            return CylinderPosition(pos.g, pos.zeta + 1)
        if s == 1:
            return CylinderPosition(pos.g, pos.zeta - 1)
        return CylinderPosition(g.neighbors[pos.g][s - 2], pos.zeta)
    s = int(rng.integers(0, g.d + 1))
    if s == 0:
        return CylinderPosition(pos.g, 1)
    return CylinderPosition(g.neighbors[pos.g][s - 1], 0)


def run_until(
    g: RegularGraph,
    start: CylinderPosition,
    stop,
    rng: np.random.Generator,
    cap: int,
) -> WalkTrace:
    """Walk until ``stop(position)`` is true, checking the start first.

    The trace records every visited position; a cap hit is flagged in
    ``stop_reason`` rather than silently truncating.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    positions = [(start.g, start.zeta)]
    pos = start
    g_steps = 0
    if stop(pos):
        return WalkTrace(positions, "hit-target", 0)
    for _ in range(cap):
        nxt = step(g, pos, rng)
        if nxt.zeta == pos.zeta:
            g_steps += 1
        pos = nxt
        positions.append((pos.g, pos.zeta))
        if stop(pos):
            return WalkTrace(positions, "hit-target", g_steps)
    return WalkTrace(positions, "cap-exceeded", g_steps)


def decompose_excursions(trace: WalkTrace, reference_layer: int) -> list[ExcursionRecord]:
    """Split a trace at its returns to ``reference_layer``.

    The trace must start on the reference layer.  The trailing segment after
    the last return is discarded.
    """
    pos = trace.positions
    if not pos or pos[0][1] != reference_layer:
        raise ValueError("trace must start at the reference layer")
    records = []
    start = 0
    for r in range(1, len(pos)):
        if pos[r][1] == reference_layer:
            sign = pos[start + 1][1] - pos[start][1]
            g_steps = sum(
                1 for i in range(start + 1, r + 1) if pos[i][1] == pos[i - 1][1]
            )
            records.append(ExcursionRecord(start, r, sign, g_steps))
            start = r
    return records


def is_alpha_long(exc: ExcursionRecord, alpha: float) -> bool:
    """Positive excursion with at least ``alpha`` same-layer moves."""
    return exc.sign > 0 and exc.g_steps >= alpha


def is_negative_alpha_long(exc: ExcursionRecord, alpha: float) -> bool:
    """Mirrored predicate for excursions on the negative side."""
    return exc.sign < 0 and exc.g_steps >= alpha


# --- exact excursion-shape sampling ------------------------------------------


def sample_negative_binomial(rng: np.random.Generator, successes: int, p: float) -> int:
    """Failures before the given number of successes; safe for huge counts.

    Beyond the exact-sampler range the count is drawn from the matching
    normal approximation, which is indistinguishable at that scale.
    """
    if successes <= 0:
        return 0
    if successes <= _NEGBIN_EXACT_LIMIT:
        return int(rng.negative_binomial(successes, p))
    mean = successes * (1.0 - p) / p
    sd = math.sqrt(successes * (1.0 - p)) / p
    return max(0, int(round(mean + sd * rng.standard_normal())))


def sample_excursion_shape(rng: np.random.Generator, vertical_prob: float) -> tuple[int, int, int]:
    """Draw (vertical_moves, g_moves, total_steps) of one vertical excursion.

    Conditioned on the first step being vertical, the later vertical moves
    form a fair +-1 walk whose first return needs ``V`` further moves with
    the exact first-passage law, and each of those moves is preceded by a
    geometric number of same-layer moves.  Hence g_moves is negative
    binomial with ``V`` successes at ``vertical_prob``.  The total can be
    astronomically large; no cap is applied here.
    """
    v = sample_first_passage_moves(rng)
    gamma = sample_negative_binomial(rng, v, vertical_prob)
    return 1 + v, gamma, 1 + v + gamma


class GTransitionSampler:
    """Exact sampling of the base coordinate after many same-layer moves.

    Uses the symmetric eigendecomposition of the slot walk P = A/d: the
    distribution after ``gamma`` moves from vertex ``g`` is the g-th row of
    P^gamma.  Short runs are stepped literally; once the power is within
    1e-14 of its limit (and the base is not bipartite) a uniform draw is
    substituted.  Bipartite bases keep the full eigenvector route, which
    preserves parity exactly.
    """

    def __init__(self, g: RegularGraph):
        self.graph = g
        self._nbrs = g.neighbors
        w, u = np.linalg.eigh(g.transition_matrix())
        self._w = w
        self._u = u
        others = np.abs(w[:-1])
        self._lam = float(others.max()) if others.size else 0.0
        self._log_lam = math.log(self._lam) if 0.0 < self._lam < 1.0 else None
        self._bipartite_like = bool(w[0] <= -1.0 + 1e-9)

    def sample(self, g_start: int, gamma: int, rng: np.random.Generator) -> int:
        if gamma <= 0:
            return g_start
        if gamma <= _DIRECT_HOP_LIMIT:
            pos = g_start
            nbrs = self._nbrs
            d = self.graph.d
            for s in rng.integers(0, d, size=gamma):
                pos = nbrs[pos][s]
            return int(pos)
        if not self._bipartite_like:
            if self._lam == 0.0 or (
                self._log_lam is not None
                and gamma * self._log_lam < math.log(_UNIFORM_TV_CUT)
            ):
                return int(rng.integers(0, self.graph.n))
        return self._sample_eigen(g_start, gamma, rng)

    def _sample_eigen(self, g_start: int, gamma: int, rng: np.random.Generator) -> int:
        w = self._w
        with np.errstate(divide="ignore"):
            mags = np.exp(float(gamma) * np.log(np.abs(w)))
        if gamma % 2 == 1:
            mags = np.where(w < 0.0, -mags, mags)
        row = self._u @ (mags * self._u[g_start])
        row = np.clip(row, 0.0, None)
        total = row.sum()
        if total <= 0.0:
            return int(rng.integers(0, self.graph.n))
        cdf = np.cumsum(row / total)
        return int(np.searchsorted(cdf, rng.random(), side="right"))


class DrawSource:
    """Buffered uniform draws from one generator.

    Batching the slot draws keeps the per-step cost of long simulations low
    while consuming the underlying stream in a deterministic order.
    """

    def __init__(self, rng: np.random.Generator, high: int, buffer: int = 4096):
        self.rng = rng
        self.high = high
        self._buffer = buffer
        self._slots = rng.integers(0, high, size=buffer, dtype=np.int64)
        self._si = 0
        self._units = rng.random(buffer)
        self._ui = 0

    def slot(self) -> int:
        if self._si >= self._slots.size:
            self._slots = self.rng.integers(0, self.high, size=self._buffer, dtype=np.int64)
            self._si = 0
        v = self._slots[self._si]
        self._si += 1
        return int(v)

    def unit(self) -> float:
        if self._ui >= self._units.size:
            self._units = self.rng.random(self._buffer)
            self._ui = 0
        v = self._units[self._ui]
        self._ui += 1
        return float(v)


# --- bulk excursion study -----------------------------------------------------


@dataclass(frozen=True)
class ExcursionStudy:
    """Result of simulating independent excursions at a high start layer."""

    alpha: float
    trials: int
    cap: int
    start_offset: int
    signs: np.ndarray  # +1 / -1 / 0 per trial
    g_steps: np.ndarray
    lengths: np.ndarray
    capped: np.ndarray
    floor_contacts: int
    positive_long: EstimateSummary
    negative_long: EstimateSummary
    bound: float
    bound_check: BoundCheck
    negative_bound_check: BoundCheck

    @property
    def symmetry_gap(self) -> float:
        return abs(self.positive_long.mean - self.negative_long.mean)

    @property
    def symmetry_sigma(self) -> float:
        return math.sqrt(
            self.positive_long.std_error**2 + self.negative_long.std_error**2
        )


def _simulate_excursion_skeletons(
    d: int, trials: int, cap: int, rng: np.random.Generator, start_offset: int
):
    """Vectorized literal simulation of the vertical skeleton of excursions.

    Only the layer increments matter for (sign, g_steps, length): each step
    is up/down with probability 1/(d+2) each, else a same-layer move.  The
    base coordinate is irrelevant to those statistics and is not tracked.
    """
    vmap = np.zeros(d + 2, dtype=np.int64)
    vmap[0] = 1
    vmap[1] = -1
    first = rng.integers(0, d + 2, size=trials, dtype=np.int64)
    signs = np.where(first == 0, 1, np.where(first == 1, -1, 0)).astype(np.int8)
    g_steps = (first >= 2).astype(np.int64)
    lengths = np.ones(trials, dtype=np.int64)
    capped = np.zeros(trials, dtype=bool)
    floor = np.zeros(trials, dtype=bool)
    active = np.nonzero(first < 2)[0]
    pos = vmap[first[active]]
    block = 64
    while active.size:
        n_active = active.size
        slots = rng.integers(0, d + 2, size=(n_active, block), dtype=np.int16)
        vmove = vmap[slots]
        rel = pos[:, None] + np.cumsum(vmove, axis=1)
        gcum = np.cumsum(slots >= 2, axis=1, dtype=np.int64)
        runmin = np.minimum.accumulate(rel, axis=1)
        hit = rel == 0
        has = hit.any(axis=1)
        idx = np.argmax(hit, axis=1)
        fin = np.nonzero(has)[0]
        if fin.size:
            rows = active[fin]
            cols = idx[fin]
            g_steps[rows] += gcum[fin, cols]
            lengths[rows] += cols + 1
            floor[rows] |= start_offset + runmin[fin, cols] <= 0
        sur = np.nonzero(~has)[0]
        rows = active[sur]
        g_steps[rows] += gcum[sur, -1]
        lengths[rows] += block
        floor[rows] |= start_offset + runmin[sur, -1] <= 0
        pos = rel[sur, -1]
        active = rows
        over = lengths[active] >= cap
        if over.any():
            capped[active[over]] = True
            keep = ~over
            active = active[keep]
            pos = pos[keep]
        block = min(block * 2, 8192)
    return signs, g_steps, lengths, capped, floor


def long_excursion_probability_bound(d: int, alpha: float) -> float:
    """Lower bound 1/(12 (d+2) sqrt(alpha)) for a positive alpha-long excursion."""
    if alpha < 2:
        raise ValueError("the lower bound needs alpha >= 2")
    return 1.0 / (12.0 * (d + 2) * math.sqrt(alpha))


def long_excursion_frequency(
    g: RegularGraph,
    alpha: float,
    trials: int,
    seed,
    cap: int = DEFAULT_EXCURSION_CAP,
    start_offset: int = DEFAULT_START_OFFSET,
) -> ExcursionStudy:
    """Simulate independent excursions and check the alpha-long lower bound.

    Excursions start at a layer ``start_offset`` above the floor, so floor
    effects are negligible; any literal contact with layer 0 is counted in
    ``floor_contacts``.  Excursions that outrun ``cap`` steps are reported
    separately and count as not alpha-long, which only makes the lower-bound
    check more conservative.
    """
    if alpha < 2:
        raise ValueError("alpha must be >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    signs, g_steps, lengths, capped, floor = _simulate_excursion_skeletons(
        g.d, trials, cap, rng, start_offset
    )
    ok = ~capped & (g_steps >= alpha)
    pos_long = int(((signs == 1) & ok).sum())
    neg_long = int(((signs == -1) & ok).sum())
    cap_hits = int(capped.sum())
    pos_summary = EstimateSummary.from_bernoulli(pos_long, trials, cap_hits=cap_hits)
    neg_summary = EstimateSummary.from_bernoulli(neg_long, trials, cap_hits=cap_hits)
    bound = long_excursion_probability_bound(g.d, alpha)
    check = make_bound_check(
        f"positive-{alpha:g}-long-excursion-lower-bound", bound, ">=", pos_summary
    )
    neg_check = make_bound_check(
        f"negative-{alpha:g}-long-excursion-lower-bound", bound, ">=", neg_summary
    )
    return ExcursionStudy(
        alpha=alpha,
        trials=trials,
        cap=cap,
        start_offset=start_offset,
        signs=signs,
        g_steps=g_steps,
        lengths=lengths,
        capped=capped,
        floor_contacts=int(floor.sum()),
        positive_long=pos_summary,
        negative_long=neg_summary,
        bound=bound,
        bound_check=check,
        negative_bound_check=neg_check,
    )
