"""Transition-matrix spectra, lazy mixing times, and path-count bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graphs import RegularGraph
from .stats import BoundCheck, EstimateSummary

DENSE_EIG_CUTOFF = 4096
EIG_TOL = 1e-9
TRACE_TOL = 1e-6
PATH_BOUND_RTOL = 1e-9
MIN_ENTRY_SLACK = 1e-12


@dataclass(frozen=True)
class SpectralProfile:
    """Spectrum of the uniform-slot walk P = A/d on one graph.

    ``lam`` is the largest absolute eigenvalue after removing one copy of
    the top eigenvalue 1, so bipartite graphs report lam = 1 and gap = 0.
    ``mixing_time`` is None until computed, or the string sentinel
    ``"exceeded-cap"`` when the search cap was hit.
    """

    n: int
    d: int
    eigenvalues: tuple[float, ...]
    lam: float
    gap: float
    mixing_time: int | str | None = None


def eigen_profile(g: RegularGraph, dense_cutoff: int = DENSE_EIG_CUTOFF) -> SpectralProfile:
    """Full symmetric eigendecomposition of P = A/d (dense up to the cutoff).

    Beyond the cutoff, the second eigenvalue is found by power iteration on
    the uniform-deflated matrix to tolerance 1e-9 and the eigenvalue list is
    truncated to the known extremes.
    """
    if g.n <= dense_cutoff:
        p = g.transition_matrix()
        w = np.linalg.eigvalsh(p)[::-1]
        if abs(w[0] - 1.0) > EIG_TOL:
            raise RuntimeError(f"top eigenvalue {w[0]} differs from 1 beyond tolerance")
        lam = float(np.max(np.abs(w[1:]))) if g.n > 1 else 0.0
        lam = min(lam, 1.0)
        return SpectralProfile(g.n, g.d, tuple(float(x) for x in w), lam, 1.0 - lam)
    lam_signed = _deflated_power_iteration(g)
    lam = min(abs(lam_signed), 1.0)
    return SpectralProfile(g.n, g.d, (1.0, float(lam_signed)), lam, 1.0 - lam)


def _deflated_power_iteration(g: RegularGraph, tol: float = EIG_TOL, max_iter: int = 200_000) -> float:
    nbrs = np.array(g.neighbors, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence(0))
    v = rng.standard_normal(g.n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = np.add.reduce(v[nbrs], axis=1) / g.d
        w -= w.mean()
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        w /= norm
        ray = float(w @ (np.add.reduce(w[nbrs], axis=1) / g.d))
        if abs(ray - prev) < tol:
            return ray
        prev = ray
        v = w
    return prev


def lazy_transition_matrix(g: RegularGraph) -> np.ndarray:
    """(A + I)/(d + 1): the walk on the graph with one loop added per vertex."""
    return (g.adjacency_matrix() + np.eye(g.n)) / (g.d + 1)


def mixing_time(g: RegularGraph, cap: int) -> int | None:
    """Least t such that every entry of P_lazy^t is >= 1/(2n), or None.

    The row-wise minimum entry of P_lazy^t is non-decreasing in t (each
    entry of the next power is an average, with column sums 1, of current
    entries), so the first t found also satisfies the condition for every
    s >= t.  That monotonicity is asserted during the iteration.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    p = lazy_transition_matrix(g)
    threshold = 1.0 / (2 * g.n)
    b = p.copy()
    prev_min = -1.0
    for t in range(1, cap + 1):
        cur_min = float(b.min())
        if cur_min < prev_min - MIN_ENTRY_SLACK:
            raise RuntimeError(
                f"minimum transition entry decreased at t={t}: {prev_min} -> {cur_min}"
            )
        prev_min = cur_min
        if cur_min >= threshold - MIN_ENTRY_SLACK:
            return t
        b = b @ p
    return None


def compute_profile(g: RegularGraph, cap: int = 10_000) -> SpectralProfile:
    """Eigen profile plus mixing time (string sentinel when cap exceeded)."""
    prof = eigen_profile(g)
    t = mixing_time(g, cap)
    return replace(prof, mixing_time=t if t is not None else "exceeded-cap")


def fast_mixing_threshold(n: int) -> float:
    """log^2(n) / (loglog n)^5, defined for n > e."""
    if n <= math.e:
        raise ValueError(f"threshold undefined for n <= e, got n={n}")
    return math.log(n) ** 2 / math.log(math.log(n)) ** 5


def check_fast_mixing(profile: SpectralProfile) -> BoundCheck:
    """Verdict on mixing_time <= log^2(n)/(loglog n)^5.

    This documents which bases meet the fast-mixing hypothesis used by the
    growth-rate dashboard; at desk scale most do not, and the verdict is
    informational.
    """
    if not isinstance(profile.mixing_time, int):
        raise ValueError("profile needs a finite computed mixing_time")
    thr = fast_mixing_threshold(profile.n)
    verdict = "pass" if profile.mixing_time <= thr else "fail"
    return BoundCheck(
        name="fast-mixing-hypothesis",
        bound_value=thr,
        direction="<=",
        estimate=float(profile.mixing_time),
        ci=0.0,
        verdict=verdict,
        applicability="asymptotic hypothesis; no finite-size calibration is claimed",
    )


def avoidance_bound(profile: SpectralProfile, set_fractions) -> float:
    """Upper bound exp(-(c/2)(1-lam)) on staying inside prescribed sets.

    ``set_fractions`` are the relative sizes c_s of the sets the walk must
    stay in; c = sum_s (1 - c_s).
    """
    fracs = list(set_fractions)
    for c in fracs:
        if not 0.0 <= c <= 1.0:
            raise ValueError(f"set fraction {c} outside [0, 1]")
    c_total = sum(1.0 - c for c in fracs)
    return math.exp(-0.5 * c_total * (1.0 - profile.lam))


@dataclass(frozen=True)
class PathCount:
    """Exact constrained-walk count with its spectral upper bound."""

    count: int
    bound: float
    log_bound: float
    fractions: tuple[float, ...]


def count_constrained_paths(g: RegularGraph, sets) -> PathCount:
    """Exact number of walks x_0..x_t with x_s in C_s for every s >= 1.

    x_0 ranges over all vertices.  Counting is exact big-integer dynamic
    programming over layers; the result is checked against the bound
    n * prod_s sqrt(c_s d^2 + (1 - c_s) d^2 lam^2) before returning.
    """
    set_list = [frozenset(c) for c in sets]
    if not set_list:
        raise ValueError("need at least one constraint set")
    for c in set_list:
        for v in c:
            if not 0 <= v < g.n:
                raise ValueError(f"vertex {v} outside graph of size {g.n}")
    counts = [1] * g.n
    for c in set_list:
        nxt = [0] * g.n
        for v in range(g.n):
            if counts[v]:
                cv = counts[v]
                for u in g.neighbors[v]:
                    if u in c:
                        nxt[u] += cv
        counts = nxt
    total = sum(counts)
    lam = eigen_profile(g).lam
    fracs = tuple(len(c) / g.n for c in set_list)
    log_bound = math.log(g.n)
    degenerate = False
    for c_s in fracs:
        inner = c_s + (1.0 - c_s) * lam * lam
        if inner == 0.0:
            degenerate = True
            break
        log_bound += math.log(g.d) + 0.5 * math.log(inner)
    if degenerate:
        bound = 0.0
        ok = total == 0
    else:
        bound = math.exp(log_bound) if log_bound < 700 else math.inf
        ok = total == 0 or math.log(total) <= log_bound + math.log1p(PATH_BOUND_RTOL)
    if not ok:
        raise RuntimeError(
            f"exact path count {total} exceeds spectral bound {bound} on {g.label}"
        )
    return PathCount(total, bound, log_bound if not degenerate else -math.inf, fracs)


def avoidance_frequency(g: RegularGraph, sets, trials: int, seed) -> EstimateSummary:
    """Monte-Carlo frequency of a uniform-start walk staying in all sets."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    nbrs = np.array(g.neighbors, dtype=np.int64)
    pos = rng.integers(0, g.n, size=trials)
    ok = np.ones(trials, dtype=bool)
    for c in sets:
        member = np.zeros(g.n, dtype=bool)
        member[list(c)] = True
        pos = nbrs[pos, rng.integers(0, g.d, size=trials)]
        ok &= member[pos]
    return EstimateSummary.from_bernoulli(int(ok.sum()), trials)
