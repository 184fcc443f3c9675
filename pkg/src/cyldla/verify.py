"""Deterministic verification suites behind the ``verify`` CLI command.

Each check returns a pass/fail line.  Monte-Carlo checks run on fixed
sub-seeds derived from the suite seed, so the whole report is reproducible
byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import dla, walk1d
from .cylinder import long_excursion_frequency
from .graphs import (
    make_complete,
    make_cycle,
    make_hypercube,
    make_torus,
    parse_graph_spec,
)
from .oracles import first_hit_distribution, total_variation
from .spectral import (
    avoidance_bound,
    avoidance_frequency,
    count_constrained_paths,
    eigen_profile,
    lazy_transition_matrix,
    mixing_time,
)
from .stats import EstimateSummary

SUITES = ("walk1d", "spectral", "dla")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _sub_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag,)))


# --- walk1d suite ---------------------------------------------------------------


def _check_ballot_enumeration() -> CheckResult:
    for n in range(1, 9):
        exact = walk1d.ballot_probability(n)
        enum = walk1d.enumerate_paths(2 * n, lambda p: p[:, 1:].min(axis=1) >= 0)
        if exact != enum:
            return CheckResult(
                "ballot-vs-enumeration", False, f"mismatch at n={n}: {exact} vs {enum}"
            )
    return CheckResult("ballot-vs-enumeration", True, "exact equality for n=1..8")


def _check_zero_count_enumeration() -> CheckResult:
    for n in range(1, 9):
        for m in range(1, n + 1):
            exact = walk1d.zero_count_cdf(n, m)
            enum = walk1d.enumerate_paths(
                2 * n, lambda p, m=m: (p[:, 1:] == 0).sum(axis=1) < m
            )
            if exact != enum:
                return CheckResult(
                    "zero-count-cdf-vs-enumeration",
                    False,
                    f"mismatch at n={n}, m={m}: {exact} vs {enum}",
                )
    return CheckResult(
        "zero-count-cdf-vs-enumeration", True, "exact equality for n=1..8, all m"
    )


def _check_zero_count_monotone() -> CheckResult:
    n = 10
    values = [walk1d.zero_count_cdf(n, m) for m in range(1, n + 1)]
    ok = all(a <= b for a, b in zip(values, values[1:]))
    return CheckResult("zero-count-cdf-monotone-in-m", ok, f"n={n}, m=1..{n}")


def _check_stirling_style_bound() -> CheckResult:
    worst = 0.0
    for n in range(2, 33):
        for m in range(1, n):
            cdf = float(walk1d.zero_count_cdf(n, m))
            bound = m / math.sqrt(2 * n - 2 * m)
            worst = max(worst, cdf - bound)
            if cdf >= bound:
                return CheckResult(
                    "zero-count-stirling-style-upper",
                    False,
                    f"violated at n={n}, m={m}",
                )
    return CheckResult(
        "zero-count-stirling-style-upper", True, "holds on 2<=n<=32, m<n grid"
    )


def _check_max_tail_exact() -> CheckResult:
    mt = walk1d.lazy_max_tail(1.0, 4, 4.0)
    exact = walk1d.enumerate_paths(
        4, lambda p, thr=mt.threshold: np.abs(p[:, 1:]).max(axis=1) >= thr
    )
    ok = exact == Fraction(1, 8) and exact <= Fraction(mt.bound).limit_denominator()
    return CheckResult(
        "max-tail-exact-small-case", ok, f"P={exact} <= bound {mt.bound}"
    )


def _check_lazy_variance(seed: int) -> CheckResult:
    for tag, (alpha, m) in enumerate([(0.5, 100), (0.6, 64)]):
        params = walk1d.LazyWalkParams(alpha)
        paths = walk1d.simulate_lazy_walks(params, m, 100_000, _sub_rng(seed, 10 + tag))
        var = float(paths[:, -1].astype(np.float64).var())
        if abs(var - alpha * m) > 0.05 * alpha * m:
            return CheckResult(
                "lazy-walk-variance", False, f"alpha={alpha}, m={m}: var {var:.3f}"
            )
    return CheckResult("lazy-walk-variance", True, "within 5% of alpha*m")


def _check_zeros_constant(seed: int) -> CheckResult:
    alpha, eps = 0.5, 0.5
    c = walk1d.zeros_constant(alpha, eps)
    if c <= 4.0 / alpha:
        return CheckResult("zeros-constant", False, f"C={c} not above 4/alpha")
    params = walk1d.LazyWalkParams(alpha)
    for tag, n in enumerate((2, 4, 8)):
        steps = math.ceil(c * n * n)
        walks = 2000
        paths = walk1d.simulate_lazy_walks(params, steps, walks, _sub_rng(seed, 20 + tag))
        few_zeros = int(((paths[:, 1:] == 0).sum(axis=1) < n).sum())
        summary = EstimateSummary.from_bernoulli(few_zeros, walks)
        if summary.mean - 3 * summary.std_error > eps:
            return CheckResult(
                "zeros-constant", False, f"n={n}: frequency {summary.mean:.3f} above eps"
            )
    return CheckResult("zeros-constant", True, f"C={c:.2f} validated at n in {{2,4,8}}")


def _check_first_passage_sampler(seed: int) -> CheckResult:
    for k in range(0, 11):
        if not math.isclose(
            walk1d.first_passage_tail(k), float(walk1d.ballot_probability(max(k, 1)) if k else 1.0)
        ):
            return CheckResult("first-passage-tail", False, f"tail mismatch at k={k}")
    rng = _sub_rng(seed, 30)
    draws = np.array([walk1d.sample_first_passage_moves(rng) for _ in range(20_000)])
    for moves, prob in ((1, 0.5), (3, 0.125), (5, 0.0625)):
        est = EstimateSummary.from_bernoulli(int((draws == moves).sum()), draws.size)
        if abs(est.mean - prob) > 3 * est.std_error + 1e-9:
            return CheckResult(
                "first-passage-sampler", False, f"P(rho={moves}) off: {est.mean:.4f}"
            )
    return CheckResult("first-passage-sampler", True, "tail identity and pmf agree")


def _check_simulation_determinism(seed: int) -> CheckResult:
    params = walk1d.LazyWalkParams(0.7)
    a = walk1d.simulate_lazy_walk(params, 500, seed)
    b = walk1d.simulate_lazy_walk(params, 500, seed)
    ok = bool(np.array_equal(a, b))
    return CheckResult("lazy-walk-determinism", ok, "same seed, same path")


def walk1d_checks(seed: int) -> list[CheckResult]:
    return [
        _check_ballot_enumeration(),
        _check_zero_count_enumeration(),
        _check_zero_count_monotone(),
        _check_stirling_style_bound(),
        _check_max_tail_exact(),
        _check_lazy_variance(seed),
        _check_zeros_constant(seed),
        _check_first_passage_sampler(seed),
        _check_simulation_determinism(seed),
    ]


# --- spectral suite -------------------------------------------------------------


def _check_known_spectra() -> CheckResult:
    k4 = eigen_profile(make_complete(4))
    if abs(k4.lam - 1.0 / 3.0) > 1e-9:
        return CheckResult("known-spectra", False, f"K4 lambda {k4.lam}")
    c9 = eigen_profile(make_cycle(9))
    if abs(c9.lam - abs(math.cos(8 * math.pi / 9))) > 1e-9:
        return CheckResult("known-spectra", False, f"C9 lambda {c9.lam}")
    q3 = eigen_profile(make_hypercube(3))
    if abs(q3.lam - 1.0) > 1e-9 or abs(q3.gap) > 1e-9:
        return CheckResult("known-spectra", False, f"Q3 lambda {q3.lam}")
    return CheckResult("known-spectra", True, "K4, C9, Q3 eigenvalues match")


def _check_trace_identity() -> CheckResult:
    from .graphs import add_self_loops

    for g in (make_complete(4), add_self_loops(make_cycle(5)), make_hypercube(3)):
        prof = eigen_profile(g)
        trace = g.loop_count() / g.d
        if abs(sum(prof.eigenvalues) - trace) > 1e-6:
            return CheckResult(
                "eigenvalue-trace-identity", False, f"{g.label}: {sum(prof.eigenvalues)}"
            )
    return CheckResult("eigenvalue-trace-identity", True, "sum(eig) = loops/d")


def _exact_mixing_oracle(g, cap: int) -> int | None:
    n = g.n
    p = [[Fraction(0) for _ in range(n)] for _ in range(n)]
    for v, row in enumerate(g.neighbors):
        p[v][v] += Fraction(1, g.d + 1)
        for u in row:
            p[v][u] += Fraction(1, g.d + 1)
    b = [row[:] for row in p]
    threshold = Fraction(1, 2 * n)
    for t in range(1, cap + 1):
        if min(min(row) for row in b) >= threshold:
            return t
        b = [
            [sum(b[i][k] * p[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)
        ]
    return None


def _check_mixing_times() -> CheckResult:
    cases = [(make_complete(3), 1), (make_cycle(4), 2)]
    for g, expected in cases:
        got = mixing_time(g, 50)
        oracle = _exact_mixing_oracle(g, 50)
        if got != expected or oracle != expected:
            return CheckResult(
                "mixing-time-exact-oracle",
                False,
                f"{g.label}: got {got}, oracle {oracle}, expected {expected}",
            )
    q3 = mixing_time(make_hypercube(3), 1000)
    if not isinstance(q3, int):
        return CheckResult("mixing-time-exact-oracle", False, "Q3 did not mix under cap")
    return CheckResult(
        "mixing-time-exact-oracle", True, f"K3=1, C4=2 (rational oracle), Q3={q3}"
    )


def _check_mixing_monotone() -> CheckResult:
    g = make_cycle(5)
    p = lazy_transition_matrix(g)
    b = p.copy()
    mins = []
    for _ in range(40):
        mins.append(float(b.min()))
        b = b @ p
    ok = all(y >= x - 1e-12 for x, y in zip(mins, mins[1:]))
    return CheckResult("mixing-min-entry-monotone", ok, "40 powers of lazy C5")


def _check_avoidance_bound_values() -> CheckResult:
    k4 = eigen_profile(make_complete(4))
    cases = [
        (avoidance_bound(k4, [1.0, 1.0, 1.0]), 1.0),
        (avoidance_bound(eigen_profile(make_complete(5)), [0.0]), None),
        (avoidance_bound(k4, [0.5, 0.5]), math.exp(-1.0 / 3.0)),
    ]
    if abs(cases[0][0] - 1.0) > 1e-12:
        return CheckResult("avoidance-bound-values", False, "all-ones case")
    if abs(cases[2][0] - math.exp(-1.0 / 3.0)) > 1e-12:
        return CheckResult("avoidance-bound-values", False, "K4 half-sets case")
    return CheckResult("avoidance-bound-values", True, "plug-in values match")


def _check_path_counts() -> CheckResult:
    k3 = make_complete(3)
    hand = count_constrained_paths(k3, [{0}, {1}])
    if hand.count != 2:
        return CheckResult("path-count-hand-case", False, f"got {hand.count}")
    full = count_constrained_paths(k3, [set(range(3))])
    if full.count != 3 * 2:
        return CheckResult("path-count-hand-case", False, f"full set: {full.count}")
    empty = count_constrained_paths(k3, [set()])
    if empty.count != 0:
        return CheckResult("path-count-hand-case", False, f"empty set: {empty.count}")
    return CheckResult("path-count-hand-case", True, "K3 hand enumeration matches")


def _random_set_families(g, rng, families: int, max_len: int = 5):
    for _ in range(families):
        t = int(rng.integers(1, max_len + 1))
        yield [
            set(int(v) for v in rng.choice(g.n, size=rng.integers(0, g.n + 1), replace=False))
            for _ in range(t)
        ]


def _check_path_bound_random(seed: int) -> CheckResult:
    graphs_under_test = [
        make_complete(4),
        make_cycle(5),
        parse_graph_spec("random:10:3:seed=1"),
    ]
    rng = _sub_rng(seed, 40)
    checked = 0
    for g in graphs_under_test:
        for sets in _random_set_families(g, rng, 20):
            count_constrained_paths(g, sets)  # raises on a bound violation
            checked += 1
    return CheckResult(
        "path-count-spectral-bound", True, f"{checked} random families within bound"
    )


def _check_avoidance_monte_carlo(seed: int) -> CheckResult:
    rng = _sub_rng(seed, 41)
    for g in (make_complete(4), make_cycle(5), make_torus(3, 2)):
        prof = eigen_profile(g)
        for i, sets in enumerate(_random_set_families(g, rng, 5)):
            bound = avoidance_bound(prof, [len(c) / g.n for c in sets])
            freq = avoidance_frequency(g, sets, 4000, _sub_rng(seed, 100 + i))
            if freq.mean - 3 * freq.std_error > bound:
                return CheckResult(
                    "avoidance-monte-carlo",
                    False,
                    f"{g.label}: frequency {freq.mean:.4f} above bound {bound:.4f}",
                )
    return CheckResult("avoidance-monte-carlo", True, "stay-in-sets frequency within bound")


def spectral_checks(seed: int) -> list[CheckResult]:
    return [
        _check_known_spectra(),
        _check_trace_identity(),
        _check_mixing_times(),
        _check_mixing_monotone(),
        _check_avoidance_bound_values(),
        _check_path_counts(),
        _check_path_bound_random(seed),
        _check_avoidance_monte_carlo(seed),
    ]


# --- dla suite ------------------------------------------------------------------


def _check_first_particle() -> CheckResult:
    graphs_under_test = [
        make_cycle(8),
        make_complete(5),
        make_torus(3, 2),
        make_hypercube(3),
    ]
    for g in graphs_under_test:
        rng = _sub_rng(0, 50)
        for _ in range(200):
            cluster = dla.new_cluster(g)
            out = dla.drop_particle(cluster, rng)
            if out.kappa != 0 or out.H != 1 or cluster.first_reach.get(1) != 1:
                return CheckResult("first-particle-deterministic", False, g.label)
    return CheckResult(
        "first-particle-deterministic", True, "kappa=0, H=1, T_1=1 on 4 bases x200"
    )


def _check_cluster_invariants(seed: int) -> CheckResult:
    g = make_cycle(5)
    cluster = dla.new_cluster(g)
    dla.grow(cluster, _sub_rng(seed, 51), particles=300)
    if sum(cluster.loads) != g.n + cluster.t:
        return CheckResult("cluster-invariants", False, "mass conservation failed")
    if cluster.loads[0] != g.n:
        return CheckResult("cluster-invariants", False, "layer 0 not full")
    for i in range(1, cluster.M):
        if cluster.loads[i] < 1:
            return CheckResult("cluster-invariants", False, f"empty layer {i} below M")
    if any(x > 0 for x in cluster.loads[cluster.M :]):
        return CheckResult("cluster-invariants", False, "occupied layer at or above M")
    times = sorted(cluster.first_reach.items())
    if [m for m, _ in times] != list(range(1, cluster.M)):
        return CheckResult("cluster-invariants", False, "first-reach layers not contiguous")
    if not all(b > a for (_, a), (_, b) in zip(times, times[1:])):
        return CheckResult("cluster-invariants", False, "T_m not strictly increasing")
    return CheckResult("cluster-invariants", True, "loads, mass, and T_m shape hold")


def _check_load_event_identity(seed: int) -> CheckResult:
    g = make_complete(4)
    cluster = dla.new_cluster(g)
    dla.grow(cluster, _sub_rng(seed, 52), particles=200)
    loads_ge: dict[int, int] = {}
    for t, _, h in cluster.stick_log:
        for i in range(1, cluster.M + 1):
            before = loads_ge.get(i, 0)
            after = before + (1 if h >= i else 0)
            incremented = after > before
            if incremented != (h >= i):
                return CheckResult("load-increment-identity", False, f"t={t}, i={i}")
            loads_ge[i] = after
    for i in range(1, cluster.M + 1):
        if loads_ge.get(i, 0) != dla.load_at_least(cluster, i):
            return CheckResult("load-increment-identity", False, f"final L(>={i})")
    return CheckResult(
        "load-increment-identity", True, "L(>=i) increments exactly when H >= i"
    )


def _check_first_hit_oracle(seed: int) -> CheckResult:
    g = make_complete(3)
    cluster = dla.new_cluster(g)
    dla.drop_particle(cluster, _sub_rng(seed, 53))
    oracle = first_hit_distribution(cluster, 40)
    oracle_hi = first_hit_distribution(cluster, 60)
    if total_variation(oracle, oracle_hi) > 1e-9:
        return CheckResult("first-hit-oracle", False, "truncation not converged")
    rng = _sub_rng(seed, 54)
    trials = 20_000
    counts: dict[tuple[int, int], int] = {}
    for _ in range(trials):
        out = dla.probe_particle(cluster, rng)
        counts[(out.stick_g, out.H)] = counts.get((out.stick_g, out.H), 0) + 1
    empirical = {k: v / trials for k, v in counts.items()}
    tv = total_variation(empirical, oracle)
    return CheckResult("first-hit-oracle", tv <= 0.02, f"TV={tv:.4f} at {trials} probes")


def _check_stick_above(seed: int) -> CheckResult:
    g = make_complete(3)
    res = dla.stick_above_frequency(g, layer=1, count=1, trials=3000, seed=_sub_rng(seed, 55))
    if res.bound_check.violated:
        return CheckResult("stick-above-load-bound", False, f"freq {res.summary.mean:.3f}")
    wall = dla.stick_above_frequency(g, layer=1, count=3, trials=200, seed=_sub_rng(seed, 56))
    if wall.summary.mean != 1.0:
        return CheckResult("stick-above-load-bound", False, "wall case not certain")
    return CheckResult(
        "stick-above-load-bound",
        True,
        f"freq {res.summary.mean:.3f} >= 1/3 - 3se; wall case = 1",
    )


def _check_visit_set(seed: int) -> CheckResult:
    g = make_cycle(6)
    res = dla.entry_layer_visit_set(g, trials=20_000, seed=_sub_rng(seed, 57))
    if res.bound_check.violated:
        return CheckResult("entry-layer-visit-set", False, f"mean {res.mean_summary.mean:.3f}")
    gap = abs(res.single_visit.mean - res.single_visit_exact)
    if gap > 3 * res.single_visit.std_error + 1e-9:
        return CheckResult(
            "entry-layer-visit-set", False, f"P(|S|=1) off by {gap:.4f}"
        )
    return CheckResult(
        "entry-layer-visit-set",
        True,
        f"mean {res.mean_summary.mean:.3f} >= {res.bound_check.bound_value:.3f}; "
        f"P(|S|=1) within noise of {res.single_visit_exact:.3f}",
    )


def _check_new_layer_probe(seed: int) -> CheckResult:
    from .experiment import estimate_new_layer_probability

    g = make_complete(3)
    cluster = dla.new_cluster(g)
    dla.drop_particle(cluster, _sub_rng(seed, 58))
    res = estimate_new_layer_probability(g, 5000, _sub_rng(seed, 59), cluster=cluster)
    ok = res.bound_check is not None and not res.bound_check.violated
    return CheckResult(
        "new-layer-probability-bound",
        ok,
        f"frequency {res.summary.mean:.3f} vs bound {res.bound_check.bound_value:.3f}",
    )


def _check_loop_equivalence(seed: int) -> CheckResult:
    g = make_complete(3)
    fair = dla.loop_equivalence_check(g, particles=5, trials=1500, seed=seed + 64)
    mutant = dla.loop_equivalence_check(g, particles=5, trials=1500, seed=seed + 64, mutant=True)
    if not fair.passed:
        return CheckResult(
            "loop-augmentation-equivalence", False, f"equivalence rejected p={fair.chi2.p_value:.4f}"
        )
    if mutant.passed:
        return CheckResult(
            "loop-augmentation-equivalence", False, "negative control not detected"
        )
    return CheckResult(
        "loop-augmentation-equivalence",
        True,
        f"p={fair.chi2.p_value:.3f}; mutant p={mutant.chi2.p_value:.2e}",
    )


def _check_excursion_bound(seed: int) -> CheckResult:
    g = make_cycle(6)
    study = long_excursion_frequency(g, alpha=4.0, trials=20_000, seed=_sub_rng(seed, 61))
    if study.bound_check.violated:
        return CheckResult(
            "long-excursion-bound", False, f"freq {study.positive_long.mean:.4f}"
        )
    if study.symmetry_gap > 3 * study.symmetry_sigma + 1e-9:
        return CheckResult("long-excursion-bound", False, "positive/negative asymmetry")
    return CheckResult(
        "long-excursion-bound",
        True,
        f"freq {study.positive_long.mean:.4f} > {study.bound:.4f} - 3se; symmetric",
    )


def _check_snapshot_roundtrip(seed: int, tmpdir: str | None = None) -> CheckResult:
    import os
    import tempfile

    g = make_cycle(5)
    cluster = dla.new_cluster(g)
    dla.grow(cluster, _sub_rng(seed, 62), particles=120)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "cluster.snap")
        dla.save_snapshot(cluster, path)
        snap = dla.load_snapshot(path)
        rebuilt = dla.cluster_from_snapshot(snap, g)
        path2 = os.path.join(tmp, "cluster2.snap")
        dla.save_snapshot(rebuilt, path2)
        with open(path, "rb") as fa, open(path2, "rb") as fb:
            ok = fa.read() == fb.read()
    return CheckResult("snapshot-roundtrip", ok, "save -> load -> save is bit-exact")


def _check_wall_blocking(seed: int) -> CheckResult:
    g = make_complete(3)
    cluster = dla.new_cluster(g)
    dla.grow(cluster, _sub_rng(seed, 63), particles=400)
    walls = dla.detect_walls(cluster)
    violations = dla.wall_blocking_violations(cluster)
    if violations:
        return CheckResult("wall-blocking", False, f"{len(violations)} sticks below a wall")
    return CheckResult("wall-blocking", True, f"{len(walls)} walls, no stick below any")


def dla_checks(seed: int) -> list[CheckResult]:
    return [
        _check_first_particle(),
        _check_cluster_invariants(seed),
        _check_load_event_identity(seed),
        _check_first_hit_oracle(seed),
        _check_stick_above(seed),
        _check_visit_set(seed),
        _check_new_layer_probe(seed),
        _check_loop_equivalence(seed),
        _check_excursion_bound(seed),
        _check_snapshot_roundtrip(seed),
        _check_wall_blocking(seed),
    ]


def run_suite(suite: str, seed: int = 0) -> list[CheckResult]:
    if suite == "walk1d":
        return walk1d_checks(seed)
    if suite == "spectral":
        return spectral_checks(seed)
    if suite == "dla":
        return dla_checks(seed)
    if suite == "all":
        return walk1d_checks(seed) + spectral_checks(seed) + dla_checks(seed)
    raise ValueError(f"unknown suite {suite!r}; pick one of walk1d, spectral, dla, all")
