"""Monte-Carlo sweeps: growth times, densities, probe probabilities, bounds.

Replicas of the growth process run on disjoint random streams derived from a
base seed by spawn keys, so merged results are reproducible and independent
of execution order.  Execution here is sequential; replicas share no state
and may be farmed out externally without changing any output.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import dla
from .dla import Cluster, GrowthStats
from .graphs import RegularGraph, parse_graph_spec
from .spectral import check_fast_mixing, compute_profile, eigen_profile
from .stats import BoundCheck, EstimateSummary, make_bound_check

CSV_MAGIC = "cyldla v1"


def replica_rng(base_seed: int, index: int) -> np.random.Generator:
    """Stream for one replica: PCG64 seeded by (base_seed, spawn_key=(index,))."""
    return np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(index,)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Description of one Monte-Carlo sweep."""

    graph_spec: str
    target_layers: tuple[int, ...]
    replicas: int = 30
    base_seed: int = 0
    step_cap: int = dla.DEFAULT_STEP_CAP
    density_overshoot: int | None = None  # None: ceil(sqrt(max m)) + 10
    alphas: tuple[float, ...] = ()
    probe_trials: int = 0
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.target_layers:
            raise ValueError("need at least one target layer")
        if any(m < 1 for m in self.target_layers):
            raise ValueError("target layers must be >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        phi = self.overshoot()
        if phi < 1:
            raise ValueError("density overshoot must be >= 1")
        if phi / max(self.target_layers) > 0.5:
            warnings.warn(
                f"overshoot {phi} exceeds half the largest target layer; "
                "density reads will be dominated by the growth frontier",
                stacklevel=2,
            )

    def overshoot(self) -> int:
        if self.density_overshoot is not None:
            return self.density_overshoot
        return math.ceil(math.sqrt(max(self.target_layers))) + 10

    def resolved(self) -> dict:
        return {
            "graph_spec": self.graph_spec,
            "target_layers": list(self.target_layers),
            "replicas": self.replicas,
            "base_seed": self.base_seed,
            "step_cap": self.step_cap,
            "density_overshoot": self.overshoot(),
            "alphas": list(self.alphas),
            "probe_trials": self.probe_trials,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True)
class ReplicaRun:
    index: int
    stats: GrowthStats
    cluster: Cluster


def run_replicas(
    graph: RegularGraph, grow_to_layer: int, replicas: int, base_seed: int, cap: int
) -> list[ReplicaRun]:
    """Independent growth runs, each until ``grow_to_layer`` is first reached."""
    runs = []
    for r in range(replicas):
        cluster = dla.new_cluster(graph)
        stats = dla.grow(
            cluster, replica_rng(base_seed, r), target_layer=grow_to_layer, cap=cap
        )
        runs.append(ReplicaRun(r, stats, cluster))
    return runs


def merge_growth_samples(runs: list[ReplicaRun], targets) -> dict[int, np.ndarray]:
    """Per-target arrays of T_m across replicas; invariant under run order."""
    ordered = sorted(runs, key=lambda r: r.index)
    out = {}
    for m in targets:
        out[m] = np.array([run.stats.T_m[m] for run in ordered], dtype=np.int64)
    return out


def growth_bound_checks(
    graph: RegularGraph, m: int, summary: EstimateSummary
) -> list[BoundCheck]:
    """Bound dashboard for one E[T_m] estimate."""
    n = graph.n
    checks = [
        make_bound_check(
            f"T_{m}-upper-4mn-over-loglog-n",
            4.0 * m * n / math.log(math.log(n)) if n > math.e else math.inf,
            "<=",
            summary,
            applicability=(
                "holds for fast-mixing bases beyond an uncalibrated size threshold; "
                "reported for all n"
            ),
        ),
        make_bound_check(f"T_{m}-trivial-lower", float(m), ">=", summary),
    ]
    if graph.transitive_hint:
        checks.append(
            make_bound_check(
                f"T_{m}-transitive-upper",
                m * (graph.d + 2) * n / (2.0 * graph.d + 2.0),
                "<=",
                summary,
            )
        )
    return checks


@dataclass(frozen=True)
class GrowthEstimate:
    m: int
    summary: EstimateSummary
    samples: np.ndarray
    bound_checks: tuple[BoundCheck, ...]


@dataclass(frozen=True)
class GrowthResult:
    config: ExperimentConfig
    graph: RegularGraph
    per_layer: tuple[GrowthEstimate, ...]
    pathwise_monotone: bool
    cap_hits: int = 0


def estimate_T(config: ExperimentConfig, graph: RegularGraph | None = None) -> GrowthResult:
    """Estimate E[T_m] for every target layer with its bound dashboard."""
    graph = graph or parse_graph_spec(config.graph_spec)
    max_m = max(config.target_layers)
    runs = run_replicas(graph, max_m, config.replicas, config.base_seed, config.step_cap)
    samples = merge_growth_samples(runs, sorted(config.target_layers))
    monotone = all(
        _strictly_increasing([run.stats.T_m[m] for m in range(1, max_m + 1)])
        for run in runs
    )
    estimates = []
    for m in sorted(config.target_layers):
        summary = EstimateSummary.from_samples(samples[m])
        estimates.append(
            GrowthEstimate(m, summary, samples[m], tuple(growth_bound_checks(graph, m, summary)))
        )
    return GrowthResult(config, graph, tuple(estimates), monotone)


def _strictly_increasing(xs) -> bool:
    return all(b > a for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True)
class ConsistencyCheck:
    """Two estimates expected to agree within a combined margin."""

    name: str
    left: float
    right: float
    combined_sigma: float
    sigmas: float
    ok: bool


@dataclass(frozen=True)
class DensityEstimate:
    m: int
    phi: int
    summary: EstimateSummary
    samples: np.ndarray
    t_prime_scaled: EstimateSummary
    bound_checks: tuple[BoundCheck, ...]
    consistency: ConsistencyCheck
    first_touch_consistency: ConsistencyCheck
    leak_note: str


@dataclass(frozen=True)
class DensityResult:
    config: ExperimentConfig
    graph: RegularGraph
    grow_to_layer: int
    per_layer: tuple[DensityEstimate, ...]
    runs: tuple[ReplicaRun, ...]


def estimate_density(config: ExperimentConfig, graph: RegularGraph | None = None) -> DensityResult:
    """Estimate D(m) after growing past m, with bounds and consistency checks.

    Every replica grows once to max(target) + overshoot; D(m) is then read
    from the final occupancy, so each target enjoys at least the configured
    overshoot.  Two density-vs-growth consistency checks accompany each
    estimate, both with index-matched normalization (the ratios converge to
    the same limit): D(m) against T_{m'}/(m' n) over the grown range, and
    D(m) against T_m/(m n) at first touch.  The per-particle leak bound
    past the overshoot is reported, never inverted.
    """
    graph = graph or parse_graph_spec(config.graph_spec)
    m_prime = max(config.target_layers) + config.overshoot()
    runs = run_replicas(graph, m_prime, config.replicas, config.base_seed, config.step_cap)
    gap = eigen_profile(graph).gap
    n = graph.n
    per_layer = []
    for m in sorted(config.target_layers):
        phi = m_prime - m
        d_samples = np.array([dla.density_upto(run.cluster, m) for run in runs])
        t_prime_samples = np.array(
            [run.stats.T_m[m_prime] / (m_prime * n) for run in runs], dtype=np.float64
        )
        t_touch_samples = np.array(
            [run.stats.T_m[m] / (m * n) for run in runs], dtype=np.float64
        )
        summary = EstimateSummary.from_samples(d_samples)
        t_scaled = EstimateSummary.from_samples(t_prime_samples)
        t_touch = EstimateSummary.from_samples(t_touch_samples)
        checks = []
        if graph.transitive_hint:
            checks.append(
                make_bound_check(
                    f"D_{m}-transitive-upper",
                    (graph.d + 2) / (2.0 * graph.d + 2.0),
                    "<=",
                    summary,
                )
            )
        consistency = _consistency_check(
            f"D_{m}-vs-T_{m_prime}/({m_prime}n)", summary, t_scaled
        )
        first_touch = _consistency_check(f"D_{m}-vs-T_{m}/({m}n)", summary, t_touch)
        per_particle_leak = 3.0 * math.exp(-gap * phi / (8.0 * n))
        leak_note = (
            f"per-particle probability of sticking at or below layer {m} after the "
            f"cluster passed layer {m_prime} is < {per_particle_leak:.6g} "
            f"(spectral gap {gap:.6g}, overshoot {phi}); crude whole-process bound "
            f"multiplies by (n+1)*(d+2)^(n-1)*n^n and is vacuous at this scale"
        )
        per_layer.append(
            DensityEstimate(
                m,
                phi,
                summary,
                d_samples,
                t_scaled,
                tuple(checks),
                consistency,
                first_touch,
                leak_note,
            )
        )
    return DensityResult(config, graph, m_prime, tuple(per_layer), tuple(runs))


def _consistency_check(
    name: str, left: EstimateSummary, right: EstimateSummary, sigmas: float = 3.0
) -> ConsistencyCheck:
    combined = math.sqrt(left.std_error**2 + right.std_error**2)
    diff = abs(left.mean - right.mean)
    return ConsistencyCheck(name, left.mean, right.mean, combined, sigmas, diff <= sigmas * combined)


@dataclass(frozen=True)
class NewLayerResult:
    summary: EstimateSummary
    bound_check: BoundCheck | None
    boundary_top: int
    descriptive_upper: float
    outcomes: tuple


def estimate_new_layer_probability(
    graph: RegularGraph,
    trials: int,
    seed,
    cluster: Cluster | None = None,
    cap: int = dla.DEFAULT_STEP_CAP,
) -> NewLayerResult:
    """Probe frequency of sticking at the lowest empty layer of a fixed state.

    The state is restored for every trial (probes never commit).  For
    vertex-transitive bases the frequency is checked against the lower bound
    (2d+2)/((d+2)n).  The descriptive upper reference value
    |boundary at top layer| / n^(1/10) is reported without a verdict since
    its constant is uncalibrated.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cluster = cluster if cluster is not None else dla.new_cluster(graph)
    m_layer = cluster.M
    hits = 0
    outcomes = []
    for i in range(trials):
        out = dla.probe_particle(cluster, rng, cap)
        if out.new_layer:
            hits += 1
        outcomes.append((i, out.kappa, out.H, out.new_layer, out.min_layer_visited))
    summary = EstimateSummary.from_bernoulli(hits, trials)
    check = None
    if graph.transitive_hint:
        check = make_bound_check(
            "new-layer-probability-lower",
            (2.0 * graph.d + 2.0) / ((graph.d + 2.0) * graph.n),
            ">=",
            summary,
        )
    boundary_top = sum(1 for g in range(graph.n) if cluster.occ[m_layer - 1][g])
    return NewLayerResult(
        summary, check, boundary_top, boundary_top / graph.n**0.1, tuple(outcomes)
    )


@dataclass(frozen=True)
class Diagnostics:
    mu: int
    nu: float
    kappa_threshold: float
    kappa_small_fraction: EstimateSummary
    regime: str


def diagnostics(
    graph: RegularGraph,
    trials: int,
    seed,
    cluster: Cluster | None = None,
    cap: int = dla.DEFAULT_STEP_CAP,
) -> Diagnostics:
    """Classify a cluster state by how quickly probe particles stick.

    mu = floor(log n / (4 loglog n)) and nu = log n; the reported fraction
    is the empirical probability that a probe sticks within mu^2/4 steps.
    States split into a small-kappa regime (fraction >= 1/4) and a
    many-steps regime.
    """
    n = graph.n
    if n < 16:
        raise ValueError("diagnostics need n >= 16")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cluster = cluster if cluster is not None else dla.new_cluster(graph)
    mu = math.floor(math.log(n) / (4.0 * math.log(math.log(n))))
    nu = math.log(n)
    threshold = mu * mu / 4.0
    hits = 0
    for _ in range(trials):
        out = dla.probe_particle(cluster, rng, cap)
        if out.kappa <= threshold:
            hits += 1
    fraction = EstimateSummary.from_bernoulli(hits, trials)
    regime = "small-kappa" if fraction.mean >= 0.25 else "many-steps"
    return Diagnostics(mu, nu, threshold, fraction, regime)


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    intercept: float
    residual_norm: float
    ns: tuple[int, ...]
    t_over_m: tuple[float, ...]


def fit_gamma(ns, t_over_m) -> GammaFit:
    """Least-squares exponent of E[T_m]/m against the base size."""
    ns = list(ns)
    ys = [float(v) for v in t_over_m]
    finite = [(n, y) for n, y in zip(ns, ys) if math.isfinite(y) and y > 0]
    if len(finite) < 3:
        raise ValueError("need at least 3 finite positive points to fit an exponent")
    x = np.log([n for n, _ in finite])
    y = np.log([y for _, y in finite])
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    res = float(np.sqrt(residuals[0])) if residuals.size else 0.0
    return GammaFit(
        float(coeffs[0]),
        float(coeffs[1]),
        res,
        tuple(n for n, _ in finite),
        tuple(y for _, y in finite),
    )


def fit_growth_exponent(
    family_specs,
    m: int,
    replicas: int,
    base_seed: int,
    cap: int = dla.DEFAULT_STEP_CAP,
) -> GammaFit:
    """Fit E[T_m] ~ m * n^gamma across a family of base graphs.

    Exploratory only: the fit is reported with its residual norm and no
    pass/fail verdict.
    """
    specs = list(family_specs)
    if len(specs) < 3:
        raise ValueError("need at least 3 family members")
    ns, ys = [], []
    for i, spec in enumerate(specs):
        config = ExperimentConfig(
            graph_spec=spec,
            target_layers=(m,),
            replicas=replicas,
            base_seed=base_seed + i,
            step_cap=cap,
            density_overshoot=1,  # growth-only run, the overshoot is unused
        )
        result = estimate_T(config)
        ns.append(result.graph.n)
        ys.append(result.per_layer[0].summary.mean / m)
    return fit_gamma(ns, ys)


@dataclass(frozen=True)
class DashboardRow:
    spec: str
    n: int
    d: int
    mixing_time: int | str
    fast_mixing: BoundCheck
    growth: GrowthResult


@dataclass(frozen=True)
class DashboardResult:
    rows: tuple[DashboardRow, ...]
    gamma_fit: GammaFit


def bound_dashboard(
    family_specs,
    m: int,
    replicas: int,
    base_seed: int,
    cap: int = dla.DEFAULT_STEP_CAP,
    mixing_cap: int = 10_000,
) -> DashboardResult:
    """Run the full bound dashboard over a graph family.

    Emits, per base: the mixing time, the fast-mixing hypothesis check with
    its applicability caveat, and the growth-time estimates with their
    bound checks; then the family-wide growth exponent fit.
    """
    rows = []
    for i, spec in enumerate(family_specs):
        graph = parse_graph_spec(spec)
        profile = compute_profile(graph, cap=mixing_cap)
        fast = check_fast_mixing(profile) if isinstance(profile.mixing_time, int) else None
        if fast is None:
            fast = BoundCheck(
                "fast-mixing-hypothesis", math.nan, "<=", math.nan, 0.0,
                "inconclusive-within-ci", "mixing-time search exceeded its cap",
            )
        config = ExperimentConfig(
            graph_spec=spec,
            target_layers=tuple(range(1, m + 1)),
            replicas=replicas,
            base_seed=base_seed + i,
            step_cap=cap,
            density_overshoot=1,  # growth-only run, the overshoot is unused
        )
        growth = estimate_T(config, graph)
        rows.append(
            DashboardRow(spec, graph.n, graph.d, profile.mixing_time, fast, growth)
        )
    ns = [row.n for row in rows]
    ys = [row.growth.per_layer[-1].summary.mean / m for row in rows]
    return DashboardResult(tuple(rows), fit_gamma(ns, ys))


# --- CSV output -----------------------------------------------------------------


def _write_csv(path: str, config_hash: str, header: str, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# {CSV_MAGIC} config_hash={config_hash}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


def growth_csv_rows(result: DensityResult) -> list[tuple]:
    """Schema-A rows (replica, m, T_m) from a density run."""
    targets = sorted(result.config.target_layers)
    return [(run.index, m, run.stats.T_m[m]) for run in result.runs for m in targets]


def density_csv_rows(result: DensityResult) -> list[tuple]:
    """Schema-B rows (replica, m, phi, D_m) from a density run."""
    targets = sorted(result.config.target_layers)
    by_m = {est.m: est for est in result.per_layer}
    return [
        (run.index, m, by_m[m].phi, repr(float(by_m[m].samples[i])))
        for i, run in enumerate(result.runs)
        for m in targets
    ]


@dataclass(frozen=True)
class SweepOutputs:
    growth_csv: str
    density_csv: str
    probes_csv: str | None


def run_sweep(config: ExperimentConfig) -> SweepOutputs:
    """Run the configured sweep and write its CSV files.

    growth.csv holds per-replica first-reach times (replica, m, T_m);
    density.csv holds per-replica density reads (replica, m, phi, D_m);
    probes.csv (only when probe_trials > 0) holds independent probe outcomes
    on the grown state of replica 0 (trial, kappa, H, new_layer, min_layer).
    Outputs are byte-stable for a fixed config; partially written files are
    removed on failure.
    """
    if config.output_dir is None:
        raise ValueError("config needs an output_dir")
    os.makedirs(config.output_dir, exist_ok=True)
    chash = config.config_hash()
    result = estimate_density(config)
    growth_path = os.path.join(config.output_dir, "growth.csv")
    density_path = os.path.join(config.output_dir, "density.csv")
    probes_path = os.path.join(config.output_dir, "probes.csv")
    written = []
    try:
        _write_csv(growth_path, chash, "replica,m,T_m", growth_csv_rows(result))
        written.append(growth_path)
        _write_csv(density_path, chash, "replica,m,phi,D_m", density_csv_rows(result))
        written.append(density_path)
        if config.probe_trials > 0:
            probe = estimate_new_layer_probability(
                result.graph,
                config.probe_trials,
                replica_rng(config.base_seed, config.replicas),
                cluster=result.runs[0].cluster,
                cap=config.step_cap,
            )
            probe_rows = [
                (trial, kappa, h, int(new), min_layer)
                for trial, kappa, h, new, min_layer in probe.outcomes
            ]
            _write_csv(probes_path, chash, "trial,kappa,H,new_layer,min_layer", probe_rows)
            written.append(probes_path)
            return SweepOutputs(growth_path, density_path, probes_path)
        return SweepOutputs(growth_path, density_path, None)
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
