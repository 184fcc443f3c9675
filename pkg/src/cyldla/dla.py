"""Cylinder DLA cluster state machine: drops, sticking, loads, snapshots.

The cluster starts as a fully occupied bottom layer.  Each particle enters
at the lowest empty layer M with a uniform base coordinate and walks until
it first occupies a boundary vertex (checked before any step, so an entry
that is already on the boundary sticks with zero steps).

No boundary vertex exists strictly above layer M, so the walk cannot stick
during an excursion above M.  Those excursions are therefore not stepped
through (their length has infinite mean); instead their exact shape is drawn
via :func:`cyldla.cylinder.sample_excursion_shape` and the base coordinate is
advanced in one shot through the spectral transition sampler.  The step
count kappa still reports the full walk length, including fast-forwarded
steps.  The step cap applies to literally simulated steps; a cap hit aborts
the drop with a hard error rather than resampling, which would bias the
sticking distribution.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cylinder import DrawSource, GTransitionSampler, sample_excursion_shape
from .graphs import RegularGraph, add_self_loops
from .stats import BoundCheck, Chi2Result, EstimateSummary, chi_square_two_sample, make_bound_check

DEFAULT_STEP_CAP = 100_000_000
SNAPSHOT_MAGIC = "cyldla v1"


class CapExceededError(RuntimeError):
    """A particle walk exhausted its literal step budget."""

    def __init__(self, message: str, literal_steps: int, kappa: int, min_layer: int):
        super().__init__(message)
        self.literal_steps = literal_steps
        self.kappa = kappa
        self.min_layer = min_layer


@dataclass(frozen=True)
class ExcursionTally:
    """Per-drop counts of completed excursions at the entry layer."""

    positive: int = 0
    negative: int = 0
    flat: int = 0
    positive_long: int = 0
    negative_long: int = 0
    alpha: float | None = None


@dataclass(frozen=True)
class ParticleOutcome:
    t: int
    start_g: int
    kappa: int
    H: int
    stick_g: int
    new_layer: bool
    min_layer_visited: int
    excursions: ExcursionTally


@dataclass(frozen=True)
class GrowthStats:
    """Accumulated history of one cluster."""

    T_m: dict[int, int]
    wall_times: tuple[tuple[int, int], ...]
    H_histogram: Counter
    kappa_histogram: Counter
    final_loads: tuple[int, ...]
    particles: int


class Cluster:
    """Growing cluster on graph x naturals, one occupancy byte per vertex.

    Layer 0 is always full.  ``loads[i]`` counts occupied vertices at layer
    i, ``M`` is the lowest empty layer, ``t`` the number of particles added,
    and ``stick_log`` records (t, vertex, layer) per particle.  Confine one
    cluster to one thread; independent replicas may run concurrently.
    """

    def __init__(self, graph: RegularGraph):
        self.graph = graph
        self.occ: list[bytearray] = [bytearray([1] * graph.n), bytearray(graph.n), bytearray(graph.n)]
        self.loads: list[int] = [graph.n, 0, 0]
        self.M = 1
        self.t = 0
        self.stick_log: list[tuple[int, int, int]] = []
        self.wall_times: list[tuple[int, int]] = []
        self.first_reach: dict[int, int] = {}
        self._kernel: GTransitionSampler | None = None
        self._mutant_kernel: GTransitionSampler | None = None
        self._draws: tuple[np.random.Generator, DrawSource] | None = None

    def kernel(self) -> GTransitionSampler:
        if self._kernel is None:
            self._kernel = GTransitionSampler(self.graph)
        return self._kernel

    def mutant_kernel(self) -> GTransitionSampler:
        """Kernel on the loop-stripped base, used only by the negative control."""
        if self._mutant_kernel is None:
            g = self.graph
            loops = g.loops_per_vertex()
            if len(set(loops)) != 1:
                raise ValueError("mutant walk needs a uniform loop count per vertex")
            stripped = tuple(tuple(u for u in row if u != v) for v, row in enumerate(g.neighbors))
            base = RegularGraph(g.n, g.d - loops[0], stripped, g.label + "-stripped", g.transitive_hint)
            self._mutant_kernel = GTransitionSampler(base)
        return self._mutant_kernel

    def _draw_source(self, rng: np.random.Generator) -> DrawSource:
        if self._draws is None or self._draws[0] is not rng:
            self._draws = (rng, DrawSource(rng, self.graph.d + 2))
        return self._draws[1]

    def _ensure_capacity(self) -> None:
        while len(self.occ) < self.M + 2:
            self.occ.append(bytearray(self.graph.n))
            self.loads.append(0)


def new_cluster(graph: RegularGraph) -> Cluster:
    """Fresh cluster: layer 0 fully occupied, M = 1, no particles."""
    return Cluster(graph)


def is_boundary(cluster: Cluster, pos) -> bool:
    """True iff ``pos`` is unoccupied and adjacent to an occupied vertex.

    Loop slots never make a vertex its own neighbor here: an occupied vertex
    reports False regardless.
    """
    g, z = (pos.g, pos.zeta) if hasattr(pos, "zeta") else pos
    occ = cluster.occ
    depth = len(occ)
    if z < depth and occ[z][g]:
        return False
    if z >= depth:
        return False
    if z > 0 and occ[z - 1][g]:
        return True
    if z + 1 < depth and occ[z + 1][g]:
        return True
    row = occ[z]
    for u in cluster.graph.neighbors[g]:
        if u != g and row[u]:
            return True
    return False


def _walk_to_boundary(
    cluster: Cluster,
    g0: int,
    rng: np.random.Generator,
    cap: int,
    alpha: float | None = None,
    mutant: bool = False,
):
    """Walk from (g0, M) to the first boundary vertex.

    Returns (stick_g, stick_layer, kappa, min_layer, tally, literal_steps).
    Excursions above M are fast-forwarded exactly; everything at or below M
    is stepped literally.  ``mutant`` switches to the negative-control
    semantics where a loop slot resolves to a fair vertical move.
    """
    graph = cluster.graph
    n, d = graph.n, graph.d
    nbrs = graph.neighbors
    occ = cluster.occ
    m_layer = cluster.M
    src = cluster._draw_source(rng)
    if mutant:
        loops = graph.loops_per_vertex()[0]
        vert_prob = (2.0 + loops) / (d + 2)
        kernel = cluster.mutant_kernel()
    else:
        vert_prob = 2.0 / (d + 2)
        kernel = cluster.kernel()

    g, z = g0, m_layer
    kappa = 0
    literal = 0
    min_layer = m_layer
    pos_exc = neg_exc = flat_exc = pos_long = neg_long = 0
    below_g_steps = 0

    while True:
        # sticking check happens at the current position before any step
        row = occ[z]
        if row[g]:
            raise RuntimeError("walk entered an occupied vertex; cluster state is corrupt")
        stuck = (z > 0 and occ[z - 1][g]) or occ[z + 1][g]
        if not stuck:
            for u in nbrs[g]:
                if u != g and row[u]:
                    stuck = True
                    break
        if stuck:
            tally = ExcursionTally(pos_exc, neg_exc, flat_exc, pos_long, neg_long, alpha)
            return g, z, kappa, min_layer, tally, literal
        if literal >= cap:
            raise CapExceededError(
                f"drop exceeded {cap} literal steps (kappa={kappa}, min layer {min_layer})",
                literal,
                kappa,
                min_layer,
            )
        s = src.slot()
        literal += 1
        if s >= 2:
            target = nbrs[g][s - 2]
            if mutant and target == g:
                s = 0 if src.unit() < 0.5 else 1  # loop resolves to a fair vertical move
            else:
                kappa += 1
                if z == m_layer:
                    flat_exc += 1
                else:
                    below_g_steps += 1
                g = target
                continue
        if s == 0 and z == m_layer:
            # excursion strictly above M: no boundary exists there, so draw
            # its exact shape instead of stepping through it
            _, gamma, total = sample_excursion_shape(rng, vert_prob)
            kappa += total
            g = kernel.sample(g, gamma, rng)
            pos_exc += 1
            if alpha is not None and gamma >= alpha:
                pos_long += 1
            continue
        kappa += 1
        if s == 0:
            z += 1
            if z == m_layer:
                neg_exc += 1
                if alpha is not None and below_g_steps >= alpha:
                    neg_long += 1
                below_g_steps = 0
        else:
            if z == 0:
                raise RuntimeError("walk reached the floor layer without sticking")
            z -= 1
            if z < min_layer:
                min_layer = z


def probe_particle(
    cluster: Cluster,
    rng: np.random.Generator,
    cap: int = DEFAULT_STEP_CAP,
    alpha: float | None = None,
    mutant: bool = False,
) -> ParticleOutcome:
    """Walk one particle to the boundary without committing it."""
    g0 = int(rng.integers(0, cluster.graph.n))
    m_before = cluster.M
    stick_g, h, kappa, min_layer, tally, _ = _walk_to_boundary(
        cluster, g0, rng, cap, alpha, mutant
    )
    return ParticleOutcome(
        cluster.t + 1, g0, kappa, h, stick_g, h == m_before, min_layer, tally
    )


def drop_particle(
    cluster: Cluster,
    rng: np.random.Generator,
    cap: int = DEFAULT_STEP_CAP,
    alpha: float | None = None,
) -> ParticleOutcome:
    """Drop one particle, stick it, and update all bookkeeping."""
    outcome = probe_particle(cluster, rng, cap, alpha)
    _commit(cluster, outcome.stick_g, outcome.H)
    return outcome


def _commit(cluster: Cluster, g: int, h: int) -> None:
    cluster.t += 1
    cluster.occ[h][g] = 1
    cluster.loads[h] += 1
    cluster.stick_log.append((cluster.t, g, h))
    if h == cluster.M:
        cluster.first_reach[h] = cluster.t
        cluster.M += 1
        cluster._ensure_capacity()
    if h >= 1 and cluster.loads[h] == cluster.graph.n:
        cluster.wall_times.append((h, cluster.t))


def grow(
    cluster: Cluster,
    rng: np.random.Generator,
    particles: int | None = None,
    target_layer: int | None = None,
    cap: int = DEFAULT_STEP_CAP,
    alpha: float | None = None,
) -> GrowthStats:
    """Drop particles until a budget is spent or a layer is first reached."""
    if particles is None and target_layer is None:
        raise ValueError("need a particle budget or a target layer")
    if particles is not None and particles < 1:
        raise ValueError("particle budget must be >= 1")
    if target_layer is not None and target_layer < 1:
        raise ValueError("target layer must be >= 1")
    h_hist: Counter = Counter()
    kappa_hist: Counter = Counter()
    added = 0
    while True:
        if particles is not None and added >= particles:
            break
        if target_layer is not None and cluster.M > target_layer:
            break
        out = drop_particle(cluster, rng, cap, alpha)
        added += 1
        h_hist[out.H] += 1
        kappa_hist[out.kappa] += 1
    return GrowthStats(
        T_m=dict(cluster.first_reach),
        wall_times=tuple(cluster.wall_times),
        H_histogram=h_hist,
        kappa_histogram=kappa_hist,
        final_loads=tuple(cluster.loads),
        particles=cluster.t,
    )


def load(cluster: Cluster, i: int) -> int:
    """L(i): occupied count at layer i."""
    if i < 0:
        raise ValueError("layer index must be >= 0")
    return cluster.loads[i] if i < len(cluster.loads) else 0


def load_at_least(cluster: Cluster, i: int) -> int:
    """L(>=i): total load on layers >= i (zero at and above M)."""
    if i < 0:
        raise ValueError("layer index must be >= 0")
    return sum(cluster.loads[i:])


def load_upto(cluster: Cluster, i: int) -> int:
    """L(<=i): total load on layers 1..i, excluding the full layer 0."""
    if i < 0:
        raise ValueError("layer index must be >= 0")
    return sum(cluster.loads[1 : i + 1])


def density_upto(cluster: Cluster, m: int) -> float:
    """D(m) = L(<=m) / (m n) against the current occupancy."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return load_upto(cluster, m) / (m * cluster.graph.n)


def detect_walls(cluster: Cluster) -> list[int]:
    """Layers i >= 1 whose load equals n; they block all passage below."""
    return [i for i in range(1, len(cluster.loads)) if cluster.loads[i] == cluster.graph.n]


def wall_blocking_violations(cluster: Cluster) -> list[tuple[int, int, int]]:
    """Sticks strictly below an earlier-completed wall: (t, layer, wall)."""
    violations = []
    for wall_layer, wall_t in cluster.wall_times:
        for t, _, layer in cluster.stick_log:
            if t > wall_t and layer < wall_layer:
                violations.append((t, layer, wall_layer))
    return violations


# --- synthetic-state estimators -----------------------------------------------


def synthetic_cluster(graph: RegularGraph, layer: int, count: int) -> Cluster:
    """Deterministic cluster with vertices 0..count-1 occupied at layers 1..layer.

    Column-wise occupation keeps every occupied vertex adjacent to an
    occupied vertex below it, so the cluster is connected by construction.
    """
    if not 1 <= count <= graph.n:
        raise ValueError(f"count must be in [1, n], got {count}")
    if layer < 1:
        raise ValueError("layer must be >= 1")
    cluster = new_cluster(graph)
    order = 0
    for z in range(1, layer + 1):
        for g in range(count):
            order += 1
            cluster.t += 1
            while len(cluster.occ) < z + 3:
                cluster.occ.append(bytearray(graph.n))
                cluster.loads.append(0)
            cluster.occ[z][g] = 1
            cluster.loads[z] += 1
            cluster.stick_log.append((order, g, z))
            if cluster.loads[z] == graph.n:
                cluster.wall_times.append((z, order))
        cluster.first_reach[z] = (z - 1) * count + 1
    cluster.M = layer + 1
    cluster._ensure_capacity()
    return cluster


@dataclass(frozen=True)
class StickAboveResult:
    summary: EstimateSummary
    bound_check: BoundCheck
    layer: int
    count: int


def stick_above_frequency(
    graph: RegularGraph,
    layer: int,
    count: int,
    trials: int,
    seed,
    cap: int = DEFAULT_STEP_CAP,
) -> StickAboveResult:
    """Frequency of probes sticking above a layer holding ``count`` vertices.

    A synthetic cluster with load ``count`` on layers 1..layer is probed by
    independent particles; the frequency of sticking at layer+1 or higher is
    checked against the lower bound count / n.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cluster = synthetic_cluster(graph, layer, count)
    hits = 0
    for _ in range(trials):
        out = probe_particle(cluster, rng, cap)
        if out.H >= layer + 1:
            hits += 1
    summary = EstimateSummary.from_bernoulli(hits, trials)
    check = make_bound_check(
        f"stick-above-layer-{layer}-load-{count}",
        count / graph.n,
        ">=",
        summary,
    )
    return StickAboveResult(summary, check, layer, count)


@dataclass(frozen=True)
class VisitSetResult:
    mean_summary: EstimateSummary
    bound_check: BoundCheck
    single_visit: EstimateSummary
    single_visit_exact: float


def entry_layer_visit_set(graph: RegularGraph, trials: int, seed) -> VisitSetResult:
    """Distinct base vertices visited before the walk first leaves its layer.

    The mean set size is checked against the lower bound (2d+2)/(d+2); the
    chance of leaving immediately (set size 1) equals 2/(d+2) exactly.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = graph.d
    nbrs = graph.neighbors
    src = DrawSource(rng, d + 2)
    sizes = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        g = int(rng.integers(0, graph.n))
        seen = {g}
        while True:
            s = src.slot()
            if s < 2:
                break
            g = nbrs[g][s - 2]
            seen.add(g)
        sizes[i] = len(seen)
    summary = EstimateSummary.from_samples(sizes)
    check = make_bound_check(
        "entry-layer-visit-set-mean", (2 * d + 2) / (d + 2), ">=", summary
    )
    singles = EstimateSummary.from_bernoulli(int((sizes == 1).sum()), trials)
    return VisitSetResult(summary, check, singles, 2 / (d + 2))


# --- loop-augmentation equivalence --------------------------------------------


def collect_height_tuples(
    graph: RegularGraph,
    particles: int,
    trials: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_STEP_CAP,
    mutant: bool = False,
) -> Counter:
    """Counter of stick-height tuples over independent short processes."""
    counts: Counter = Counter()
    for _ in range(trials):
        cluster = new_cluster(graph)
        heights = []
        for _ in range(particles):
            out = probe_particle(cluster, rng, cap, mutant=mutant)
            _commit(cluster, out.stick_g, out.H)
            heights.append(out.H)
        counts[tuple(heights)] += 1
    return counts


@dataclass(frozen=True)
class LoopEquivalenceReport:
    chi2: Chi2Result
    passed: bool
    trials: int
    particles: int
    mutant: bool


def loop_equivalence_check(
    graph: RegularGraph,
    particles: int,
    trials: int,
    seed: int,
    cap: int = DEFAULT_STEP_CAP,
    mutant: bool = False,
    p_threshold: float = 0.01,
) -> LoopEquivalenceReport:
    """Two-sample test: growth on G versus on G with one loop per vertex.

    The loop-augmented side should be distributed identically to the plain
    side.  With ``mutant=True`` the augmented side resolves loop slots into
    fair vertical moves instead (a deliberately broken semantics used as a
    negative control), which the test is expected to detect.
    """
    rng_a = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    rng_b = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    counts_a = collect_height_tuples(graph, particles, trials, rng_a, cap)
    counts_b = collect_height_tuples(
        add_self_loops(graph), particles, trials, rng_b, cap, mutant=mutant
    )
    chi2 = chi_square_two_sample(counts_a, counts_b)
    return LoopEquivalenceReport(chi2, chi2.p_value > p_threshold, trials, particles, mutant)


# --- snapshots ------------------------------------------------------------------


@dataclass(frozen=True)
class SnapshotData:
    n: int
    d: int
    t: int
    M: int
    entries: tuple[tuple[int, int, int], ...]  # (layer, vertex, stick_order)


def snapshot_lines(cluster: Cluster) -> list[str]:
    header = f"{SNAPSHOT_MAGIC} n={cluster.graph.n} d={cluster.graph.d} t={cluster.t} M={cluster.M}"
    entries = [(0, v, 0) for v in range(cluster.graph.n)]
    entries.extend((layer, vertex, order) for order, vertex, layer in cluster.stick_log)
    entries.sort(key=lambda e: (e[2], e[1]))
    return [header] + [f"{layer} {vertex} {order}" for layer, vertex, order in entries]


def save_snapshot(cluster: Cluster, path) -> None:
    if len(cluster.stick_log) != cluster.t:
        raise ValueError("snapshot needs the full stick log")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(snapshot_lines(cluster)) + "\n")


def load_snapshot(path) -> SnapshotData:
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or not lines[0].startswith(SNAPSHOT_MAGIC):
        raise ValueError("not a cluster snapshot file")
    fields = dict(part.split("=") for part in lines[0][len(SNAPSHOT_MAGIC) :].split())
    entries = []
    for line in lines[1:]:
        layer, vertex, order = (int(x) for x in line.split())
        entries.append((layer, vertex, order))
    return SnapshotData(
        int(fields["n"]), int(fields["d"]), int(fields["t"]), int(fields["M"]), tuple(entries)
    )


def cluster_from_snapshot(snap: SnapshotData, graph: RegularGraph) -> Cluster:
    if graph.n != snap.n or graph.d != snap.d:
        raise ValueError("graph does not match snapshot dimensions")
    cluster = new_cluster(graph)
    replay = sorted(
        (e for e in snap.entries if e[2] > 0), key=lambda e: e[2]
    )
    for layer, vertex, order in replay:
        if order != cluster.t + 1:
            raise ValueError("snapshot stick orders are not consecutive")
        if layer > cluster.M:
            raise ValueError("snapshot stick order skips layers")
        _commit(cluster, vertex, layer)
    if cluster.M != snap.M or cluster.t != snap.t:
        raise ValueError("snapshot header disagrees with its entries")
    return cluster


__all__ = [
    "CapExceededError",
    "Cluster",
    "DEFAULT_STEP_CAP",
    "ExcursionTally",
    "GrowthStats",
    "LoopEquivalenceReport",
    "ParticleOutcome",
    "SnapshotData",
    "StickAboveResult",
    "VisitSetResult",
    "cluster_from_snapshot",
    "collect_height_tuples",
    "density_upto",
    "detect_walls",
    "drop_particle",
    "entry_layer_visit_set",
    "grow",
    "is_boundary",
    "load",
    "load_at_least",
    "load_snapshot",
    "load_upto",
    "loop_equivalence_check",
    "new_cluster",
    "probe_particle",
    "save_snapshot",
    "snapshot_lines",
    "stick_above_frequency",
    "synthetic_cluster",
    "wall_blocking_violations",
]
