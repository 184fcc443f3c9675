import math
from collections import Counter

import numpy as np
import pytest

from cyldla import dla
from cyldla.dla import (
    CapExceededError,
    cluster_from_snapshot,
    collect_height_tuples,
    density_upto,
    detect_walls,
    drop_particle,
    entry_layer_visit_set,
    grow,
    is_boundary,
    load,
    load_at_least,
    load_snapshot,
    load_upto,
    loop_equivalence_check,
    new_cluster,
    probe_particle,
    save_snapshot,
    stick_above_frequency,
    synthetic_cluster,
    wall_blocking_violations,
)
from cyldla.graphs import make_complete, make_cycle, make_hypercube, make_torus
from cyldla.oracles import first_hit_distribution, total_variation


def test_new_cluster_state():
    g = make_cycle(4)
    c = new_cluster(g)
    assert load(c, 0) == 4 and c.M == 1 and c.t == 0
    assert sum(c.loads) == g.n
    assert density_upto(c, 1) == 0.0 and density_upto(c, 7) == 0.0


def test_is_boundary_fresh():
    c = new_cluster(make_cycle(4))
    assert all(is_boundary(c, (v, 1)) for v in range(4))
    assert not any(is_boundary(c, (v, 2)) for v in range(4))
    assert not is_boundary(c, (0, 0))  # occupied


def test_first_particle_always_layer_one():
    for g in (make_cycle(8), make_complete(5), make_torus(3, 2), make_hypercube(3)):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = new_cluster(g)
            out = drop_particle(c, rng)
            assert out.kappa == 0 and out.H == 1 and out.new_layer
            assert c.first_reach[1] == 1


def test_second_particle_above_first_sticks_immediately():
    g = make_cycle(4)
    rng = np.random.default_rng(1)
    c = new_cluster(g)
    first = drop_particle(c, rng)
    same_column = 0
    for _ in range(500):
        out = probe_particle(c, rng)
        if out.start_g == first.stick_g:
            same_column += 1
            assert out.kappa == 0 and out.H == 2 and out.new_layer
    assert same_column > 0


def test_new_layer_iff_sticks_at_previous_m():
    g = make_cycle(5)
    rng = np.random.default_rng(2)
    c = new_cluster(g)
    for _ in range(300):
        m_before = c.M
        out = drop_particle(c, rng)
        assert out.new_layer == (out.H == m_before)
        assert 1 <= out.H <= m_before


def test_grow_budget_and_conservation():
    g = make_cycle(6)
    c = new_cluster(g)
    stats = grow(c, np.random.default_rng(3), particles=120)
    assert c.t == 120 and stats.particles == 120
    assert sum(c.loads) == g.n + 120
    assert load_at_least(c, 1) == 120
    for i in range(1, c.M):
        assert load(c, i) >= 1
    assert all(x == 0 for x in c.loads[c.M :])
    assert load(c, 0) == g.n


def test_grow_until_first_layer_is_single_particle():
    c = new_cluster(make_cycle(4))
    grow(c, np.random.default_rng(4), target_layer=1)
    assert c.t == 1


def test_loads_and_density_accessors():
    g = make_cycle(4)
    c = new_cluster(g)
    assert load_at_least(c, 1) == 0
    grow(c, np.random.default_rng(5), particles=40)
    assert load_upto(c, 3) == sum(c.loads[1:4])
    m = c.M
    assert load_at_least(c, 2) == sum(c.loads[2:m])
    for i in range(1, m + 2):
        assert load_upto(c, i) <= c.t
    single = new_cluster(g)
    drop_particle(single, np.random.default_rng(6))
    assert density_upto(single, 1) == pytest.approx(1 / g.n)


def test_density_of_full_prefix_is_one():
    g = make_complete(3)
    c = synthetic_cluster(g, layer=4, count=3)
    assert density_upto(c, 4) == 1.0
    assert detect_walls(c) == [1, 2, 3, 4]


def test_detect_walls_fresh_empty():
    assert detect_walls(new_cluster(make_cycle(5))) == []


def test_wall_blocking_holds_under_growth():
    c = new_cluster(make_complete(3))
    grow(c, np.random.default_rng(7), particles=400)
    assert detect_walls(c)  # narrow base clogs repeatedly
    assert wall_blocking_violations(c) == []


def test_stick_log_determinism():
    g = make_cycle(6)
    a = new_cluster(g)
    grow(a, np.random.default_rng(11), particles=150)
    b = new_cluster(g)
    grow(b, np.random.default_rng(11), particles=150)
    assert a.stick_log == b.stick_log
    assert a.first_reach == b.first_reach


def test_probe_does_not_mutate():
    g = make_cycle(5)
    c = new_cluster(g)
    grow(c, np.random.default_rng(12), particles=30)
    before = ([bytes(row) for row in c.occ], list(c.loads), c.M, c.t)
    rng = np.random.default_rng(13)
    for _ in range(200):
        probe_particle(c, rng)
    after = ([bytes(row) for row in c.occ], list(c.loads), c.M, c.t)
    assert before == after


def test_first_hit_distribution_matches_oracle():
    c = new_cluster(make_complete(3))
    drop_particle(c, np.random.default_rng(14))
    oracle = first_hit_distribution(c, 40)
    assert total_variation(oracle, first_hit_distribution(c, 60)) < 1e-9
    rng = np.random.default_rng(15)
    trials = 20_000
    counts = Counter()
    for _ in range(trials):
        out = probe_particle(c, rng)
        counts[(out.stick_g, out.H)] += 1
    emp = {k: v / trials for k, v in counts.items()}
    assert total_variation(emp, oracle) < 0.02


def test_first_hit_oracle_on_grown_cluster():
    # the oracle also pins down the simulator on a bigger, irregular state
    c = new_cluster(make_cycle(4))
    grow(c, np.random.default_rng(16), particles=12)
    oracle = first_hit_distribution(c, 50)
    rng = np.random.default_rng(17)
    trials = 20_000
    counts = Counter()
    for _ in range(trials):
        out = probe_particle(c, rng)
        counts[(out.stick_g, out.H)] += 1
    emp = {k: v / trials for k, v in counts.items()}
    assert total_variation(emp, oracle) < 0.02


def test_synthetic_cluster_shape():
    g = make_complete(4)
    c = synthetic_cluster(g, layer=2, count=2)
    assert c.M == 3 and c.t == 4
    assert load(c, 1) == 2 and load(c, 2) == 2
    with pytest.raises(ValueError):
        synthetic_cluster(g, layer=1, count=5)


def test_stick_above_wall_case():
    g = make_complete(4)
    res = dla.stick_above_frequency(g, layer=2, count=4, trials=300, seed=18)
    assert res.summary.mean == 1.0


def test_stick_above_bound_and_monotonicity():
    g = make_complete(4)
    freqs = []
    for m in (1, 2, 3):
        res = stick_above_frequency(g, layer=2, count=m, trials=4000, seed=19)
        assert not res.bound_check.violated
        assert res.bound_check.bound_value == pytest.approx(m / 4)
        freqs.append((res.summary.mean, res.summary.std_error))
    for (lo, lo_se), (hi, hi_se) in zip(freqs, freqs[1:]):
        assert hi >= lo - 3 * math.sqrt(lo_se**2 + hi_se**2)


def test_entry_layer_visit_set_bounds():
    res = entry_layer_visit_set(make_cycle(6), trials=20_000, seed=20)
    assert res.bound_check.bound_value == pytest.approx(1.5)
    assert not res.bound_check.violated
    assert res.single_visit_exact == pytest.approx(0.5)
    gap = abs(res.single_visit.mean - res.single_visit_exact)
    assert gap <= 3 * res.single_visit.std_error
    assert res.mean_summary.mean >= 1.0


def test_loop_equivalence_pass_and_mutant_fail():
    g = make_complete(3)
    fair = loop_equivalence_check(g, particles=6, trials=2000, seed=21)
    assert fair.passed, f"p={fair.chi2.p_value}"
    mutant = loop_equivalence_check(g, particles=6, trials=2000, seed=21, mutant=True)
    assert not mutant.passed


def test_loop_equivalence_self_test_identical_streams():
    g = make_complete(3)
    rng_a = np.random.default_rng(22)
    rng_b = np.random.default_rng(22)
    counts_a = collect_height_tuples(g, particles=5, trials=300, rng=rng_a)
    counts_b = collect_height_tuples(g, particles=5, trials=300, rng=rng_b)
    assert counts_a == counts_b  # identical streams give chi-square 0, p = 1


def test_excursion_tally_records_sign_and_length():
    g = make_cycle(5)
    rng = np.random.default_rng(23)
    c = new_cluster(g)
    grow(c, rng, particles=60)
    saw_positive = saw_long = 0
    for _ in range(400):
        out = probe_particle(c, rng, alpha=2.0)
        tally = out.excursions
        assert tally.positive >= tally.positive_long
        assert tally.negative >= tally.negative_long
        saw_positive += tally.positive
        saw_long += tally.positive_long
        assert out.min_layer_visited <= c.M
    assert saw_positive > 0 and saw_long > 0


def test_cap_exceeded_is_hard_error():
    g = make_cycle(6)
    c = new_cluster(g)
    rng = np.random.default_rng(24)
    with pytest.raises(CapExceededError) as err:
        for _ in range(500):
            drop_particle(c, rng, cap=3)
    assert err.value.literal_steps >= 3
    assert err.value.kappa >= err.value.literal_steps - 1


def test_snapshot_roundtrip(tmp_path):
    g = make_cycle(5)
    c = new_cluster(g)
    grow(c, np.random.default_rng(25), particles=80)
    path = tmp_path / "cluster.snap"
    save_snapshot(c, path)
    text = path.read_text()
    assert text.startswith(f"cyldla v1 n=5 d=2 t=80 M={c.M}\n")
    snap = load_snapshot(path)
    rebuilt = cluster_from_snapshot(snap, g)
    assert rebuilt.stick_log == c.stick_log
    assert rebuilt.loads == c.loads and rebuilt.M == c.M
    path2 = tmp_path / "again.snap"
    save_snapshot(rebuilt, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_snapshot_rejects_mismatched_graph(tmp_path):
    c = new_cluster(make_cycle(5))
    grow(c, np.random.default_rng(26), particles=10)
    path = tmp_path / "c.snap"
    save_snapshot(c, path)
    snap = load_snapshot(path)
    with pytest.raises(ValueError):
        cluster_from_snapshot(snap, make_cycle(6))


def test_snapshot_rejects_corrupt_file(tmp_path):
    path = tmp_path / "bad.snap"
    path.write_text("not a snapshot\n")
    with pytest.raises(ValueError):
        load_snapshot(path)


def test_load_increment_event_identity():
    g = make_complete(4)
    c = new_cluster(g)
    grow(c, np.random.default_rng(27), particles=150)
    running = Counter()
    for t, _, h in c.stick_log:
        for i in range(1, c.M + 1):
            incremented = h >= i
            if incremented:
                running[i] += 1
    for i in range(1, c.M + 1):
        assert running[i] == load_at_least(c, i)
