import math
from fractions import Fraction

import numpy as np
import pytest

from cyldla.graphs import (
    add_self_loops,
    make_complete,
    make_cycle,
    make_hypercube,
    make_torus,
)
from cyldla.spectral import (
    avoidance_bound,
    avoidance_frequency,
    check_fast_mixing,
    compute_profile,
    count_constrained_paths,
    eigen_profile,
    fast_mixing_threshold,
    lazy_transition_matrix,
    mixing_time,
)


def test_complete_graph_spectrum():
    prof = eigen_profile(make_complete(4))
    assert prof.eigenvalues[0] == pytest.approx(1.0, abs=1e-9)
    assert sorted(prof.eigenvalues)[:3] == pytest.approx([-1 / 3] * 3, abs=1e-9)
    assert prof.lam == pytest.approx(1 / 3, abs=1e-9)
    assert prof.gap == pytest.approx(2 / 3, abs=1e-9)


def test_odd_cycle_spectrum():
    prof = eigen_profile(make_cycle(9))
    assert prof.lam == pytest.approx(abs(math.cos(8 * math.pi / 9)), abs=1e-9)


def test_even_cycle_reports_unit_lambda():
    # bipartite base: the -1 eigenvalue is kept, so lam = 1 and gap = 0
    prof = eigen_profile(make_cycle(8))
    assert prof.lam == 1.0 and prof.gap == 0.0


def test_hypercube_bipartite():
    prof = eigen_profile(make_hypercube(3))
    assert prof.lam == pytest.approx(1.0, abs=1e-9)
    assert min(prof.eigenvalues) == pytest.approx(-1.0, abs=1e-9)


def test_eigenvalues_bounded_and_trace():
    for g in (make_complete(5), add_self_loops(make_cycle(5)), make_torus(3, 2)):
        prof = eigen_profile(g)
        assert all(-1 - 1e-9 <= x <= 1 + 1e-9 for x in prof.eigenvalues)
        assert sum(prof.eigenvalues) == pytest.approx(g.loop_count() / g.d, abs=1e-6)


def test_power_iteration_fallback_matches_dense():
    g = make_torus(5, 2)
    dense = eigen_profile(g)
    power = eigen_profile(g, dense_cutoff=4)
    assert power.lam == pytest.approx(dense.lam, abs=1e-6)
    assert len(power.eigenvalues) == 2


def _exact_lazy_mixing(g, cap):
    n = g.n
    p = [[Fraction(0)] * n for _ in range(n)]
    for v, row in enumerate(g.neighbors):
        p[v][v] += Fraction(1, g.d + 1)
        for u in row:
            p[v][u] += Fraction(1, g.d + 1)
    b = [row[:] for row in p]
    for t in range(1, cap + 1):
        if min(min(r) for r in b) >= Fraction(1, 2 * n):
            return t
        b = [[sum(b[i][k] * p[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    return None


def test_mixing_k3_is_one():
    assert mixing_time(make_complete(3), 10) == 1


def test_mixing_c4_matches_exact_oracle():
    g = make_cycle(4)
    assert mixing_time(g, 50) == _exact_lazy_mixing(g, 50) == 2


def test_mixing_q3_finite_despite_bipartite():
    t = mixing_time(make_hypercube(3), 500)
    assert isinstance(t, int) and t >= 1
    assert t == _exact_lazy_mixing(make_hypercube(3), 500)


def test_mixing_cap_sentinel():
    assert mixing_time(make_cycle(30), 3) is None
    prof = compute_profile(make_cycle(30), cap=3)
    assert prof.mixing_time == "exceeded-cap"


def test_mixing_min_entry_monotone():
    g = make_cycle(5)
    p = lazy_transition_matrix(g)
    b = p.copy()
    mins = []
    for _ in range(30):
        mins.append(b.min())
        b = b @ p
    assert all(y >= x - 1e-12 for x, y in zip(mins, mins[1:]))


def test_check_fast_mixing_value():
    thr = fast_mixing_threshold(16)
    assert thr == pytest.approx(math.log(16) ** 2 / math.log(math.log(16)) ** 5)
    assert thr == pytest.approx(6.977, abs=0.01)
    prof = compute_profile(make_complete(16))
    check = check_fast_mixing(prof)
    assert check.estimate == 1.0 and check.verdict == "pass"
    assert check.applicability is not None


def test_check_fast_mixing_rejections():
    with pytest.raises(ValueError):
        fast_mixing_threshold(2)
    prof = compute_profile(make_cycle(30), cap=3)  # sentinel mixing time
    with pytest.raises(ValueError):
        check_fast_mixing(prof)


def test_avoidance_bound_values():
    k4 = eigen_profile(make_complete(4))
    assert avoidance_bound(k4, [1.0, 1.0]) == pytest.approx(1.0)
    zero_lam = eigen_profile(make_complete(4))
    # lam = 1/3 for K4; build the exact plug-in cases instead
    assert avoidance_bound(k4, [0.5, 0.5]) == pytest.approx(math.exp(-1 / 3))
    from cyldla.spectral import SpectralProfile

    flat = SpectralProfile(4, 3, (1.0, 0.0, 0.0, 0.0), 0.0, 1.0)
    assert avoidance_bound(flat, [0.0]) == pytest.approx(math.exp(-0.5))
    with pytest.raises(ValueError):
        avoidance_bound(k4, [1.5])


def test_count_constrained_paths_examples():
    k3 = make_complete(3)
    assert count_constrained_paths(k3, [set(range(3))]).count == 3 * 2
    assert count_constrained_paths(k3, [set()]).count == 0
    assert count_constrained_paths(k3, [{0}, {1}]).count == 2


def test_count_constrained_paths_loops_multiplicity():
    g = add_self_loops(make_complete(3))
    # single unconstrained step: every slot counts, n * d walks
    assert count_constrained_paths(g, [set(range(3))]).count == 3 * 3


def test_path_count_bound_random_families():
    rng = np.random.default_rng(3)
    for g in (make_complete(4), make_cycle(5), make_torus(3, 2)):
        for _ in range(25):
            t = int(rng.integers(1, 6))
            sets = [
                set(map(int, rng.choice(g.n, size=rng.integers(0, g.n + 1), replace=False)))
                for _ in range(t)
            ]
            res = count_constrained_paths(g, sets)  # raises if the bound fails
            if res.count > 0:
                assert math.log(res.count) <= res.log_bound + 1e-9


def test_avoidance_monte_carlo_within_bound():
    rng = np.random.default_rng(11)
    for g in (make_complete(4), make_cycle(5)):
        prof = eigen_profile(g)
        for trial in range(5):
            t = int(rng.integers(1, 5))
            sets = [
                set(map(int, rng.choice(g.n, size=rng.integers(1, g.n + 1), replace=False)))
                for _ in range(t)
            ]
            bound = avoidance_bound(prof, [len(c) / g.n for c in sets])
            freq = avoidance_frequency(g, sets, 4000, seed=500 + trial)
            assert freq.mean - 3 * freq.std_error <= bound
