import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyldla.graphs import (
    add_self_loops,
    edge_list_lines,
    make_complete,
    make_cycle,
    make_hypercube,
    make_random_regular,
    make_torus,
    parse_graph_spec,
    validate,
)


def test_cycle_smallest():
    g = make_cycle(3)
    assert set(g.neighbors[0]) == {1, 2}
    assert g.d == 2 and g.transitive_hint


def test_cycle_500():
    g = make_cycle(500)
    assert g.d == 2 and g.n == 500 and g.transitive_hint
    assert validate(g).passed


def test_cycle_symmetry():
    assert set(make_cycle(4).neighbors[1]) == {0, 2}


def test_cycle_rejects_small():
    with pytest.raises(ValueError):
        make_cycle(2)


def test_torus_counts():
    g = make_torus(3, 2)
    assert g.n == 9 and g.d == 4
    g = make_torus(4, 3)
    assert g.n == 64 and g.d == 6


def test_torus_dim1_is_cycle():
    t = make_torus(3, 1)
    c = make_cycle(3)
    assert [set(r) for r in t.neighbors] == [set(r) for r in c.neighbors]


def test_torus_rejects_side2():
    with pytest.raises(ValueError):
        make_torus(2, 2)


def test_complete():
    g = make_complete(4)
    assert g.d == 3 and set(g.neighbors[0]) == {1, 2, 3}
    assert [set(r) for r in make_complete(3).neighbors] == [
        set(r) for r in make_cycle(3).neighbors
    ]
    g10 = make_complete(10)
    for v, row in enumerate(g10.neighbors):
        assert len(set(row)) == 9 and v not in row


def test_hypercube():
    q2 = make_hypercube(2)
    # Q_2 is a 4-cycle: 2-regular, connected, 4 vertices
    assert q2.n == 4 and q2.d == 2 and validate(q2).passed
    q3 = make_hypercube(3)
    assert q3.n == 8 and q3.d == 3
    # bipartite: every edge joins labels of opposite parity
    for v in range(8):
        for u in q3.neighbors[v]:
            assert bin(v).count("1") % 2 != bin(u).count("1") % 2


def test_random_regular_valid_and_reproducible():
    a = make_random_regular(10, 3, seed=1)
    b = make_random_regular(10, 3, seed=1)
    assert validate(a).passed
    assert a.neighbors == b.neighbors
    c = make_random_regular(10, 3, seed=2)
    assert c.neighbors != a.neighbors or c.label != a.label


def test_random_regular_parity_rejected():
    with pytest.raises(ValueError):
        make_random_regular(5, 3, seed=1)


def test_random_regular_k4_degrees():
    g = make_random_regular(4, 3, seed=0)
    # only simple 3-regular graph on 4 vertices is K_4
    assert [set(r) for r in g.neighbors] == [set(r) for r in make_complete(4).neighbors]


def test_add_self_loops():
    g = add_self_loops(make_cycle(3))
    for v, row in enumerate(g.neighbors):
        assert set(row) == {(v - 1) % 3, (v + 1) % 3, v}
    assert g.d == 3
    twice = add_self_loops(g)
    assert twice.d == 4
    assert all(row.count(v) == 2 for v, row in enumerate(twice.neighbors))
    assert validate(twice).passed


def test_validate_catches_broken_symmetry():
    from cyldla.graphs import RegularGraph

    g = RegularGraph(3, 2, ((1, 2), (0, 0), (0, 0)), "broken")
    diag = validate(g)
    assert not diag.symmetric and not diag.passed


def test_validate_catches_disconnection():
    from cyldla.graphs import RegularGraph

    two_triangles = tuple(
        tuple((v + delta) % 3 + 3 * (v // 3) for delta in (1, 2)) for v in range(6)
    )
    g = RegularGraph(6, 2, two_triangles, "2xK3")
    diag = validate(g)
    assert diag.regular and diag.symmetric and not diag.connected


def test_parse_graph_spec():
    assert parse_graph_spec("cycle:500").n == 500
    assert parse_graph_spec("torus:3x3").d == 4
    assert parse_graph_spec("complete:64").d == 63
    assert parse_graph_spec("hypercube:6").n == 64
    g = parse_graph_spec("random:100:4:seed=7")
    assert g.n == 100 and g.d == 4
    for bad in ("nosuch:3", "torus:3x4", "cycle:2", "random:10:3", "cycle:x"):
        with pytest.raises(ValueError):
            parse_graph_spec(bad)


def test_edge_list_round_numbers():
    g = make_cycle(4)
    lines = edge_list_lines(g)
    assert len(lines) == 4  # 4 edges
    gl = add_self_loops(g)
    lines = edge_list_lines(gl)
    assert lines.count("0 0") == 1 and len(lines) == 8


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=3, max_value=60))
def test_generators_always_validate_cycle(n):
    assert validate(make_cycle(n)).passed


@settings(max_examples=15, deadline=None)
@given(side=st.integers(min_value=3, max_value=5), dim=st.integers(min_value=1, max_value=3))
def test_generators_always_validate_torus(side, dim):
    g = make_torus(side, dim)
    assert validate(g).passed and g.n == side**dim


@settings(max_examples=15, deadline=None)
@given(n=st.integers(min_value=3, max_value=20))
def test_loops_preserve_validation(n):
    g = add_self_loops(make_complete(n))
    assert validate(g).passed
