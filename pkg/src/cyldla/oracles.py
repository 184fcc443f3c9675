"""Independent oracles used to verify the simulator.

The first-hit oracle computes the exact sticking distribution of the next
particle on a fixed cluster by solving the absorbing-chain linear system on
the cylinder truncated at a reflecting top layer.  It shares no code path
with the walk simulation, so agreement between the two is a real check.
"""
from __future__ import annotations

import numpy as np

from . import dla
from .dla import Cluster


def first_hit_distribution(cluster: Cluster, truncate_layer: int) -> dict[tuple[int, int], float]:
    """Exact stick distribution of the next particle, truncated at a layer.

    States above ``truncate_layer`` are removed and the top layer reflects
    (no up move there).  The walk mixes in the base during any long
    excursion, so the truncation error decays rapidly in the truncation
    height; callers should confirm stability by doubling it.
    """
    graph = cluster.graph
    n = graph.n
    if truncate_layer <= cluster.M:
        raise ValueError("truncation must lie above the lowest empty layer")
    transient_index: dict[tuple[int, int], int] = {}
    transient: list[tuple[int, int]] = []
    absorbing: list[tuple[int, int]] = []
    for z in range(1, truncate_layer + 1):
        occ_row = cluster.occ[z] if z < len(cluster.occ) else None
        for g in range(n):
            if occ_row is not None and occ_row[g]:
                continue
            if dla.is_boundary(cluster, (g, z)):
                absorbing.append((g, z))
            else:
                transient_index[(g, z)] = len(transient)
                transient.append((g, z))
    absorbing_index = {s: i for i, s in enumerate(absorbing)}
    nt, na = len(transient), len(absorbing)
    q = np.zeros((nt, nt))
    r = np.zeros((nt, na))
    for (g, z), i in transient_index.items():
        options = []
        if z < truncate_layer:
            options.append((g, z + 1))
        options.append((g, z - 1))
        for u in graph.neighbors[g]:
            options.append((u, z))
        p = 1.0 / len(options)
        for state in options:
            if state in transient_index:
                q[i, transient_index[state]] += p
            elif state in absorbing_index:
                r[i, absorbing_index[state]] += p
            else:
                raise RuntimeError(
                    f"transient state {(g, z)} leads to {state}, which is neither "
                    "transient nor boundary; the cluster state is inconsistent"
                )
    hit = np.linalg.solve(np.eye(nt) - q, r) if nt else np.zeros((0, na))
    start = np.zeros(na)
    m_layer = cluster.M
    for g in range(n):
        state = (g, m_layer)
        if state in absorbing_index:
            start[absorbing_index[state]] += 1.0 / n
        else:
            start += hit[transient_index[state]] / n
    return {state: float(p) for state, p in zip(absorbing, start) if p > 0.0}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
