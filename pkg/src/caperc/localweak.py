"""Colored local weak convergence check: empirical depth-d ball statistics of
ECER graphs versus branching-process trees, compared in restricted total
variation over a catalog of small rooted edge-colored trees."""

from __future__ import annotations

from collections import Counter

import numpy as np

from .graph import EdgeColoredGraph
from .params import as_lambda
from .trees import NodeCapExceeded, sample_ecbp

# Canonical ball keys are nested tuples: a ball is a sorted tuple of
# (edge-color-mask, subtree-key) pairs. Non-tree balls and balls larger than
# the size cap are out of catalog.

BallKey = tuple


def _ecer_adjacency(g: EdgeColoredGraph) -> list[dict[int, int]]:
    """Per-vertex map neighbor -> color mask (multi-color edges merged)."""
    adj: list[dict[int, int]] = [dict() for _ in range(g.n)]
    for c in range(g.k):
        bit = 1 << c
        for u, v in g.edge_sets[c]:
            u, v = int(u), int(v)
            adj[u][v] = adj[u].get(v, 0) | bit
            adj[v][u] = adj[v].get(u, 0) | bit
    return adj


def _canon_ball(adj: list[dict[int, int]], root: int, d: int,
                size_cap: int) -> BallKey | None:
    """Canonical key of the depth-d ball around root, or None when the ball
    is not a tree (induced cycle) or exceeds the size cap."""
    dist = {root: 0}
    order = [root]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        if dist[v] == d:
            continue
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                if len(order) > size_cap:
                    return None
    # the induced ball is a tree iff it has exactly |ball| - 1 vertex pairs
    # joined by edges (a multi-color pair counts once)
    pairs = sum(
        1 for v in order for w in adj[v] if w in dist and w > v
    )
    if pairs != len(order) - 1:
        return None
    children: dict[int, list[int]] = {v: [] for v in order}
    for v in order:
        if v != root:
            parent = next(w for w in adj[v] if dist.get(w, -2) == dist[v] - 1)
            children[parent].append(v)

    def rec(v: int) -> BallKey:
        return tuple(sorted((adj[w][v], rec(w)) for w in children[v]))

    return rec(root)


def ecer_ball_counts(g: EdgeColoredGraph, d: int,
                     size_cap: int = 30) -> tuple[Counter, int]:
    """Counts of canonical depth-d ball keys over ALL vertices as roots;
    second return value is the number of out-of-catalog roots."""
    if d < 0:
        raise ValueError("d must be >= 0")
    adj = _ecer_adjacency(g)
    counts: Counter = Counter()
    out = 0
    for v in range(g.n):
        key = _canon_ball(adj, v, d, size_cap)
        if key is None:
            out += 1
        else:
            counts[key] += 1
    return counts, out


def ecbp_ball_counts(lam, d: int, samples: int, rng: np.random.Generator,
                     size_cap: int = 30) -> tuple[Counter, int]:
    """Counts of canonical depth-d ball keys over i.i.d. tree samples."""
    lam = as_lambda(lam)
    counts: Counter = Counter()
    out = 0
    for _ in range(samples):
        try:
            tree = sample_ecbp(lam, d, rng, node_cap=10 * size_cap + 100)
        except NodeCapExceeded:
            out += 1
            continue
        if tree.n_nodes > size_cap:
            out += 1
            continue

        def rec(v: int, depth: int) -> BallKey:
            if depth == 0:
                return ()
            return tuple(sorted(
                (1 << tree.edge_color[w], rec(w, depth - 1))
                for w in tree.children[v]
            ))

        counts[rec(0, d)] += 1
    return counts, out


def restricted_tv(p_counts: Counter, p_total: int,
                  q_counts: Counter, q_total: int) -> float:
    """Total-variation distance between the two empirical measures restricted
    to the union of observed catalog keys."""
    if p_total <= 0 or q_total <= 0:
        raise ValueError("empty catalog")
    keys = set(p_counts) | set(q_counts)
    if not keys:
        raise ValueError("empty catalog")
    return 0.5 * sum(
        abs(p_counts.get(key, 0) / p_total - q_counts.get(key, 0) / q_total)
        for key in keys
    )


ISOLATED_ROOT_KEY: BallKey = ()
