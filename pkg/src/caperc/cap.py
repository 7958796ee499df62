"""Color-avoiding component decomposition and empirical size densities."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import IO

import numpy as np

from .graph import EdgeColoredGraph, Partition, connected_components, project


def color_avoiding_partition(g: EdgeColoredGraph) -> Partition:
    """Meet of the k per-color partitions: v, w share a block iff for every
    color i they are connected in the projection onto the other colors."""
    n, k = g.n, g.k
    all_colors = set(range(k))
    meet = Partition(n)
    if n == 0:
        return meet
    # k-tuple of per-color component roots per vertex; vertices with equal
    # tuples are exactly the color-avoiding classes
    root_matrix = np.empty((n, k), dtype=np.int64)
    for i in range(k):
        part = connected_components(project(g, all_colors - {i}))
        root_matrix[:, i] = part.roots()
    seen: dict[tuple, int] = {}
    for v in range(n):
        key = tuple(root_matrix[v])
        w = seen.setdefault(key, v)
        if w != v:
            meet.union(w, v)
    return meet


def brute_force_cap_partition(g: EdgeColoredGraph) -> Partition:
    """Same contract as color_avoiding_partition, but via independent
    BFS connectivity checks per pair and per color. Test oracle only."""
    if g.n > 12:
        raise ValueError("brute force limited to n <= 12")
    n, k = g.n, g.k
    adj: list[list[list[int]]] = []
    for i in range(k):
        proj = project(g, set(range(k)) - {i})
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in proj.edges:
            nbrs[int(u)].append(int(v))
            nbrs[int(v)].append(int(u))
        adj.append(nbrs)

    def connected(a: int, b: int, i: int) -> bool:
        seen = {a}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                return True
            for w in adj[i][u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return False

    part = Partition(n)
    for a in range(n):
        for b in range(a + 1, n):
            if all(connected(a, b, i) for i in range(k)):
                part.union(a, b)
    return part


@dataclass(frozen=True)
class CapDecomposition:
    """Color-avoiding partition plus exact (rational) size bookkeeping."""

    partition: Partition
    n: int
    size_histogram: dict[int, Fraction]  # size -> fraction of vertices
    size_counts: dict[int, int]          # size -> number of components
    max_fraction: Fraction

    @classmethod
    def from_graph(cls, g: EdgeColoredGraph) -> "CapDecomposition":
        part = color_avoiding_partition(g)
        sizes = part.block_size_table()
        block_sizes = sizes[sizes > 0]
        counts: dict[int, int] = {}
        for s in block_sizes.tolist():
            counts[s] = counts.get(s, 0) + 1
        hist = {s: Fraction(s * c, g.n) for s, c in counts.items()}
        max_size = int(block_sizes.max()) if block_sizes.size else 0
        return cls(part, g.n, hist, counts, Fraction(max_size, g.n if g.n else 1))

    def component_size_density(self, ell: int) -> Fraction:
        """Fraction of vertices lying in color-avoiding components of size ell."""
        if not 1 <= ell <= self.n:
            raise ValueError("ell out of range")
        return self.size_histogram.get(ell, Fraction(0))

    def to_csv(self, fh: IO[str], schema: str = "cap-sizes-v1") -> None:
        fh.write(f"# schema: {schema}\n")
        fh.write("size,fraction,count\n")
        for size in sorted(self.size_counts):
            frac = self.size_histogram[size]
            fh.write(f"{size},{float(frac)!r},{self.size_counts[size]}\n")
