"""Edge-colored graphs, ECER sampling, projections, and plain connectivity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .params import LambdaVector, as_lambda


def _canonical_edges(edges, n: int, color: int) -> np.ndarray:
    """Validate and canonicalize one color's edge list to a sorted (m, 2)
    int64 array with u < v per row, unique rows."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"color {color}: edge list must be pairs")
    if arr.min() < 0 or arr.max() >= n:
        raise ValueError(f"color {color}: endpoint out of range")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    if np.any(lo == hi):
        raise ValueError(f"color {color}: self-loop")
    arr = np.stack([lo, hi], axis=1)
    key = lo * n + hi
    order = np.argsort(key, kind="stable")
    key = key[order]
    if np.any(key[1:] == key[:-1]):
        raise ValueError(f"color {color}: duplicate edge within one color")
    return arr[order]


@dataclass(frozen=True)
class UncoloredGraph:
    """Simple uncolored graph: vertex count plus a sorted unique edge array."""

    n: int
    edges: np.ndarray  # (m, 2) int64, u < v, unique, sorted

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])


class EdgeColoredGraph:
    """n vertices plus k per-color edge sets.

    Within one color each pair appears at most once; the same pair may appear
    in several colors. Immutable after construction.
    """

    def __init__(self, n: int, edge_sets: Sequence[Iterable]):
        if n < 0:
            raise ValueError("negative vertex count")
        if len(edge_sets) < 1:
            raise ValueError("need at least one color")
        self.n = int(n)
        self.edge_sets = tuple(
            _canonical_edges(es, self.n, c) for c, es in enumerate(edge_sets)
        )

    @property
    def k(self) -> int:
        return len(self.edge_sets)

    def edge_count(self, color: int) -> int:
        return int(self.edge_sets[color].shape[0])

    def __repr__(self) -> str:
        counts = ",".join(str(self.edge_count(c)) for c in range(self.k))
        return f"EdgeColoredGraph(n={self.n}, k={self.k}, m=[{counts}])"


def _pair_index_to_edge(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode linear indices of the row-major upper-triangle pair enumeration
    ((0,1),(0,2),...,(0,n-1),(1,2),...) into endpoint arrays."""
    idx = idx.astype(np.int64)
    # solve for u in idx >= offset(u) = u*n - u(u+1)/2 - u ... via the
    # triangular-root formula, then fix rounding with a correction pass
    b = 2.0 * n - 1.0
    u = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2.0).astype(np.int64)
    u = np.clip(u, 0, n - 2)

    def offset(uu):
        return uu * (2 * n - uu - 1) // 2

    while True:
        too_hi = offset(u) > idx
        too_lo = offset(u + 1) <= idx
        if not (too_hi.any() or too_lo.any()):
            break
        u = u - too_hi.astype(np.int64) + too_lo.astype(np.int64)
        u = np.clip(u, 0, n - 2)
    v = idx - offset(u) + u + 1
    return u, v


def _sample_pair_subset(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Strictly increasing linear pair indices, each of the `total` positions
    included independently with probability p, via geometric skipping."""
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    expect = int(total * p) + 1
    while pos < total:
        m = max(256, int(1.2 * (expect - sum(len(c) for c in chunks))) + 64)
        gaps = rng.geometric(p, size=m).astype(np.int64)
        pts = pos + np.cumsum(gaps)
        chunks.append(pts)
        pos = int(pts[-1])
    idx = np.concatenate(chunks)
    return idx[idx < total]


def sample_ecer(n: int, vertex_count: int, lam, rng: np.random.Generator) -> EdgeColoredGraph:
    """Sample an ECER graph: vertex_count vertices, per-color edge probability
    1 - exp(-lambda_i / n) on each unordered pair, colors independent.

    The Bernoulli parameter uses n (not vertex_count), which may exceed the
    number of sampled vertices.
    """
    lam = as_lambda(lam)
    if vertex_count > n:
        raise ValueError("vertex_count must not exceed n")
    if vertex_count < 0:
        raise ValueError("negative vertex_count")
    total = vertex_count * (vertex_count - 1) // 2
    edge_sets = []
    color_rngs = rng.spawn(lam.k)  # independent substream per color
    for i, crng in enumerate(color_rngs):
        p = -np.expm1(-lam[i] / n)
        idx = _sample_pair_subset(total, float(p), crng)
        u, v = _pair_index_to_edge(idx, vertex_count)
        edge_sets.append(np.stack([u, v], axis=1))
    return EdgeColoredGraph(vertex_count, edge_sets)


def project(g: EdgeColoredGraph, colors: Iterable[int]) -> UncoloredGraph:
    """Simple uncolored union of the given colors' edge sets."""
    cs = sorted(set(colors))
    if any(c < 0 or c >= g.k for c in cs):
        raise ValueError("color index out of range")
    if not cs:
        return UncoloredGraph(g.n, np.empty((0, 2), dtype=np.int64))
    stacked = np.concatenate([g.edge_sets[c] for c in cs], axis=0)
    if stacked.shape[0] == 0:
        return UncoloredGraph(g.n, stacked)
    key = stacked[:, 0] * g.n + stacked[:, 1]
    uniq = np.unique(key)
    return UncoloredGraph(g.n, np.stack([uniq // g.n, uniq % g.n], axis=1))


class Partition:
    """Union-find over [n] with path compression, union by rank, and a lazily
    built block-size table."""

    def __init__(self, n: int):
        self.n = n
        self._parent = np.arange(n, dtype=np.int64)
        self._rank = np.zeros(n, dtype=np.int8)
        self._sizes: np.ndarray | None = None

    def find(self, v: int) -> int:
        parent = self._parent
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return int(root)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._sizes = None

    def roots(self) -> np.ndarray:
        """Array mapping each vertex to its canonical root."""
        parent = self._parent
        out = parent.copy()
        while True:
            nxt = parent[out]
            if np.array_equal(nxt, out):
                return out
            out = nxt

    def size_of(self, v: int) -> int:
        return int(self.block_size_table()[self.find(v)])

    def block_size_table(self) -> np.ndarray:
        """sizes[r] = block size for each root r (0 elsewhere)."""
        if self._sizes is None:
            self._sizes = np.bincount(self.roots(), minlength=self.n)
        return self._sizes

    @property
    def n_blocks(self) -> int:
        return int((self.block_size_table() > 0).sum())

    def blocks(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for v, r in enumerate(self.roots()):
            out.setdefault(int(r), []).append(v)
        return out

    def same_block(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


def connected_components(g: UncoloredGraph) -> Partition:
    """Partition of the vertex set into connected components."""
    part = Partition(g.n)
    for u, v in g.edges:
        part.union(int(u), int(v))
    return part


def largest_component_union(g: UncoloredGraph) -> set[int]:
    """Union of ALL components attaining the maximum size (ties included)."""
    part = connected_components(g)
    sizes = part.block_size_table()
    if g.n == 0:
        return set()
    max_size = sizes.max()
    winners = set(np.flatnonzero(sizes == max_size).tolist())
    roots = part.roots()
    return {v for v in range(g.n) if int(roots[v]) in winners}


def dump_graph(g: EdgeColoredGraph, fh: IO[str]) -> None:
    """Text dump: header `n k`, then one `color u v` line per colored edge."""
    fh.write(f"{g.n} {g.k}\n")
    for c in range(g.k):
        for u, v in g.edge_sets[c]:
            fh.write(f"{c} {u} {v}\n")


def load_graph(fh: IO[str]) -> EdgeColoredGraph:
    """Inverse of dump_graph."""
    header = fh.readline().split()
    if len(header) != 2:
        raise ValueError("bad graph header, expected 'n k'")
    n, k = int(header[0]), int(header[1])
    edge_sets: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for line in fh:
        line = line.strip()
        if not line:
            continue
        c, u, v = (int(x) for x in line.split())
        if not 0 <= c < k:
            raise ValueError(f"color {c} out of range")
        edge_sets[c].append((u, v))
    return EdgeColoredGraph(n, edge_sets)
