"""Bipartite pixel/frame graphs: construction, degrees, connectivity, embedding.

Both the background set B and the foreground set F of a decomposition induce
bipartite graphs on pixel vertices {1..m} and frame vertices {m+1..m+n} with
(h, m+k) an edge iff (h, k) belongs to the set.  Small graphs are handled
explicitly; video-scale graphs are never materialized as edge lists - degrees
and connectivity are computed straight from the per-frame masks, since the
background edge set has on the order of m*n members.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import FrameGeometry, PerFrameSets


class UnionFind:
    """Disjoint sets over {0..size-1} with path compression and union by rank."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        x, y = self.find(x), self.find(y)
        if x == y:
            return
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        self.parent[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph on pixel vertices 1..m and frame vertices m+1..m+n."""

    m: int
    n: int
    edges: frozenset

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("both vertex classes must be nonempty")

    @property
    def vertex_count(self) -> int:
        return self.m + self.n


def build_graph(edge_set, m: int, n: int) -> BipartiteGraph:
    """Graph with edge (h, m+k) for each measurement pair (h, k) in the set."""
    edges = set()
    for h, k in edge_set:
        if not (1 <= h <= m and 1 <= k <= n):
            raise ValueError(f"pair ({h}, {k}) outside {{1..{m}}} x {{1..{n}}}")
        edges.add((int(h), m + int(k)))
    return BipartiteGraph(m, n, frozenset(edges))


class DegreeStats(NamedTuple):
    max_degree: int
    min_degree: int
    degrees: np.ndarray


def degree_stats(g: BipartiteGraph) -> DegreeStats:
    """Max/min degree over all m+n vertices; isolated vertices count as degree 0."""
    degrees = np.zeros(g.vertex_count, dtype=np.int64)
    for h, t in g.edges:
        degrees[h - 1] += 1
        degrees[t - 1] += 1
    return DegreeStats(int(degrees.max()), int(degrees.min()), degrees)


def is_connected(g: BipartiteGraph) -> bool:
    """True iff all m+n vertices lie in a single component."""
    if g.vertex_count == 1:
        return True
    if not g.edges:
        return False
    uf = UnionFind(g.vertex_count)
    for h, t in g.edges:
        uf.union(h - 1, t - 1)
    root = uf.find(0)
    return all(uf.find(x) == root for x in range(1, g.vertex_count))


def graph_from_sets(sets: PerFrameSets, which: str = "background") -> BipartiteGraph:
    """Explicit graph for the background or foreground set (small instances only)."""
    mask = _select_mask(sets, which)
    rows, cols = np.nonzero(mask)
    m, n = mask.shape
    edges = frozenset((int(h) + 1, m + int(k) + 1) for h, k in zip(rows, cols))
    return BipartiteGraph(m, n, edges)


def _select_mask(sets: PerFrameSets, which: str) -> np.ndarray:
    if which == "foreground":
        return sets.foreground
    if which == "background":
        return ~sets.foreground
    raise ValueError(f"which must be 'foreground' or 'background', got {which!r}")


def mask_degree_stats(sets: PerFrameSets, which: str = "foreground") -> DegreeStats:
    """Degree stats computed from the mask without building an edge list.

    Pixel vertex degree = number of frames the pixel belongs to the set;
    frame vertex degree = number of pixels in the set for that frame.
    """
    mask = _select_mask(sets, which)
    pixel_deg = mask.sum(axis=1, dtype=np.int64)
    frame_deg = mask.sum(axis=0, dtype=np.int64)
    degrees = np.concatenate([pixel_deg, frame_deg])
    return DegreeStats(int(degrees.max()), int(degrees.min()), degrees)


def background_connected(sets: PerFrameSets) -> bool:
    """Connectivity of the background graph, from the foreground mask.

    Breadth-first search on the complement of the (sparse) foreground
    incidence: a frontier of pixels reaches every frame in which at least one
    of them is background, and vice versa.  Runs in a handful of vectorized
    sweeps for realistic videos.
    """
    fg = sets.foreground
    m, n = fg.shape
    pixel_seen = np.zeros(m, dtype=bool)
    frame_seen = np.zeros(n, dtype=bool)
    pixel_frontier = np.zeros(m, dtype=bool)
    pixel_frontier[0] = True
    pixel_seen[0] = True
    frame_frontier = np.zeros(n, dtype=bool)
    while pixel_frontier.any() or frame_frontier.any():
        if pixel_frontier.any():
            reached = ~(fg[pixel_frontier].all(axis=0)) & ~frame_seen
        else:
            reached = np.zeros(n, dtype=bool)
        frame_seen |= reached
        next_pixels = np.zeros(m, dtype=bool)
        if frame_frontier.any():
            next_pixels = ~(fg[:, frame_frontier].all(axis=1)) & ~pixel_seen
            pixel_seen |= next_pixels
        pixel_frontier = next_pixels
        frame_frontier = reached
    return bool(pixel_seen.all() and frame_seen.all())


def has_connected_background(sets: PerFrameSets, max_frames: int = 20) -> bool:
    """Exhaustive set-based background-connectivity oracle.

    Checks (1) every pixel is background in some frame, and (2) every split of
    the frames into two covering groups has overlapping background unions.
    Exponential in the frame count; intended as a test oracle only.
    """
    n = sets.geometry.d_f
    if n > max_frames:
        raise ValueError(
            f"exhaustive oracle refused for d_f={n} > {max_frames} frames"
        )
    bg = ~sets.foreground
    if not bg.any(axis=1).all():
        return False
    if n == 1:
        # The only covers are ({1}, {1}); their intersection is B^(1) = Pi.
        return True
    # Reduction: it suffices to test complementary partitions (K1, K \ K1),
    # both nonempty.  For any cover K1 u K2 = K, K2 contains K \ K1, so the
    # cover's background unions intersect whenever the partition's do.  Covers
    # with K1 = K degenerate to requiring some B^(k) nonempty, which the
    # single-frame partitions already enforce.  Cross-checked against full
    # cover enumeration in the test suite.
    row_bits = [
        int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")
        for row in bg
    ]
    full = (1 << n) - 1
    for mask in range(1, 1 << (n - 1)):
        comp = full ^ mask
        if not any((rb & mask) and (rb & comp) for rb in row_bits):
            return False
    return True


def is_embedded(inner: PerFrameSets, outer: PerFrameSets) -> bool:
    """True iff the inner foreground is contained in the outer one, frame by frame."""
    if inner.geometry != outer.geometry:
        raise ValueError(
            f"geometry mismatch: {inner.geometry} vs {outer.geometry}"
        )
    return not (inner.foreground & ~outer.foreground).any()
