from collections import Counter

import numpy as np
import pytest

from nrpca.core import FrameGeometry, PerFrameSets
from nrpca.graphs import (background_connected, build_graph, degree_stats,
                          graph_from_sets, has_connected_background,
                          is_connected, is_embedded, mask_degree_stats)

TOY_GEOMETRY = FrameGeometry(2, 2, 2)
TOY_F = {(3, 1), (4, 1), (1, 2)}
TOY_B = {(h, k) for h in range(1, 5) for k in range(1, 3)} - TOY_F


def toy_sets():
    return PerFrameSets.from_foreground_support(TOY_GEOMETRY, TOY_F)


def random_sets(rng, max_m=12, max_n=6):
    d_m = int(rng.integers(1, 5))
    d_n = int(rng.integers(1, max(2, max_m // d_m + 1)))
    g = FrameGeometry(d_m, min(d_n, max_m // d_m) or 1, int(rng.integers(1, max_n + 1)))
    density = rng.uniform(0, 1)
    mask = rng.uniform(0, 1, size=(g.m, g.n)) < density
    return PerFrameSets(g, mask)


def brute_degrees(edges, vertex_count):
    counts = Counter()
    for a, b in edges:
        counts[a] += 1
        counts[b] += 1
    return [counts.get(x, 0) for x in range(1, vertex_count + 1)]


def test_build_graph_toy_foreground_edges():
    g = build_graph(TOY_F, m=4, n=2)
    assert g.edges == frozenset({(3, 5), (4, 5), (1, 6)})


def test_build_graph_empty_and_full():
    empty = build_graph([], m=3, n=2)
    assert empty.edges == frozenset()
    assert not is_connected(empty)
    full = build_graph([(h, k) for h in range(1, 4) for k in range(1, 3)], 3, 2)
    assert len(full.edges) == 6
    stats = degree_stats(full)
    assert (stats.max_degree, stats.min_degree) == (3, 2)


def test_build_graph_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_graph([(5, 1)], m=4, n=2)


def test_degree_stats_toy_foreground():
    g = build_graph(TOY_F, m=4, n=2)
    stats = degree_stats(g)
    expected = brute_degrees(g.edges, 6)
    assert stats.degrees.tolist() == expected
    assert stats.max_degree == max(expected) == 2
    assert stats.min_degree == min(expected) == 0  # pixel vertex 2 is isolated


def test_degree_stats_toy_background():
    g = build_graph(TOY_B, m=4, n=2)
    stats = degree_stats(g)
    expected = brute_degrees(g.edges, 6)
    assert stats.degrees.tolist() == expected
    assert stats.max_degree == max(expected) == 3  # frame vertex 6
    assert stats.min_degree == min(expected) == 1


def test_toy_background_graph_is_connected():
    assert is_connected(build_graph(TOY_B, m=4, n=2))


def test_path_graph_is_connected():
    # 1-4-2-5-3: path touching all pixel vertices 1..3 and frame vertices 4..5.
    g = build_graph([(1, 1), (2, 1), (2, 2), (3, 2)], m=3, n=2)
    assert is_connected(g)


def test_exhaustive_background_oracle_on_toy():
    assert has_connected_background(toy_sets())


def test_exhaustive_oracle_fails_on_fully_covered_frame():
    mask = np.zeros((4, 2), dtype=bool)
    mask[:, 0] = True
    assert not has_connected_background(PerFrameSets(TOY_GEOMETRY, mask))


def test_exhaustive_oracle_fails_on_always_covered_pixel():
    mask = np.zeros((4, 2), dtype=bool)
    mask[1, :] = True
    assert not has_connected_background(PerFrameSets(TOY_GEOMETRY, mask))


def test_exhaustive_oracle_guard():
    g = FrameGeometry(1, 1, 25)
    sets = PerFrameSets(g, np.zeros((1, 25), dtype=bool))
    with pytest.raises(ValueError, match="refused"):
        has_connected_background(sets)


def connected_background_all_covers(sets):
    """Quantify over every cover (K1, K2) with K1 u K2 = K, both nonempty."""
    bg = ~sets.foreground
    n = sets.geometry.d_f
    if not bg.any(axis=1).all():
        return False
    unions = {}
    full = (1 << n) - 1
    for mask in range(1, 1 << n):
        cols = [k for k in range(n) if mask >> k & 1]
        unions[mask] = bg[:, cols].any(axis=1)
    for mask1 in range(1, 1 << n):
        rest = full ^ mask1
        sub = mask1
        while True:
            mask2 = rest | sub
            if mask2 and not (unions[mask1] & unions[mask2]).any():
                return False
            if sub == 0:
                break
            sub = (sub - 1) & mask1
    return True


def test_partition_reduction_matches_full_cover_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(150):
        d_f = int(rng.integers(1, 7))
        g = FrameGeometry(int(rng.integers(1, 4)), int(rng.integers(1, 4)), d_f)
        mask = rng.uniform(0, 1, size=(g.m, g.n)) < rng.uniform(0, 1)
        sets = PerFrameSets(g, mask)
        assert has_connected_background(sets) == connected_background_all_covers(sets)
    # a few wider instances
    for seed in range(8):
        rng = np.random.default_rng(100 + seed)
        g = FrameGeometry(2, 2, 8)
        mask = rng.uniform(0, 1, size=(g.m, g.n)) < 0.4
        sets = PerFrameSets(g, mask)
        assert has_connected_background(sets) == connected_background_all_covers(sets)


def test_graph_connectivity_matches_set_oracle():
    rng = np.random.default_rng(17)
    seen = {True: 0, False: 0}
    for _ in range(120):
        sets = random_sets(rng)
        got = is_connected(graph_from_sets(sets, "background"))
        assert got == has_connected_background(sets)
        assert got == background_connected(sets)
        seen[got] += 1
    assert seen[True] > 5 and seen[False] > 5


def test_complementary_degrees_sum_to_opposite_side():
    rng = np.random.default_rng(23)
    for _ in range(30):
        sets = random_sets(rng)
        m, n = sets.geometry.m, sets.geometry.n
        fg = mask_degree_stats(sets, "foreground").degrees
        bg = mask_degree_stats(sets, "background").degrees
        np.testing.assert_array_equal(fg[:m] + bg[:m], np.full(m, n))
        np.testing.assert_array_equal(fg[m:] + bg[m:], np.full(n, m))
        # the mask route agrees with explicit graphs
        np.testing.assert_array_equal(
            fg, degree_stats(graph_from_sets(sets, "foreground")).degrees
        )
        np.testing.assert_array_equal(
            bg, degree_stats(graph_from_sets(sets, "background")).degrees
        )


def embedded_pair(rng):
    outer = random_sets(rng)
    keep = rng.uniform(0, 1, size=outer.foreground.shape) < rng.uniform(0.3, 1.0)
    inner = PerFrameSets(outer.geometry, outer.foreground & keep)
    return inner, outer


def test_is_embedded_basics():
    sets = toy_sets()
    assert is_embedded(sets, sets)
    empty = PerFrameSets(TOY_GEOMETRY, np.zeros((4, 2), dtype=bool))
    assert is_embedded(empty, sets)
    extra = PerFrameSets.from_foreground_support(TOY_GEOMETRY, TOY_F | {(2, 2)})
    assert not is_embedded(extra, sets)


def test_is_embedded_rejects_geometry_mismatch():
    a = PerFrameSets(FrameGeometry(2, 2, 2), np.zeros((4, 2), dtype=bool))
    b = PerFrameSets(FrameGeometry(4, 1, 2), np.zeros((4, 2), dtype=bool))
    with pytest.raises(ValueError, match="geometry"):
        is_embedded(a, b)


def test_embedding_preserves_connectivity_and_degree_order():
    rng = np.random.default_rng(31)
    for _ in range(60):
        inner, outer = embedded_pair(rng)
        assert is_embedded(inner, outer)
        if is_connected(graph_from_sets(outer, "background")):
            assert is_connected(graph_from_sets(inner, "background"))
        assert (mask_degree_stats(inner, "foreground").max_degree
                <= mask_degree_stats(outer, "foreground").max_degree)
        assert (mask_degree_stats(outer, "background").min_degree
                <= mask_degree_stats(inner, "background").min_degree)
        # outer background edges form a subgraph of the inner background edges
        assert (graph_from_sets(outer, "background").edges
                <= graph_from_sets(inner, "background").edges)


def test_single_frame_all_background_is_connected():
    g = FrameGeometry(2, 2, 1)
    sets = PerFrameSets(g, np.zeros((4, 1), dtype=bool))
    assert has_connected_background(sets)
    assert background_connected(sets)
    assert is_connected(graph_from_sets(sets, "background"))
