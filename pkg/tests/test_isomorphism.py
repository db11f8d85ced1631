"""Refinement behavior, witness pairs, soundness, and partition properties."""

import numpy as np
import pytest

from flowerpetals.complexes import Graph, clique_lift
from flowerpetals.isomorphism import (
    distinguish,
    hwl_refine,
    shwl_color_rounds,
    shwl_refine,
    wl_color_rounds,
    wl_refine,
)

K3 = Graph(3, ((0, 1), (0, 2), (1, 2)))
TWO_TRIANGLES = Graph(6, ((0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)))
C6 = Graph(6, tuple(sorted((min(i, (i + 1) % 6), max(i, (i + 1) % 6)) for i in range(6))))


def random_graph(rng, n, density=0.4):
    edges = tuple(
        (u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < density
    )
    return Graph(n, edges)


def relabel(g, perm):
    edges = tuple(
        sorted((min(perm[u], perm[v]), max(perm[u], perm[v])) for u, v in g.edges)
    )
    return Graph(g.n, edges)


class TestWl:
    def test_k3_stays_monochrome(self):
        rounds = wl_refine(K3)
        for hist in rounds:
            assert len(hist[0]) == 1

    def test_star_splits_center_from_leaves(self):
        rounds = wl_refine(Graph(4, ((0, 1), (0, 2), (0, 3))))
        assert sorted(rounds[1][0].values()) == [1, 3]
        assert sorted(rounds[-1][0].values()) == [1, 3]

    def test_two_triangles_and_c6_share_histograms(self):
        a, b = wl_refine(TWO_TRIANGLES), wl_refine(C6)
        assert len(a) == len(b)
        # every node is degree 2: refinement stabilizes immediately
        for ha, hb in zip(a, b):
            assert sorted(ha[0].values()) == sorted(hb[0].values())


class TestHwl:
    def test_k3_orbit_classes(self):
        hist = hwl_refine(clique_lift(K3, 2))[-1]
        assert list(hist[0].values()) == [3]
        assert list(hist[1].values()) == [3]
        assert list(hist[2].values()) == [1]

    def test_two_triangles_vs_c6_differ_at_round_one(self):
        ha = hwl_refine(clique_lift(TWO_TRIANGLES, 2))
        hb = hwl_refine(clique_lift(C6, 2))
        assert ha[0].get(2) != hb[0].get(2)  # simplex counts differ already

    def test_round_zero_histogram_reflects_counts_only(self):
        lifted = clique_lift(TWO_TRIANGLES, 2)
        hist = hwl_refine(lifted)[0]
        assert hist[0] == {0: 6} and hist[1] == {0: 6} and hist[2] == {0: 2}


class TestShwl:
    def test_witness_pair_distinguished(self):
        verdict, _ = distinguish(TWO_TRIANGLES, C6, "shwl", 2)
        assert verdict == "distinguished"

    def test_relabeling_gives_identical_histogram_sequences(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            g = random_graph(rng, int(rng.integers(5, 12)))
            perm = rng.permutation(g.n)
            a = shwl_refine(clique_lift(g, 2))
            b = shwl_refine(clique_lift(relabel(g, perm), 2))
            assert a == b, trial

    def test_triangle_free_node_partition_matches_wl(self):
        rng = np.random.default_rng(4)
        cases = [
            Graph(7, ((0, 1), (0, 2), (1, 3), (2, 4), (4, 5), (4, 6))),  # tree
            C6,
            Graph(5, ((0, 1), (1, 2), (2, 3), (3, 4))),  # path
        ]
        for _ in range(5):  # random bipartite graphs stay triangle-free
            left = int(rng.integers(2, 5))
            right = int(rng.integers(2, 5))
            edges = tuple(
                (u, left + v)
                for u in range(left)
                for v in range(right)
                if rng.random() < 0.6
            )
            cases.append(Graph(left + right, edges))
        for g in cases:
            wl_final = wl_color_rounds(g)[-1].partition(order=0)
            shwl_final = shwl_color_rounds(clique_lift(g, 2))[-1].partition(order=0)
            assert wl_final == shwl_final, g.edges

    def test_monotone_refinement(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            g = random_graph(rng, int(rng.integers(5, 14)))
            rounds = shwl_color_rounds(clique_lift(g, 3))
            for prev, cur in zip(rounds, rounds[1:]):
                parents = {}
                for item, color in cur.colors.items():
                    parents.setdefault(color, set()).add(prev.colors[item])
                assert all(len(p) == 1 for p in parents.values())


class TestDistinguish:
    def test_wl_inconclusive_on_witness(self):
        verdict, rounds = distinguish(TWO_TRIANGLES, C6, "wl")
        assert verdict == "inconclusive"
        assert rounds[-1]["a"] == rounds[-1]["b"]

    def test_identical_graphs_inconclusive_under_all_methods(self):
        for method in ("wl", "hwl", "shwl"):
            verdict, _ = distinguish(C6, C6, method, 2)
            assert verdict == "inconclusive"

    def test_wl_separates_triangle_from_path(self):
        verdict, _ = distinguish(K3, Graph(3, ((0, 1), (1, 2))), "wl")
        assert verdict == "distinguished"

    def test_soundness_on_relabelings(self):
        rng = np.random.default_rng(6)
        for trial in range(60):
            g = random_graph(rng, int(rng.integers(4, 12)))
            twin = relabel(g, rng.permutation(g.n))
            for method in ("wl", "hwl", "shwl"):
                verdict, _ = distinguish(g, twin, method, 2)
                assert verdict == "inconclusive", (trial, method)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            distinguish(K3, C6, "k-wl")
