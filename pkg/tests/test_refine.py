import random
from fractions import Fraction

import pytest

from treecut.config import DEFAULT
from treecut.graph import ClusterView, Graph, subdivide
from treecut.refine import (RefineError, f_value, product_envelope,
                            product_growth_ok, refine,
                            route_inter_to_boundary, schedule_cf)
from treecut.util import rlog2, rloglog2


def view_of(g, cluster):
    return ClusterView(subdivide(g), cluster)


def triangle_chain():
    """Four triangles in a path with unit bridges; every triangle is tied to
    an outside vertex with huge capacity, so the bridges are genuinely
    sparse relative to the boundary measure."""
    edges = []
    for t in range(4):
        b = 3 * t
        edges += [(b, b + 1, 50), (b, b + 2, 50), (b + 1, b + 2, 50)]
    edges += [(2, 3, 1), (5, 6, 1), (8, 9, 1)]
    for t in range(4):
        edges.append((3 * t, 12, 10 ** 5))
    return Graph(range(13), edges)


def core_with_appendage():
    """A well-connected core with huge boundary plus a thinly attached
    two-vertex appendage that still has substantial boundary of its own."""
    edges = [(i, j, 10) for i in range(6) for j in range(i + 1, 6)]
    edges += [(0, 8, 100000), (1, 8, 100000), (2, 8, 60000)]
    edges += [(6, 7, 30), (5, 6, 1), (6, 8, 500), (7, 8, 500)]
    return Graph(range(9), edges)


def random_graph(rng, n, p=0.55):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, 10 ** rng.randint(0, 4)
                              * rng.randint(1, 9)))
    return Graph(range(n), edges)


class TestSchedule:
    def test_coefficient_matches_float_oracle(self):
        import math
        want = 4 * float(DEFAULT.c0_declared) / math.log2(4 / 3)
        assert abs(float(schedule_cf(DEFAULT)) - want) < 1e-6

    def test_f_grows_as_clusters_shrink(self):
        vals = [f_value(s, 64, 1000) for s in (40, 20, 10, 5)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_precondition(self):
        with pytest.raises(RefineError):
            f_value(10, 14, 100)
        f_value(10, 15, 100)  # boundary case allowed


class TestEnvelope:
    def test_top_of_schedule_is_one_factor(self):
        import math
        n = 100
        top = 3 * math.ceil(math.log2(n))
        ll = float(rloglog2(n))
        assert abs(float(product_envelope(top, n)) - (1 + 1 / (top * ll))) \
            < 1e-6

    def test_monotone_decreasing_in_depth(self):
        vals = [product_envelope(j, 200) for j in range(1, 10)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_empty_product_above_schedule(self):
        assert product_envelope(1000, 50) == 1

    def test_float_cross_check(self):
        import math
        n, j = 300, 2
        top = 3 * math.ceil(math.log2(n))
        ll = float(rloglog2(n))
        want = 1.0
        for l in range(j, top + 1):
            want *= 1 + 1 / (l * ll)
        assert abs(float(product_envelope(j, n)) - want) < 1e-6


class TestGrowthBound:
    def test_holds_for_small_constants(self):
        # at k = 1 the product (1 + c) already exceeds 1^(2c) = 1, so the
        # bound genuinely starts at k = 2
        for c in (Fraction(1, 4), Fraction(1, 2), 1, 2):
            assert not product_growth_ok(1, c)
            for k in range(2, 65):
                assert product_growth_ok(k, c)

    def test_not_vacuous(self):
        # with exponent c instead of 2c the inequality fails, so the check
        # really separates the two bounds
        k, c = 16, 1
        prod = Fraction(1)
        for l in range(1, k + 1):
            prod *= 1 + Fraction(c) / l
        assert prod > k ** c

    def test_rejects_non_quarter_constants(self):
        with pytest.raises(RefineError):
            product_growth_ok(4, Fraction(1, 3))


class TestRefineStructure:
    def test_two_level_split(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        assert set(res.clusters) == {frozenset({0, 1, 2}),
                                     frozenset({3, 4, 5}),
                                     frozenset({6, 7, 8}),
                                     frozenset({9, 10, 11})}
        assert res.inter_cluster_keys == {(2, 3), (5, 6), (8, 9)}

    def test_left_child_size_bound(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        for node in res.root.walk():
            if node.left is not None:
                assert 4 * len(node.left.dset) <= 3 * len(node.dset)

    def test_left_depth_rules(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        assert res.root.left_depth == 1
        for node in res.root.walk():
            if node.left is not None:
                assert node.left.left_depth == node.left_depth + 1
            if node.right is not None:
                assert node.right.left_depth == node.left_depth

    def test_contraction_recorded_for_every_recursion(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        for node in res.root.walk():
            if node.case in ("1", "3b-leaf", "2c-inner"):
                continue
            if node.left is None:
                continue
            assert node.contraction, node.case

    def test_trimmed_expander_becomes_leaf(self):
        g = core_with_appendage()
        res = refine(view_of(g, range(8)), 12)
        cases = {n.case for n in res.root.walk()}
        assert "3b" in cases and "3b-leaf" in cases
        leaf = next(n for n in res.root.walk() if n.case == "3b-leaf")
        assert leaf.cluster_leaf and leaf.is_binary_leaf

    def test_sigma_precondition(self):
        g = triangle_chain()
        with pytest.raises(RefineError):
            refine(view_of(g, range(12)), 17)

    def test_boundaryless_cluster_is_single_leaf(self):
        g = Graph(range(4), [(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)])
        res = refine(view_of(g, range(4)), 6)
        assert res.clusters == (frozenset(range(4)),)
        assert res.root.cluster_leaf


class TestLeafCertificates:
    def test_small_leaves_verified_exactly(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        for cert in res.certificates:
            assert cert.verified == "exact"
            assert cert.ok is True
            if cert.ratio is not None:
                assert cert.ratio >= cert.target

    def test_large_leaves_reported_unverified(self):
        edges = [(i, j, 1) for i in range(12) for j in range(i + 1, 12)]
        edges.append((0, 12, 5))
        g = Graph(range(13), edges)
        res = refine(view_of(g, range(12)), 18)
        assert any(c.verified == "unverified" and c.ok is None
                   for c in res.certificates)


class TestRouting:
    def test_mass_conserved_to_boundary(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        prof = route_inter_to_boundary(res)
        total_cut = sum(Fraction(g.cap[k]) for k in res.inter_cluster_keys)
        assert prof.total() == total_cut
        # everything ends on boundary splits of the refined cluster
        sub = res.view.root
        for x in prof.loads:
            u, v = sub.edge_of_split[x]
            assert (u in res.view.cluster) != (v in res.view.cluster)

    def test_envelope_and_congestion(self):
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        prof = route_inter_to_boundary(res)
        assert prof.envelope_ok
        for _, j, worst, bound in prof.envelope_checks:
            assert worst <= bound
        assert prof.congestion <= 2

    def test_per_unit_load_matches_hand_value(self):
        # three unit bridges end on boundary edges of capacity 1e5, so the
        # worst per-unit boundary load is at most 3 / 1e5
        g = triangle_chain()
        res = refine(view_of(g, range(12)), 18)
        prof = route_inter_to_boundary(res)
        assert prof.per_unit_max <= Fraction(3, 10 ** 5)


class TestRandomSweep:
    def test_refine_always_returns_checked_partitions(self):
        rng = random.Random(7)
        case_tags = set()
        for _ in range(60):
            n = rng.randint(3, 9)
            g = random_graph(rng, n)
            k = rng.randint(1, n - 1)
            cluster = rng.sample(range(n), k)
            sigma = rng.randint((3 * k + 1) // 2, 3 * k)
            res = refine(view_of(g, cluster), sigma)
            assert frozenset().union(*res.clusters) == frozenset(cluster)
            for node in res.root.walk():
                case_tags.add(node.case)
                if node.left is not None:
                    assert 4 * len(node.left.dset) <= 3 * len(node.dset)
            prof = route_inter_to_boundary(res)
            assert prof.envelope_ok, prof.notes
            for cert in res.certificates:
                assert cert.ok is not False
        assert len(case_tags) >= 3
