import random
from fractions import Fraction

import pytest

from treecut.graph import (ClusterView, Graph, Measure, cut_capacity,
                           graph_expansion_exact, parse_edge_list, subdivide)
from treecut.merge import (MergeError, is_balanced_clustering, merge_phase,
                           merge_phase_1, merge_phase_2, shrink_step)


def dumbbell():
    return parse_edge_list("0 1\n0 2\n1 2\n2 3\n3 4\n3 5\n4 5\n")


def barbell_k5():
    edges = []
    for base in (0, 5):
        for i in range(5):
            for j in range(i + 1, 5):
                edges.append("%d %d" % (base + i, base + j))
    edges.append("4 5")
    return parse_edge_list("\n".join(edges))


def random_graph(rng, n, p=0.6, max_cap=3):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, rng.randint(1, max_cap)))
    return Graph(range(n), edges)


def view_of(g, cluster):
    return ClusterView(subdivide(g), cluster)


class TestBalancedClustering:
    def test_all_edges_is_balanced(self):
        g = dumbbell()
        ok, comps = is_balanced_clustering(g, [k for k in g.cap])
        assert ok
        assert all(len(z) == 1 for z in comps)

    def test_giant_component_rejected(self):
        g = dumbbell()
        # cutting the bridge leaves two triangles: 3 <= (2/3) * 6, balanced
        ok, _ = is_balanced_clustering(g, [(2, 3)])
        assert ok
        # no cut at all leaves one component of 6, which is too big
        ok2, _ = is_balanced_clustering(g, [])
        assert not ok2


class TestShrink:
    def test_shrink_certifies_or_shrinks(self):
        g = barbell_k5()
        view = view_of(g, range(10))
        f = frozenset(view.inner_keys)
        res = shrink_step(view, f)
        if res.case == 1:
            cap_old = sum(g.cap[k] for k in f)
            cap_new = sum(g.cap[k] for k in res.f_new)
            assert cap_new < cap_old
        else:
            assert res.alpha is not None

    def test_unbalanced_input_rejected(self):
        g = dumbbell()
        view = view_of(g, range(6))
        with pytest.raises(MergeError):
            shrink_step(view, [])


class TestMergePhase1:
    def test_terminal_clustering_is_balanced(self):
        rng = random.Random(29)
        for _ in range(25):
            g = random_graph(rng, rng.randint(2, 9))
            view = view_of(g, g.vertices)
            cl = merge_phase_1(view)
            n = len(view.cluster)
            for z in cl.components:
                assert 3 * len(z) <= 2 * n or n == 1
            # re-tightened F is exactly the inter-component edge set
            comp_of = {}
            for i, z in enumerate(cl.components):
                for v in z:
                    comp_of[v] = i
            want = {(u, v) for u, v, _ in view.inner_edges
                    if comp_of[u] != comp_of[v]}
            assert set(cl.f_keys) == want
            assert cl.f_keys <= cl.f_tilde

    def test_declared_expansion_holds_when_measurable(self):
        """When the subdivision is small enough for exact measurement, the
        measured expansion of the inter-cluster split nodes meets the
        declared lower bound."""
        rng = random.Random(31)
        checked = 0
        for _ in range(30):
            g = random_graph(rng, rng.randint(3, 6), p=0.8)
            view = view_of(g, g.vertices)
            cl = merge_phase_1(view)
            if cl.alpha_measured is None or cl.alpha_declared is None:
                continue
            exact_tags = all(o.certificate is None or
                             o.certificate.verified == "exact"
                             for o in cl.outcomes)
            if exact_tags:
                assert cl.alpha_measured >= cl.alpha_declared
                checked += 1
        assert checked >= 5

    def test_barbell_needs_a_shrink_iteration(self):
        g = barbell_k5()
        view = view_of(g, range(10))
        cl = merge_phase_1(view)
        assert cl.iterations >= 2
        assert any(o.tag != "Expander" for o in cl.outcomes)

    def test_singleton_cluster(self):
        g = dumbbell()
        cl = merge_phase_1(view_of(g, [0]))
        assert cl.components == (frozenset({0}),)
        assert not cl.f_keys


class TestMergePhase2:
    def test_boundaryless_cluster_degenerates(self):
        g = dumbbell()
        view = view_of(g, range(6))
        part = merge_phase(view, Fraction(1, 3))
        assert not part.x_y
        assert part.r_side == frozenset()
        assert part.l_side == frozenset(range(6))

    def test_separator_separates(self):
        g = parse_edge_list(
            "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n3 4\n4 5\n4 6 5\n5 6 5\n")
        view = view_of(g, range(6))
        part = merge_phase(view, Fraction(1, 2))
        gsp = view.sprime
        reach = gsp.reachable(sorted(view.x_boundary - part.x_y),
                              removed=part.x_y)
        assert not (reach & part.l_side)
        assert not (reach & (part.clustering.x_f - part.x_y))
        assert part.r_side == frozenset({4, 5})

    def test_separator_flow_contracts(self):
        """Every separator node ships exactly its weight to each side, sinks
        stay within twice their weight, congestion stays within two."""
        rng = random.Random(37)
        exercised = 0
        for _ in range(30):
            g = random_graph(rng, rng.randint(4, 8), p=0.6)
            verts = list(g.vertices)
            k = rng.randint(2, len(verts) - 1)
            cluster = verts[:k]
            view = view_of(g, cluster)
            if len(cluster) < 2:
                continue
            tau = Fraction(1, rng.randint(2, 4))
            part = merge_phase(view, tau)
            if part.x_y:
                exercised += 1
            for sep in (part.flow_to_b, part.flow_to_f):
                assert sep.congestion <= 2
                for x in part.x_y:
                    total = sum((a for _, a in sep.per_source.get(x, [])),
                                Fraction(0))
                    assert total == part.mu_tau[x]
                for t, got in sep.sink_in.items():
                    assert got <= 2 * part.mu_tau[t]
        assert exercised >= 5

    def test_sub_cluster_sizes(self):
        rng = random.Random(39)
        for _ in range(20):
            g = random_graph(rng, rng.randint(3, 9))
            view = view_of(g, g.vertices)
            part = merge_phase(view, Fraction(1, 2))
            n = len(view.cluster)
            for p in part.sub_clusters:
                assert 3 * len(p) <= 2 * n
            assert frozenset().union(*part.sub_clusters) == view.cluster

    def test_tau_validation(self):
        g = dumbbell()
        view = view_of(g, [0, 1, 2])
        cl = merge_phase_1(view)
        with pytest.raises(MergeError):
            merge_phase_2(view, cl, Fraction(3, 2))
        with pytest.raises(MergeError):
            merge_phase_2(view, cl, 0)
