import random
from fractions import Fraction

import pytest

from treecut.demand import DemandState
from treecut.graph import Graph, parse_edge_list
from treecut.replay import (ChargeLedger, ReplayError, full_replay,
                            replay_merge_cluster)
from treecut.tree import build_basic, build_improved, mincut_in_tree


def random_graph(rng, n, p=0.55, max_cap=6):
    edges = [(i, j, rng.randint(1, max_cap)) for i in range(n)
             for j in range(i + 1, n) if rng.random() < p]
    return Graph(range(n), edges)


def random_demand(rng, n, pairs=3):
    entries = {}
    for k in range(rng.randint(1, pairs)):
        u, v = rng.sample(range(n), 2)
        a = Fraction(rng.randint(1, 4))
        entries[(u, k)] = entries.get((u, k), Fraction(0)) + a
        entries[(v, k)] = entries.get((v, k), Fraction(0)) - a
    return DemandState(entries)


def scale_to_respect(t, p):
    """Largest multiple of p the tree 1-respects (None if impossible)."""
    worst = Fraction(0)
    verts = t.graph.vertex_set()
    for node in t.nodes():
        if node.members == verts:
            continue
        d = p.dem_across(node.members)
        if d == 0:
            continue
        mc = mincut_in_tree(t, node.members)
        if mc == 0:
            return None
        worst = max(worst, d / mc)
    return p.scaled(Fraction(1) / worst) if worst > 1 else p


class TestChargeLedger:
    def test_zero_demand_needs_no_edges(self):
        led = ChargeLedger()
        assert led.add({0, 1}, "x", [], Fraction(0)) == 0
        assert led.total_mass() == 0
        assert led.max_per_edge() == 0

    def test_demand_without_edges_raises(self):
        led = ChargeLedger()
        with pytest.raises(ReplayError):
            led.add({0, 1}, "x", [], Fraction(1))

    def test_charges_accumulate_per_edge(self):
        led = ChargeLedger()
        cross = [((0, 1), Fraction(2)), ((2, 3), Fraction(2))]
        led.add({0}, "a", cross, Fraction(2))
        led.add({1}, "b", cross[:1], Fraction(1))
        assert led.per_edge[(0, 1)] == Fraction(1, 2) + Fraction(1, 2)
        assert led.per_edge[(2, 3)] == Fraction(1, 2)
        assert led.total_mass() == 3
        assert len(led.report_lines()) == 2


class TestPreconditions:
    def test_invalid_state_rejected(self):
        g = parse_edge_list("0 1\n")
        t = build_basic(g)
        with pytest.raises(ReplayError):
            full_replay(t, DemandState({(0, 0): Fraction(1)}), {0})

    def test_trivial_cut_rejected(self):
        g = parse_edge_list("0 1\n")
        t = build_basic(g)
        p = DemandState({(0, 0): 1, (1, 0): -1})
        with pytest.raises(ReplayError):
            full_replay(t, p, set())
        with pytest.raises(ReplayError):
            full_replay(t, p, {0, 1})

    def test_unrespected_demand_rejected(self):
        g = parse_edge_list("0 1\n")
        t = build_basic(g)
        p = DemandState({(0, 0): 5, (1, 0): -5})
        with pytest.raises(ReplayError, match="1-respected"):
            full_replay(t, p, {0})

    def test_deserialized_tree_lacks_flows(self):
        g = parse_edge_list("0 1\n1 2\n")
        from treecut.tree import DecompositionTree
        t = DecompositionTree.from_json(build_basic(g).to_json())
        p = DemandState({(0, 0): 1, (2, 0): -1})
        with pytest.raises(ReplayError, match="merge partition"):
            full_replay(t, p, {0})

    def test_mismatched_child_states_rejected(self):
        rng = random.Random(1)
        g = random_graph(rng, 5, p=0.9)
        t = build_basic(g)
        from treecut.merge import MergePartition
        node = next(n for n in t.nodes()
                    if isinstance(n.detail, MergePartition))
        from treecut.graph import subdivide
        with pytest.raises(ReplayError, match="child states"):
            replay_merge_cluster({}, node.detail, frozenset(), 1,
                                 DemandState())


class TestSingleEdge:
    def test_shared_split_cancels_everything(self):
        # both endpoints drop their mass on the one split node, where the
        # opposite signs cancel, so no charge is ever needed
        g = parse_edge_list("0 1\n")
        p = DemandState({(0, 0): 1, (1, 0): -1})
        for build in (build_basic, build_improved):
            rep = full_replay(build(g), p, {0})
            assert rep.dem_p == 1
            assert rep.initial_dem == 0
            assert rep.ledger.total_mass() == 0
            assert rep.dem_p <= rep.ledger.total_mass() + rep.cap_cut

    def test_path_demand_pays_through_middle(self):
        g = parse_edge_list("0 1\n1 2\n")
        p = DemandState({(0, 0): 1, (2, 0): -1})
        for build in (build_basic, build_improved):
            rep = full_replay(build(g), p, {0})
            assert rep.dem_p == 1
            assert rep.dem_p <= rep.ledger.total_mass() + rep.cap_cut
            assert rep.within_envelope


class TestComponents:
    def test_disconnected_replay(self):
        g = Graph(range(4), [(0, 1, 3), (2, 3, 2)])
        p = DemandState({(0, 0): 2, (1, 0): -2, (2, 1): 1, (3, 1): -1})
        for build in (build_basic, build_improved):
            rep = full_replay(build(g), p, {0, 2})
            assert rep.dem_p == 3
            assert rep.dem_p <= rep.ledger.total_mass() + rep.cap_cut

    def test_isolated_vertex_carries_nothing(self):
        g = Graph(range(3), [(0, 1, 1)])
        p = DemandState({(0, 0): 1, (1, 0): -1})
        rep = full_replay(build_basic(g), p, {0, 2})
        assert rep.dem_p == 1


class TestCoverage:
    def test_charges_cover_initial_lifted_demand(self):
        rng = random.Random(23)
        checked = 0
        for _ in range(12):
            n = rng.randint(3, 8)
            g = random_graph(rng, n)
            p0 = random_demand(rng, n)
            b = frozenset(rng.sample(range(n), rng.randint(1, n - 1)))
            for build in (build_basic, build_improved):
                t = build(g)
                p = scale_to_respect(t, p0)
                if p is None:
                    continue
                rep = full_replay(t, p, b)
                assert rep.ledger.total_mass() >= rep.initial_dem
                assert rep.dem_p <= rep.ledger.total_mass() + rep.cap_cut
                checked += 1
        assert checked >= 12

    def test_trace_records_cut_bounded_moves(self):
        g = parse_edge_list("0 1\n1 2\n0 2\n2 3\n")
        t = build_basic(g)
        p = scale_to_respect(t, DemandState({(0, 0): 2, (3, 0): -2}))
        rep = full_replay(t, p, {0, 1})
        assert rep.trace.steps
        for _, _, q_dem, diff_dem in rep.trace.steps:
            assert diff_dem <= q_dem


class TestRandomSweep:
    def test_both_modes_replay_clean(self):
        rng = random.Random(7)
        ran = {"basic": 0, "improved": 0}
        for _ in range(25):
            n = rng.randint(2, 9)
            g = random_graph(rng, n)
            p0 = random_demand(rng, n)
            b = frozenset(rng.sample(range(n), rng.randint(1, n - 1)))
            for build, tag in ((build_basic, "basic"),
                               (build_improved, "improved")):
                t = build(g)
                p = scale_to_respect(t, p0)
                if p is None:
                    continue
                rep = full_replay(t, p, b)
                assert rep.within_envelope, (tag, rep.max_charge)
                ran[tag] += 1
        assert min(ran.values()) >= 15
