import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from treecut.graph import Graph, Measure, cut_capacity, parse_edge_list, subdivide
from treecut.demand import (DemandError, DemandMatrix, DemandState, dem_across,
                            from_matrix, leaf_init, respects_exact,
                            spread_update, update)


def rand_valid_state(rng, vertices, commodities=2):
    """A random valid demand state: each commodity's masses sum to zero."""
    entries = {}
    for k in range(commodities):
        picks = rng.sample(vertices, min(len(vertices), rng.randint(2, 4)))
        vals = [Fraction(rng.randint(-5, 5)) for _ in picks[:-1]]
        vals.append(-sum(vals, Fraction(0)))
        for v, a in zip(picks, vals):
            if a:
                entries[(v, k)] = entries.get((v, k), Fraction(0)) + a
    return DemandState(entries)


class TestStateBasics:
    def test_worked_update_example(self):
        """(20, -70, 10) at one vertex updated by a half-load send becomes
        (14, -49, 7) there; the receiver gets the complementary signed mix."""
        p = DemandState({(0, 0): 20, (0, 1): -70, (0, 2): 10})
        q = DemandMatrix({(0, 1): 30})
        out = update(p, q)
        assert out.mass(0, 0) == 14
        assert out.mass(0, 1) == -49
        assert out.mass(0, 2) == 7
        assert out.mass(1, 0) == 6
        assert out.mass(1, 1) == -21
        assert out.mass(1, 2) == 3

    def test_validity_preserved_by_update(self):
        rng = random.Random(2)
        for _ in range(40):
            p = rand_valid_state(rng, list(range(5)))
            if p.is_zero():
                continue
            loads = p.loads()
            q = DemandMatrix()
            for u, l in loads.items():
                if l > 0:
                    q.add(u, (u + 1) % 5, l / 2)
            out = update(p, q)
            assert out.is_valid()
            assert out.commodity_totals() == p.commodity_totals()

    def test_update_zero_load_source_rejected(self):
        p = DemandState({(0, 0): 1, (1, 0): -1})
        q = DemandMatrix({(2, 0): 1})
        with pytest.raises(DemandError):
            update(p, q)

    def test_load_never_increases(self):
        """Updates only move (and cancel) mass, so total load is monotone."""
        rng = random.Random(9)
        for _ in range(40):
            p = rand_valid_state(rng, list(range(6)))
            if p.is_zero():
                continue
            loads = p.loads()
            q = DemandMatrix()
            for u, l in loads.items():
                if l > 0:
                    q.add(u, rng.choice([v for v in range(6) if v != u]),
                          l * Fraction(rng.randint(1, 4), 4))
            out = update(p, q)
            assert out.total_load() <= p.total_load()

    def test_dem_across_symmetric_for_valid(self):
        rng = random.Random(4)
        for _ in range(30):
            p = rand_valid_state(rng, list(range(6)))
            side = frozenset(rng.sample(range(6), 3))
            rest = frozenset(range(6)) - side
            assert p.dem_across(side) == p.dem_across(rest)

    def test_dem_across_requires_valid(self):
        p = DemandState({(0, 0): 1})
        with pytest.raises(DemandError):
            dem_across(p, {0})


class TestMatrixStateBridge:
    def test_from_matrix_cut_demand_within_factor_two(self):
        """dem_P(cut) <= dem_Q(cut) <= 2 dem_P(cut) for P built from Q."""
        rng = random.Random(13)
        for _ in range(60):
            verts = list(range(6))
            q = DemandMatrix()
            for _ in range(rng.randint(1, 8)):
                u, v = rng.sample(verts, 2)
                q.add(u, v, Fraction(rng.randint(1, 5), rng.randint(1, 3)))
            p = from_matrix(q)
            assert p.is_valid()
            for _ in range(5):
                side = frozenset(rng.sample(verts, rng.randint(1, 5)))
                dem_p = p.dem_across(side)
                dem_q = q.dem_across(side)
                assert dem_p <= dem_q <= 2 * dem_p or dem_q == dem_p == 0

    def test_all_to_all_row_sums(self):
        q = DemandMatrix.all_to_all([0, 1, 2, 3])
        for u in range(4):
            assert q.row_sum(u) == Fraction(3, 4)

    def test_all_to_all_weighted(self):
        q = DemandMatrix.all_to_all([0, 1], weight_of=lambda v: v + 1)
        assert q.entries[(0, 1)] == Fraction(2, 3)
        assert q.entries[(1, 0)] == Fraction(1, 3)


class TestSpread:
    def test_spread_equalizes(self):
        p = DemandState({(0, 0): 6, (1, 0): -6, (1, 1): 3, (2, 1): -3})
        out, q = spread_update(p, [0, 1, 2])
        for k in (0, 1):
            tot = sum(p.mass(v, k) for v in range(3))
            for v in range(3):
                assert out.mass(v, k) == Fraction(tot, 3)

    def test_spread_weighted_shares(self):
        p = DemandState({(0, 0): 8, (1, 0): -8, (0, 1): 4, (2, 1): -4})
        w = {0: 1, 1: 2, 2: 1}
        out, _ = spread_update(p, [0, 1, 2], weight_of=lambda v: w[v])
        for v in range(3):
            for k in (0, 1):
                tot = sum(p.mass(u, k) for u in range(3))
                assert out.mass(v, k) == tot * Fraction(w[v], 4)

    def test_spread_total_moved_bounded_by_load(self):
        rng = random.Random(21)
        for _ in range(30):
            p = rand_valid_state(rng, list(range(5)))
            if p.is_zero():
                continue
            out, q = spread_update(p, list(range(5)))
            assert q.total() <= p.total_load()
            assert out.is_valid() == p.is_valid()


class TestRespects:
    def test_triangle_unit_demand(self):
        g = parse_edge_list("0 1\n1 2\n0 2\n")
        p = from_matrix(DemandMatrix({(0, 1): 1, (1, 2): 1, (2, 0): 1}))
        ratio, side = respects_exact(g, p)
        # every cut has capacity 2 and carries demand 2 (one commodity out,
        # one commodity in), so the worst ratio is 1
        assert ratio == 1

    def test_zero_demand_gives_none(self):
        g = parse_edge_list("0 1\n")
        ratio, side = respects_exact(g, DemandState())
        assert ratio is None and side is None

    def test_respects_matches_definition(self):
        rng = random.Random(6)
        for _ in range(25):
            n = rng.randint(3, 6)
            edges = [(i, j, rng.randint(1, 3)) for i in range(n)
                     for j in range(i + 1, n) if rng.random() < 0.7]
            if not edges:
                continue
            g = Graph(range(n), edges)
            p = rand_valid_state(rng, list(range(n)))
            ratio, side = respects_exact(g, p)
            if ratio is None:
                continue
            assert p.dem_across(side) > 0
            assert Fraction(cut_capacity(g, side)) == ratio * p.dem_across(side)


class TestLeafInit:
    def test_shares_proportional_to_capacity(self):
        g = Graph([0, 1, 2], [(0, 1, 3), (0, 2, 1)])
        sub = subdivide(g)
        p = DemandState({(0, 0): 4, (1, 0): -3, (2, 0): -1})
        parts = leaf_init(p, sub)
        x01, x02 = sub.split(0, 1), sub.split(0, 2)
        assert parts[0].mass(x01, 0) == 3
        assert parts[0].mass(x02, 0) == 1
        assert parts[1].mass(x01, 0) == -3
        assert parts[2].mass(x02, 0) == -1

    def test_per_node_load_bounded_by_capacity(self):
        rng = random.Random(19)
        for _ in range(30):
            n = rng.randint(3, 6)
            edges = [(i, j, rng.randint(1, 3)) for i in range(n)
                     for j in range(i + 1, n) if rng.random() < 0.8]
            if not edges:
                continue
            g = Graph(range(n), edges)
            sub = subdivide(g)
            # demand bounded by degree at every vertex
            entries = {}
            for v in g.vertices:
                if g.degree(v) >= 2:
                    entries[(v, v)] = Fraction(g.degree(v), 2)
                    entries[((v + 1) % n, v)] = -Fraction(g.degree(v), 2)
            p = DemandState(entries)
            try:
                parts = leaf_init(p, sub)
            except DemandError:
                continue
            for v, st_v in parts.items():
                for x in st_v.support_vertices():
                    u, w = sub.edge_of_split[x]
                    assert st_v.load(x) <= g.cap[(u, w)]

    def test_overload_rejected(self):
        g = Graph([0, 1], [(0, 1, 1)])
        sub = subdivide(g)
        p = DemandState({(0, 0): 2, (1, 0): -2})
        with pytest.raises(DemandError):
            leaf_init(p, sub)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_update_validity_property(seed):
    rng = random.Random(seed)
    p = rand_valid_state(rng, list(range(5)), commodities=3)
    if p.is_zero():
        return
    out, _ = spread_update(p, list(range(5)))
    assert out.is_valid()
    assert out.commodity_totals() == p.commodity_totals() == {}
