import random
from fractions import Fraction

import pytest

from treecut.config import DEFAULT
from treecut.graph import (Graph, Measure, cut_capacity, graph_expansion_exact,
                           parse_edge_list)
from treecut.oracle import (check_outcome, check_refined, cut_or_expander,
                            refined_cut_or_expander, sparsest_cut, _log2n)


def k_n(n):
    return Graph(range(n), [(i, j, 1) for i in range(n)
                            for j in range(i + 1, n)])


def dumbbell():
    return parse_edge_list("0 1\n0 2\n1 2\n2 3\n3 4\n3 5\n4 5\n")


def random_graph(rng, n, p=0.5, max_cap=3):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, rng.randint(1, max_cap)))
    return Graph(range(n), edges)


class TestSparsestCut:
    def test_exact_below_threshold(self):
        g = k_n(5)
        ratio, side, exact = sparsest_cut(g, Measure.indicator(g.vertices),
                                          DEFAULT)
        assert exact and ratio == 3

    def test_heuristic_is_honest_above_threshold(self):
        """Above the enumeration threshold the sweep returns a real cut whose
        reported ratio matches an exact re-computation."""
        rng = random.Random(1)
        g = random_graph(rng, 24, p=0.3)
        mu = Measure.indicator(g.vertices)
        ratio, side, exact = sparsest_cut(g, mu, DEFAULT)
        assert not exact
        m = min(mu.of(side), mu.total() - mu.of(side))
        assert ratio == Fraction(cut_capacity(g, side)) / m


class TestCutOrExpander:
    def test_k5_is_expander(self):
        g = k_n(5)
        out = cut_or_expander(g, Fraction(1, 4), Measure.indicator(g.vertices))
        assert out.tag == "Expander"
        assert out.certificate.verified == "exact"
        assert check_outcome(out).ok

    def test_dumbbell_balanced_cut(self):
        g = dumbbell()
        out = cut_or_expander(g, Fraction(1, 4), Measure.indicator(g.vertices))
        assert out.tag == "BalancedCut"
        assert check_outcome(out).ok
        # stopping rule: both sides carry at least mu_total / (4 log n)
        mu_total = Fraction(6)
        bound = mu_total / (4 * out.logn)
        assert out.mu.of(out.residual) >= bound
        assert out.mu.of(out.peeled) >= bound

    def test_unbalanced_expander_case(self):
        """A K8 with one pendant vertex under a heavy measure: the pendant
        cut is sparse and peels off, the core certifies, and the peeled
        measure stays below mu_total / log n."""
        g = parse_edge_list(
            "\n".join("%d %d" % (i, j) for i in range(8)
                      for j in range(i + 1, 8)) + "\n8 0\n")
        mu = Measure({v: 8 for v in range(9)})
        out = cut_or_expander(g, Fraction(1, 16), mu)
        assert out.tag == "UnbalancedExpander"
        assert out.mu.of(out.peeled) <= mu.total() / out.logn
        assert check_outcome(out).ok

    def test_peel_flows_have_recorded_constants(self):
        g = dumbbell()
        out = cut_or_expander(g, Fraction(1, 4), Measure.indicator(g.vertices))
        for step in out.steps:
            for rec in (step.flow_in, step.flow_out):
                assert rec.feasible
                assert rec.result.flow.congestion() <= rec.congestion_cap

    def test_telescoping_and_smaller_side(self):
        rng = random.Random(41)
        checked = 0
        for _ in range(25):
            g = random_graph(rng, rng.randint(4, 9), p=0.5)
            mu = Measure({v: rng.randint(0, 2) for v in g.vertices})
            if mu.total() == 0:
                continue
            out = cut_or_expander(g, Fraction(1, 6), mu)
            rep = check_outcome(out)
            assert rep.ok, rep.failures
            checked += 1
            seen = set()
            for step in out.steps:
                assert step.residual == g.vertex_set() - seen
                assert out.mu.of(step.side) <= out.mu.of(step.rest)
                seen |= step.side
        assert checked >= 10

    def test_aggregate_sparsity_bound(self):
        """Accumulated peeled cut capacity stays within 3x threshold times
        the residual measure (the stopping-rule guarantee)."""
        rng = random.Random(43)
        for _ in range(20):
            g = random_graph(rng, rng.randint(5, 9), p=0.4)
            mu = Measure.indicator(g.vertices)
            out = cut_or_expander(g, Fraction(1, 8), mu)
            if out.tag != "BalancedCut":
                continue
            total_cap = sum(cut_capacity(g.induced(s.residual), s.side)
                            for s in out.steps)
            small = min(out.mu.of(out.residual), out.mu.of(out.peeled))
            assert total_cap <= 3 * out.threshold * small

    def test_zero_measure_graph_is_trivially_expanding(self):
        g = k_n(3)
        out = cut_or_expander(g, Fraction(1, 2), Measure({}))
        assert out.tag == "Expander"
        assert check_outcome(out).ok


class TestRefined:
    def test_case_1_passthrough(self):
        g = k_n(5)
        mu = Measure.indicator(g.vertices)
        out = refined_cut_or_expander(g, Fraction(1, 4), mu, mu)
        assert out.tag == "1"
        assert check_refined(out).ok

    def test_case_2_split_by_nu(self):
        g = dumbbell()
        mu = Measure.indicator(g.vertices)
        # nu concentrated on the residual side forces a low peeled nu
        out = refined_cut_or_expander(g, Fraction(1, 4), mu, mu)
        assert out.tag in ("2a", "2b", "2c")
        rep = check_refined(out)
        assert rep.ok, rep.failures

    def test_case_3_split_by_nu(self):
        g = parse_edge_list(
            "\n".join("%d %d" % (i, j) for i in range(8)
                      for j in range(i + 1, 8)) + "\n8 0\n")
        mu = Measure({v: 8 for v in range(9)})
        for nu, want in ((Measure({8: 1}), "3a"), (Measure({0: 1}), "3b")):
            out = refined_cut_or_expander(g, Fraction(1, 16), mu, nu)
            # 3a when the left-over nu is small, 3b when it dominates
            assert out.tag == want
            rep = check_refined(out)
            assert rep.ok, rep.failures

    def test_random_refined_always_checks(self):
        rng = random.Random(47)
        tags = set()
        for _ in range(40):
            g = random_graph(rng, rng.randint(4, 9), p=0.45)
            mu = Measure({v: rng.randint(0, 2) for v in g.vertices})
            nu = Measure({v: rng.randint(0, 2) for v in g.vertices})
            if mu.total() == 0:
                continue
            out = refined_cut_or_expander(g, Fraction(1, 6), mu, nu)
            rep = check_refined(out)
            assert rep.ok, (out.tag, rep.failures)
            tags.add(out.tag)
        assert len(tags) >= 2
