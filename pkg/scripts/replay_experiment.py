#!/usr/bin/env python3
"""Replay random 1-respected demand states over random trees and report
the per-edge charge distribution against the declared envelopes."""

import argparse
import random
import sys
import time
from fractions import Fraction

from treecut.demand import DemandState
from treecut.graph import Graph
from treecut.replay import ReplayError, full_replay
from treecut.tree import build_basic, build_improved, mincut_in_tree


def random_graph(rng, n, p=0.55, max_cap=6):
    edges = [(i, j, rng.randint(1, max_cap)) for i in range(n)
             for j in range(i + 1, n) if rng.random() < p]
    return Graph(range(n), edges)


def scale_to_respect(t, p):
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


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--triples", type=int, default=50)
    ap.add_argument("--max-n", type=int, default=9)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    t0 = time.time()
    worst = {"basic": Fraction(0), "improved": Fraction(0)}
    done = failures = 0
    while done < args.triples:
        n = rng.randint(2, args.max_n)
        g = random_graph(rng, n)
        entries = {}
        for k in range(rng.randint(1, 3)):
            u, v = rng.sample(range(n), 2)
            a = Fraction(rng.randint(1, 4))
            entries[(u, k)] = entries.get((u, k), Fraction(0)) + a
            entries[(v, k)] = entries.get((v, k), Fraction(0)) - a
        p0 = DemandState(entries)
        b = frozenset(rng.sample(range(n), rng.randint(1, n - 1)))
        results = {}
        for build, tag in ((build_basic, "basic"),
                           (build_improved, "improved")):
            t = build(g)
            p = scale_to_respect(t, p0)
            if p is None:
                break
            try:
                rep = full_replay(t, p, b)
            except ReplayError as exc:
                print("REPLAY FAILURE (%s, n=%d): %s" % (tag, n, exc),
                      file=sys.stderr)
                failures += 1
                break
            results[tag] = rep
        if len(results) < 2:
            continue
        done += 1
        for tag, rep in results.items():
            worst[tag] = max(worst[tag], rep.max_charge)
        print("%3d: n=%d dem=%s charge basic=%s improved=%s"
              % (done, n, results["basic"].dem_p,
                 results["basic"].max_charge,
                 results["improved"].max_charge))
    print("\n%d triples in %.1fs, %d failures"
          % (done, time.time() - t0, failures))
    for tag, w in worst.items():
        print("worst per-edge charge (%s): %s" % (tag, w))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
