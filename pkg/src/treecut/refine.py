"""Recursive boundary-expansion refinement of a cluster.

A cluster S is split until every sub-cluster's boundary split nodes expand
inside it.  The recursion consumes the five-case refined oracle on the
boundary-split graph of each cluster (G[S] plus pendant boundary split
nodes), and the resulting binary cut tree carries one flow per cut that
lets inter-cluster mass be routed bottom-up to the boundary of S with a
per-node load envelope.
"""

from fractions import Fraction

from .config import DEFAULT, Config
from .demand import DemandMatrix, from_matrix, respects_exact
from .flow import route_from_cut
from .graph import ClusterView, Graph, Measure, capacity, edge_key
from .oracle import RouteRecord, check_refined, refined_cut_or_expander, _log2n
from .util import ceil_frac, rlog2, rloglog2


class RefineError(ValueError):
    pass


def schedule_cf(cfg: Config) -> Fraction:
    """The schedule coefficient 4*c0/log2(4/3)."""
    return 4 * cfg.c0_declared / rlog2(Fraction(4, 3))


def f_value(cluster_size: int, sigma: int, n: int, cfg: Config = DEFAULT):
    """Schedule value c_f * log2(sigma/|S|) * max(1, log2 log2 n)."""
    if cluster_size < 1 or sigma < 1:
        raise RefineError("sizes must be positive")
    if 2 * sigma < 3 * cluster_size:
        raise RefineError("schedule needs sigma >= (3/2)|S|; got sigma=%d "
                          "for |S|=%d" % (sigma, cluster_size))
    return schedule_cf(cfg) * rlog2(Fraction(sigma, cluster_size)) \
        * rloglog2(max(2, n))


def product_envelope(j: int, n: int) -> Fraction:
    """prod_{l=j}^{3 ceil(log2 n)} (1 + 1/(l * loglog n)), exactly."""
    top = max(1, 3 * ceil_frac(rlog2(max(2, n))))
    ll = rloglog2(max(2, n))
    out = Fraction(1)
    for l in range(max(1, j), top + 1):
        out *= 1 + Fraction(1) / (l * ll)
    return out


def product_growth_ok(k: int, c) -> bool:
    """prod_{l=1}^{k} (1 + c/l) <= k^(2c), checked exactly when 4c is an
    integer (square both sides to clear the half-integral exponent)."""
    c = Fraction(c)
    e = 4 * c
    if e.denominator != 1:
        raise RefineError("needs 4c integral")
    prod = Fraction(1)
    for l in range(1, k + 1):
        prod *= 1 + c / l
    return prod ** 2 <= Fraction(k) ** int(e)


class BinaryNode:
    """One node of the refinement cut tree.  The left child is always the
    side that receives the cut-to-boundary flow."""

    def __init__(self, dset, case, f_val, phi=None):
        self.dset = frozenset(dset)
        self.case = case          # oracle case, "2c-inner", "3b-leaf", "1"
        self.f_val = f_val
        self.phi = phi
        self.left = None
        self.right = None
        self.cut_keys = ()        # base edges between left and right sets
        self.route = None         # RouteRecord into the left side
        self.sink_rate = None     # per-unit sink rate used for the route
        self.sink_splits = frozenset()
        self.left_depth = None
        self.cluster_leaf = False
        self.notes = []
        self.contraction = {}     # child set -> which decrease case held

    @property
    def is_binary_leaf(self):
        return self.left is None and self.right is None

    def walk(self):
        yield self
        if self.left is not None:
            yield from self.left.walk()
        if self.right is not None:
            yield from self.right.walk()


class LeafCertificate:
    """Boundary all-to-all respect check for one refinement leaf."""

    def __init__(self, cluster, f_val, target, ratio, verified, ok):
        self.cluster = frozenset(cluster)
        self.f_val = f_val
        self.target = target
        self.ratio = ratio         # exact respect ratio or None
        self.verified = verified   # "exact" | "unverified"
        self.ok = ok               # True/False when exact, None otherwise


class RefinementResult:
    def __init__(self, view, sigma, root, clusters, certificates, outcomes,
                 notes, cfg):
        self.view = view
        self.sigma = sigma
        self.root = root
        self.clusters = tuple(sorted((frozenset(c) for c in clusters),
                                     key=min))
        self.certificates = certificates
        self.outcomes = outcomes
        self.notes = notes
        self.cfg = cfg

    @property
    def inter_cluster_keys(self):
        out = set()
        for node in self.root.walk():
            out.update(node.cut_keys)
        return frozenset(out)


def _boundary_cap_at(g: Graph, cluster, part):
    """Capacity of boundary edges of `cluster` whose inner endpoint lies in
    `part` (the relocated split-node measure of that part)."""
    cluster = frozenset(cluster)
    tot = Fraction(0)
    for v in part:
        for u, c in g.adj[v]:
            if u not in cluster:
                tot += c
    return tot


def _check_contraction(g: Graph, s, r, node: BinaryNode):
    """Each recursion edge must shrink either the vertex count (to <= 3/4)
    or the boundary measure (by half the non-child boundary, or to 7/8)."""
    s, r = frozenset(s), frozenset(r)
    if 4 * len(r) <= 3 * len(s):
        node.contraction[r] = "size"
        return
    cap_cut = Fraction(capacity(g, r, s - r))
    mu_rest = _boundary_cap_at(g, s, s - r)
    if mu_rest > 0 and 2 * cap_cut <= mu_rest:
        node.contraction[r] = "measure"
        return
    mu_r = _boundary_cap_at(g, s, r) + cap_cut
    mu_s = _boundary_cap_at(g, s, s)
    if 8 * mu_r <= 7 * mu_s:
        node.contraction[r] = "measure-7/8"
        return
    raise RefineError("recursion into %r shrinks neither size nor boundary "
                      "measure" % (sorted(r),))


def _route_cut_to_left(sub_root, left_set, ctx_set, cut_keys, rate,
                       cfg: Config):
    """Flow sending one unit per unit of cut-edge capacity into the outer
    boundary split nodes on the left side, with honest escalation records.

    Graph: G[L] plus pendant split nodes of E(L, V \\ L).  Sources enter at
    the split nodes of the cut edges; sinks are the splits of E(L, V \\ ctx)
    with capacity rate * c(b), boosted if needed.  Returns (record, sinks);
    the record is None when no route exists at any escalation level.
    """
    view_l = ClusterView(sub_root, left_set)
    g = view_l.g_tilde
    ctx_set = frozenset(ctx_set)
    left_set = frozenset(left_set)
    cut_splits = frozenset(sub_root.split(u, v) for u, v in cut_keys)
    sinks = set()
    for u, v, _ in view_l.boundary_edges:
        outer = u if u not in left_set else v
        if outer not in ctx_set:
            sinks.add(sub_root.split(u, v))
    sinks = frozenset(sinks)
    if not cut_splits or not sinks:
        return None, sinks
    d = frozenset(g.vertices) - cut_splits
    base_cap = sub_root.base.cap
    half_edges = []
    for u, v in sorted(edge_key(*k) for k in cut_keys):
        x = sub_root.split(u, v)
        inner = u if u in left_set else v
        half_edges.append((x, inner))
    base_caps = {x: Fraction(rate) * base_cap[sub_root.edge_of_split[x]]
                 for x in sorted(sinks)}
    cap = cfg.oracle_congestion_cap
    boost = Fraction(1)
    first = True
    while True:
        caps = {x: c * boost for x, c in base_caps.items()}
        res = route_from_cut(g, d, caps, cap, cut_edges=half_edges)
        if res.feasible:
            return RouteRecord(res, cap, caps, boost,
                               within_declared=first), sinks
        first = False
        if cap < cfg.oracle_congestion_limit:
            cap = cap * 2
            continue
        if boost < 64:
            boost = boost * 2
            continue
        return None, sinks


class _Builder:
    def __init__(self, view: ClusterView, sigma, cfg: Config):
        self.sub_root = view.root
        self.g = view.root.base
        self.n = self.g.vertex_count
        self.sigma = sigma
        self.cfg = cfg
        self.outcomes = []
        self.notes = []
        self.depth_limit = 40 + 10 * max(1, ceil_frac(rlog2(self.n))) ** 2

    def _relocated(self, cut_side, dset, a):
        """True when a boundary split on the cut side had its inner endpoint
        on the other side, so relocation moved it across the cut."""
        for x in cut_side:
            e = self.sub_root.edge_of_split.get(x)
            if e is None:
                continue
            inner = e[0] if e[0] in dset else e[1]
            if inner not in a:
                return True
        return False

    def leaf(self, dset, case):
        f = f_value(len(dset), self.sigma, self.n, self.cfg)
        node = BinaryNode(dset, case, f)
        node.cluster_leaf = True
        return node

    def build(self, dset, depth):
        if depth > self.depth_limit:
            raise RefineError("refinement recursion exceeded its depth guard")
        dset = frozenset(dset)
        cfg = self.cfg
        f = f_value(len(dset), self.sigma, self.n, cfg)
        view = ClusterView(self.sub_root, dset)
        mu = view.boundary_measure()
        if mu.total() == 0 or len(dset) == 1:
            return self.leaf(dset, "1")
        gt = view.g_tilde
        logt = _log2n(gt.vertex_count)
        phi = cfg.c_phi / (logt * f)
        nu = Measure.indicator(dset)
        out = refined_cut_or_expander(gt, phi, mu, nu, cfg)
        self.outcomes.append((dset, out))
        rep = check_refined(out)
        if not rep.ok:
            raise RefineError("oracle self-check failed on %r: %s"
                              % (sorted(dset), rep.failures))
        node = BinaryNode(dset, out.tag, f, phi)
        if out.tag == "1":
            node.cluster_leaf = True
            return node
        if out.tag == "2c":
            return self._split_2c(node, view, out, depth)
        a = frozenset(out.cut_a) & dset
        rest = dset - a
        if not a or not rest:
            raise RefineError("degenerate relocated cut in %r" % sorted(dset))
        if self._relocated(out.cut_a, dset, a):
            node.notes.append("relocated stranded boundary splits")
        if out.tag == "3a":
            left_set, right_set = a, rest
        else:
            left_set, right_set = rest, a
        if 4 * len(left_set) > 3 * len(dset):
            raise RefineError("left child exceeds 3/4 of its parent")
        _check_contraction(self.g, dset, left_set, node)
        if out.tag == "3b":
            node.right = self.leaf(right_set, "3b-leaf")
        else:
            _check_contraction(self.g, dset, right_set, node)
            node.right = self.build(right_set, depth + 1)
        node.left = self.build(left_set, depth + 1)
        self._attach_route(node, left_set, dset, right_set, phi, logt)
        return node

    def _split_2c(self, node, view, out, depth):
        dset = node.dset
        a1 = frozenset(out.cut_a1) & dset
        a2 = frozenset(out.cut_a2) & dset
        mid = a1 - a2
        pre = dset - a1
        if not a2 or not mid:
            raise RefineError("degenerate three-way cut in %r" % sorted(dset))
        logt = _log2n(view.g_tilde.vertex_count)
        for child in (a2, mid) + ((pre,) if pre else ()):
            _check_contraction(self.g, dset, child, node)
        if not pre:
            # the outer cut vanished: this node carries the inner cut only
            if 4 * len(a2) > 3 * len(dset):
                raise RefineError("left child exceeds 3/4 of its parent")
            node.left = self.build(a2, depth + 1)
            node.right = self.build(mid, depth + 1)
            self._attach_route(node, a2, dset, mid, node.phi, logt)
            return node
        if 4 * len(pre) > 3 * len(dset):
            raise RefineError("left child exceeds 3/4 of its parent")
        inner = BinaryNode(a1, "2c-inner", node.f_val, node.phi)
        if 4 * len(a2) > 3 * len(a1):
            raise RefineError("left child exceeds 3/4 of its parent")
        inner.left = self.build(a2, depth + 1)
        inner.right = self.build(mid, depth + 1)
        # the inner cut routes with the outer cluster's schedule and targets
        # the outer cluster's boundary (its own cut splits are not sinks)
        self._attach_route(inner, a2, dset, mid, node.phi, logt)
        node.left = self.build(pre, depth + 1)
        node.right = inner
        self._attach_route(node, pre, dset, a1, node.phi, logt)
        return node

    def _attach_route(self, node, left_set, ctx_set, right_set, phi, logt):
        cut_keys = tuple(sorted(
            edge_key(u, v) for u, v, _ in self.g.edges
            if (u in left_set and v in right_set)
            or (v in left_set and u in right_set)))
        node.cut_keys = cut_keys
        rate = self.cfg.c0_declared * phi * logt
        node.sink_rate = rate
        route, sinks = _route_cut_to_left(self.sub_root, left_set, ctx_set,
                                          cut_keys, rate, self.cfg)
        node.sink_splits = sinks
        if cut_keys and route is None:
            if not sinks:
                node.notes.append("no outer-boundary sinks on the left side; "
                                  "mass stays on the cut")
                self.notes.append("sinkless route at %r" % (sorted(left_set),))
            else:
                raise RefineError("cut-to-boundary flow infeasible at every "
                                  "escalation level in %r" % sorted(left_set))
        node.route = route


def refine(view: ClusterView, sigma: int, cfg: Config = DEFAULT) \
        -> RefinementResult:
    s = view.cluster
    if 2 * sigma < 3 * len(s):
        raise RefineError("refine needs sigma >= (3/2)|S|")
    b = _Builder(view, sigma, cfg)
    root = b.build(s, 0)
    _assign_left_depths(root)
    clusters = [n.dset for n in root.walk() if n.cluster_leaf]
    certs = [_leaf_certificate(view.root, c, sigma, cfg)
             for c in sorted(clusters, key=min)]
    return RefinementResult(view, sigma, root, clusters, certs, b.outcomes,
                            b.notes, cfg)


def _assign_left_depths(root: BinaryNode):
    stack = [(root, 1)]
    while stack:
        node, j = stack.pop()
        node.left_depth = j
        if node.left is not None:
            stack.append((node.left, j + 1))
        if node.right is not None:
            stack.append((node.right, j))


def _leaf_certificate(sub_root, cluster, sigma, cfg: Config):
    n = sub_root.base.vertex_count
    f = f_value(len(cluster), sigma, n, cfg)
    view = ClusterView(sub_root, cluster)
    target = cfg.kappa / (f * _log2n(n))
    if not view.x_boundary:
        return LeafCertificate(cluster, f, target, None, "exact", True)
    if view.sprime.vertex_count > cfg.brute_threshold:
        return LeafCertificate(cluster, f, target, None, "unverified", None)
    base_cap = sub_root.base.cap
    weight = {x: base_cap[sub_root.edge_of_split[x]]
              for x in view.x_boundary}
    # each boundary split sources its full capacity, spread over the others
    # in proportion to their capacities
    shares = DemandMatrix.all_to_all(sorted(view.x_boundary),
                                     weight_of=lambda x: weight[x])
    q = DemandMatrix()
    for (u, v), a in shares.entries.items():
        q.add(u, v, a * weight[u])
    p = from_matrix(q)
    ratio, _ = respects_exact(view.sprime, p, cfg.brute_threshold)
    if ratio is None:
        return LeafCertificate(cluster, f, target, None, "exact", True)
    return LeafCertificate(cluster, f, target, ratio, "exact", ratio >= target)


class RoutingProfile:
    """Outcome of the bottom-up inter-cluster-to-boundary routing."""

    def __init__(self, loads, per_unit_max, congestion, envelope_ok,
                 envelope_checks, notes):
        self.loads = loads                  # split node -> final load
        self.per_unit_max = per_unit_max
        self.congestion = congestion        # max accumulated per-edge usage
        self.envelope_ok = envelope_ok
        self.envelope_checks = envelope_checks  # (dset, depth, max, bound)
        self.notes = notes

    def total(self):
        return sum(self.loads.values(), Fraction(0))


def route_inter_to_boundary(result: RefinementResult,
                            cfg: Config = DEFAULT) -> RoutingProfile:
    """Move one unit of mass per unit of inter-cluster edge capacity to the
    boundary of the refined cluster, one binary-tree node at a time from the
    leaves up, scaling each node's stored flow by the load actually present
    on its cut edges.  Checks the per-depth load envelope after each node."""
    sub = result.view.root
    base_cap = sub.base.cap
    n = sub.base.vertex_count
    loads = {}
    for u, v in result.inter_cluster_keys:
        loads[sub.split(u, v)] = Fraction(base_cap[(u, v)])
    usage = {}
    checks = []
    notes = list(result.notes)
    envelope_ok = True

    def process(node):
        nonlocal envelope_ok
        if node.left is not None:
            process(node.left)
        if node.right is not None:
            process(node.right)
        if not node.cut_keys:
            return
        if node.route is None:
            notes.append("unrouted cut at depth %d stays in place"
                         % node.left_depth)
            envelope_ok = False
            return
        max_scale = Fraction(0)
        for u, v in node.cut_keys:
            x = sub.split(u, v)
            max_scale = max(max_scale,
                            loads.get(x, Fraction(0)) / base_cap[(u, v)])
        per_edge = node.route.result.per_edge
        left_set = node.left.dset
        for u, v in node.cut_keys:
            x = sub.split(u, v)
            load = loads.get(x, Fraction(0))
            if load == 0:
                continue
            scale = load / base_cap[(u, v)]
            loads[x] = Fraction(0)
            inner = u if u in left_set else v
            for sink, amt in per_edge[edge_key(x, inner)]:
                loads[sink] = loads.get(sink, Fraction(0)) + amt * scale
        flow = node.route.result.flow
        for (a, b), fval in flow.flow.items():
            cap = flow.graph.edge_capacity(a, b)
            k = edge_key(a, b)
            usage[k] = usage.get(k, Fraction(0)) + abs(fval) / cap * max_scale
        env = product_envelope(node.left_depth, n)
        worst = Fraction(0)
        for x in node.sink_splits:
            c = base_cap[sub.edge_of_split[x]]
            worst = max(worst, loads.get(x, Fraction(0)) / c)
        checks.append((node.dset, node.left_depth, worst, env))
        if worst > env:
            envelope_ok = False

    process(result.root)
    loads = {x: l for x, l in loads.items() if l}
    per_unit = Fraction(0)
    for x, l in loads.items():
        per_unit = max(per_unit, l / base_cap[sub.edge_of_split[x]])
    congestion = max(usage.values(), default=Fraction(0))
    return RoutingProfile(loads, per_unit, congestion, envelope_ok, checks,
                          notes)
