"""Exact-weight undirected graphs.

Vertices are dense ids 0..n-1.  Edge weights are nonnegative rationals;
parallel edges are permitted (zero-weight shortcuts duplicate endpoints),
self-loops are not.  All distance computations are exact: internally the
weights are rescaled to integers by the lcm of their denominators, so the
hot loops run on Python ints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from heapq import heappush, heappop
from typing import Optional

from .errors import InputError, ParseError
from .exact import parse_fraction, format_fraction

Edge = tuple[int, int, Fraction]


class WeightedGraph:
    """Immutable undirected graph with exact rational edge weights."""

    __slots__ = ("n", "edges", "_adj", "_scale", "_int_adj")

    def __init__(self, n: int, edges: list[Edge]):
        if n < 0:
            raise InputError("vertex count must be nonnegative")
        normalized = []
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) references an invalid vertex id")
            if u == v:
                raise InputError(f"self-loop at vertex {u} not allowed")
            w = Fraction(w)
            if w < 0:
                raise InputError(f"negative weight on edge ({u},{v})")
            normalized.append((u, v, w))
        self.n = n
        self.edges = tuple(normalized)
        self._adj = None
        self._scale = None
        self._int_adj = None

    def __eq__(self, other):
        return (
            isinstance(other, WeightedGraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={len(self.edges)})"

    @property
    def adj(self) -> list[list[tuple[int, int]]]:
        """adj[u] = list of (neighbor, edge index)."""
        if self._adj is None:
            adj = [[] for _ in range(self.n)]
            for idx, (u, v, _) in enumerate(self.edges):
                adj[u].append((v, idx))
                adj[v].append((u, idx))
            self._adj = adj
        return self._adj

    def _scaled(self):
        """Integer weights plus the common scale (lcm of denominators)."""
        if self._scale is None:
            scale = 1
            for _, _, w in self.edges:
                scale = math.lcm(scale, w.denominator)
            int_adj = [[] for _ in range(self.n)]
            for u, v, w in self.edges:
                wi = w.numerator * (scale // w.denominator)
                int_adj[u].append((v, wi))
                int_adj[v].append((u, wi))
            self._scale = scale
            self._int_adj = int_adj
        return self._int_adj, self._scale

    def check_vertex(self, v: int):
        if not (0 <= v < self.n):
            raise InputError(f"invalid vertex id {v} (n={self.n})")

    def with_extra_edges(self, extra: list[Edge]) -> "WeightedGraph":
        return WeightedGraph(self.n, list(self.edges) + list(extra))


@dataclass(frozen=True)
class PathResult:
    """Exact shortest-path answer; distance/path are None iff unreachable."""

    distance: Optional[Fraction]
    path: Optional[tuple[int, ...]]

    @property
    def reachable(self) -> bool:
        return self.distance is not None


@dataclass(frozen=True)
class Ball:
    """Open metric ball: members = {u : d(center, u) < radius}, strictly."""

    center: int
    radius: Fraction
    members: frozenset[int]


def _dijkstra(n, adj, source, target=None):
    """Shortest paths with deterministic predecessors.

    Ties are resolved toward the smallest predecessor id among vertices
    settled earlier in the (distance, id) order; with zero-weight edges this
    restriction is what keeps predecessor chains acyclic.
    """
    dist = [None] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == target:
            break
        for v, w in adj[u]:
            if done[v]:
                continue
            nd = d + w
            dv = dist[v]
            if dv is None or nd < dv:
                dist[v] = nd
                pred[v] = u
                heappush(heap, (nd, v))
            elif nd == dv and u < pred[v]:
                pred[v] = u
    return dist, pred, done


def scaled_distances(g: WeightedGraph, source: int):
    """(integer distance list, scale): distance Fraction = d_int / scale."""
    g.check_vertex(source)
    int_adj, scale = g._scaled()
    dist, _, _ = _dijkstra(g.n, int_adj, source)
    return dist, scale


def distances_from(g: WeightedGraph, source: int) -> list[Optional[Fraction]]:
    dist, scale = scaled_distances(g, source)
    return [None if d is None else Fraction(d, scale) for d in dist]


def shortest_path(g: WeightedGraph, s: int, t: int) -> PathResult:
    """Exact shortest path from s to t with deterministic tie-breaking."""
    g.check_vertex(s)
    g.check_vertex(t)
    int_adj, scale = g._scaled()
    dist, pred, done = _dijkstra(g.n, int_adj, s, target=t)
    if not done[t]:
        return PathResult(None, None)
    path = [t]
    while path[-1] != s:
        path.append(pred[path[-1]])
    path.reverse()
    return PathResult(Fraction(dist[t], scale), tuple(path))


def open_ball(g: WeightedGraph, center: int, radius: Fraction) -> Ball:
    """Open ball of the given center and radius; radius 0 gives no members."""
    radius = Fraction(radius)
    if radius < 0:
        raise InputError("ball radius must be nonnegative")
    dist, scale = scaled_distances(g, center)
    rnum, rden = radius.numerator, radius.denominator
    members = frozenset(
        v for v, d in enumerate(dist) if d is not None and d * rden < rnum * scale
    )
    return Ball(center, radius, members)


def sphere(g: WeightedGraph, center: int, radius: Fraction) -> frozenset[int]:
    """Vertices at distance exactly `radius` from the center."""
    radius = Fraction(radius)
    dist, scale = scaled_distances(g, center)
    rnum, rden = radius.numerator, radius.denominator
    return frozenset(
        v for v, d in enumerate(dist) if d is not None and d * rden == rnum * scale
    )


SUBDIVISION_EDGE_LIMIT = 2_000_000


def subdivide_edges(g: WeightedGraph, eta: Fraction) -> tuple[WeightedGraph, dict[int, int]]:
    """Replace every positive edge by a chain of weight-eta edges.

    Every positive weight must be an integer multiple of eta; zero-weight
    edges are kept intact.  Original vertices keep their ids, so the returned
    map is the identity on them; all pairwise distances among original
    vertices are preserved exactly.
    """
    eta = Fraction(eta)
    if eta <= 0:
        raise InputError("eta must be positive")
    segment_total = 0
    for u, v, w in g.edges:
        if w == 0:
            segment_total += 1
            continue
        ratio = w / eta
        if ratio.denominator != 1:
            raise InputError(
                f"edge ({u},{v}) weight {w} is not an integer multiple of eta={eta}"
            )
        segment_total += ratio.numerator
        if segment_total > SUBDIVISION_EDGE_LIMIT:
            raise InputError(
                f"subdivision at eta={eta} would create more than "
                f"{SUBDIVISION_EDGE_LIMIT} edges; pass a coarser eta"
            )
    edges: list[Edge] = []
    next_id = g.n
    for u, v, w in g.edges:
        if w == 0:
            edges.append((u, v, w))
            continue
        k = (w / eta).numerator
        prev = u
        for _ in range(1, k):
            edges.append((prev, next_id, eta))
            prev = next_id
            next_id += 1
        edges.append((prev, v, eta))
    return WeightedGraph(next_id, edges), {v: v for v in range(g.n)}


def default_eta(g: WeightedGraph) -> Fraction:
    """gcd of the positive edge weights; 1 for a graph with no positive edge."""
    num_gcd, den_lcm = 0, 1
    for _, _, w in g.edges:
        if w == 0:
            continue
        num_gcd = math.gcd(num_gcd, w.numerator)
        den_lcm = math.lcm(den_lcm, w.denominator)
    if num_gcd == 0:
        return Fraction(1)
    return Fraction(num_gcd, den_lcm)


def induced_zero_border(
    g: WeightedGraph, center: int, radius: Fraction
) -> tuple[WeightedGraph, dict[int, int]]:
    """Graph induced on the closed ball, plus a zero clique on its sphere.

    Requires that no edge jumps over the sphere: an edge with one endpoint
    strictly inside and the other strictly outside is a precondition error
    (the caller must subdivide first).  Returns the new graph and the map
    from old vertex ids to new dense ids.
    """
    radius = Fraction(radius)
    if radius < 0:
        raise InputError("radius must be nonnegative")
    dist, scale = scaled_distances(g, center)
    rnum, rden = radius.numerator, radius.denominator

    def side(v):
        # -1 inside, 0 on the sphere, +1 outside (unreachable counts outside)
        d = dist[v]
        if d is None:
            return 1
        lhs, rhs = d * rden, rnum * scale
        return -1 if lhs < rhs else (0 if lhs == rhs else 1)

    sides = [side(v) for v in range(g.n)]
    for u, v, _ in g.edges:
        if {sides[u], sides[v]} == {-1, 1}:
            raise InputError(
                f"edge ({u},{v}) crosses the sphere of radius {radius}; "
                "subdivide the graph first"
            )
    kept = [v for v in range(g.n) if sides[v] <= 0]
    remap = {old: new for new, old in enumerate(kept)}
    edges = [
        (remap[u], remap[v], w)
        for u, v, w in g.edges
        if sides[u] <= 0 and sides[v] <= 0
    ]
    border = [v for v in kept if sides[v] == 0]
    for i, u in enumerate(border):
        for v in border[i + 1 :]:
            edges.append((remap[u], remap[v], Fraction(0)))
    return WeightedGraph(len(kept), edges), remap


def girth(g: WeightedGraph) -> Optional[int]:
    """Length of the shortest cycle of the unweighted skeleton; None if acyclic.

    Parallel edges count as a 2-cycle.  Weights are ignored: the skeleton
    hop-count is what the auxiliary-graph and cage arguments use.
    """
    seen = set()
    simple_adj = [[] for _ in range(g.n)]
    parallel = False
    for u, v, _ in g.edges:
        key = (min(u, v), max(u, v))
        if key in seen:
            parallel = True
        else:
            seen.add(key)
            simple_adj[u].append(v)
            simple_adj[v].append(u)
    if parallel:
        return 2
    best = None
    for root in range(g.n):
        depth = [-1] * g.n
        parent = [-1] * g.n
        depth[root] = 0
        queue = [root]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            if best is not None and 2 * depth[u] >= best:
                break
            for v in simple_adj[u]:
                if depth[v] == -1:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    queue.append(v)
                elif parent[u] != v and parent[v] != u:
                    cycle = depth[u] + depth[v] + 1
                    if best is None or cycle < best:
                        best = cycle
    return best


def graph_to_obj(g: WeightedGraph) -> dict:
    return {
        "n": g.n,
        "edges": [[u, v, format_fraction(w)] for u, v, w in g.edges],
    }


def obj_to_graph(obj) -> WeightedGraph:
    if not isinstance(obj, dict):
        raise ParseError("graph object must be a JSON object")
    unknown = set(obj) - {"n", "edges"}
    if unknown:
        raise ParseError(f"graph object has unknown fields: {sorted(unknown)}")
    if "n" not in obj or "edges" not in obj:
        raise ParseError("graph object needs fields 'n' and 'edges'")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ParseError("graph field 'n' must be an integer")
    edges = []
    for i, item in enumerate(obj["edges"]):
        if not (isinstance(item, list) and len(item) == 3):
            raise ParseError(f"edges[{i}] must be [u, v, weight]")
        u, v, w = item
        if not isinstance(u, int) or not isinstance(v, int):
            raise ParseError(f"edges[{i}] endpoints must be integers")
        edges.append((u, v, parse_fraction(w)))
    try:
        return WeightedGraph(n, edges)
    except InputError as exc:
        raise ParseError(str(exc)) from exc


def serialize_graph(g: WeightedGraph) -> str:
    return json.dumps(graph_to_obj(g), sort_keys=True, separators=(",", ":"))


def parse_graph(text: str) -> WeightedGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return obj_to_graph(obj)
