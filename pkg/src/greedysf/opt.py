"""Exact offline optima at desk scale.

Steiner trees come from the classic subset dynamic program over terminal
masks (with a closed-form fast path on acyclic graphs, where the minimal
connecting subtree is unique).  Steiner forests enumerate set partitions of
the pair list and sum per-block trees, which is correct because every
optimal forest component serves some subset of the pairs.  Size caps keep
the Bell-number times 3^t work deliberate rather than accidental.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from heapq import heapify, heappush, heappop
from typing import Iterator, Optional

from .errors import CapExceededError, InputError
from .exact import format_fraction
from .graph import Ball, WeightedGraph, scaled_distances
from .instances import Instance, MateMap

DEFAULT_PAIR_CAP = 8
DEFAULT_TERMINAL_CAP = 12
PAIR_CAP_ENV = "STEINER_CAP_PAIRS"


def _pair_cap(explicit: Optional[int]) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get(PAIR_CAP_ENV)
    return int(env) if env else DEFAULT_PAIR_CAP


def _terminal_cap(explicit: Optional[int]) -> int:
    return DEFAULT_TERMINAL_CAP if explicit is None else explicit


@dataclass(frozen=True)
class SteinerSolution:
    weight: Fraction
    edge_indices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    components: tuple[frozenset[int], ...]


def solution_to_obj(sol: SteinerSolution) -> dict:
    return {
        "weight": format_fraction(sol.weight),
        "edges": [[u, v] for u, v in sol.edges],
    }


def serialize_solution(sol: SteinerSolution) -> str:
    return json.dumps(solution_to_obj(sol), sort_keys=True, separators=(",", ":"))


def _is_forest(g: WeightedGraph) -> bool:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in g.edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def _terminal_components(g: WeightedGraph, edge_indices, terminals) -> tuple[frozenset[int], ...]:
    parent: dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for idx in edge_indices:
        u, v, _ = g.edges[idx]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, set[int]] = {}
    for t in terminals:
        groups.setdefault(find(t), set()).add(t)
    return tuple(frozenset(s) for s in sorted(groups.values(), key=min))


def _solution(g: WeightedGraph, edge_indices, terminals) -> SteinerSolution:
    idx = tuple(sorted(set(edge_indices)))
    weight = sum((g.edges[i][2] for i in idx), Fraction(0))
    return SteinerSolution(
        weight=weight,
        edge_indices=idx,
        edges=tuple((g.edges[i][0], g.edges[i][1]) for i in idx),
        components=_terminal_components(g, idx, terminals),
    )


# -- Steiner trees on forests: the minimal connecting subtree is unique ------

class _ForestIndex:
    def __init__(self, g: WeightedGraph):
        self.g = g
        self.parent_edge = [-1] * g.n
        self.parent = [-1] * g.n
        self.root = [-1] * g.n
        self.depth = [0] * g.n
        for r in range(g.n):
            if self.root[r] != -1:
                continue
            self.root[r] = r
            stack = [r]
            while stack:
                u = stack.pop()
                for v, ei in g.adj[u]:
                    if self.root[v] == -1:
                        self.root[v] = r
                        self.parent[v] = u
                        self.parent_edge[v] = ei
                        self.depth[v] = self.depth[u] + 1
                        stack.append(v)

    def path_edges(self, a: int, b: int) -> set[int]:
        if self.root[a] != self.root[b]:
            raise InputError("terminals are disconnected")
        edges: set[int] = set()
        while a != b:
            if self.depth[a] >= self.depth[b]:
                edges.add(self.parent_edge[a])
                a = self.parent[a]
            else:
                edges.add(self.parent_edge[b])
                b = self.parent[b]
        return edges

    def subtree_edges(self, terminals) -> set[int]:
        # in a forest the minimal connecting subtree is the union of the
        # unique paths from one fixed terminal to every other terminal
        edges: set[int] = set()
        for t in terminals[1:]:
            edges |= self.path_edges(terminals[0], t)
        return edges


# -- Steiner trees in general: subset DP over terminal masks ------------------

class SteinerTable:
    """dp[mask][v] = min weight of a tree spanning {terminals in mask, v}."""

    def __init__(self, g: WeightedGraph, terminals: tuple[int, ...]):
        self.g = g
        self.terminals = terminals
        self.scale = g._scaled()[1]
        int_adj = [[] for _ in range(g.n)]
        for ei, (u, v, w) in enumerate(g.edges):
            wi = w.numerator * (self.scale // w.denominator)
            int_adj[u].append((v, wi, ei))
            int_adj[v].append((u, wi, ei))
        self.int_adj = int_adj
        self.dp: dict[int, list] = {}
        self.par: dict[int, list] = {}
        for i, term in enumerate(terminals):
            self._seed_and_walk(1 << i, self._single_seed(term))
        t = len(terminals)
        for mask in range(1, 1 << t):
            if mask & (mask - 1) == 0 or mask in self.dp:
                continue
            self._build(mask)

    def _single_seed(self, term):
        seed = [None] * self.g.n
        par = [None] * self.g.n
        seed[term] = 0
        par[term] = ("base",)
        return seed, par

    def _build(self, mask):
        n = self.g.n
        seed = [None] * n
        par = [None] * n
        low = mask & (-mask)
        rest = mask ^ low
        # splits (part1, part2) with low in part1, part2 nonempty; the final
        # sub == 0 step is the ({low}, rest) split
        sub = (rest - 1) & rest
        while True:
            part1 = sub | low
            part2 = mask ^ part1
            a, b = self.dp[part1], self.dp[part2]
            for v in range(n):
                av, bv = a[v], b[v]
                if av is None or bv is None:
                    continue
                cand = av + bv
                if seed[v] is None or cand < seed[v]:
                    seed[v] = cand
                    par[v] = ("merge", part1, part2)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        self._seed_and_walk(mask, (seed, par))

    def _seed_and_walk(self, mask, seeded):
        seed, par = seeded
        n = self.g.n
        heap = [(d, v) for v, d in enumerate(seed) if d is not None]
        heapify(heap)
        done = [False] * n
        while heap:
            d, u = heappop(heap)
            if done[u] or d > seed[u]:
                continue
            done[u] = True
            for v, wi, ei in self.int_adj[u]:
                if done[v]:
                    continue
                nd = d + wi
                if seed[v] is None or nd < seed[v]:
                    seed[v] = nd
                    par[v] = ("edge", u, ei)
                    heappush(heap, (nd, v))
        self.dp[mask] = seed
        self.par[mask] = par

    def tree_weight(self, mask) -> Optional[Fraction]:
        if mask == 0:
            return Fraction(0)
        low_i = (mask & (-mask)).bit_length() - 1
        root = self.terminals[low_i]
        rest = mask ^ (mask & (-mask))
        if rest == 0:
            return Fraction(0)
        val = self.dp[rest][root]
        return None if val is None else Fraction(val, self.scale)

    def tree_edges(self, mask) -> set[int]:
        if mask == 0:
            return set()
        low = mask & (-mask)
        root = self.terminals[low.bit_length() - 1]
        rest = mask ^ low
        if rest == 0:
            return set()
        out: set[int] = set()
        stack = [(rest, root)]
        while stack:
            m, v = stack.pop()
            tag = self.par[m][v]
            if tag is None:
                raise InputError("terminals are disconnected")
            if tag[0] == "base":
                continue
            if tag[0] == "edge":
                _, u, ei = tag
                out.add(ei)
                stack.append((m, u))
            else:
                _, m1, m2 = tag
                stack.append((m1, v))
                stack.append((m2, v))
        return out


def steiner_tree_exact(
    g: WeightedGraph, terminals, cap_terminals: Optional[int] = None
) -> SteinerSolution:
    """Exact minimum-weight connected subgraph spanning the terminal set."""
    terminals = tuple(sorted(set(terminals)))
    for t in terminals:
        g.check_vertex(t)
    if not terminals:
        raise InputError("need at least one terminal")
    cap = _terminal_cap(cap_terminals)
    if len(terminals) > cap:
        raise CapExceededError(
            f"{len(terminals)} terminals exceed the cap of {cap}"
        )
    if len(terminals) == 1:
        return _solution(g, (), terminals)
    if _is_forest(g):
        edges = _ForestIndex(g).subtree_edges(list(terminals))
        return _solution(g, edges, terminals)
    table = SteinerTable(g, terminals)
    full = (1 << len(terminals)) - 1
    weight = table.tree_weight(full)
    if weight is None:
        raise InputError("terminals are disconnected")
    return _solution(g, table.tree_edges(full), terminals)


def set_partitions(items: list) -> Iterator[list[list]]:
    """All set partitions of `items`, in a deterministic order."""
    items = list(items)
    if not items:
        yield []
        return
    blocks: list[list] = []

    def rec(i):
        if i == len(items):
            yield [list(b) for b in blocks]
            return
        x = items[i]
        for b in blocks:
            b.append(x)
            yield from rec(i + 1)
            b.pop()
        blocks.append([x])
        yield from rec(i + 1)
        blocks.pop()

    yield from rec(0)


def steiner_forest_exact(
    inst: Instance,
    cap_pairs: Optional[int] = None,
    cap_terminals: Optional[int] = None,
) -> SteinerSolution:
    """Exact minimum-weight forest connecting every pair.

    Minimizes over all partitions of the pair list, connecting each block's
    terminal union by an exact Steiner tree.  Schedule edges are never used.
    """
    cap = _pair_cap(cap_pairs)
    if inst.k > cap:
        raise CapExceededError(f"{inst.k} pairs exceed the cap of {cap}")
    g = inst.graph
    terminals = tuple(sorted(inst.terminals()))
    if not terminals:
        return _solution(g, (), ())
    if cap_terminals is not None and len(terminals) > cap_terminals:
        raise CapExceededError(
            f"{len(terminals)} terminals exceed the cap of {cap_terminals}"
        )
    term_pos = {t: i for i, t in enumerate(terminals)}
    pair_mask = [
        (1 << term_pos[p.s]) | (1 << term_pos[p.t]) for p in inst.pairs
    ]

    forest_mode = _is_forest(g)
    if forest_mode:
        index = _ForestIndex(g)
        weight_memo: dict[int, Optional[Fraction]] = {}

        def block_weight(mask):
            if mask not in weight_memo:
                terms = [terminals[i] for i in range(len(terminals)) if mask >> i & 1]
                try:
                    edges = index.subtree_edges(terms)
                except InputError:
                    weight_memo[mask] = None
                else:
                    weight_memo[mask] = (
                        sum((g.edges[i][2] for i in edges), Fraction(0)),
                        edges,
                    )
            return weight_memo[mask]

    else:
        table = SteinerTable(g, terminals)

        def block_weight(mask):
            w = table.tree_weight(mask)
            return None if w is None else (w, None)

    best = None
    best_blocks = None
    for partition in set_partitions(list(range(inst.k))):
        masks = []
        for block in partition:
            m = 0
            for i in block:
                m |= pair_mask[i]
            masks.append(m)
        total = Fraction(0)
        ok = True
        for m in masks:
            bw = block_weight(m)
            if bw is None:
                ok = False
                break
            total += bw[0]
        if ok and (best is None or total < best):
            best = total
            best_blocks = masks
    if best is None:
        raise InputError("some pair is disconnected in the graph")
    edge_idx: set[int] = set()
    for m in best_blocks:
        if forest_mode:
            edge_idx.update(block_weight(m)[1])
        else:
            edge_idx.update(table.tree_edges(m))
    sol = _solution(g, edge_idx, terminals)
    if sol.weight != best:
        raise InputError("internal error: partition weight mismatch")
    return sol


def tree_optimum(
    inst: Instance, cap_terminals: Optional[int] = None
) -> SteinerSolution:
    """Optimum single-tree solution: Steiner tree over all pair endpoints."""
    return steiner_tree_exact(inst.graph, sorted(inst.terminals()), cap_terminals)


# -- ball queries and the disjoint-ball lower bound ---------------------------

def opt_weight_in_ball(sol: SteinerSolution, ball: Ball, g: WeightedGraph) -> Fraction:
    """Total weight of solution edges with both endpoints inside the open ball.

    An edge with one endpoint strictly inside and one strictly outside means
    the graph was not subdivided finely enough: precondition error.
    """
    dist, scale = scaled_distances(g, ball.center)
    rnum, rden = ball.radius.numerator, ball.radius.denominator

    def side(v):
        d = dist[v]
        if d is None:
            return 1
        lhs, rhs = d * rden, rnum * scale
        return -1 if lhs < rhs else (0 if lhs == rhs else 1)

    total = Fraction(0)
    for idx in sol.edge_indices:
        u, v, w = g.edges[idx]
        su, sv = side(u), side(v)
        if {su, sv} == {-1, 1}:
            raise InputError(
                f"solution edge ({u},{v}) crosses the ball boundary; subdivide first"
            )
        if su < 0 and sv < 0:
            total += w
    return total


@dataclass(frozen=True)
class DualLowerBoundReport:
    balls_disjoint: bool
    centers_are_terminals: bool
    radii_below_mate_distance: bool
    sum_radii: Fraction
    opt_weight: Fraction
    bound_holds: bool
    vacuous: bool
    offenders: tuple[str, ...]

    @property
    def premises_hold(self) -> bool:
        return (
            self.balls_disjoint
            and self.centers_are_terminals
            and self.radii_below_mate_distance
        )


def dual_lower_bound_audit(
    balls: list[tuple[int, Fraction]],
    inst: Instance,
    mates: MateMap,
    opt_weight: Fraction,
) -> DualLowerBoundReport:
    """Audit the disjoint-ball lower bound: sum of radii <= optimum weight.

    Premises checked: balls pairwise vertex-disjoint; every center is a
    terminal; every radius strictly below the distance from the center to a
    mate of one of its occurrences.  A failed premise makes the bound
    vacuous, which is reported rather than asserted.
    """
    g = inst.graph
    offenders: list[str] = []
    member_sets = []
    for center, radius in balls:
        from .graph import open_ball

        member_sets.append(open_ball(g, center, Fraction(radius)).members)
    disjoint = True
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            if member_sets[i] & member_sets[j]:
                disjoint = False
                offenders.append(f"balls {i} and {j} share a vertex")
    centered = True
    radii_ok = True
    for i, (center, radius) in enumerate(balls):
        occ = mates.occurrences(center)
        if not occ:
            centered = False
            offenders.append(f"ball {i} center {center} is not a terminal")
            continue
        dist, scale = scaled_distances(g, center)
        radius = Fraction(radius)
        ok = False
        for _, mate in occ:
            d = dist[mate]
            if d is None or d * radius.denominator > radius.numerator * scale:
                ok = True
                break
        if not ok:
            radii_ok = False
            offenders.append(f"ball {i} radius is not below its mate distance")
    total = sum((Fraction(r) for _, r in balls), Fraction(0))
    premises = disjoint and centered and radii_ok
    return DualLowerBoundReport(
        balls_disjoint=disjoint,
        centers_are_terminals=centered,
        radii_below_mate_distance=radii_ok,
        sum_radii=total,
        opt_weight=Fraction(opt_weight),
        bound_holds=(total <= opt_weight) if premises else False,
        vacuous=not premises,
        offenders=tuple(offenders),
    )
