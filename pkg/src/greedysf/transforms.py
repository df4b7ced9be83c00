"""Instance transformations and the width/potential machinery.

Each transform returns the new instance plus a receipt: digests of both
sides, the per-pair correspondence, and the measured (not just claimed)
loss factors, so every transformation can be replayed and audited.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import InputError
from .exact import floor_log2, format_fraction, pow2
from .graph import WeightedGraph, distances_from, induced_zero_border, shortest_path
from .greedy import (
    MetricState,
    Rule,
    RunTrace,
    pairs_below_contraction,
    run_greedy,
)
from .instances import Instance, MateMap, make_instance
from .balanced import DualBall, ball_neighborhood


@dataclass(frozen=True)
class TransformReceipt:
    kind: str
    source_digest: str
    target_digest: str
    pair_map: tuple  # transform-specific per-pair correspondence
    measured: dict


def receipt_to_obj(receipt: TransformReceipt) -> dict:
    return {
        "kind": receipt.kind,
        "source": receipt.source_digest,
        "target": receipt.target_digest,
        "pair_map": [list(x) for x in receipt.pair_map],
        "measured": receipt.measured,
    }


def serialize_receipt(receipt: TransformReceipt) -> str:
    return json.dumps(receipt_to_obj(receipt), sort_keys=True, separators=(",", ":"))


# -- canonicalization ---------------------------------------------------------

def to_canonical(
    inst: Instance, trace: RunTrace, alpha, delta: int
) -> tuple[Instance, TransformReceipt]:
    """Reduce an instance to a well-separated canonical one.

    Keeps the pairs of contraction below alpha, rounds each kept cost down
    to a power of two, groups the rounded exponents by residue modulo
    delta+10, keeps the group of maximum rounded cost (smallest residue on
    ties), and pre-announces every kept pair by one schedule edge of its
    rounded cost.  Rounding can double contraction, so consumers should use
    2*alpha downstream; the receipt records the measured cost ratio instead
    of asserting an unspecified constant.
    """
    alpha = Fraction(alpha)
    if delta < 1:
        raise InputError("delta must be at least 1")
    low = sorted(pairs_below_contraction(trace, alpha))
    if not low:
        raise InputError("nothing to canonicalize: no pair has contraction below alpha")
    gap = delta + 10
    exponents = {i: floor_log2(trace.costs[i]) for i in low}
    groups: dict[int, list[int]] = {}
    for i in low:
        groups.setdefault(exponents[i] % gap, []).append(i)
    group_cost = {
        res: sum((pow2(exponents[i]) for i in ids), Fraction(0))
        for res, ids in groups.items()
    }
    best_res = min(
        group_cost, key=lambda res: (-group_cost[res], res)
    )
    kept = sorted(groups[best_res])
    rounded = {i: pow2(exponents[i]) for i in kept}
    pairs = [(inst.pairs[i].s, inst.pairs[i].t) for i in kept]
    schedule = [[(inst.pairs[i].s, inst.pairs[i].t, rounded[i])] for i in kept]
    out = make_instance(inst.graph, pairs, schedule)

    replay = run_greedy(out, trace.rule)
    rounded_low_total = sum((pow2(exponents[i]) for i in low), Fraction(0))
    low_total = sum((trace.costs[i] for i in low), Fraction(0))
    measured = {
        "alpha_out": format_fraction(2 * alpha),
        "residue": best_res,
        "kept_rounded_cost": format_fraction(group_cost[best_res]),
        "rounded_low_contraction_cost": format_fraction(rounded_low_total),
        "low_contraction_cost": format_fraction(low_total),
        "replay_total": format_fraction(replay.total_cost),
        "replay_matches_rounded": all(
            replay.costs[new_i] == rounded[i] for new_i, i in enumerate(kept)
        ),
        "ratio_vs_low": format_fraction(
            replay.total_cost / low_total if low_total else Fraction(0)
        ),
    }
    receipt = TransformReceipt(
        kind="canonical",
        source_digest=inst.digest(),
        target_digest=out.digest(),
        pair_map=tuple(
            (i, new_i, format_fraction(trace.costs[i]), format_fraction(rounded[i]))
            for new_i, i in enumerate(kept)
        ),
        measured=measured,
    )
    return out, receipt


# -- pair subdivision for the third rule --------------------------------------

def subdivide_pairs_rule3(
    inst: Instance, trace: RunTrace
) -> tuple[Instance, TransformReceipt]:
    """Split every pair into its consecutive previously-arrived-terminal hops.

    Replays the trace under the third rule; each pair is replaced, in
    order, by the sub-pairs of its bought path whose contracted distance at
    that moment was still positive.  Total cost is preserved exactly and
    every new pair has contraction 1.
    """
    if trace.rule is not Rule.RULE3:
        raise InputError("pair subdivision is defined for third-rule traces only")
    if any(inst.schedule[i] for i in range(inst.k)):
        raise InputError("pair subdivision expects an empty reveal schedule")
    metric = MetricState(inst)
    prev_terminals: set[int] = set()
    new_pairs: list[tuple[int, int]] = []
    pair_map = []
    for i, pair in enumerate(inst.pairs):
        path = trace.paths[i]
        kept_vertices = [
            v for v in path if v in prev_terminals or v in (pair.s, pair.t)
        ]
        children = []
        for a, b in zip(kept_vertices, kept_vertices[1:]):
            d, _ = metric.shortest(a, b)
            if d is None or d > 0:
                children.append(len(new_pairs))
                new_pairs.append((a, b))
        pair_map.append((i, children))
        for u, v in trace.shortcuts_added[i]:
            metric.add_edge(u, v, Fraction(0))
        prev_terminals.update((pair.s, pair.t))
    out = make_instance(inst.graph, new_pairs)
    receipt = TransformReceipt(
        kind="subdivide_rule3",
        source_digest=inst.digest(),
        target_digest=out.digest(),
        pair_map=tuple((i, tuple(children)) for i, children in pair_map),
        measured={
            "k": inst.k,
            "k_new": len(new_pairs),
            "total": format_fraction(trace.total_cost),
        },
    )
    return out, receipt


# -- ball sub-instances --------------------------------------------------------

def extract_sub_instance(
    inst: Instance,
    trace: RunTrace,
    ball: DualBall,
    dangerous: set[int],
    K: int,
) -> tuple[Instance, TransformReceipt, dict[int, int]]:
    """Restrict the instance to the interior dangerous pairs of one ball.

    The graph is cut at the ball radius with a zero clique on the sphere;
    kept pairs are the deferred pairs in the ball's interior, in original
    relative order, revealed the same way.  Low contraction forces both
    endpoints of every kept pair inside the ball; anything else is a
    canonicity violation.
    """
    nb = ball_neighborhood(trace, inst, ball, K)
    kept = [i for i in nb.interior if i in dangerous]
    sub_graph, remap = induced_zero_border(inst.graph, ball.center, ball.radius)
    pairs = []
    schedule = []
    for i in kept:
        pair = inst.pairs[i]
        if pair.s not in remap or pair.t not in remap:
            raise InputError(
                f"pair {i} has an endpoint outside the ball; the instance "
                "cannot be canonical with this deferral"
            )
        pairs.append((remap[pair.s], remap[pair.t]))
        row = []
        for u, v, w in inst.schedule[i]:
            if u not in remap or v not in remap:
                raise InputError(
                    f"schedule edge of pair {i} leaves the ball; canonicity violated"
                )
            row.append((remap[u], remap[v], w))
        schedule.append(row)
    out = make_instance(sub_graph, pairs, schedule)
    receipt = TransformReceipt(
        kind="ball_sub_instance",
        source_digest=inst.digest(),
        target_digest=out.digest(),
        pair_map=tuple(
            (i, new_i, format_fraction(trace.costs[i])) for new_i, i in enumerate(kept)
        ),
        measured={
            "center": ball.center,
            "radius": format_fraction(ball.radius),
            "kept": len(kept),
        },
    )
    return out, receipt, remap


# -- width and potential -------------------------------------------------------

def _components_of_edges(
    g: WeightedGraph, edge_indices
) -> list[set[int]]:
    parent: dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ei in edge_indices:
        u, v, _ = g.edges[ei]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, set[int]] = {}
    for v in parent:
        groups.setdefault(find(v), set()).add(v)
    return sorted(groups.values(), key=min)


def _pair_distances(inst: Instance) -> list[Optional[Fraction]]:
    cache: dict[int, list] = {}
    out = []
    for p in inst.pairs:
        if p.s not in cache:
            cache[p.s] = distances_from(inst.graph, p.s)
        out.append(cache[p.s][p.t])
    return out


def _component_width(vertices: set[int], inst: Instance) -> Fraction:
    best = Fraction(0)
    dists = _pair_distances(inst)
    for i, p in enumerate(inst.pairs):
        if p.s in vertices or p.t in vertices:
            d = dists[i]
            if d is None:
                raise InputError(f"pair {i} is disconnected in the graph")
            if d > best:
                best = d
    return best


def tree_width(tree_edges, inst: Instance, mates: MateMap) -> Fraction:
    """Largest original-graph mate distance among terminals the tree touches.

    `tree_edges` are edge indices into the instance graph and should form one
    connected tree; a terminal-free tree has width 0.
    """
    vertices: set[int] = set()
    for ei in tree_edges:
        u, v, _ = inst.graph.edges[ei]
        vertices.update((u, v))
    return _component_width(vertices, inst)


def forest_potential(forest_edges, inst: Instance) -> Fraction:
    """Forest weight plus the total width of its components."""
    g = inst.graph
    parent: dict[int, int] = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    weight = Fraction(0)
    for ei in set(forest_edges):
        u, v, w = g.edges[ei]
        if find(u) == find(v):
            raise InputError("edge set contains a cycle; not a forest")
        parent[find(u)] = find(v)
        weight += w
    total = weight
    for comp in _components_of_edges(g, set(forest_edges)):
        total += _component_width(comp, inst)
    return total


def augment_subdivided_solution(
    opt_edge_indices,
    inst: Instance,
    trace: RunTrace,
    subdivided: Instance,
    receipt: TransformReceipt,
) -> tuple[set[int], dict]:
    """Grow an optimum of the parent instance into a solution of the split one.

    Requires the parent's per-pair cost sequence or original-distance
    sequence to be non-increasing.  Replays the arrivals; whenever the
    current forest misses some sub-pair of a parent, the edges the run used
    for those sub-pairs are added.  The log records the potential after each
    step and the audit asserts it never increases, which pins the final
    weight at twice the optimum.
    """
    if receipt.kind != "subdivide_rule3":
        raise InputError("expected the receipt of a pair subdivision")
    dists = _pair_distances(inst)
    if any(d is None for d in dists):
        raise InputError("some pair is disconnected in the graph")
    costs = trace.costs
    non_increasing_costs = all(a >= b for a, b in zip(costs, costs[1:]))
    non_increasing_dists = all(a >= b for a, b in zip(dists, dists[1:]))
    if not (non_increasing_costs or non_increasing_dists):
        first_bad = next(
            i for i in range(len(costs) - 1) if costs[i] < costs[i + 1]
        )
        raise InputError(
            f"neither the cost nor the distance sequence is non-increasing "
            f"(first cost inversion at pair {first_bad})"
        )

    g = inst.graph
    edge_index_of: dict[tuple[int, int], list[tuple[Fraction, int]]] = {}
    for ei, (u, v, w) in enumerate(g.edges):
        edge_index_of.setdefault((min(u, v), max(u, v)), []).append((w, ei))

    def connecting_edges(a: int, b: int) -> set[int]:
        # a deterministic original shortest path; its weight equals what the
        # split run paid for this sub-pair because its contraction is 1
        result = shortest_path(g, a, b)
        if result.path is None:
            raise InputError(f"sub-pair ({a},{b}) is disconnected in the graph")
        out = set()
        for x, y in zip(result.path, result.path[1:]):
            candidates = edge_index_of.get((min(x, y), max(x, y)))
            if not candidates:
                raise InputError(f"path step ({x},{y}) is not a graph edge")
            out.add(min(candidates)[1])
        return out

    forest: set[int] = set(opt_edge_indices)
    phi = forest_potential(forest, inst)
    log = {"steps": [], "initial_potential": format_fraction(phi)}
    children_of = {i: list(ch) for i, ch in receipt.pair_map}

    def connected(a: int, b: int, edges: set[int]) -> bool:
        parent: dict[int, int] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for ei in edges:
            u, v, _ = g.edges[ei]
            parent[find(u)] = find(v)
        return find(a) == find(b)

    for i in range(inst.k):
        missing = [
            c
            for c in children_of[i]
            if not connected(
                subdivided.pairs[c].s, subdivided.pairs[c].t, forest
            )
        ]
        if missing:
            for c in missing:
                forest |= connecting_edges(
                    subdivided.pairs[c].s, subdivided.pairs[c].t
                )
        new_phi = forest_potential(forest, inst)
        log["steps"].append(
            {
                "pair": i,
                "added_for": missing,
                "potential": format_fraction(new_phi),
                "non_increasing": new_phi <= phi,
            }
        )
        phi = new_phi
    log["final_potential"] = format_fraction(phi)
    log["final_weight"] = format_fraction(
        sum((g.edges[ei][2] for ei in forest), Fraction(0))
    )
    return forest, log
