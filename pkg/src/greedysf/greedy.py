"""The online greedy run under the three metric-contraction rules.

Each arriving pair is connected by the exact shortest path in the current
metric (base graph + revealed schedule edges + accumulated zero-weight
shortcuts); the chosen rule then decides which zero-weight shortcuts to add.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import InputError, RunError
from .exact import floor_log2, format_fraction, ceil_log2
from .graph import _dijkstra, distances_from
from .instances import Instance


class Rule(enum.Enum):
    RULE1 = 1  # zero edge per consecutive path pair
    RULE2 = 2  # single zero edge between the pair's endpoints
    RULE3 = 3  # zero edges between consecutive previously-arrived terminals

    @classmethod
    def parse(cls, text: str) -> "Rule":
        try:
            return {"1": cls.RULE1, "2": cls.RULE2, "3": cls.RULE3,
                    "rule1": cls.RULE1, "rule2": cls.RULE2, "rule3": cls.RULE3}[
                str(text).lower()
            ]
        except KeyError:
            raise InputError(f"unknown contraction rule {text!r}") from None


@dataclass
class RunTrace:
    """Everything one greedy run produced, pair by pair."""

    rule: Rule
    paths: list[tuple[int, ...]]
    costs: list[Fraction]
    shortcuts_added: list[list[tuple[int, int]]]
    contraction: list[Optional[Fraction]]  # None encodes infinity
    total_cost: Fraction
    class_index: list[Optional[int]] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.costs)


def apply_contraction_rule(
    rule: Rule, path: tuple[int, ...], prev_terminals: set[int]
) -> list[tuple[int, int]]:
    """Zero-weight shortcut edges the rule adds after buying `path`.

    For RULE3, `prev_terminals` must contain the terminals of earlier pairs
    plus the current pair's own endpoints, so the kept sub-sequence starts
    and ends at the endpoints.
    """
    if rule is Rule.RULE1:
        return [(path[i], path[i + 1]) for i in range(len(path) - 1)]
    if rule is Rule.RULE2:
        return [(path[0], path[-1])]
    kept = [v for v in path if v in prev_terminals]
    return [(kept[i], kept[i + 1]) for i in range(len(kept) - 1)]


class MetricState:
    """Mutable current metric of a run: base graph + revealed + shortcuts."""

    def __init__(self, inst: Instance):
        self.n = inst.graph.n
        self.adj: list[list[tuple[int, Fraction]]] = [[] for _ in range(self.n)]
        for u, v, w in inst.graph.edges:
            self.adj[u].append((v, w))
            self.adj[v].append((u, w))

    def add_edge(self, u: int, v: int, w: Fraction):
        self.adj[u].append((v, w))
        self.adj[v].append((u, w))

    def shortest(self, s: int, t: int):
        dist, pred, done = _dijkstra(self.n, self.adj, s, target=t)
        if not done[t]:
            return None, None
        path = [t]
        while path[-1] != s:
            path.append(pred[path[-1]])
        path.reverse()
        return Fraction(dist[t]), tuple(path)


def run_greedy(inst: Instance, rule: Rule) -> RunTrace:
    """Run the greedy algorithm over the arrival sequence under one rule."""
    if len(inst.schedule) != len(inst.pairs):
        raise InputError("schedule length must match pair count")
    metric = MetricState(inst)
    prev_terminals: set[int] = set()
    paths, costs, added = [], [], []
    for i, pair in enumerate(inst.pairs):
        for u, v, w in inst.schedule[i]:
            metric.add_edge(u, v, w)
        cost, path = metric.shortest(pair.s, pair.t)
        if cost is None:
            raise RunError(f"pair {i} ({pair.s},{pair.t}) unreachable in current metric")
        shortcuts = apply_contraction_rule(
            rule, path, prev_terminals | {pair.s, pair.t}
        )
        for u, v in shortcuts:
            metric.add_edge(u, v, Fraction(0))
        prev_terminals.update((pair.s, pair.t))
        paths.append(path)
        costs.append(cost)
        added.append(shortcuts)
    contraction = _contractions(inst, costs)
    return RunTrace(
        rule=rule,
        paths=paths,
        costs=costs,
        shortcuts_added=added,
        contraction=contraction,
        total_cost=sum(costs, Fraction(0)),
        class_index=[None] * len(costs),
    )


def _contractions(inst: Instance, costs) -> list[Optional[Fraction]]:
    dist_cache: dict[int, list] = {}
    out = []
    for pair, cost in zip(inst.pairs, costs):
        if pair.s not in dist_cache:
            dist_cache[pair.s] = distances_from(inst.graph, pair.s)
        d = dist_cache[pair.s][pair.t]
        if cost == 0:
            out.append(None)
        else:
            if d is None:
                raise RunError(
                    f"pair ({pair.s},{pair.t}) unreachable in the original graph"
                )
            out.append(d / cost)
    return out


def contraction_of(trace: RunTrace, inst: Instance, i: int) -> Optional[Fraction]:
    """Original-graph distance over traced cost; None means infinite."""
    if not (0 <= i < trace.k):
        raise InputError(f"pair index {i} out of range")
    pair = inst.pairs[i]
    if trace.costs[i] == 0:
        return None
    d = distances_from(inst.graph, pair.s)[pair.t]
    return d / trace.costs[i]


def pairs_below_contraction(trace: RunTrace, alpha: Fraction) -> set[int]:
    """Indices of pairs with contraction strictly below alpha."""
    alpha = Fraction(alpha)
    if alpha < 1:
        raise InputError("alpha must be at least 1")
    return {
        i
        for i, c in enumerate(trace.contraction)
        if c is not None and c < alpha
    }


@dataclass(frozen=True)
class CostClassPartition:
    anchor: Fraction
    classes: dict[int, frozenset[int]]
    residual: frozenset[int]

    def class_of(self, i: int) -> Optional[int]:
        for j, members in self.classes.items():
            if i in members:
                return j
        return None


def partition_cost_classes(
    trace: RunTrace, class_cap: Optional[int] = None, anchor: Optional[Fraction] = None
) -> CostClassPartition:
    """Bucket pairs by floor(log2(anchor / cost)); residual collects the rest.

    The anchor defaults to the largest pair cost; passing the exact optimum
    weight instead shifts every index uniformly.  Pairs of cost zero, or of
    class index >= class_cap (default ceil(log2 k) + 1), land in the residual.
    """
    if not trace.costs:
        raise InputError("empty trace")
    positive = [c for c in trace.costs if c > 0]
    if not positive:
        raise InputError("all costs are zero; no cost classes")
    anchor = Fraction(anchor) if anchor is not None else max(positive)
    if class_cap is None:
        class_cap = ceil_log2(trace.k) + 1 if trace.k > 1 else 1
    classes: dict[int, set[int]] = {}
    residual = set()
    for i, c in enumerate(trace.costs):
        if c == 0:
            residual.add(i)
            continue
        j = floor_log2(anchor / c)
        if j >= class_cap or j < 0:
            residual.add(i)
        else:
            classes.setdefault(j, set()).add(i)
            trace.class_index[i] = j
    for i in residual:
        trace.class_index[i] = None
    return CostClassPartition(
        anchor=anchor,
        classes={j: frozenset(m) for j, m in sorted(classes.items())},
        residual=frozenset(residual),
    )


def equal_cost_classes(trace: RunTrace) -> list[tuple[Fraction, list[int]]]:
    """Group pair indices by exact traced cost, most expensive group first.

    Zero-cost pairs are dropped.  This is the grouping the per-class dual
    construction consumes; geometric buckets are only used for reporting.
    """
    groups: dict[Fraction, list[int]] = {}
    for i, c in enumerate(trace.costs):
        if c > 0:
            groups.setdefault(c, []).append(i)
    return [(c, groups[c]) for c in sorted(groups, reverse=True)]


def compare_rules(inst: Instance) -> dict[str, Fraction]:
    """Total greedy cost under each rule, for empirical dominance logging."""
    return {
        rule.name.lower(): run_greedy(inst, rule).total_cost for rule in Rule
    }


# -- trace serialization -----------------------------------------------------

def trace_to_obj(trace: RunTrace) -> dict:
    return {
        "rule": f"rule{trace.rule.value}",
        "pairs": [
            {
                "path": list(trace.paths[i]),
                "cost": format_fraction(trace.costs[i]),
                "shortcuts": [[u, v] for u, v in trace.shortcuts_added[i]],
                "contraction": (
                    "inf"
                    if trace.contraction[i] is None
                    else format_fraction(trace.contraction[i])
                ),
            }
            for i in range(trace.k)
        ],
        "total": format_fraction(trace.total_cost),
    }


def serialize_trace(trace: RunTrace) -> str:
    return json.dumps(trace_to_obj(trace), sort_keys=True, separators=(",", ":"))


def parse_trace(text: str) -> RunTrace:
    from .errors import ParseError
    from .exact import parse_fraction

    try:
        obj = json.loads(text)
        rule = Rule.parse(obj["rule"])
        paths, costs, added, contraction = [], [], [], []
        for row in obj["pairs"]:
            paths.append(tuple(row["path"]))
            costs.append(parse_fraction(row["cost"]))
            added.append([(u, v) for u, v in row["shortcuts"]])
            c = row["contraction"]
            contraction.append(None if c == "inf" else parse_fraction(c))
        total = parse_fraction(obj["total"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed trace: {exc}") from exc
    if total != sum(costs, Fraction(0)):
        raise ParseError("trace total does not match the per-pair costs")
    return RunTrace(
        rule=rule,
        paths=paths,
        costs=costs,
        shortcuts_added=added,
        contraction=contraction,
        total_cost=total,
        class_index=[None] * len(costs),
    )
