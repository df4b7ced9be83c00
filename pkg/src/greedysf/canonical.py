"""Canonicity: well-separated cost grid, low contraction, pre-announced edges."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import InputError
from .exact import floor_log2, pow2
from .greedy import RunTrace
from .instances import Instance


@dataclass(frozen=True)
class CanonicalParams:
    alpha: Fraction
    delta: int
    anchor: Fraction  # m: class-j cost is anchor / 2**(j*(delta+10))
    class_indices: tuple[int, ...]  # grid index per distinct cost, ascending


@dataclass(frozen=True)
class CanonicalReport:
    costs_on_separated_grid: bool
    low_contraction: bool
    schedule_announces_costs: bool
    params: Optional[CanonicalParams]
    offenders: tuple[str, ...]

    @property
    def is_canonical(self) -> bool:
        return (
            self.costs_on_separated_grid
            and self.low_contraction
            and self.schedule_announces_costs
        )


def canonical_report(
    inst: Instance, trace: RunTrace, alpha: Fraction, delta: int
) -> CanonicalReport:
    """Audit the three canonicity clauses of an instance against its trace.

    (a) every traced cost sits on the grid m / 2**(j*(delta+10)) for a
        common anchor m, so distinct costs are separated by powers of
        2**(delta+10);
    (b) every pair's contraction is at most alpha;
    (c) schedule slot i holds exactly one edge, joining pair i's endpoints,
        of weight exactly the traced cost of pair i.
    """
    alpha = Fraction(alpha)
    if alpha < 1:
        raise InputError("alpha must be at least 1")
    if delta < 1:
        raise InputError("delta must be at least 1")
    offenders: list[str] = []

    grid_ok = True
    params = None
    costs = sorted({c for c in trace.costs}, reverse=True)
    if any(c == 0 for c in costs):
        grid_ok = False
        offenders.append("a pair of cost zero cannot sit on the cost grid")
        costs = [c for c in costs if c > 0]
    if costs:
        gap = delta + 10
        top = costs[0]
        indices = [1]
        for c in costs[1:]:
            ratio = top / c
            exp = floor_log2(ratio)
            if pow2(exp) != ratio or exp % gap != 0:
                grid_ok = False
                offenders.append(
                    f"cost {c} is not separated from {top} by a power of 2^{gap}"
                )
            else:
                indices.append(1 + exp // gap)
        if grid_ok:
            params = CanonicalParams(
                alpha=alpha,
                delta=delta,
                anchor=top * pow2(gap),
                class_indices=tuple(indices),
            )
    else:
        grid_ok = len(trace.costs) == 0

    low_ok = True
    for i, c in enumerate(trace.contraction):
        if c is None or c > alpha:
            low_ok = False
            shown = "inf" if c is None else str(c)
            offenders.append(f"pair {i} has contraction {shown} > alpha={alpha}")

    sched_ok = True
    for i, pair in enumerate(inst.pairs):
        edges = inst.schedule[i]
        if len(edges) != 1:
            sched_ok = False
            offenders.append(f"schedule[{i}] has {len(edges)} edges, expected 1")
            continue
        u, v, w = edges[0]
        if {u, v} != {pair.s, pair.t}:
            sched_ok = False
            offenders.append(f"schedule[{i}] edge does not join the pair endpoints")
        elif w != trace.costs[i]:
            sched_ok = False
            offenders.append(
                f"schedule[{i}] weight {w} differs from traced cost {trace.costs[i]}"
            )

    return CanonicalReport(
        costs_on_separated_grid=grid_ok,
        low_contraction=low_ok,
        schedule_announces_costs=sched_ok,
        params=params,
        offenders=tuple(offenders),
    )


def is_canonical(inst: Instance, trace: RunTrace, alpha, delta: int) -> CanonicalReport:
    return canonical_report(inst, trace, Fraction(alpha), delta)
