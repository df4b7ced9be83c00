"""Balanced dual solutions: construction, verification, and the bound audit.

The builder walks cost classes from the most to the least expensive.  Each
class places disjoint dual balls around its still-unclassified pairs, then
per ball inspects the charged cost of the smaller pairs that landed near it:

* delete-and-recharge when the interior carries far more charged cost than
  the ball's own pair (the ball is erased, its cost pushed onto the interior
  pairs proportionally to their charged cost);
* otherwise halve the ball; absorb the halved neighborhood onto the owner
  when it is cheap, else grow the radius step by step until the border
  carries little compared to the interior and defer those pairs as
  dangerous.

Charges move but total charged cost is conserved at every step; the step
log is sufficient to replay that.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import InputError, InternalConsistencyError, ParseError
from .exact import (
    SURVIVOR_CHARGE_CAP_UPPER,
    E5_UPPER,
    exp_upper,
    format_fraction,
    lg_plus,
    parse_fraction,
)
from .graph import Ball, open_ball, scaled_distances
from .greedy import RunTrace
from .instances import Instance
from .canonical import canonical_report
from .dualfit import build_class_duals
from .opt import SteinerSolution, opt_weight_in_ball


class PairStatus(enum.Enum):
    UNCLASSIFIED = "unclassified"
    SURVIVING = "surviving"
    CHARGED = "charged"
    DANGEROUS = "dangerous"


@dataclass(frozen=True)
class ClassInfo:
    index: int  # 1-based, most expensive class first
    cost: Fraction
    pair_ids: tuple[int, ...]
    radius_full: Fraction  # cost / (8 * lg_plus(class size))


@dataclass(frozen=True)
class DualBall:
    class_index: int
    center: int
    radius: Fraction
    owner_pair: int


@dataclass(frozen=True)
class BallNeighborhood:
    """Smaller-class pairs near a ball, split into border and interior.

    Membership uses original-graph distances from the ball center with the
    non-strict thresholds radius*(1 +- 1/(200*L^2)), L = lg_plus(K).
    """

    ball: DualBall
    members: tuple[int, ...]  # B_P
    border: tuple[int, ...]  # pairs with an endpoint at distance >= low threshold
    interior: tuple[int, ...]  # members minus border


@dataclass
class BalancedDual:
    balls: list[DualBall]
    charges: dict[int, Fraction]
    dangerous: set[int]
    K: int
    statuses: dict[int, PairStatus]
    classes: tuple[ClassInfo, ...]
    step_log: list[dict] = field(default_factory=list)


def trace_classes(trace: RunTrace) -> tuple[ClassInfo, ...]:
    """Exact-cost classes of a trace, most expensive first, arrival order inside."""
    groups: dict[Fraction, list[int]] = {}
    for i, c in enumerate(trace.costs):
        if c <= 0:
            raise InputError("canonical traces cannot contain zero-cost pairs")
        groups.setdefault(c, []).append(i)
    out = []
    for idx, cost in enumerate(sorted(groups, reverse=True), start=1):
        ids = tuple(sorted(groups[cost]))
        out.append(
            ClassInfo(
                index=idx,
                cost=cost,
                pair_ids=ids,
                radius_full=cost / (8 * lg_plus(len(ids))),
            )
        )
    return tuple(out)


def _class_of_pair(classes: tuple[ClassInfo, ...]) -> dict[int, int]:
    return {i: cls.index for cls in classes for i in cls.pair_ids}


def charged_cost(trace: RunTrace, pair_ids, charges: dict[int, Fraction]) -> Fraction:
    """Sum of charge(p) * traced cost(p) over the given pairs."""
    return sum((charges[i] * trace.costs[i] for i in pair_ids), Fraction(0))


def ball_neighborhood(
    trace: RunTrace,
    inst: Instance,
    ball: DualBall,
    K: int,
    classes: Optional[tuple[ClassInfo, ...]] = None,
) -> BallNeighborhood:
    """Classify smaller-class pairs around a ball into members/border/interior."""
    if classes is None:
        classes = trace_classes(trace)
    class_of = _class_of_pair(classes)
    L = lg_plus(K)
    eps = Fraction(1, 200 * L * L)
    up = ball.radius * (1 + eps)
    low = ball.radius * (1 - eps)
    dist, scale = scaled_distances(inst.graph, ball.center)

    def le(d, bound: Fraction) -> bool:
        if d is None:
            return False
        return d * bound.denominator <= bound.numerator * scale

    def ge(d, bound: Fraction) -> bool:
        if d is None:
            return True
        return d * bound.denominator >= bound.numerator * scale

    members, border, interior = [], [], []
    for i, pair in enumerate(inst.pairs):
        if class_of.get(i, 0) <= ball.class_index:
            continue
        ds, dt = dist[pair.s], dist[pair.t]
        if not (le(ds, up) or le(dt, up)):
            continue
        members.append(i)
        if ge(ds, low) or ge(dt, low):
            border.append(i)
        else:
            interior.append(i)
    return BallNeighborhood(
        ball=ball,
        members=tuple(members),
        border=tuple(border),
        interior=tuple(interior),
    )


def _require(condition: bool, clause: str):
    if not condition:
        raise InputError(f"precondition violated: {clause}")


def build_balanced(
    trace: RunTrace,
    inst: Instance,
    K: int,
    delta: int,
    alpha,
) -> BalancedDual:
    """Construct a balanced dual solution for a canonical instance.

    Refuses non-canonical inputs and parameter combinations outside the
    separation regime, because every clause constant depends on them.
    """
    alpha = Fraction(alpha)
    report = canonical_report(inst, trace, alpha, delta)
    _require(report.is_canonical, f"instance not canonical: {report.offenders[:3]}")
    _require(K >= trace.k, f"K={K} below the pair count {trace.k}")
    _require(K >= 1, "K must be at least 1")
    L = lg_plus(K)
    _require(
        delta >= 100 * (lg_plus(alpha) + lg_plus(L)),
        f"delta={delta} below 100*(lg+(alpha)+lg+lg+(K))={100 * (lg_plus(alpha) + lg_plus(L))}",
    )
    classes = trace_classes(trace)
    _require(len(classes) <= L, f"class count {len(classes)} exceeds lg+(K)={L}")
    return _construct(trace, inst, K)


def _construct(trace: RunTrace, inst: Instance, K: int) -> BalancedDual:
    """The iterative class-by-class procedure, preconditions already vetted."""
    L = lg_plus(K)
    classes = trace_classes(trace)
    charges = {i: Fraction(1) for i in range(trace.k)}
    statuses = {i: PairStatus.UNCLASSIFIED for i in range(trace.k)}
    balls: list[DualBall] = []
    ball_members: list[frozenset[int]] = []
    dangerous: set[int] = set()
    log: list[dict] = []
    grow_cap = 60 * L * lg_plus(L)

    def log_event(kind: str, **fields):
        entry = {"event": kind}
        entry.update(fields)
        entry["charged_total"] = format_fraction(
            charged_cost(trace, range(trace.k), charges)
        )
        log.append(entry)

    for cls in classes:
        unclassified = [
            i for i in cls.pair_ids if statuses[i] is PairStatus.UNCLASSIFIED
        ]
        if not unclassified:
            continue
        coll, _aux = build_class_duals(
            trace, inst, list(cls.pair_ids), unclassified, cls.radius_full
        )

        if coll.skipped:
            balled = [p for _, p in coll.balls]
            transfer = sum((charges[q] for q in coll.skipped), Fraction(0))
            share = transfer / len(balled)
            for q in coll.skipped:
                charges[q] = Fraction(0)
                statuses[q] = PairStatus.CHARGED
            for p in balled:
                charges[p] += share
            log_event(
                "redistribute_skipped",
                class_index=cls.index,
                skipped=list(coll.skipped),
                balled=balled,
            )

        recharged_this_iteration: set[int] = set()
        for center, owner in coll.balls:
            ball = DualBall(
                class_index=cls.index,
                center=center,
                radius=cls.radius_full,
                owner_pair=owner,
            )
            nb = ball_neighborhood(trace, inst, ball, K, classes)
            _check_targets_fresh(nb.members, statuses, ball)
            sigma = charged_cost(trace, nb.interior, charges)
            threshold_delete = 10 * charges[owner] * cls.cost * L**10
            if sigma > threshold_delete:
                # delete and recharge: the ball is erased, its charged cost
                # pushed onto the interior pairs proportionally to theirs;
                # same-class balls are disjoint, so a pair is hit once per
                # iteration or the construction is inconsistent
                repeat = recharged_this_iteration & set(nb.interior)
                if repeat:
                    raise InternalConsistencyError(
                        f"pairs {sorted(repeat)} recharged twice in one class "
                        "iteration"
                    )
                recharged_this_iteration.update(nb.interior)
                factor = 1 + charges[owner] * cls.cost / sigma
                for q in nb.interior:
                    charges[q] *= factor
                charges[owner] = Fraction(0)
                statuses[owner] = PairStatus.CHARGED
                log_event(
                    "delete_and_recharge",
                    class_index=cls.index,
                    owner=owner,
                    interior=list(nb.interior),
                )
                continue
            halved = DualBall(
                class_index=cls.index,
                center=center,
                radius=cls.radius_full / 2,
                owner_pair=owner,
            )
            nb2 = ball_neighborhood(trace, inst, halved, K, classes)
            sigma2 = charged_cost(trace, nb2.members, charges)
            if sigma2 <= 10 * charges[owner] * cls.cost:
                # halve and absorb: the halved neighborhood is charged to the owner
                for q in nb2.members:
                    if statuses[q] is PairStatus.CHARGED:
                        continue  # zero charge moves nothing
                    charges[owner] += charges[q] * trace.costs[q] / cls.cost
                    charges[q] = Fraction(0)
                    statuses[q] = PairStatus.CHARGED
                statuses[owner] = PairStatus.SURVIVING
                final = halved
                log_event(
                    "halve_and_absorb",
                    class_index=cls.index,
                    owner=owner,
                    absorbed=list(nb2.members),
                )
            else:
                # grow and defer: enlarge until the border carries little,
                # then mark the whole neighborhood dangerous
                step = cls.radius_full / (200 * L * L)
                t = 0
                current = halved
                nbt = nb2
                while True:
                    border_cost = charged_cost(trace, nbt.border, charges)
                    interior_cost = charged_cost(trace, nbt.interior, charges)
                    if border_cost <= Fraction(10, L) * interior_cost:
                        break
                    t += 1
                    if t >= grow_cap or current.radius + step > cls.radius_full:
                        raise InternalConsistencyError(
                            f"ball around pair {owner}: radius growth did not "
                            f"stabilize within {grow_cap} increments"
                        )
                    current = DualBall(
                        class_index=cls.index,
                        center=center,
                        radius=current.radius + step,
                        owner_pair=owner,
                    )
                    nbt = ball_neighborhood(trace, inst, current, K, classes)
                for q in nbt.members:
                    if statuses[q] is not PairStatus.UNCLASSIFIED:
                        raise InternalConsistencyError(
                            f"pair {q} was already classified when ball of pair "
                            f"{owner} tried to defer it"
                        )
                    statuses[q] = PairStatus.DANGEROUS
                    dangerous.add(q)
                statuses[owner] = PairStatus.SURVIVING
                final = current
                log_event(
                    "grow_and_defer",
                    class_index=cls.index,
                    owner=owner,
                    increments=t,
                    deferred=list(nbt.members),
                )
            members = open_ball(inst.graph, final.center, final.radius).members
            for prev_idx, prev_members in enumerate(ball_members):
                if prev_members & members:
                    raise InternalConsistencyError(
                        f"ball of pair {final.owner_pair} overlaps ball "
                        f"{prev_idx}; the separation regime should prevent this"
                    )
            balls.append(final)
            ball_members.append(members)

    leftover = [i for i, s in statuses.items() if s is PairStatus.UNCLASSIFIED]
    if leftover:
        raise InternalConsistencyError(f"pairs never classified: {leftover}")
    return BalancedDual(
        balls=balls,
        charges=charges,
        dangerous=dangerous,
        K=K,
        statuses=statuses,
        classes=classes,
        step_log=log,
    )


def _check_targets_fresh(members, statuses, ball: DualBall):
    for q in members:
        if statuses[q] is PairStatus.DANGEROUS:
            raise InternalConsistencyError(
                f"pair {q} is already dangerous but lies near the new ball of "
                f"pair {ball.owner_pair}"
            )


@dataclass(frozen=True)
class BalancedReport:
    disjoint_and_covered: bool  # clause (a)
    radii_in_range: bool  # clause (b)
    interior_cost_capped: bool  # clause (c)
    border_cost_capped: bool  # clause (d)
    charges_capped: bool  # clause (e)
    offenders: tuple[str, ...]

    @property
    def all_ok(self) -> bool:
        return (
            self.disjoint_and_covered
            and self.radii_in_range
            and self.interior_cost_capped
            and self.border_cost_capped
            and self.charges_capped
        )


def verify_balanced(
    bd: BalancedDual, trace: RunTrace, inst: Instance, delta: int
) -> BalancedReport:
    """Audit the five clauses of a balanced dual solution.

    The cap on surviving charges involves 55*e^5 and is compared against a
    certified rational upper bound, so a correct solution is never rejected
    over constant precision.
    """
    offenders: list[str] = []
    L = lg_plus(bd.K)
    class_by_index = {cls.index: cls for cls in bd.classes}

    member_sets = [
        open_ball(inst.graph, b.center, b.radius).members for b in bd.balls
    ]
    disjoint = True
    for i in range(len(bd.balls)):
        for j in range(i + 1, len(bd.balls)):
            if member_sets[i] & member_sets[j]:
                disjoint = False
                offenders.append(f"balls {i} and {j} overlap")
    neighborhoods = [
        ball_neighborhood(trace, inst, b, bd.K, bd.classes) for b in bd.balls
    ]
    covered_union: set[int] = set()
    for nb in neighborhoods:
        covered_union.update(nb.members)
    covered = bd.dangerous <= covered_union
    if not covered:
        stray = sorted(bd.dangerous - covered_union)
        offenders.append(f"dangerous pairs outside every ball neighborhood: {stray}")
    clause_a = disjoint and covered

    clause_b = True
    for i, b in enumerate(bd.balls):
        cls = class_by_index[b.class_index]
        if not (cls.radius_full / 2 <= b.radius <= cls.radius_full):
            clause_b = False
            offenders.append(
                f"ball {i} radius {b.radius} outside [r/2, r] for its class"
            )

    clause_c = True
    clause_d = True
    for i, (b, nb) in enumerate(zip(bd.balls, neighborhoods)):
        cls = class_by_index[b.class_index]
        interior_d = charged_cost(
            trace, [q for q in nb.interior if q in bd.dangerous], bd.charges
        )
        border_d = charged_cost(
            trace, [q for q in nb.border if q in bd.dangerous], bd.charges
        )
        cap_c = 10 * bd.charges[b.owner_pair] * cls.cost * L**10
        if interior_d > cap_c:
            clause_c = False
            offenders.append(f"ball {i}: dangerous interior cost exceeds its cap")
        if border_d > Fraction(10, L) * interior_d:
            clause_d = False
            offenders.append(f"ball {i}: dangerous border cost exceeds its cap")

    clause_e = True
    ball_class_of_dangerous: dict[int, int] = {}
    for b, nb in zip(bd.balls, neighborhoods):
        for q in nb.members:
            if q in bd.dangerous:
                prev = ball_class_of_dangerous.get(q)
                if prev is None or b.class_index < prev:
                    ball_class_of_dangerous[q] = b.class_index
    for i in range(trace.k):
        ch = bd.charges[i]
        status = bd.statuses[i]
        if status is PairStatus.SURVIVING:
            if ch > SURVIVOR_CHARGE_CAP_UPPER:
                clause_e = False
                offenders.append(f"pair {i}: surviving charge {ch} exceeds 55*e^5")
            if ch < 1:
                clause_e = False
                offenders.append(f"pair {i}: surviving charge below 1")
        elif status is PairStatus.CHARGED:
            if ch != 0:
                clause_e = False
                offenders.append(f"pair {i}: charged pair carries charge {ch}")
        elif status is PairStatus.DANGEROUS:
            j = ball_class_of_dangerous.get(i)
            cap = (1 + Fraction(5, L)) ** (j - 1) if j is not None else None
            if cap is not None and ch > cap:
                clause_e = False
                offenders.append(f"pair {i}: dangerous charge {ch} exceeds its cap")
            if ch < 1:
                clause_e = False
                offenders.append(f"pair {i}: dangerous charge below 1")
        else:
            clause_e = False
            offenders.append(f"pair {i} is unclassified")

    return BalancedReport(
        disjoint_and_covered=clause_a,
        radii_in_range=clause_b,
        interior_cost_capped=clause_c,
        border_cost_capped=clause_d,
        charges_capped=clause_e,
        offenders=tuple(offenders),
    )


@dataclass(frozen=True)
class InductionReport:
    holds: bool
    lhs: Fraction
    rhs_upper: Fraction
    per_class_opt_mass: tuple[tuple[int, Fraction], ...]
    class_count: int


def induction_bound_audit(
    bd: BalancedDual,
    opt: SteinerSolution,
    inst: Instance,
    trace: RunTrace,
    delta: int,
) -> InductionReport:
    """Evaluate the per-class bound on the total greedy cost.

    The left side is exact.  The right side multiplies exact per-class
    optimum-inside-ball masses by certified rational upper bounds on the
    constants 880*e^5 and e^(200 + 20*M/L), slackened toward acceptance:
    a reported failure is therefore a genuine one.
    """
    L = lg_plus(bd.K)
    M = len(bd.classes)
    lhs = trace.total_cost
    masses: dict[int, Fraction] = {cls.index: Fraction(0) for cls in bd.classes}
    for b in bd.balls:
        members = open_ball(inst.graph, b.center, b.radius).members
        masses[b.class_index] += opt_weight_in_ball(
            opt, Ball(b.center, b.radius, members), inst.graph
        )
    first = Fraction(0)
    second = Fraction(0)
    for cls in bd.classes:
        mass = masses[cls.index]
        first += lg_plus(len(cls.pair_ids)) * mass
        second += delta * (M - cls.index) * mass
    rhs = 880 * E5_UPPER * first
    if second:
        rhs += exp_upper(Fraction(200) + Fraction(20 * M, L)) * second
    return InductionReport(
        holds=lhs <= rhs,
        lhs=lhs,
        rhs_upper=rhs,
        per_class_opt_mass=tuple(sorted(masses.items())),
        class_count=M,
    )


# -- serialization ------------------------------------------------------------

def balanced_to_obj(bd: BalancedDual) -> dict:
    return {
        "K": bd.K,
        "balls": [
            {
                "class": b.class_index,
                "center": b.center,
                "radius": format_fraction(b.radius),
                "pair": b.owner_pair,
            }
            for b in bd.balls
        ],
        "charges": {str(i): format_fraction(c) for i, c in sorted(bd.charges.items())},
        "statuses": {str(i): s.value for i, s in sorted(bd.statuses.items())},
        "dangerous": sorted(bd.dangerous),
        "classes": [
            {
                "index": cls.index,
                "cost": format_fraction(cls.cost),
                "pairs": list(cls.pair_ids),
                "radius_full": format_fraction(cls.radius_full),
            }
            for cls in bd.classes
        ],
        "step_log": bd.step_log,
    }


def serialize_balanced(bd: BalancedDual) -> str:
    return json.dumps(balanced_to_obj(bd), sort_keys=True, separators=(",", ":"))


def obj_to_balanced(obj) -> BalancedDual:
    try:
        balls = [
            DualBall(
                class_index=b["class"],
                center=b["center"],
                radius=parse_fraction(b["radius"]),
                owner_pair=b["pair"],
            )
            for b in obj["balls"]
        ]
        charges = {int(i): parse_fraction(c) for i, c in obj["charges"].items()}
        statuses = {int(i): PairStatus(s) for i, s in obj["statuses"].items()}
        classes = tuple(
            ClassInfo(
                index=c["index"],
                cost=parse_fraction(c["cost"]),
                pair_ids=tuple(c["pairs"]),
                radius_full=parse_fraction(c["radius_full"]),
            )
            for c in obj["classes"]
        )
        return BalancedDual(
            balls=balls,
            charges=charges,
            dangerous=set(obj["dangerous"]),
            K=obj["K"],
            statuses=statuses,
            classes=classes,
            step_log=list(obj.get("step_log", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed balanced dual certificate: {exc}") from exc
