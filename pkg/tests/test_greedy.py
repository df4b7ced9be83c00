from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from greedysf.errors import InputError, RunError
from greedysf.graph import WeightedGraph, distances_from
from greedysf.greedy import (
    MetricState,
    Rule,
    apply_contraction_rule,
    compare_rules,
    contraction_of,
    equal_cost_classes,
    pairs_below_contraction,
    partition_cost_classes,
    run_greedy,
    serialize_trace,
    trace_to_obj,
)
from greedysf.instances import (
    gen_canonical_nested,
    gen_girth_lower_bound,
    gen_random_instance,
    make_instance,
)

F = Fraction


def test_rules_on_unit_path():
    g = WeightedGraph(3, [(0, 1, F(1)), (1, 2, F(1))])
    inst = make_instance(g, [(0, 2)])
    for rule, expected in [
        (Rule.RULE1, [(0, 1), (1, 2)]),
        (Rule.RULE2, [(0, 2)]),
        (Rule.RULE3, [(0, 2)]),
    ]:
        trace = run_greedy(inst, rule)
        assert trace.costs == [F(2)]
        assert trace.paths == [(0, 1, 2)]
        assert trace.shortcuts_added == [expected]


def test_apply_rule_examples():
    path = (0, 9, 4, 7, 1)
    assert apply_contraction_rule(Rule.RULE2, path, {0, 1}) == [(0, 1)]
    # only vertex 4 arrived previously
    assert apply_contraction_rule(Rule.RULE3, path, {0, 1, 4}) == [(0, 4), (4, 1)]
    assert apply_contraction_rule(Rule.RULE1, path, set()) == [
        (0, 9),
        (9, 4),
        (4, 7),
        (7, 1),
    ]


@pytest.mark.parametrize("rule", list(Rule))
def test_girth_instance_costs(rule):
    inst = gen_girth_lower_bound("petersen")
    trace = run_greedy(inst, rule)
    assert all(c == F(5, 2) for c in trace.costs)
    assert all(c == 1 for c in trace.contraction)


def test_identical_traces_across_rules_on_cages():
    for cage in ("petersen", "heawood"):
        inst = gen_girth_lower_bound(cage)
        traces = [run_greedy(inst, rule) for rule in Rule]
        first = traces[0]
        for other in traces[1:]:
            assert other.paths == first.paths
            assert other.costs == first.costs
            assert other.shortcuts_added == first.shortcuts_added


def test_canonical_costs_match_schedule():
    inst = gen_canonical_nested(2, 3, delta=20, seed=4)
    trace = run_greedy(inst, Rule.RULE3)
    for i, edges in enumerate(inst.schedule):
        assert trace.costs[i] == edges[0][2]
    assert all(c == 1 for c in trace.contraction)


def test_unreachable_pair_raises():
    g = WeightedGraph(4, [(0, 1, F(1))])
    inst = make_instance(g, [(0, 3)])
    with pytest.raises(RunError):
        run_greedy(inst, Rule.RULE1)


def test_contraction_examples():
    g = WeightedGraph(4, [(0, 1, F(5)), (1, 2, F(5)), (0, 2, F(4)), (2, 3, F(1))])
    inst = make_instance(g, [(0, 1), (0, 2), (1, 2)])
    trace = run_greedy(inst, Rule.RULE2)
    # first pair of an empty-schedule instance reuses nothing
    assert contraction_of(trace, inst, 0) == 1
    assert trace.costs[2] == 0  # connected via the two previous shortcuts
    assert contraction_of(trace, inst, 2) is None  # infinite


def test_zero_distance_pair_literal_rules():
    g = WeightedGraph(3, [(0, 1, F(0)), (1, 2, F(0))])
    inst = make_instance(g, [(0, 2)])
    trace = run_greedy(inst, Rule.RULE1)
    assert trace.costs == [F(0)]
    assert trace.shortcuts_added == [[(0, 1), (1, 2)]]
    assert trace.contraction == [None]


def test_pairs_below_contraction():
    inst = gen_girth_lower_bound("heawood")
    trace = run_greedy(inst, Rule.RULE1)
    assert pairs_below_contraction(trace, F(1)) == set()
    assert pairs_below_contraction(trace, F(2)) == set(range(inst.k))
    assert pairs_below_contraction(trace, F(10**9)) == set(range(inst.k))
    with pytest.raises(InputError):
        pairs_below_contraction(trace, F(1, 2))


def _trace_with_costs(costs):
    # a star of schedule-announced pairs so the engine pays prescribed costs
    n = 2 * len(costs)
    edges = [(2 * i, 2 * i + 1, F(c)) for i, c in enumerate(costs)]
    g = WeightedGraph(n, edges)
    pairs = [(2 * i, 2 * i + 1) for i in range(len(costs))]
    inst = make_instance(g, pairs)
    return run_greedy(inst, Rule.RULE3)


def test_partition_cost_classes_exact_buckets():
    trace = _trace_with_costs([8, 8, 2, 1])
    part = partition_cost_classes(trace, class_cap=10)
    assert part.anchor == 8
    assert part.classes[0] == frozenset({0, 1})
    assert part.classes[2] == frozenset({2})
    assert part.classes[3] == frozenset({3})
    assert part.residual == frozenset()
    assert trace.class_index == [0, 0, 2, 3]


def test_partition_single_class_and_residual():
    trace = _trace_with_costs([4, 4, 4])
    part = partition_cost_classes(trace)
    assert set(part.classes) == {0} and not part.residual
    trace2 = _trace_with_costs([64, 1])
    part2 = partition_cost_classes(trace2)  # default cap: ceil(log2 2)+1 = 2
    assert part2.classes[0] == frozenset({0})
    assert part2.residual == frozenset({1})


def test_partition_canonical_spacing():
    inst = gen_canonical_nested(3, 2, delta=20, seed=1)
    trace = run_greedy(inst, Rule.RULE3)
    part = partition_cost_classes(trace, class_cap=100)
    assert sorted(part.classes) == [0, 30, 60]


def test_partition_errors():
    g = WeightedGraph(2, [(0, 1, F(0))])
    inst = make_instance(g, [(0, 1)])
    trace = run_greedy(inst, Rule.RULE1)
    with pytest.raises(InputError):
        partition_cost_classes(trace)


def test_partition_opt_anchor_shifts_indices():
    trace = _trace_with_costs([8, 2])
    base = partition_cost_classes(trace, class_cap=10)
    shifted = partition_cost_classes(trace, class_cap=10, anchor=F(16))
    assert sorted(base.classes) == [0, 2]
    assert sorted(shifted.classes) == [1, 3]


def test_equal_cost_classes():
    trace = _trace_with_costs([8, 2, 8])
    groups = equal_cost_classes(trace)
    assert groups[0] == (F(8), [0, 2])
    assert groups[1] == (F(2), [1])


@st.composite
def small_instances(draw):
    n = draw(st.integers(4, 8))
    m = draw(st.integers(n - 1, min(n + 4, n * (n - 1) // 2)))
    k = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 10**6))
    return gen_random_instance(n, m, k, seed)


@given(small_instances(), st.sampled_from(list(Rule)))
@settings(max_examples=30, deadline=None)
def test_cost_metric_consistency(inst, rule):
    """Replaying the metric reconstructs every traced cost exactly."""
    trace = run_greedy(inst, rule)
    metric = MetricState(inst)
    prev = set()
    for i, pair in enumerate(inst.pairs):
        for u, v, w in inst.schedule[i]:
            metric.add_edge(u, v, w)
        d, _ = metric.shortest(pair.s, pair.t)
        assert d == trace.costs[i]
        for u, v in trace.shortcuts_added[i]:
            metric.add_edge(u, v, F(0))
        prev.update((pair.s, pair.t))


@given(small_instances(), st.sampled_from(list(Rule)))
@settings(max_examples=30, deadline=None)
def test_contraction_at_least_one(inst, rule):
    trace = run_greedy(inst, rule)
    for c in trace.contraction:
        assert c is None or c >= 1


@given(small_instances())
@settings(max_examples=20, deadline=None)
def test_rule_shortcut_richness(inst):
    """With identical history, rule 2 shortcuts contract the least, rule 1 the most."""
    trace = run_greedy(inst, Rule.RULE3)
    prev = set()
    for i, pair in enumerate(inst.pairs):
        path = trace.paths[i]
        keep = prev | {pair.s, pair.t}
        variants = {
            rule: inst.graph.with_extra_edges(
                [(u, v, F(0)) for u, v in apply_contraction_rule(rule, path, keep)]
            )
            for rule in Rule
        }
        for s in range(inst.graph.n):
            d1 = distances_from(variants[Rule.RULE1], s)
            d2 = distances_from(variants[Rule.RULE2], s)
            d3 = distances_from(variants[Rule.RULE3], s)
            for v in range(inst.graph.n):
                if d2[v] is not None:
                    assert d3[v] <= d2[v]
                if d3[v] is not None:
                    assert d1[v] <= d3[v]
        prev.update((pair.s, pair.t))


def test_shortcut_sets_non_decreasing():
    inst = gen_random_instance(8, 12, 4, seed=9)
    trace = run_greedy(inst, Rule.RULE1)
    assert len(trace.shortcuts_added) == inst.k
    cumulative = [set()]
    for added in trace.shortcuts_added:
        cumulative.append(cumulative[-1] | set(added))
    for before, after in zip(cumulative, cumulative[1:]):
        assert before <= after
    assert cumulative[0] == set()


def test_compare_rules_logs_totals():
    inst = gen_random_instance(8, 12, 4, seed=11)
    totals = compare_rules(inst)
    assert set(totals) == {"rule1", "rule2", "rule3"}
    assert all(v >= 0 for v in totals.values())


def test_trace_serialization_shape():
    inst = gen_girth_lower_bound("petersen")
    trace = run_greedy(inst, Rule.RULE3)
    obj = trace_to_obj(trace)
    assert obj["rule"] == "rule3"
    assert obj["total"] == "15/2"
    assert obj["pairs"][0]["cost"] == "5/2"
    assert obj["pairs"][0]["contraction"] == "1/1"
    serialize_trace(trace)  # must not raise


def test_trace_parse_roundtrip():
    from greedysf.greedy import parse_trace

    inst = gen_random_instance(8, 12, 4, seed=21)
    trace = run_greedy(inst, Rule.RULE2)
    back = parse_trace(serialize_trace(trace))
    assert back.rule is trace.rule
    assert back.paths == trace.paths
    assert back.costs == trace.costs
    assert back.shortcuts_added == trace.shortcuts_added
    assert back.contraction == trace.contraction
    assert back.total_cost == trace.total_cost
