import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavgather.formulations import (
    THREE_INDEX,
    TWO_INDEX,
    BigM,
    BuildConfig,
    build_2index,
    build_3index,
    restrict_candidates,
    solve_round,
)
from uavgather.instance import FleetParams, generate_random_instance, make_instance, neighbor_set
from uavgather.milp import INFEASIBLE, OPTIMAL, SolveConfig, check_assignment, model_stats
from uavgather.plan import validate_plan

TIGHT = SolveConfig(gap_tolerance=1e-7)
FORMS = [TWO_INDEX, THREE_INDEX]


@pytest.mark.parametrize("n,expected", [(5, 91), (15, 721), (30, 2791)])
def test_unpruned_two_index_count(n, expected):
    inst = generate_random_instance(n, seed=0)
    model, _ = build_2index(inst, BuildConfig(prune=False))
    assert model_stats(model).variables == expected == 3 * n * n + 3 * n + 1


@pytest.mark.parametrize("n", [3, 10])
def test_unpruned_three_index_flow_count(n):
    inst = generate_random_instance(n, seed=0)
    _, vm = build_3index(inst, BuildConfig(prune=False))
    assert len(vm.f) + len(vm.g) == 2 * n**3


def test_pruned_counts_follow_neighbourhoods():
    inst = generate_random_instance(15, seed=2)
    _, vm = build_3index(inst)
    n = inst.n
    arcs = sum(len(neighbor_set(inst, i) - {0}) for i in inst.sensor_ids)
    delta = max(len(neighbor_set(inst, i)) for i in inst.sensor_ids)
    assert len(vm.x) == arcs <= n * delta
    assert len(vm.g) == n * arcs <= n * n * delta


def test_single_sensor_is_its_own_head(single_node):
    for form in FORMS:
        sol = solve_round(single_node, form, solver=TIGHT)
        assert sol.report.status == OPTIMAL
        assert sol.plan.tour_sequences == ((0, 1, 0),)
        assert sol.plan.e_min == pytest.approx(20 - 0.0054, abs=1e-9)
        assert sol.report.objective_value == pytest.approx(19.9946, abs=1e-9)


def test_symmetric_pair_both_heads():
    inst = make_instance([(10, 0), (-10, 0)], 20.0, fleet=FleetParams(uav_count=2))
    for form in FORMS:
        plan = solve_round(inst, form, solver=TIGHT).plan
        assert plan.cluster_heads == {1, 2}
        assert plan.e_min == pytest.approx(19.9946, abs=1e-9)


def test_isolated_unreachable_sensor_is_infeasible():
    inst = make_instance([(10, 0), (500, 0)], 20.0, fleet=FleetParams(max_tour_length=100))
    for form in FORMS:
        assert solve_round(inst, form).report.status == INFEASIBLE


def test_restrict_candidates_rounds_up_and_prefers_energy():
    inst = make_instance([(i, 0) for i in range(1, 11)], [5, 9, 9, 1, 2, 3, 4, 8, 7, 6])
    assert restrict_candidates(inst, 20) == {2, 3}
    assert restrict_candidates(inst, 25) == {2, 3, 8}
    assert restrict_candidates(inst, 100) == set(range(1, 11))
    with pytest.raises(ValueError):
        restrict_candidates(inst, 0)


def test_alpha_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        BuildConfig(alpha=1.5)


def test_big_m_override_is_used():
    inst = generate_random_instance(5, seed=1)
    model, vm = build_2index(inst, BuildConfig(big_m=BigM(length=12345.0)))
    rows = [c for c in model.constraints if c.name.startswith("F1_5")]
    assert rows and all(dict(c.terms)[next(n for n, _ in c.terms if n.startswith("r_"))] == 12345.0 for c in rows)


@pytest.mark.parametrize("form", FORMS)
def test_solutions_pass_independent_checks(form, small_instance):
    sol = solve_round(small_instance, form, solver=TIGHT)
    assert sol.report.status == OPTIMAL
    assert not check_assignment(sol.model, sol.report.assignment)
    assert validate_plan(small_instance, sol.plan) == []


@settings(max_examples=8)
@given(st.integers(3, 6), st.integers(0, 10**6), st.integers(1, 2), st.floats(0, 1))
def test_formulations_agree(n, seed, m, alpha):
    inst = generate_random_instance(n, seed=seed, fleet=FleetParams(uav_count=m))
    a = solve_round(inst, TWO_INDEX, BuildConfig(alpha=alpha), TIGHT)
    b = solve_round(inst, THREE_INDEX, BuildConfig(alpha=alpha), TIGHT)
    assert a.report.status == b.report.status
    if a.plan is not None:
        assert a.report.objective_value == pytest.approx(b.report.objective_value, rel=2e-7, abs=1e-6)
        assert validate_plan(inst, a.plan) == [] and validate_plan(inst, b.plan) == []


def test_heuristic_never_beats_full_model(small_instance):
    full = solve_round(small_instance, TWO_INDEX, solver=TIGHT).report.objective_value
    for p in (20, 50, 100):
        cands = restrict_candidates(small_instance, p)
        sol = solve_round(small_instance, TWO_INDEX, BuildConfig(ch_candidates=cands), TIGHT)
        if sol.plan is not None:
            assert sol.report.objective_value <= full + 1e-6
            assert sol.plan.cluster_heads <= cands
