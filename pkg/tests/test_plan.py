import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavgather.instance import FleetParams, make_instance
from uavgather.plan import (
    RoundPlan,
    make_plan,
    plan_consumption,
    rescore,
    structural_violations,
    subtree_loads,
    validate_plan,
)

LINE = make_instance([(10, 0), (20, 0), (30, 0)], 10.0, fleet=FleetParams(uav_count=1, max_tour_length=100))


def test_chain_loads_and_energy():
    plan = make_plan(LINE, [(3, 2), (2, 1)], [(0, 1, 0)], alpha=0.6)
    assert subtree_loads(LINE, plan.parent) == {1: 200_000.0, 2: 100_000.0, 3: 0.0}
    # head: receives 2 packets and uploads 3 at h=20
    assert plan.residual_energy[1] == pytest.approx(10 - 200_000 * 50e-9 - 300_000 * 54e-9, rel=1e-12)
    assert plan.residual_energy[3] == pytest.approx(10 - 100_000 * 51e-9, rel=1e-12)
    assert validate_plan(LINE, plan) == []


def test_energy_conservation():
    plan = make_plan(LINE, [(3, 2), (2, 1)], [(0, 1, 0)], alpha=0.6)
    spent = math.fsum(c.total_joules for c in plan_consumption(LINE, plan.tree_edges, plan.cluster_heads).values())
    before = math.fsum(LINE.energies().values())
    after = math.fsum(plan.residual_energy.values())
    assert before - after == pytest.approx(spent, rel=1e-12)


@pytest.mark.parametrize(
    "edges,tours,needle",
    [
        ([(3, 2)], [(0, 1, 0)], "sensor 2 has neither"),
        ([(3, 2), (2, 1), (1, 2)], [(0, 1, 0)], "both a parent and a tour slot"),
        ([(2, 3), (3, 2)], [(0, 1, 0)], "forest violated"),
        ([(3, 2), (2, 1)], [(0, 1, 0), (0, 2, 0)], "too many tours"),
        ([(3, 2)], [(0, 1, 2, 1, 0)], "node-disjoint"),
        ([(3, 2), (2, 1)], [(1, 0)], "start and end at the sink"),
        ([(3, 2), (2, 0)], [(0, 1, 0)], "two sensors"),
    ],
)
def test_structural_violations(edges, tours, needle):
    problems = structural_violations(LINE, edges, tours)
    assert any(needle in p for p in problems), problems


def test_tour_length_budget():
    inst = make_instance([(10, 0), (60, 0)], 10.0, fleet=FleetParams(uav_count=1, max_tour_length=100))
    assert any("tour length exceeded" in p for p in structural_violations(inst, [], [(0, 1, 2, 0)]))


def test_tampered_energy_detected():
    plan = make_plan(LINE, [(3, 2), (2, 1)], [(0, 1, 0)], alpha=0.6)
    bad = dict(plan.residual_energy)
    bad[2] += 1e-3
    tampered = RoundPlan(plan.tree_edges, plan.tour_sequences, bad, plan.e_min, plan.objective_value)
    assert any("energy mismatch at sensor 2" in p for p in validate_plan(LINE, tampered))
    wrong_min = RoundPlan(plan.tree_edges, plan.tour_sequences, plan.residual_energy, plan.e_min + 1, plan.objective_value)
    assert any("e_min mismatch" in p for p in validate_plan(LINE, wrong_min))


def test_range_limit():
    inst = make_instance([(10, 0), (60, 0)], 10.0)
    assert any("range exceeded" in p for p in structural_violations(inst, [(2, 1)], [(0, 1, 0)]))


@given(st.sets(st.integers(1, 3), min_size=1), st.floats(0, 1))
def test_e_min_is_minimum(heads, alpha):
    edges = [(i, min(heads, key=lambda h: abs(h - i))) for i in (1, 2, 3) if i not in heads]
    plan = make_plan(LINE, edges, [(0, *sorted(heads), 0)], alpha=alpha)
    assert validate_plan(LINE, plan) == []
    assert plan.e_min == min(plan.residual_energy.values())
    assert plan.residual_energy == rescore(LINE, plan.tree_edges, plan.cluster_heads)


def test_relayed_bits_tolerance():
    from dataclasses import replace

    plan = make_plan(LINE, [(3, 2), (2, 1)], [(0, 1, 0)], alpha=0.6)
    noisy = replace(plan, relayed_bits={**plan.relayed_bits, 1: 200_000.000006})
    assert validate_plan(LINE, noisy) == []
    wrong = replace(plan, relayed_bits={**plan.relayed_bits, 1: 199_999.0})
    assert any("relayed bits mismatch at sensor 1" in p for p in validate_plan(LINE, wrong))
