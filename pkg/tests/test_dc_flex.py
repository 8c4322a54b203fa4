import itertools

import numpy as np
import pytest

from gridadapt import dc_flex
from gridadapt.dc_flex import BacklogState, CapacityPlan
from gridadapt.grid_model import HOURS, DatacenterConfig

TABLE_DC = DatacenterConfig("dc1", "b1", cap_max=200.0, cap_min=80.0, avg_cap=140.0)
STEPPED_DC = DatacenterConfig(
    "dc1", "b1", cap_max=200.0, cap_min=80.0, avg_cap=140.0, step_size=40.0
)


def test_constant_plan_is_valid_with_zero_backlog():
    plan = dc_flex.constant_plan(TABLE_DC)
    assert dc_flex.validate_plan(plan, TABLE_DC) == []
    assert dc_flex.backlog_trajectory(plan, TABLE_DC) == [0.0] * HOURS


def test_range_violation_names_hour():
    caps = [140.0] * HOURS
    caps[0] = 79.0
    caps[1] = 201.0  # keeps the daily sum balanced
    plan = CapacityPlan("dc1", tuple(caps))
    violations = dc_flex.validate_plan(plan, TABLE_DC)
    rules = {(v.rule, v.hour) for v in violations}
    assert (dc_flex.RULE_RANGE, 1) in rules
    assert (dc_flex.RULE_RANGE, 2) in rules


def test_split_plan_balance_and_step():
    plan = CapacityPlan("dc1", (80.0,) * 12 + (200.0,) * 12)
    assert dc_flex.validate_plan(plan, TABLE_DC) == []
    violations = dc_flex.validate_plan(plan, STEPPED_DC)
    assert len(violations) == 1
    v = violations[0]
    assert v.rule == dc_flex.RULE_STEP
    assert v.hour == 13
    assert "step size" in v.message


def test_unbalanced_plan_reports_final_backlog():
    plan = CapacityPlan("dc1", (80.0,) * 24)
    violations = dc_flex.validate_plan(plan, TABLE_DC)
    assert any(v.rule == dc_flex.RULE_BACKLOG for v in violations)
    assert "backlog" in violations[-1].message


def test_backlog_trajectory_two_step_cancel():
    caps = (80.0, 200.0) + (140.0,) * 22
    plan = CapacityPlan("dc1", caps)
    traj = dc_flex.backlog_trajectory(plan, TABLE_DC)
    assert traj[0] == 60.0
    assert traj[1:] == [0.0] * 23


def test_validated_plans_end_at_zero():
    rng = np.random.default_rng(4)
    levels = [80.0, 140.0, 200.0]
    for _ in range(50):
        caps = list(rng.choice(levels, size=HOURS))
        # repair the daily balance by forcing the tail to the average
        deficit = sum(140.0 - c for c in caps)
        if deficit != 0:
            continue
        plan = CapacityPlan("dc1", tuple(caps))
        if not dc_flex.validate_plan(plan, TABLE_DC):
            assert dc_flex.backlog_trajectory(plan, TABLE_DC)[-1] == 0.0


def test_apply_decision_matches_trajectory():
    rng = np.random.default_rng(11)
    caps = tuple(float(c) for c in rng.choice([80.0, 140.0, 200.0], size=HOURS))
    plan = CapacityPlan("dc1", caps)
    state = BacklogState("dc1", 0.0, 0)
    folded = []
    for cap in caps:
        state = dc_flex.apply_decision(state, cap, TABLE_DC)
        folded.append(state.backlog)
    assert folded == dc_flex.backlog_trajectory(plan, TABLE_DC)
    assert state.hour == HOURS


def test_apply_decision_basics():
    state = BacklogState("dc1", 0.0, 0)
    neutral = dc_flex.apply_decision(state, 140.0, TABLE_DC)
    assert neutral.backlog == 0.0 and neutral.hour == 1
    deferred = dc_flex.apply_decision(state, 80.0, TABLE_DC)
    assert deferred.backlog == 60.0
    with pytest.raises(dc_flex.PlanError):
        dc_flex.apply_decision(state, 79.0, TABLE_DC)


def test_plan_round_trip_revalidates(tmp_path):
    plan = CapacityPlan("dc1", (80.0,) * 12 + (200.0,) * 12)
    assert dc_flex.validate_plan(plan, TABLE_DC) == []
    path = tmp_path / "plans.csv"
    dc_flex.save_plans([plan], path)
    loaded = dc_flex.load_plans(path)
    assert loaded == [plan]
    assert dc_flex.validate_plan(loaded[0], TABLE_DC) == []


def _exhaustive_completion(levels, avg, hour, backlog, current_cap, step):
    """Reference reachability by plain enumeration over remaining hours."""
    remaining = HOURS - hour
    if remaining == 0:
        return backlog == 0
    if remaining > 4:
        raise ValueError("enumeration guard")
    for tail in itertools.product(levels, repeat=remaining):
        if step is not None:
            seq = [current_cap] + list(tail)
            if any(abs(b - a) > step for a, b in zip(seq, seq[1:])):
                continue
        if backlog + sum(avg - c for c in tail) == 0:
            return True
    return False


def test_feasibility_window_iff_without_step():
    config = DatacenterConfig("dc1", "b1", cap_max=3.0, cap_min=1.0, avg_cap=2.0)
    levels = [1, 2, 3]
    for hour in range(20, HOURS + 1):
        for backlog in range(-6, 7):
            expect = _exhaustive_completion(levels, 2, hour, backlog, None, None)
            assert dc_flex.within_feasible_window(config, hour, backlog) == expect


def test_feasible_completion_exact_with_step():
    config = DatacenterConfig(
        "dc1", "b1", cap_max=3.0, cap_min=1.0, avg_cap=2.0, step_size=1.0
    )
    levels = [1, 2, 3]
    for hour in range(20, HOURS + 1):
        for backlog in range(-6, 7):
            for cap in levels:
                expect = _exhaustive_completion(levels, 2, hour, backlog, cap, 1)
                got = dc_flex.has_feasible_completion(config, hour, backlog, cap)
                assert got == expect, (hour, backlog, cap)
                # the step-free window stays a necessary condition
                if got:
                    assert dc_flex.within_feasible_window(config, hour, backlog)
