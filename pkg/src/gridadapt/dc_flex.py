"""Datacenter flexibility model: capacity plans and backlog accounting.

A plan is 24 hourly capacities. It is valid when every hour stays inside
the configured dynamic range, hour-to-hour changes respect the step-size
bound (when one is configured), and the deferred-energy backlog returns to
exactly zero at hour 24. All backlog arithmetic runs on a 1 MW-quantized
grid so the end-of-day zero is exact, never a float comparison.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .grid_model import HOURS, DatacenterConfig

RULE_RANGE = "range"
RULE_STEP = "step"
RULE_BACKLOG = "backlog"


class PlanError(Exception):
    """A capacity decision outside the configured envelope."""


def _mw(value: float) -> int:
    return round(value)


@dataclass(frozen=True)
class CapacityPlan:
    dc_id: str
    caps: tuple[float, ...]  # MW, hour 1..24

    def __post_init__(self):
        if len(self.caps) != HOURS:
            raise PlanError(f"plan for {self.dc_id!r} needs {HOURS} entries, got {len(self.caps)}")

    def cap_at(self, hour: int) -> float:
        return self.caps[hour - 1]


@dataclass(frozen=True)
class BacklogState:
    """Deferred energy (MWh) after deciding capacity for ``hour``."""

    dc_id: str
    backlog: float
    hour: int


@dataclass(frozen=True)
class Violation:
    rule: str  # range | step | backlog
    hour: int | None
    message: str


def constant_plan(config: DatacenterConfig, cap: float | None = None) -> CapacityPlan:
    value = config.avg_cap if cap is None else cap
    return CapacityPlan(config.id, (value,) * HOURS)


def validate_plan(plan: CapacityPlan, config: DatacenterConfig) -> list[Violation]:
    """Check range, step-size, and end-of-day zero backlog; empty list means ok."""
    violations = []
    caps = [_mw(c) for c in plan.caps]
    lo, hi = _mw(config.cap_min), _mw(config.cap_max)
    avg = _mw(config.avg_cap)
    for t, cap in enumerate(caps, start=1):
        if not (lo <= cap <= hi):
            violations.append(Violation(
                RULE_RANGE, t,
                f"hour {t}: capacity {cap} MW outside dynamic range [{lo}, {hi}]",
            ))
    if config.step_size is not None:
        step = _mw(config.step_size)
        for t in range(2, HOURS + 1):
            delta = abs(caps[t - 1] - caps[t - 2])
            if delta > step:
                violations.append(Violation(
                    RULE_STEP, t,
                    f"hour {t}: step size {delta} MW exceeds limit {step} MW",
                ))
    final = sum(avg - cap for cap in caps)
    if final != 0:
        violations.append(Violation(
            RULE_BACKLOG, HOURS,
            f"final backlog {final} MWh, must be exactly 0",
        ))
    return violations


def backlog_trajectory(plan: CapacityPlan, config: DatacenterConfig) -> list[float]:
    """Backlog after each hour, by the exact recurrence on the 1 MW grid."""
    avg = _mw(config.avg_cap)
    out = []
    backlog = 0
    for cap in plan.caps:
        backlog += avg - _mw(cap)
        out.append(float(backlog))
    return out


def apply_decision(state: BacklogState, cap: float, config: DatacenterConfig) -> BacklogState:
    """Advance one hour with the chosen capacity, updating the backlog."""
    if not (config.cap_min - 1e-9 <= cap <= config.cap_max + 1e-9):
        raise PlanError(
            f"{state.dc_id}: capacity {cap} MW outside [{config.cap_min}, {config.cap_max}]"
        )
    new_backlog = _mw(state.backlog) + _mw(config.avg_cap) - _mw(cap)
    return BacklogState(state.dc_id, float(new_backlog), state.hour + 1)


def within_feasible_window(config: DatacenterConfig, hour: int, backlog: float) -> bool:
    """True when ``backlog`` after hour ``hour`` can still reach 0 by hour 24,
    ignoring any step-size coupling (exact for unbounded steps; a necessary
    condition otherwise)."""
    remaining = HOURS - hour
    up = _mw(config.cap_max) - _mw(config.avg_cap)  # backlog burn per hour
    down = _mw(config.avg_cap) - _mw(config.cap_min)  # backlog growth per hour
    b = _mw(backlog)
    return -remaining * down <= b <= remaining * up


def has_feasible_completion(
    config: DatacenterConfig,
    hour: int,
    backlog: float,
    current_cap: float | None = None,
    quantum: int = 1,
) -> bool:
    """Exact reachability check for hours hour+1..24 on the quantized grid.

    With a configured step size the reachable capacities depend on
    ``current_cap``; without one this reduces to the feasibility window.
    """
    if config.step_size is None or current_cap is None:
        return within_feasible_window(config, hour, backlog)
    lo, hi = _mw(config.cap_min), _mw(config.cap_max)
    avg = _mw(config.avg_cap)
    step = _mw(config.step_size)
    if (hi - lo) % quantum or (avg - lo) % quantum:
        raise PlanError("capacity range and average must sit on the quantum grid")
    levels = list(range(lo, hi + 1, quantum))
    b0 = _mw(backlog)
    if b0 % quantum:
        return False
    # states: backlog values reachable per capacity level
    states = {_nearest_level(_mw(current_cap), levels): {b0}}
    for t in range(hour + 1, HOURS + 1):
        remaining = HOURS - t
        nxt: dict[int, set[int]] = {}
        for cap, backlogs in states.items():
            for nc in levels:
                if abs(nc - cap) > step:
                    continue
                bucket = nxt.setdefault(nc, set())
                for b in backlogs:
                    nb = b + avg - nc
                    if -remaining * (avg - lo) <= nb <= remaining * (hi - avg):
                        bucket.add(nb)
        states = nxt
        if not states:
            return False
    return any(0 in backlogs for backlogs in states.values())


def _nearest_level(cap: int, levels: list[int]) -> int:
    return min(levels, key=lambda x: (abs(x - cap), x))


# ---------------------------------------------------------------------------
# plan CSV format: dc_id,h1..h24


def save_plans(plans, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dc_id"] + [f"h{t}" for t in range(1, HOURS + 1)])
        for plan in plans:
            writer.writerow([plan.dc_id] + [repr(c) for c in plan.caps])


def load_plans(path) -> list[CapacityPlan]:
    plans = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "dc_id":
            raise PlanError(f"{path}: missing plan header 'dc_id,h1..h24'")
        for row in reader:
            if not row:
                continue
            if len(row) != HOURS + 1:
                raise PlanError(f"{path}: plan {row[0]!r} needs {HOURS} capacities")
            plans.append(CapacityPlan(row[0], tuple(float(v) for v in row[1:])))
    return plans
