import numpy as np
import pytest

from gridadapt import grid_model as gm

TWO_BUS_FILE = """\
# minimal two-bus system
[buses]
b1,-0.6,0.6
b2,-0.6,0.6
[lines]
b1,b2,1000.0,60.0
[generators]
b2,gas,4.0,100.0,60.0,60.0
[imports]
[renewables]
[wind]
b1,100.0
[loads]
b2,1000.0
"""


def test_load_minimal_two_bus(tmp_path):
    path = tmp_path / "two_bus.grid"
    path.write_text(TWO_BUS_FILE)
    topo = gm.load_grid(path)
    assert len(topo.buses) == 2
    assert len(topo.lines) == 1
    assert topo.lines[0].flow_limit_mw == 60.0
    assert topo.generators[0].fuel == "gas"
    assert topo.wind_farms[0].bus == "b1"


def test_undeclared_bus_rejected(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text(TWO_BUS_FILE.replace("b1,b2,1000.0,60.0", "b1,99,1000.0,60.0"))
    with pytest.raises(gm.GridError, match="99"):
        gm.load_grid(path)


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text("[buses]\nb1,-0.6,oops\n")
    with pytest.raises(gm.GridError, match=":2"):
        gm.load_grid(path)


def test_synthetic_grid_round_trip(tmp_path):
    topo = gm.generate_synthetic_grid(20, 12, 3, 8, seed=42)
    path = tmp_path / "synth.grid"
    gm.save_grid(topo, path)
    assert gm.load_grid(path) == topo


def test_synthetic_grid_deterministic():
    a = gm.generate_synthetic_grid(5, 3, 1, 2, seed=7)
    b = gm.generate_synthetic_grid(5, 3, 1, 2, seed=7)
    assert a == b
    c = gm.generate_synthetic_grid(5, 3, 1, 2, seed=8)
    assert a != c


def test_synthetic_grid_connected_and_capacity():
    topo = gm.generate_synthetic_grid(30, 20, 4, 10, seed=3, target_capacity_mw=5000.0)
    assert topo.is_connected()
    total = sum(g.p_max_mw for g in topo.generators)
    assert abs(total - 5000.0) <= 0.1 * 5000.0
    assert {g.fuel for g in topo.generators} == {"nuclear", "coal", "gas"}
    assert {g.cost_per_mwh for g in topo.generators} == {1.0, 2.0, 4.0}


def test_synthetic_grids_valid_over_many_seeds():
    # connectivity and type invariants over a large seed sweep
    for seed in range(1000):
        topo = gm.generate_synthetic_grid(8, 5, 2, 4, seed=seed)
        assert topo.is_connected()


def test_day_type_weights_sum_to_week():
    for season in gm.SEASONS:
        days = [dt.days_per_week for dt in gm.ALL_DAY_TYPES if dt.season == season]
        assert sorted(days) == [2, 5]
        assert sum(days) == 7


@pytest.fixture
def small_grid():
    return gm.generate_synthetic_grid(10, 6, 4, 5, seed=11)


def test_scale_wind_direct_arithmetic(small_grid):
    # wind averaging 150 MW against 1000 MW mean demand, target 30% -> k = 2
    dt = gm.DayType("spring", False)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=1, mean_load_mw=1000.0)
    scen15 = gm.scale_wind(scen, small_grid, target_penetration=0.15)
    demand = scen15.total_base_load().mean()
    assert scen15.total_wind().mean() == pytest.approx(0.15 * demand, rel=1e-9)
    scen30 = gm.scale_wind(scen15, small_grid, target_penetration=0.30)
    for eid in scen15.wind_profile:
        a = np.array(scen15.wind_profile[eid])
        b = np.array(scen30.wind_profile[eid])
        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-9)
    assert scen30.wind_penetration() == pytest.approx(0.30, rel=1e-9)


def test_scale_wind_identity_at_current_penetration(small_grid):
    dt = gm.DayType("fall", True)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=2, mean_load_mw=800.0)
    current = scen.wind_penetration()
    unchanged = gm.scale_wind(scen, small_grid, target_penetration=current)
    for eid in scen.wind_profile:
        np.testing.assert_allclose(
            unchanged.wind_profile[eid], scen.wind_profile[eid], rtol=1e-12
        )


def test_scale_wind_common_factor_preserves_shape(small_grid):
    dt = gm.DayType("winter", False)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=5, mean_load_mw=900.0)
    assert len(scen.wind_profile) == 4
    scaled = gm.scale_wind(scen, small_grid, target_penetration=0.4)
    factors = []
    for eid in scen.wind_profile:
        raw = np.array(scen.wind_profile[eid])
        out = np.array(scaled.wind_profile[eid])
        ratio = out[raw > 0] / raw[raw > 0]
        factors.append(ratio)
        # per-farm hour-to-hour ratios unchanged
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
    for f in factors[1:]:
        assert f[0] == pytest.approx(factors[0][0], rel=1e-12)
    assert scaled.wind_penetration() == pytest.approx(0.4, rel=1e-9)


def test_scale_wind_idempotent(small_grid):
    dt = gm.DayType("summer", False)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=3, mean_load_mw=1200.0)
    once = gm.scale_wind(scen, small_grid, target_penetration=0.25)
    twice = gm.scale_wind(once, small_grid, target_penetration=0.25)
    for eid in once.wind_profile:
        a = np.array(once.wind_profile[eid])
        b = np.array(twice.wind_profile[eid])
        assert np.all(np.abs(b - a) <= 1e-12 * np.maximum(np.abs(a), 1.0))


def test_scale_wind_rejects_zero_wind(small_grid):
    dt = gm.DayType("spring", False)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=1, mean_load_mw=1000.0)
    zeroed = gm.DayScenario(
        day_type=scen.day_type,
        base_load=scen.base_load,
        import_profile=scen.import_profile,
        renewable_profile=scen.renewable_profile,
        wind_profile={eid: (0.0,) * gm.HOURS for eid in scen.wind_profile},
    )
    with pytest.raises(gm.GridError, match="zero"):
        gm.scale_wind(zeroed, small_grid, target_penetration=0.2)


def test_place_datacenters_table_defaults(small_grid):
    dcs = gm.place_datacenters(
        small_grid, count=4, cap_max=200.0, utilization=0.7,
        dynamic_range=(0.4, 1.0), step_size=None, seed=9,
    )
    for dc in dcs:
        assert dc.avg_cap == pytest.approx(140.0)
        assert dc.cap_min == pytest.approx(80.0)
        assert dc.cap_max == pytest.approx(200.0)
        assert dc.step_size is None
    boundary = {p.bus for p in small_grid.imports}
    assert all(dc.bus not in boundary for dc in dcs)


def test_place_datacenters_rigid_range(small_grid):
    dcs = gm.place_datacenters(
        small_grid, count=1, cap_max=200.0, utilization=0.7,
        dynamic_range=(0.7, 0.7), step_size=None, seed=1,
    )
    assert dcs[0].cap_min == dcs[0].cap_max == dcs[0].avg_cap == pytest.approx(140.0)


def test_place_datacenters_deterministic(small_grid):
    a = gm.place_datacenters(small_grid, 6, 200.0, 0.7, (0.4, 1.0), 40.0, seed=77)
    b = gm.place_datacenters(small_grid, 6, 200.0, 0.7, (0.4, 1.0), 40.0, seed=77)
    assert a == b


def test_place_datacenters_empty_eligible_set():
    buses = (gm.Bus("b1"), gm.Bus("b2"))
    lines = (gm.Line("line1", "b1", "b2", 1000.0, 100.0),)
    topo = gm.GridTopology(
        buses=buses,
        lines=lines,
        generators=(gm.Generator("gen1", "b1", "gas", 4.0, 10.0, 10.0, 10.0),),
        imports=(
            gm.InjectionPoint("imp1", "b1", 500.0),
            gm.InjectionPoint("imp2", "b2", 500.0),
        ),
        renewables=(),
        wind_farms=(gm.InjectionPoint("wind1", "b1", 100.0),),
        loads=(gm.LoadPoint("load1", "b2", 1000.0),),
    )
    with pytest.raises(gm.GridError, match="eligible"):
        gm.place_datacenters(topo, 1, 200.0, 0.7, (0.4, 1.0), None, seed=0)


def test_scenario_csv_round_trip(tmp_path, small_grid):
    dt = gm.DayType("fall", False)
    scen = gm.build_day_scenario(small_grid, dt, wind_seed=4, mean_load_mw=700.0)
    path = tmp_path / "scen.csv"
    gm.save_scenario(scen, path)
    loaded = gm.load_scenario(path)
    assert loaded == scen


def test_datacenter_config_invariants():
    with pytest.raises(gm.GridError):
        gm.DatacenterConfig("dc1", "b1", cap_max=100.0, cap_min=120.0, avg_cap=110.0)
    with pytest.raises(gm.GridError):
        gm.DatacenterConfig("dc1", "b1", 200.0, 80.0, 140.0, step_size=0.0)
