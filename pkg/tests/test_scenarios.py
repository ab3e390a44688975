import copy
import json

import jsonschema
import numpy as np
import pytest

from projdyn.dynamics import IntegratorConfig, integrate
from projdyn.geometry import OracleSet
from projdyn.scenarios import (Scenario, build, builtin_scenarios, get_scenario, load_scenario,
                               verify)

REQUIRED = {"polyhedron-gradient", "marble-run", "sphere-cap", "halfplane-slide", "box-newton"}


def test_builtin_names():
    names = [sc.name for sc in builtin_scenarios()]
    assert len(names) >= 6
    assert REQUIRED <= set(names)
    assert any(n.startswith("x-alpha:") for n in names)
    assert len(set(names)) == len(names)


@pytest.mark.parametrize("sc", builtin_scenarios(), ids=lambda s: s.name)
def test_round_trip_preserves_behavior(sc, tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(sc.to_json())
    again = load_scenario(str(path))
    assert again.data == json.loads(json.dumps(sc.data))
    a, b = build(sc), build(again)
    horizon = min(sc.horizon, 0.05)
    cfg = IntegratorConfig(dt=1e-2)
    x0 = sc.initial_points[0]
    ta = integrate(a.set, a.metric, a.field, x0, horizon, cfg)
    tb = integrate(b.set, b.metric, b.field, x0, horizon, cfg)
    assert ta.to_csv() == tb.to_csv()


def test_marble_run_branches_at_origin():
    sc = get_scenario("marble-run")
    p = build(sc)
    assert isinstance(p.set, OracleSet)
    cones = p.set.tangent_cone(np.zeros(2))
    rng = np.random.default_rng(0)
    for v in rng.standard_normal((200, 2)):
        assert any(c.contains(v) for c in cones) == (abs(v[1]) <= abs(v[0]))


def test_x_alpha_expectations():
    weak = get_scenario("x-alpha:0.6")
    labels = {e.get("label") for e in weak.expected}
    assert "weak-equilibrium" in labels
    strong = get_scenario("x-alpha:0.3")
    assert "strong-equilibrium" in {e.get("label") for e in strong.expected}
    assert get_scenario("x-alpha:0.45").data["set"]["alpha"] == 0.45


def test_halfplane_slide_expected_endpoint():
    sc = get_scenario("halfplane-slide")
    final = [e for e in sc.expected if e["kind"] == "final_state"][0]
    assert final["value"] == [2.0, 0.0]
    results = verify(sc)
    assert all(ok for _, ok, _ in results), results


def test_schema_rejections():
    base = get_scenario("halfplane-slide").data
    bad = copy.deepcopy(base)
    del bad["horizon"]
    with pytest.raises(jsonschema.ValidationError):
        Scenario(bad)
    bad = copy.deepcopy(base)
    bad["initial_points"] = [[0.0, 1.0, 2.0]]
    with pytest.raises(ValueError):
        Scenario(bad)
    bad = copy.deepcopy(base)
    bad["integrator"]["scheme"] = "rk4"
    with pytest.raises(jsonschema.ValidationError):
        Scenario(bad)


def test_build_errors():
    base = copy.deepcopy(get_scenario("box-newton").data)
    base["metric"] = "hessian:other"
    base["flow"] = {"kind": "gradient"}
    with pytest.raises(ValueError):
        build(Scenario(base))
    base = copy.deepcopy(get_scenario("halfplane-slide").data)
    base["metric"] = "sideways"
    with pytest.raises(ValueError):
        build(Scenario(base))
    base = copy.deepcopy(get_scenario("halfplane-slide").data)
    base["flow"] = {"kind": "gradient"}
    with pytest.raises(ValueError):
        build(Scenario(base))


def test_unknown_scenario():
    with pytest.raises(KeyError):
        get_scenario("nope")
    with pytest.raises(FileNotFoundError):
        load_scenario("nope")


def test_config_overrides():
    sc = get_scenario("halfplane-slide")
    cfg = sc.config(dt=1e-2, scheme="projected_euler")
    assert cfg.dt == 1e-2 and cfg.dt_floor == pytest.approx(1e-2 / 1024)
    assert sc.config(dt=None).dt == 1e-3


@pytest.mark.parametrize("sc", builtin_scenarios(), ids=lambda s: s.name)
def test_builtin_starts_are_feasible(sc):
    S = build(sc).set
    assert all(S.contains(x) for x in sc.initial_points)
