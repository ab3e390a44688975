"""Scenario configurations: schema, built-ins, construction and checks.

A scenario is plain JSON data. :func:`build` turns it into runtime objects
(set, metric, field) and :func:`verify` evaluates its ``expected`` list of
named assertions.
"""

from dataclasses import dataclass, field
import json
import math

import jsonschema
import numpy as np

from . import sets
from .analysis import equivalence_residual, lasalle_monitor, prox_estimate
from .charts import invariance_harness, inversion_chart, round_metric, shear_chart
from .dynamics import IntegratorConfig, detect_equilibrium, integrate
from .flows import ScalarField, grad_field
from .metric import MetricField, hessian_metric
from .projection import krasovskii_hull, project_field

_VECTOR = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": _VECTOR}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "projdyn scenario",
    "type": "object",
    "required": ["name", "dim", "set", "metric", "flow", "initial_points", "horizon"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
        "set": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["halfspaces", "box", "polygon", "disk", "x-alpha",
                                  "marble-run", "sphere-cap", "whole-space"]},
                "act_tol": {"type": "number", "minimum": 0},
                "rank_tol": {"type": "number", "minimum": 0},
                "restore_tol": {"type": "number", "exclusiveMinimum": 0},
                "restore_radius": {"type": "number", "exclusiveMinimum": 0},
                "max_restore_iter": {"type": "integer", "minimum": 1},
            },
        },
        "metric": {"type": "string"},
        "potential": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["quadratic", "quartic-valley"]},
                "name": {"type": "string"},
                "Q": _MATRIX,
                "center": _VECTOR,
            },
        },
        "flow": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["raw-field", "gradient", "newton"]},
                "field": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["constant", "linear", "rotation", "zero"]},
                        "value": _VECTOR,
                        "matrix": _MATRIX,
                    },
                },
            },
        },
        "initial_points": {"type": "array", "items": _VECTOR, "minItems": 1},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "integrator": {
            "type": "object",
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "scheme": {"enum": ["tangent_euler", "projected_euler"]},
                "equil_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_restore": {"type": "integer", "minimum": 1},
                "dt_floor": {"type": "number", "exclusiveMinimum": 0},
                "kappa_bound": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "chart": {"enum": ["identity", "shear", "inversion"]},
        "seed": {"type": "integer", "minimum": 0},
        "expected": {
            "type": "array",
            "items": {"type": "object", "required": ["kind"]},
        },
    },
}


@dataclass(frozen=True)
class Scenario:
    """A validated scenario configuration."""

    data: dict = field(repr=False)

    def __post_init__(self):
        jsonschema.validate(self.data, SCENARIO_SCHEMA)
        dim = self.data["dim"]
        for p in self.data["initial_points"]:
            if len(p) != dim:
                raise ValueError(f"initial point {p} does not have dimension {dim}")

    @property
    def name(self):
        return self.data["name"]

    @property
    def dim(self):
        return self.data["dim"]

    @property
    def horizon(self):
        return float(self.data["horizon"])

    @property
    def initial_points(self):
        return [np.array(p, dtype=float) for p in self.data["initial_points"]]

    @property
    def expected(self):
        return list(self.data.get("expected", []))

    @property
    def seed(self):
        return int(self.data.get("seed", 0))

    def config(self, **overrides):
        opts = dict(self.data.get("integrator", {}))
        opts.update({k: v for k, v in overrides.items() if v is not None})
        return IntegratorConfig(**opts)

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(json.loads(text))


@dataclass(frozen=True)
class Problem:
    """Runtime objects of a scenario."""

    set: object
    metric: MetricField
    field: object
    potential: ScalarField = None
    chart: object = None
    flow_kind: str = "raw-field"


_SET_OPTIONS = ("act_tol", "rank_tol", "restore_tol", "restore_radius", "max_restore_iter")


def build_set(item, dim):
    """Feasible set from its config; smooth sets accept the tolerance options too."""
    kind = item["kind"]
    opts = {k: item[k] for k in _SET_OPTIONS if k in item}
    if kind == "halfspaces":
        return sets.halfspaces(item["A"], item["b"], name=item.get("name", "polyhedron"), **opts)
    if kind == "box":
        return sets.box(item["lower"], item["upper"], **opts)
    if kind == "polygon":
        return sets.polygon(item["vertices"], **opts)
    if kind == "disk":
        return sets.disk(item.get("center", [0.0] * dim), item.get("radius", 1.0), **opts)
    if kind == "x-alpha":
        return sets.x_alpha(item["alpha"], **opts)
    if kind == "marble-run":
        return sets.marble_run()
    if kind == "sphere-cap":
        shape = {k: item[k] for k in ("base_radius", "notch_depth", "notch_width", "notch_angle")
                 if k in item}
        return sets.sphere_cap(**shape, **opts)
    if kind == "whole-space":
        return sets.SmoothInequalitySet.whole_space(dim)
    raise ValueError(f"unknown set kind {kind!r}")


def build_potential(item):
    if item is None:
        return None
    kind = item["kind"]
    name = item.get("name", kind)
    if kind == "quadratic":
        return ScalarField.quadratic(item["Q"], item.get("center"), name=name)
    if kind == "quartic-valley":
        # x1^4 / 12 + x2^2 / 2: strongly convex only away from x1 = 0.
        return ScalarField(
            lambda x: x[0] ** 4 / 12.0 + 0.5 * x[1] ** 2,
            lambda x: np.array([x[0] ** 3 / 3.0, x[1]]),
            lambda x: np.diag([x[0] ** 2, 1.0]),
            name=name,
        )
    raise ValueError(f"unknown potential kind {kind!r}")


def build_metric(item, dim, potential=None):
    """Metric from its config string.

    Accepted forms: ``euclidean``, ``constant:<json matrix>``,
    ``hessian:<potential name>`` and ``round`` (the sphere metric in
    stereographic coordinates).
    """
    if item == "euclidean":
        return MetricField.euclidean(dim)
    if item == "round":
        return round_metric()
    if item.startswith("constant:"):
        return MetricField.constant(json.loads(item.split(":", 1)[1]))
    if item.startswith("hessian:"):
        wanted = item.split(":", 1)[1]
        if potential is None or potential.name != wanted:
            raise ValueError(f"metric {item!r} needs a potential named {wanted!r}")
        return hessian_metric(potential)
    raise ValueError(f"unknown metric {item!r}")


def build_field(item, dim):
    kind = item["kind"]
    if kind == "constant":
        value = np.array(item["value"], dtype=float)
        return lambda x: value
    if kind == "zero":
        return lambda x: np.zeros(dim)
    if kind == "linear":
        A = np.array(item["matrix"], dtype=float)
        return lambda x: A @ x
    if kind == "rotation":
        return lambda x: np.array([-x[1], x[0]])
    raise ValueError(f"unknown field kind {kind!r}")


def build_chart(name):
    return {"identity": None, "shear": shear_chart, "inversion": inversion_chart}[name]


def build(scenario):
    d = scenario.data
    dim = d["dim"]
    S = build_set(d["set"], dim)
    psi = build_potential(d.get("potential"))
    g = build_metric(d["metric"], dim, psi)
    flow = d["flow"]
    kind = flow["kind"]
    if kind == "raw-field":
        f = build_field(flow["field"], dim)
    else:
        if psi is None:
            raise ValueError(f"flow {kind!r} needs a potential")
        if kind == "newton":
            g = hessian_metric(psi)
        grad = grad_field(psi, g)
        f = lambda x: -grad(x)  # noqa: E731
    for x0 in scenario.initial_points:
        if not S.contains(x0):
            S.project(x0, g)
    chart = None
    if d.get("chart") and build_chart(d["chart"]) is not None:
        chart = build_chart(d["chart"])()
    return Problem(S, g, f, psi, chart, kind)


def _pts(values):
    return [np.array(v, dtype=float) for v in values]


def _matches(found, wanted, tol):
    if len(found) != len(wanted):
        return False
    return all(min(np.linalg.norm(f - w) for f in found) <= tol for w in wanted)


def _kkt_residual(problem, x):
    """Metric norm of the projected field, the distance of ``f`` to the normal cone."""
    G = problem.metric(x)
    v = project_field(problem.set, problem.metric, problem.field, x).primary
    return float(np.sqrt(v @ G @ v))


def check_assertion(scenario, problem, item, seed=0, trajectories=None):
    """Evaluate one named assertion; returns ``(passed, detail)``."""
    kind = item["kind"]
    cfg = scenario.config()
    S, g, f = problem.set, problem.metric, problem.field

    def traj(i):
        if trajectories is not None and i in trajectories:
            return trajectories[i]
        return integrate(S, g, f, scenario.initial_points[i], scenario.horizon, cfg)

    if kind == "final_state":
        tr = traj(item.get("index", 0))
        err = float(np.linalg.norm(tr.final_state - np.array(item["value"])))
        return err <= item["tol"], f"|x(T) - target| = {err:.3e} (tol {item['tol']:g})"
    if kind == "event_near":
        tr = traj(item.get("index", 0))
        times = [e.time for e in tr.events]
        ok = len(times) == item.get("count", len(times)) and any(
            abs(t - item["time"]) <= item["tol"] for t in times)
        return ok, f"event times {[round(t, 6) for t in times]}"
    if kind == "equilibrium":
        got = detect_equilibrium(S, g, f, item["point"], seed=seed).value
        return got == item["expect"], f"detected {got}"
    if kind == "projection":
        found = project_field(S, g, f, item["point"]).projected
        ok = _matches(found, _pts(item["expect"]), item.get("tol", 1e-9))
        return ok, f"branches {[p.tolist() for p in found]}"
    if kind == "cone_samples":
        cones = S.tangent_cone(np.array(item["point"], dtype=float))
        inside = all(any(c.contains(v) for c in cones) for v in _pts(item.get("inside", [])))
        outside = not any(any(c.contains(v) for c in cones) for v in _pts(item.get("outside", [])))
        return inside and outside, f"{len(cones)} cone branches"
    if kind == "hull_contains":
        hull = krasovskii_hull(S, g, f, item["point"], item["radius"], item.get("count", 256), seed)
        dists = [hull.distance(v) for v in _pts(item["vectors"])]
        return max(dists) <= item.get("tol", 1e-9), f"distances {[f'{d:.2e}' for d in dists]}"
    if kind == "equivalence":
        res = equivalence_residual(S, g, f, item["point"], item["radius"],
                                   item.get("count", 256), seed)
        ok = item.get("min", -np.inf) <= res <= item.get("max", np.inf)
        return ok, f"residual {res:.3e}"
    if kind == "prox_verdict":
        rep = prox_estimate(S, g, item["point"], item.get("radii", [1e-1, 1e-2, 1e-3]),
                            item.get("samples", 10_000), seed)
        return rep.verdict.value == item["expect"], (
            f"verdict {rep.verdict.value}, L {[f'{v:.3g}' for v in rep.L_estimates]}")
    if kind == "kkt":
        tr = traj(item.get("index", 0))
        res = _kkt_residual(problem, tr.final_state)
        return res <= item["tol"], f"KKT residual {res:.3e}"
    if kind == "descent":
        tr = traj(item.get("index", 0))
        log = lasalle_monitor(S, g, problem.potential, tr)
        ok = log.max_increase <= item.get("tol", 1e-8) and float(np.max(log.descent_gap)) <= 1e-6
        return ok, f"max increase {log.max_increase:.3e}, max descent gap {np.max(log.descent_gap):.3e}"
    if kind == "periodic":
        tr = traj(item.get("index", 0))
        err = float(np.linalg.norm(tr.final_state - tr.states[0]))
        return err <= item["tol"], f"return distance {err:.3e}"
    if kind == "invariance":
        chart = problem.chart
        horizon = item.get("horizon", scenario.horizon)
        x0 = item.get("point", scenario.data["initial_points"][item.get("index", 0)])
        rep = invariance_harness(chart, S, g, f, x0, horizon, cfg)
        bound = item.get("factor", 10.0) * cfg.dt
        return rep.max_divergence <= bound, f"divergence {rep.max_divergence:.3e} (bound {bound:.3e})"
    raise ValueError(f"unknown assertion kind {kind!r}")


def verify(scenario, seed=None):
    """Run every expected assertion; returns a list of ``(kind, passed, detail)``."""
    problem = build(scenario)
    seed = scenario.seed if seed is None else seed
    cache = {}
    cfg = scenario.config()
    needs = {s.get("index", 0) for s in scenario.expected
             if s["kind"] in ("final_state", "event_near", "kkt", "descent", "periodic")}
    for i in needs:
        cache[i] = integrate(problem.set, problem.metric, problem.field,
                             scenario.initial_points[i], scenario.horizon, cfg)
    out = []
    for item in scenario.expected:
        ok, detail = check_assertion(scenario, problem, item, seed, cache)
        out.append((item.get("label", item["kind"]), bool(ok), detail))
    return out


# Built-in scenarios.

_PENTAGON = [[0.0, 0.0], [2.0, 0.0], [2.5, 1.5], [1.0, 2.5], [-0.5, 1.2]]
SPHERE_CAP = {"base_radius": 1.3, "notch_depth": 0.15, "notch_width": 4.0, "notch_angle": 0.0}
SPHERE_NOTCH_RADIUS = SPHERE_CAP["base_radius"] * (1.0 - SPHERE_CAP["notch_depth"])


def _marble_run():
    p1 = sets.equilibrium_point(1).tolist()
    return {
        "name": "marble-run",
        "description": "Zigzag staircase accumulating at the origin under the upward field.",
        "dim": 2,
        "set": {"kind": "marble-run"},
        "metric": "euclidean",
        "flow": {"kind": "raw-field", "field": {"kind": "constant", "value": [0.0, 1.0]}},
        "initial_points": [p1, [0.0, 0.0]],
        "horizon": 1.0,
        "integrator": {"dt": 1e-3},
        "expected": [
            {"kind": "projection", "point": [0.0, 0.0], "expect": [[0.5, 0.5], [-0.5, 0.5]],
             "tol": 1e-9},
            {"kind": "cone_samples", "point": [0.0, 0.0],
             "inside": [[1.0, 0.0], [1.0, 1.0], [-1.0, -1.0], [-2.0, 1.0], [3.0, -2.9]],
             "outside": [[0.0, 1.0], [0.5, 1.0], [-1.0, 1.5], [0.1, -0.2]]},
            {"kind": "final_state", "index": 0, "value": p1, "tol": 1e-12},
            {"kind": "hull_contains", "point": [0.0, 0.0], "radius": 0.5, "count": 256,
             "vectors": [[0.0, 0.0], [0.5, 0.5], [-0.5, 0.5]], "tol": 1e-9},
            {"kind": "equivalence", "point": [0.0, 0.0], "radius": 0.5, "min": 0.4},
        ],
    }


def x_alpha_scenario(alpha):
    alpha = float(alpha)
    regular = alpha <= 0.5
    return {
        "name": f"x-alpha:{alpha:g}",
        "description": "Cusp set x1 <= |x2|^(1/alpha) pushed by the field (1, 0).",
        "dim": 2,
        "set": {"kind": "x-alpha", "alpha": alpha},
        "metric": "euclidean",
        "flow": {"kind": "raw-field", "field": {"kind": "constant", "value": [1.0, 0.0]}},
        "initial_points": [[0.0, 0.0]],
        "horizon": 1.0,
        "integrator": {"dt": 1e-3},
        "expected": [
            {"kind": "projection", "point": [0.0, 0.0], "expect": [[0.0, 0.0]]},
            {"kind": "equilibrium", "point": [0.0, 0.0],
             "label": "strong-equilibrium" if regular else "weak-equilibrium",
             "expect": "strong-candidate" if regular else "weak-candidate"},
            {"kind": "prox_verdict", "point": [0.0, 0.0], "radii": [1e-1, 1e-2, 1e-3],
             "samples": 10_000,
             "expect": "prox_regular_evidence" if regular else "divergence_evidence"},
        ],
    }


def _halfplane_slide():
    return {
        "name": "halfplane-slide",
        "description": "Upper half-plane, field (1,-1): falls to the boundary at t=1 then slides.",
        "dim": 2,
        "set": {"kind": "halfspaces", "A": [[0.0, -1.0]], "b": [0.0]},
        "metric": "euclidean",
        "flow": {"kind": "raw-field", "field": {"kind": "constant", "value": [1.0, -1.0]}},
        "initial_points": [[0.0, 1.0]],
        "horizon": 2.0,
        "integrator": {"dt": 1e-3},
        "chart": "shear",
        "expected": [
            {"kind": "final_state", "value": [2.0, 0.0], "tol": 5e-3},
            {"kind": "event_near", "time": 1.0, "tol": 2e-3, "count": 1},
            {"kind": "equivalence", "point": [0.5, 0.0], "radius": 0.1, "max": 1e-6},
            {"kind": "invariance", "factor": 10.0},
        ],
    }


def _polyhedron_gradient():
    return {
        "name": "polyhedron-gradient",
        "description": "Projected gradient flow of a quadratic on a convex pentagon.",
        "dim": 2,
        "set": {"kind": "polygon", "vertices": _PENTAGON},
        "metric": "constant:[[1.5, 0.3], [0.3, 1.0]]",
        "potential": {"kind": "quadratic", "name": "pentagon-bowl",
                      "Q": [[2.0, 0.6], [0.6, 1.0]], "center": [2.2, 3.2]},
        "flow": {"kind": "gradient"},
        "initial_points": [[0.2, 0.2], [1.8, 0.2], [-0.3, 1.1]],
        "horizon": 30.0,
        "integrator": {"dt": 1e-2},
        "expected": [
            {"kind": "descent", "index": 0},
            {"kind": "kkt", "index": 0, "tol": 1e-5},
            {"kind": "kkt", "index": 2, "tol": 1e-5},
            {"kind": "final_state", "index": 1, "value": [2.5 - 1.5 * 89 / 370, 1.5 + 89 / 370], "tol": 1e-6},
        ],
    }


def _box_newton():
    return {
        "name": "box-newton",
        "description": "Constrained Newton flow of a quadratic on the unit box.",
        "dim": 2,
        "set": {"kind": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]},
        "metric": "hessian:box-bowl",
        "potential": {"kind": "quadratic", "name": "box-bowl",
                      "Q": [[3.0, 1.0], [1.0, 2.0]], "center": [2.0, 0.5]},
        "flow": {"kind": "newton"},
        "initial_points": [[0.2, 0.5], [0.9, 0.9]],
        "horizon": 30.0,
        "integrator": {"dt": 1e-2},
        "expected": [
            {"kind": "descent", "index": 0},
            {"kind": "kkt", "index": 0, "tol": 1e-5},
        ],
    }


def _sphere_cap():
    return {
        "name": "sphere-cap",
        "description": ("Notched cap of the unit sphere in north stereographic coordinates "
                        "under rotation about the polar axis; a qualitative reconstruction."),
        "dim": 2,
        "set": dict(kind="sphere-cap", **SPHERE_CAP),
        "metric": "round",
        "flow": {"kind": "raw-field", "field": {"kind": "rotation"}},
        "initial_points": [[SPHERE_NOTCH_RADIUS, 0.0],
                           [1.2 * math.cos(-0.8), 1.2 * math.sin(-0.8)]],
        "horizon": 2.0 * math.pi,
        "integrator": {"dt": 1e-3},
        "chart": "inversion",
        "expected": [
            {"kind": "periodic", "index": 0, "tol": 1e-2},
            {"kind": "invariance", "index": 1, "horizon": math.pi, "factor": 10.0},
        ],
    }


def builtin_scenarios():
    return [
        Scenario(_polyhedron_gradient()),
        Scenario(_marble_run()),
        Scenario(x_alpha_scenario(0.3)),
        Scenario(x_alpha_scenario(0.5)),
        Scenario(x_alpha_scenario(0.6)),
        Scenario(_sphere_cap()),
        Scenario(_halfplane_slide()),
        Scenario(_box_newton()),
    ]


def get_scenario(name):
    """Built-in scenario by name; ``x-alpha:<alpha>`` accepts any alpha in (0, 1)."""
    if name.startswith("x-alpha:"):
        return Scenario(x_alpha_scenario(float(name.split(":", 1)[1])))
    for sc in builtin_scenarios():
        if sc.name == name:
            return sc
    raise KeyError(f"unknown scenario {name!r}")


def load_scenario(name_or_path):
    """Built-in name or path to a JSON file."""
    try:
        return get_scenario(name_or_path)
    except KeyError:
        pass
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise FileNotFoundError(
            f"unknown scenario {name_or_path!r}: not a built-in name or an existing file"
        ) from None
    return Scenario.from_json(text)
