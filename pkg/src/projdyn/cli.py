"""Command-line interface (``pds``).

Exit codes: 0 success, 1 failed assertion, 2 usage or input error,
3 numerical failure. Failures print one line on stderr.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import os
from pathlib import Path
import sys

import jsonschema
import numpy as np

from .analysis import equivalence_residual, one_sided_lipschitz, prox_estimate
from .dynamics import Termination, integrate
from .errors import InfeasibleError, ProjDynError
from .projection import project_field
from .scenarios import build, builtin_scenarios, load_scenario, verify

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _coords(text):
    try:
        return np.array([float(a) for a in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _floats(text):
    return [float(a) for a in _coords(text)]


def resolve_seed(explicit, scenario=None):
    """Explicit flag, then ``PDS_SEED``, then the scenario seed (default 0)."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get("PDS_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"PDS_SEED must be an integer, got {env!r}")
    return scenario.seed if scenario is not None else 0


def _dump(obj, out):
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_path(base, index, total):
    if total == 1:
        return Path(base)
    p = Path(base)
    return p.with_name(f"{p.stem}_{index}{p.suffix}")


def _check_dim(point, scenario):
    if point.shape != (scenario.dim,):
        raise UsageError(f"--point needs {scenario.dim} coordinates, got {point.size}")


def cmd_scenario(args, out):
    if args.action == "list":
        for sc in builtin_scenarios():
            out.write(f"{sc.name}\t{sc.data.get('description', '')}\n")
    else:
        if not args.name:
            raise UsageError("scenario show needs a name")
        out.write(load_scenario(args.name).to_json() + "\n")
    return EXIT_OK


def cmd_simulate(args, out):
    sc = load_scenario(args.scenario)
    seed = resolve_seed(args.seed, sc)
    problem = build(sc)
    cfg = sc.config(dt=args.dt, scheme=args.scheme)
    horizon = sc.horizon if args.horizon is None else args.horizon
    if horizon <= 0:
        raise UsageError("--horizon must be positive")
    points = sc.initial_points

    def run(x0):
        return integrate(problem.set, problem.metric, problem.field, x0, horizon, cfg)

    with ThreadPoolExecutor(max_workers=min(len(points), os.cpu_count() or 1)) as pool:
        trajectories = list(pool.map(run, points))
    for i, tr in enumerate(trajectories):
        text = tr.to_csv(seed=seed, scenario=sc.name)
        if args.out:
            _out_path(args.out, i, len(points)).write_text(text, encoding="utf-8")
        else:
            out.write(text)
    failed = [(i, tr) for i, tr in enumerate(trajectories)
              if tr.termination in (Termination.RESTORATION_FAILURE, Termination.STEP_FLOOR)]
    if failed:
        i, tr = failed[0]
        sys.stderr.write(f"pds: trajectory {i} stopped early ({tr.termination.value}): "
                         f"{tr.message}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_project(args, out):
    sc = load_scenario(args.scenario)
    _check_dim(args.point, sc)
    problem = build(sc)
    f_x = None
    if args.field_at is not None:
        if args.field_at.shape != (sc.dim,):
            raise UsageError(f"--field-at needs {sc.dim} coordinates")
        f_x = args.field_at
    res = project_field(problem.set, problem.metric, problem.field, args.point, f_x=f_x)
    report = res.to_json()
    report["point"] = args.point.tolist()
    report["field"] = res.field_value.tolist()
    _dump(report, out)
    return EXIT_OK


def cmd_analyze(args, out):
    sc = load_scenario(args.scenario)
    _check_dim(args.point, sc)
    seed = resolve_seed(args.seed, sc)
    problem = build(sc)
    S, g, f = problem.set, problem.metric, problem.field
    if args.kind == "prox":
        radii = args.radii or [1e-1, 1e-2, 1e-3]
        samples = args.samples or 10_000
        report = prox_estimate(S, g, args.point, radii, samples, seed).to_json()
    elif args.kind == "lipschitz":
        radius = (args.radii or [0.1])[0]
        samples = args.samples or 512
        L = one_sided_lipschitz(S, g, f, args.point, radius, samples, seed)
        report = {"point": args.point.tolist(), "radius": radius, "samples": samples,
                  "one_sided_lipschitz": L}
    else:
        radius = (args.radii or [1e-2])[0]
        samples = args.samples or 256
        r = equivalence_residual(S, g, f, args.point, radius, samples, seed)
        report = {"point": args.point.tolist(), "radius": radius, "samples": samples,
                  "equivalence_residual": r}
    report["seed"] = seed
    _dump(report, out)
    return EXIT_OK


def cmd_verify(args, out):
    sc = load_scenario(args.scenario)
    seed = resolve_seed(args.seed, sc)
    results = verify(sc, seed=seed)
    for label, ok, detail in results:
        out.write(f"{'PASS' if ok else 'FAIL'} {sc.name} {label}: {detail}\n")
    failed = [label for label, ok, _ in results if not ok]
    if failed:
        sys.stderr.write(f"pds: {len(failed)} assertion(s) failed in {sc.name}: "
                         f"{', '.join(failed)}\n")
        return EXIT_ASSERTION
    return EXIT_OK


def make_parser():
    p = _Parser(prog="pds", description="Projected dynamical systems toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("scenario", help="list or show built-in scenarios")
    sp.add_argument("action", choices=["list", "show"])
    sp.add_argument("name", nargs="?")
    sp.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("simulate", help="integrate a scenario and write CSV")
    sp.add_argument("--scenario", required=True, help="built-in name or JSON path")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--scheme", choices=["tangent_euler", "projected_euler"])
    sp.add_argument("--out", help="CSV path; several initial points get an index suffix")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("project", help="projected field at a point (JSON)")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--point", type=_coords, required=True)
    sp.add_argument("--field-at", type=_coords, dest="field_at",
                    help="use this field value instead of evaluating the scenario field")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("analyze", help="regularity diagnostics (JSON)")
    sp.add_argument("kind", choices=["prox", "lipschitz", "equivalence"])
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--point", type=_coords, required=True)
    sp.add_argument("--radii", type=_floats)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("verify", help="check a scenario's expected assertions")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_verify)
    return p


def run_cli(argv=None, out=None):
    """Run the CLI and return its exit code."""
    out = out or sys.stdout
    try:
        args = make_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"pds: usage error: {exc}\n")
        return EXIT_USAGE
    except KeyError as exc:
        sys.stderr.write(f"pds: usage error: {exc.args[0]}\n")
        return EXIT_USAGE
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"pds: usage error: {exc}\n")
        return EXIT_USAGE
    except jsonschema.ValidationError as exc:
        sys.stderr.write(f"pds: invalid scenario: {exc.message}\n")
        return EXIT_USAGE
    except (InfeasibleError, ValueError) as exc:
        sys.stderr.write(f"pds: input error: {exc}\n")
        return EXIT_USAGE
    except ProjDynError as exc:
        sys.stderr.write(f"pds: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
