"""Command-line front end.

    cfpenrose run <scenario.json | bundled-name>
    cfpenrose sweep <template.json> --grid <grid.json>
    cfpenrose capacity <domain.json>
    cfpenrose list-scenarios

Exit codes: 0 every verdict holds, 2 some verdict inconclusive, 3 some
verdict violated, 64 invalid configuration, 70 solver failure.
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import runner, scenario as scn
from .errors import CfPenroseError, ConfigInvalid
from .geometry import boundary_quadrature, default_resolution
from .runner import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER
from .serialization import csv_cell, csv_text, dumps
from .solver import SolverSpec, capacity

log = logging.getLogger("cfpenrose")

# worst first; a sweep exits with the most severe code among its points
_SEVERITY = (EXIT_CONFIG, EXIT_SOLVER, runner.EXIT_VIOLATED, runner.EXIT_INCONCLUSIVE, EXIT_OK)


def _severest(codes):
    codes = set(codes)
    for c in _SEVERITY:
        if c in codes:
            return c
    return EXIT_OK


def _load_scenario(ref):
    if os.path.exists(ref):
        return scn.load(ref)
    if ref in scn.bundled_names():
        return scn.load_bundled(ref)
    raise ConfigInvalid("", f"{ref!r} is neither a file nor a bundled scenario")


def _fail(exc):
    code = runner.classify(exc)
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_run(args):
    try:
        sc = _load_scenario(args.scenario).with_overrides(args.resolution, args.seed)
        result = runner.run(sc)
    except CfPenroseError as exc:
        return _fail(exc)
    os.makedirs(args.out_dir, exist_ok=True)
    base = os.path.join(args.out_dir, sc.name)
    if args.format in ("json", "both"):
        _write(base + ".report.json", dumps(result.report))
        _write(base + ".convergence.json", dumps(result.report["convergence"]))
    if args.format in ("csv", "both"):
        _write(base + ".csv", runner.run_csv(result))
    for r in result.report["reports"]:
        print(f"{r['theorem']:<20} {r['verdict']:<13} margin {csv_cell(r['margin']):>16}"
              f"  eps {csv_cell(r['eps'])}")
    print(f"{sc.name}: {result.report['verdict']} (exit {result.exit_code})")
    return result.exit_code


def _sweep_point(item):
    """Run one grid point; returns ``(row, report or None, exit code)``."""
    index, params, template, overrides = item
    try:
        data = scn.substitute(template, params)
        sc = scn.parse(data).with_overrides(*overrides)
    except CfPenroseError as exc:
        log.warning("point %d: %s", index, exc)
        return None, None, runner.classify(exc)
    try:
        result = runner.run(sc)
    except CfPenroseError as exc:
        code = runner.classify(exc)
        status = "config_error" if code == EXIT_CONFIG else "solver_failure"
        log.warning("point %d (%s): %s", index, sc.name, exc)
        return runner.failure_row(sc, status), None, code
    return result.row, result.report, result.exit_code


def cmd_sweep(args):
    try:
        with open(args.template) as fh:
            template = json.load(fh)
        with open(args.grid) as fh:
            grid = json.load(fh)
    except OSError as exc:
        return _fail(ConfigInvalid("", f"cannot read input: {exc}"))
    except json.JSONDecodeError as exc:
        return _fail(ConfigInvalid("", f"not valid JSON: {exc}"))
    try:
        if not isinstance(template, dict):
            raise ConfigInvalid("", "a template must be a JSON object")
        suite = template.get("suite")
        if not isinstance(suite, list) or scn.placeholders(suite):
            raise ConfigInvalid("/suite", "the template suite must be a literal list of theorems")
        params = scn.placeholders(template)
        points = scn.grid_points(grid)
        for i, p in enumerate(points):
            missing = [k for k in params if k not in p]
            if missing:
                raise ConfigInvalid(f"/{i}", f"grid point lacks {missing[0]!r}")
    except ConfigInvalid as exc:
        return _fail(exc)
    header = ["point"] + params + runner.csv_header(suite)
    items = [(i, p, template, (args.resolution, args.seed)) for i, p in enumerate(points)]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_point, items))
    else:
        results = [_sweep_point(it) for it in items]
    rows, reports, codes = [], [], []
    for (i, p, _, _), (row, rep, code) in zip(items, results):
        codes.append(code)
        if row is None:
            row = [None] * (len(header) - 1 - len(params))
            row[5] = "config_error"
        rows.append([i] + [p[k] for k in params] + row)
        reports.append(rep)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.join(args.out_dir, os.path.splitext(os.path.basename(args.template))[0])
    if args.format in ("csv", "both"):
        _write(stem + ".sweep.csv", csv_text(header, rows))
    if args.format in ("json", "both"):
        _write(stem + ".sweep.json", dumps({"template": template, "points": points,
                                            "reports": reports}))
    code = _severest(codes)
    print(f"{len(points)} point(s); exit {code}")
    return code


def cmd_capacity(args):
    try:
        try:
            with open(args.domain) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid("", f"cannot read domain: {exc}") from None
        path = []
        if isinstance(data, dict) and "components" not in data and "domain" in data:
            path = ["domain"]
            n = data.get("n")
            data = dict(data["domain"], n=data["domain"].get("n", n))
        if not isinstance(data, dict) or "n" not in data:
            raise ConfigInvalid(scn.pointer(path + ["n"]), "the domain needs a dimension n")
        dom = scn._domain(data, data["n"], path)
        N = args.resolution or default_resolution(dom.n)
        spec = SolverSpec(resolution=N, seed=args.seed or 0)
        res = capacity(dom, boundary_quadrature(dom, N), spec)
    except CfPenroseError as exc:
        return _fail(exc)
    out = {"domain": dom.to_json(), "resolution": N, "seed": spec.seed, "capacity": res.value,
           "error": res.error, "coefficient": res.coefficient, "flux": res.flux,
           "residual": res.potential.certificate["residual"]}
    text = dumps(out)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        stem = os.path.splitext(os.path.basename(args.domain))[0]
        _write(os.path.join(args.out_dir, stem + ".capacity.json"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_list(args):
    for name in scn.bundled_names():
        sc = scn.load_bundled(name)
        print(f"{name:<28} n={sc.n}  {sc.recipe:<14} {','.join(sc.suite)}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="cfpenrose", description="Penrose-type inequalities for "
                                "conformally flat manifolds: scenario runner.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--resolution", type=int, default=None, help="override the grid resolution")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out-dir", default=".", help="directory for output files")
        sp.add_argument("--format", choices=("json", "csv", "both"), default="both")

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("scenario", help="scenario file or bundled scenario name")
    common(r)
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run a template over a parameter grid")
    s.add_argument("template")
    s.add_argument("--grid", required=True)
    s.add_argument("--jobs", type=int, default=1, help="grid points run in parallel")
    common(s)
    s.set_defaults(func=cmd_sweep)
    c = sub.add_parser("capacity", help="capacity of a domain")
    c.add_argument("domain")
    c.add_argument("--resolution", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out-dir", default=None)
    c.set_defaults(func=cmd_capacity)
    ls = sub.add_parser("list-scenarios", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors are configuration errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "resolution", None) is not None and args.resolution < 4:
        return _fail(ConfigInvalid("/solver/resolution", "resolution must be at least 4"))
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
