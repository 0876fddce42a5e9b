"""Execute a :class:`~cfpenrose.scenario.Scenario` and assemble its report."""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels, inequalities as iq
from .conformal import adm_mass, weighted_scalar_integral
from .errors import (CfPenroseError, ConfigInvalid, DomainError, HypothesisViolated)
from .geometry import boundary_quadrature, coarse_resolution, default_resolution, functionals
from .mass import MassReport, zas_mass
from .reference import exact
from .serialization import csv_text
from .solver import BoundaryCondition, SolverSpec, capacity, solve, solve_mixed

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_VIOLATED, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 64, 70
# relative error below which a refinement step counts as converged to round-off
ROUNDOFF_FLOOR = 1e-13
REPORT_COLUMNS = ("lhs", "rhs", "margin", "eps", "verdict")
ZAS_RECIPES = ("dirichlet-zas",)


@dataclass
class RunResult:
    scenario: object
    report: dict
    row: list
    exit_code: int


def exit_code(verdicts):
    if "violated" in verdicts:
        return EXIT_VIOLATED
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _is_zas(sc):
    return sc.recipe in ZAS_RECIPES or (sc.recipe == "schwarzschild" and sc.m < 0)


def _is_minimal(sc):
    return sc.recipe in ("robin-minimal",) or (sc.recipe == "schwarzschild" and sc.m > 0)


def build_factor(sc):
    """Solve (or look up) the conformal factor; returns ``(factor, harmonic or None)``."""
    spec = sc.spec
    if sc.recipe in ("pole-family", "bump"):
        return sc.factor, None
    if sc.recipe == "mixed":
        sol = solve_mixed(sc.domain, sc.domain_minus, spec, background=sc.background)
        return sol.factor, sol.harmonic
    k = sc.domain.k
    bc = BoundaryCondition.dirichlet(k) if _is_zas(sc) else BoundaryCondition.robin(k)
    hf = solve(sc.domain, bc=bc, spec=spec, background=sc.background)
    return hf.factor, hf


def _oracle(sc, f, hf):
    """Closed-form comparison for the Schwarzschild recipe."""
    n, m = sc.n, sc.m
    center = sc.domain.components[0].center
    r0 = sc.domain.components[0].radial.r
    coef = float(np.sum(hf.coeffs))
    dirs = np.eye(n)
    pts = np.vstack([center + r * s * dirs for r in (r0, 2 * r0, 4 * r0) for s in (1, -1)])
    u_exact = 1.0 + 0.5 * m * np.linalg.norm(pts - center, axis=1) ** (2 - n)
    return {"m": m, "radius": r0, "coefficient_exact": 0.5 * m, "coefficient": coef,
            "coefficient_error": abs(coef - 0.5 * m),
            "max_field_error": float(np.max(np.abs(f.value(pts) - u_exact)))}


def _forced(theorem, sc, exc):
    rep = iq.InequalityReport(theorem, math.nan, math.nan, math.nan,
                              iq.instance_hash(theorem, sc.source), [],
                              {"hypothesis": exc.hypothesis, "hypothesis_detail": exc.detail},
                              "inconclusive")
    return rep


def _run_theorem(thm, sc, f, hf, N):
    """Reports for one theorem (a list) and the PFS trace when one was computed."""
    dom = sc.domain
    if thm == "minkowski":
        return iq.verify_minkowski(dom, N), None
    if thm == "isoperimetric":
        return [iq.verify_isoperimetric(dom, N)], None
    if thm == "pfs":
        pot = hf if (hf is not None and _is_zas(sc) and hf.background is None) else None
        rep, tr = iq.verify_pfs(dom, pot, N, replace(sc.spec, resolution=N))
        return [rep], tr
    if thm == "thm_main":
        return [iq.verify_thm_main(dom, f, N)], None
    if thm in ("cor_area", "cor_vol"):
        area, vol = iq.verify_corollaries(dom, f, N)
        return [area if thm == "cor_area" else vol], None
    if thm == "thm_general2_delta":
        return [iq.verify_thm_general2_delta(dom, f, N)], None
    if thm == "lemma_zas":
        return [iq.verify_lemma_zas(dom, f, N)], None
    if thm == "thm_zas":
        return [iq.verify_thm_zas(dom, f, N)], None
    if thm == "mixed":
        return [iq.verify_mixed(dom, sc.domain_minus, f, N)], None
    raise ConfigInvalid("/suite", f"unknown theorem {thm!r}")


def _mass_report(sc, f, hf, N, caps):
    dom = sc.domain
    mesh = boundary_quadrature(dom, N)
    func = functionals(dom, mesh)
    mr = MassReport(sc.n, volume_term=func.volume_term, iso_ratio=func.iso_ratio)
    if f is None:
        return mr
    mass = adm_mass(f)
    mr.m_adm = mass.value
    mr.errors["m_adm"] = mass.error
    if _is_minimal(sc) or sc.recipe == "mixed" or sc.recipe in ("pole-family", "bump"):
        mr.black_hole_terms = func.area_terms.tolist()
    zas_side = sc.domain_minus if sc.recipe == "mixed" else (dom if _is_zas(sc) else None)
    if zas_side is not None:
        zmesh = boundary_quadrature(zas_side, N)
        mr.m_zas = zas_mass(f, zmesh)
        cm = boundary_quadrature(zas_side, coarse_resolution(N))
        mr.errors["m_zas"] = abs(mr.m_zas - zas_mass(f, cm))
    if _is_zas(sc) and hf is not None and hf.background is None:
        cres = capacity(dom, mesh, sc.spec, hf)
        mr.capacity, mr.errors["capacity"] = cres.value, cres.error
    elif caps:
        mr.capacity, mr.errors["capacity"] = caps[0]
    if f.bumps:
        for w, key in ((-1, "i_minus1"), (-2, "i_minus2")):
            est = weighted_scalar_integral(f, w, dom if sc.domain_minus is None
                                           else dom.union(sc.domain_minus))
            setattr(mr, key, est.value)
            mr.errors[key] = est.error
    else:
        mr.i_minus1 = mr.i_minus2 = 0.0
    return mr


# --- convergence appendix -----------------------------------------------------

def _quantity(domain, name, N, spec, mesh):
    if name == "capacity":
        return capacity(domain, mesh, replace(spec, resolution=N), certify=False).value
    func = functionals(domain, mesh)
    return {"area": func.area, "volume": func.volume,
            "minkowski": float(np.sum(func.minkowski))}[name]


def observed_orders(resolutions, errors, scale=1.0):
    """Orders ``log(e_i/e_{i+1}) / log(N_{i+1}/N_i)``; None where ``e_{i+1}`` is at round-off."""
    floor = ROUNDOFF_FLOOR * max(abs(scale), 1e-300)
    out = []
    for i in range(len(errors) - 1):
        e0, e1 = abs(errors[i]), abs(errors[i + 1])
        if e1 <= floor:
            out.append(None)
        elif e0 <= floor:
            out.append(-math.inf if e1 > e0 else None)
        else:
            out.append(math.log(e0 / e1) / math.log(resolutions[i + 1] / resolutions[i]))
    return out


def refinement_study(domain, quantities, resolutions, spec=None):
    """Values, errors and observed orders of geometric quantities under refinement.

    Errors are taken against a closed form when one is known, otherwise
    against the finest resolution (whose own error is then not reported).
    """
    spec = spec or SolverSpec()
    out = {}
    for q in quantities:
        vals = []
        for N in resolutions:
            mesh = boundary_quadrature(domain, N, strict=False)
            vals.append(_quantity(domain, q, N, spec, mesh))
        ref = exact(domain, q)
        if ref is None:
            ref_kind, ref, res, errs = "finest", vals[-1], list(resolutions[:-1]), [v - vals[-1] for v in vals[:-1]]
        else:
            ref_kind, res, errs = "closed_form", list(resolutions), [v - ref for v in vals]
        orders = observed_orders(res, errs, ref)
        finite = [o for o in orders if o is not None]
        out[q] = {"resolutions": list(resolutions), "values": vals, "reference": ref,
                  "reference_kind": ref_kind, "errors": errs, "orders": orders,
                  "min_order": min(finite) if finite else None,
                  "converged_to_roundoff": bool(orders and orders[-1] is None)}
    return out


def two_resolution_deltas(sc, f, hf, N):
    dom = sc.domain
    Nc = coarse_resolution(N)
    fine, coarse = boundary_quadrature(dom, N), boundary_quadrature(dom, Nc)
    ff, fc = functionals(dom, fine), functionals(dom, coarse)
    rows = {"area": (ff.area, fc.area), "volume": (ff.volume, fc.volume),
            "minkowski": (float(np.sum(ff.minkowski)), float(np.sum(fc.minkowski))),
            "area_term": (ff.area_term, fc.area_term), "volume_term": (ff.volume_term, fc.volume_term)}
    if f is not None:
        dn_f = float(np.dot(fine.weights, f.normal_derivative(fine)))
        dn_c = float(np.dot(coarse.weights, f.normal_derivative(coarse)))
        rows["boundary_flux"] = (dn_f, dn_c)
        if _is_zas(sc):
            rows["m_zas"] = (zas_mass(f, fine), zas_mass(f, coarse))
    return {"resolutions": [int(N), int(Nc)],
            "quantities": {k: {"fine": a, "coarse": b, "delta": abs(a - b)} for k, (a, b) in rows.items()}}


# --- the run ---------------------------------------------------------------------

def csv_header(suite):
    cols = ["scenario", "n", "recipe", "resolution", "seed", "status", "verdict"]
    cols += MassReport.csv_header()[1:]
    for thm in suite:
        cols += [f"{thm}_{c}" for c in REPORT_COLUMNS]
    return cols


def _worst(reports):
    rank = {"violated": 0, "inconclusive": 1, "holds": 2}
    return min(reports, key=lambda r: (rank[r.verdict], r.margin if not math.isnan(r.margin) else -math.inf))


def csv_row(sc, status, verdict, mr, by_theorem):
    N = sc.spec.resolution or default_resolution(sc.n)
    row = [sc.name, sc.n, sc.recipe, N, sc.seed, status, verdict]
    row += (mr.csv_row()[1:] if mr is not None else [None] * (len(MassReport.csv_header()) - 1))
    for thm in sc.suite:
        reps = by_theorem.get(thm)
        if not reps:
            row += [None] * len(REPORT_COLUMNS)
            continue
        r = _worst(reps)
        row += [r.lhs, r.rhs, r.margin, r.eps, r.verdict]
    return row


def failure_row(sc, status):
    return csv_row(sc, status, None, None, {})


def run(sc):
    """Run every theorem of the suite; HypothesisViolated becomes a forced-inconclusive report."""
    N = sc.spec.resolution or default_resolution(sc.n)
    f, hf = build_factor(sc)
    by_theorem, reports, trace, caps = {}, [], None, []
    for thm in sc.suite:
        try:
            reps, tr = _run_theorem(thm, sc, f, hf, N)
        except HypothesisViolated as exc:
            reps, tr = [_forced(thm, sc, exc)], None
        if tr is not None:
            trace = tr
        if thm == "pfs" and not math.isnan(reps[0].lhs):
            caps.append((reps[0].lhs, reps[0].details["capacity_error"]))
        by_theorem[thm] = reps
        reports += reps
    mr = _mass_report(sc, f, hf, N, caps)
    verdicts = [r.verdict for r in reports]
    code = exit_code(verdicts)
    overall = {EXIT_OK: "holds", EXIT_INCONCLUSIVE: "inconclusive", EXIT_VIOLATED: "violated"}[code]
    conv = {"two_resolution": two_resolution_deltas(sc, f, hf, N)}
    if sc.convergence.get("resolutions"):
        qs = sc.convergence.get("quantities", ["area", "minkowski", "volume"])
        conv["refinement"] = refinement_study(sc.domain, qs, sc.convergence["resolutions"], sc.spec)
    report = {
        "scenario": sc.name,
        "description": sc.description,
        "n": sc.n,
        "recipe": sc.recipe,
        "suite": list(sc.suite),
        "seed": sc.seed,
        "resolution": int(N),
        "backend": _kernels.backend_name(),
        "input": sc.source,
        "solver": None if hf is None else dict(hf.certificate, run_id=hf.run_id),
        "oracle": _oracle(sc, f, hf) if sc.recipe == "schwarzschild" else None,
        "mass": mr.to_json(),
        "reports": [r.to_json() for r in reports],
        "trace": None if trace is None else trace.to_json(),
        "convergence": conv,
        "verdict": overall,
        "exit_code": code,
    }
    return RunResult(sc, report, csv_row(sc, "ok", overall, mr, by_theorem), code)


def run_csv(result):
    return csv_text(csv_header(result.scenario.suite), [result.row])


def classify(exc):
    """Exit code for an exception raised while running a scenario."""
    if isinstance(exc, (ConfigInvalid, DomainError)):
        return EXIT_CONFIG
    if isinstance(exc, CfPenroseError):
        return EXIT_SOLVER
    raise exc
