"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``criterion k PASS|FAIL`` line (also collected into the
terminal summary) and then asserts.
"""

import math
import os

import pytest

from cfpenrose import (BoundaryCondition, SolverSpec, capacity, make_ball, make_spheroid, solve,
                       verify_lemma_zas, verify_minkowski, verify_pfs, verify_thm_main,
                       verify_thm_zas)
from cfpenrose import runner, scenario as scn
from cfpenrose.cli import main
from cfpenrose.corpus import corpus

from conftest import ACCEPTANCE_LINES
from oracles import spheroid_capacity

DIMS = [3, 4, 5, 6, 7]
CHAIN_LINKS = ("coarea_schwarz", "isoperimetric_levels", "symmetrized_energy",
               "volume_at_boundary", "flux_constant")


def _conclude(k, title, checks):
    """``checks`` is a list of ``(label, ok, detail)``; prints the verdict line and asserts."""
    bad = [c for c in checks if not c[1]]
    status = "PASS" if checks and not bad else "FAIL"
    line = f"criterion {k} {status}: {title} ({len(checks) - len(bad)}/{len(checks)} checks)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    for label, _, detail in bad:
        print(f"    failed: {label}: {detail}")
    assert not bad, "; ".join(f"{c[0]}: {c[2]}" for c in bad)


def _within(label, value, target, tol):
    err = abs(value - target)
    return label, bool(err <= tol), f"|{value!r} - {target!r}| = {err:.3g} (tol {tol:g})"


# --- 1 -------------------------------------------------------------------------------

def test_criterion_1_schwarzschild_chain():
    checks = []
    for n in DIMS:
        for m in (0.5, 1.0, 2.0):
            sc = scn.parse({"name": f"s{n}", "n": n, "factor": {"recipe": "schwarzschild", "m": m},
                            "solver": {"residual_threshold": 1e-10}, "suite": ["thm_main"]})
            rep = runner.run(sc).report
            tag = f"n={n} m={m}"
            checks.append(_within(f"{tag} coefficient", rep["oracle"]["coefficient"], m / 2, 1e-10))
            checks.append(_within(f"{tag} m_ADM", rep["mass"]["m_adm"], m, 1e-8))
            thm = rep["reports"][0]
            checks.append(_within(f"{tag} thm_main margin", thm["margin"], m / 2, 1e-6))
            checks.append((f"{tag} thm_main verdict", thm["verdict"] == "holds", thm["verdict"]))
    _conclude(1, "Schwarzschild chain: coefficients, m_ADM and thm_main margin m/2", checks)


# --- 2 -------------------------------------------------------------------------------

def test_criterion_2_capacity_oracles():
    checks = []
    for n in DIMS:
        res = capacity(make_ball(n))
        checks.append(_within(f"unit ball n={n} capacity", res.value, 1.0, 1e-10))
        checks.append(_within(f"unit ball n={n} flux vs coefficient", res.flux, res.coefficient, 1e-8))
    sph = make_spheroid(2.0, 1.0)
    res = capacity(sph, spec=SolverSpec(resolution=32, residual_threshold=1e-6))
    checks.append(_within("spheroid (2,1,1) capacity", res.value, spheroid_capacity(2.0, 1.0), 1e-6))
    fine = capacity(sph, spec=SolverSpec(resolution=40, residual_threshold=1e-6))
    checks.append(_within("spheroid (2,1,1) flux vs coefficient at N=40", fine.flux,
                          fine.coefficient, 1e-8))
    _conclude(2, "capacity oracles and two-path agreement", checks)


# --- 3 -------------------------------------------------------------------------------

def test_criterion_3_zas_masses():
    checks = []
    for n in DIMS:
        for m in (-0.5, -1.0, -2.0):
            sc = scn.parse({"name": f"z{n}", "n": n, "factor": {"recipe": "schwarzschild", "m": m},
                            "solver": {"residual_threshold": 1e-10},
                            "suite": ["lemma_zas", "thm_zas"]})
            rep = runner.run(sc).report
            tag = f"n={n} m={m}"
            mass = rep["mass"]
            checks.append(_within(f"{tag} m_ZAS", mass["m_zas"], m, 1e-6))
            checks.append(_within(f"{tag} m_ADM = -2 cap", mass["m_adm"], -2 * mass["capacity"], 1e-8))
            thm = next(r for r in rep["reports"] if r["theorem"] == "thm_zas")
            checks.append(_within(f"{tag} thm_zas ratio", thm["rhs"] / thm["lhs"], 1.25, 1e-6))
            checks.append((f"{tag} verdicts", rep["verdict"] == "holds", rep["verdict"]))
    _conclude(3, "ZAS masses, m_ADM = -2 cap and the 5/4 ratio", checks)


# --- 4 and 6 share the corpus run ---------------------------------------------------------

@pytest.fixture(scope="module")
def corpus_reports():
    out = []
    for e in corpus():
        d, N = e.domain, e.resolution
        phi = solve(d, bc=BoundaryCondition.dirichlet(1), spec=e.spec("dirichlet"))
        u = solve(d, bc=BoundaryCondition.robin(1), spec=e.spec("robin"))
        reps = verify_minkowski(d, N)
        reps.append(verify_lemma_zas(d, phi, N))
        reps.append(verify_thm_zas(d, phi, N))
        reps.append(verify_pfs(d, phi, N, e.spec("dirichlet"))[0])
        reps.append(verify_thm_main(d, u, N))
        out.append((e, reps))
    return out


def test_criterion_4_inequality_suites(corpus_reports):
    n3 = sum(1 for e, _ in corpus_reports if e.n == 3)
    n4 = sum(1 for e, _ in corpus_reports if e.n == 4)
    amp = max(max(abs(c) for c in e.coeffs[1:]) for e, _ in corpus_reports)
    checks = [("corpus size n=3", n3 >= 10, n3), ("corpus size n=4", n4 >= 3, n4),
              ("perturbation amplitude", amp <= 0.3, amp)]
    verdicts = [(e.name, r) for e, reps in corpus_reports for r in reps]
    violated = [(name, r.theorem) for name, r in verdicts if r.verdict == "violated"]
    inconclusive = [(name, r) for name, r in verdicts if r.verdict == "inconclusive"]
    checks.append(("no violated verdicts", not violated, violated))
    share = len(inconclusive) / len(verdicts)
    checks.append(("inconclusive share <= 10%", share <= 0.10, f"{share:.1%}"))
    checks.append(("inconclusive verdicts document eps",
                   all(math.isfinite(r.eps) for _, r in inconclusive), len(inconclusive)))
    for thm in ("minkowski", "lemma_zas", "thm_zas", "pfs", "thm_main"):
        covered = {name for name, r in verdicts if r.theorem == thm}
        checks.append((f"{thm} ran on every domain", len(covered) == len(corpus_reports), len(covered)))
    for name, r in inconclusive:
        print(f"    inconclusive: {name} {r.theorem} margin {r.margin:.3g} eps {r.eps:.3g}")
    _conclude(4, f"inequality suites on {n3} + {n4} perturbed domains "
                 f"({len(verdicts) - len(inconclusive)}/{len(verdicts)} holds)", checks)


def test_criterion_6_proof_replay(corpus_reports):
    checks = []
    for e, reps in corpus_reports:
        thm = next(r for r in reps if r.theorem == "thm_main")
        names = [l.name for l in thm.links]
        for want in ("mass_flux_identity", "u_weighted_mean_curvature", "minkowski[0]"):
            checks.append((f"{e.name} {want} present", want in names, names))
        for l in thm.links:
            checks.append((f"{e.name} {l.name}", l.verdict == "holds",
                           f"margin {l.margin:.3g} eps {l.eps:.3g}"))
    _conclude(6, "thm_main links hold individually on the corpus", checks)


# --- 5 -------------------------------------------------------------------------------

def test_criterion_5_pfs_equality_case():
    checks = []
    for n in (3, 4):
        rep, tr = verify_pfs(make_ball(n))
        for l in rep.links:
            if l.name in CHAIN_LINKS:
                gap = abs(l.lhs - l.rhs)
                checks.append((f"unit ball n={n} {l.name} gap", gap <= 1e-4, f"{gap:.3g}"))
    sph = make_spheroid(2.0, 1.0)
    spec = SolverSpec(resolution=32, residual_threshold=1e-6)
    rep, tr = verify_pfs(sph, resolution=32, spec=spec)
    first = rep.links[0]
    gap = first.lhs - first.rhs
    checks.append((f"spheroid {first.name} gap > 10 eps", gap > 10 * first.eps,
                   f"gap {gap:.3g}, eps {first.eps:.3g}"))
    checks.append(("spheroid pfs verdict", rep.verdict == "holds", rep.verdict))
    _conclude(5, "symmetrization trace: ball equality, strict spheroid gap", checks)


# --- 7 -------------------------------------------------------------------------------

def test_criterion_7_convergence():
    study = runner.refinement_study(make_spheroid(2.0, 1.0), ["area", "minkowski", "capacity"],
                                    [12, 16, 24, 32], SolverSpec())
    checks = []
    for q, s in study.items():
        finite = [o for o in s["orders"] if o is not None]
        checks.append((f"{q} has a measured order", bool(finite), s["orders"]))
        checks.append((f"{q} observed order >= 2", bool(finite) and min(finite) >= 2.0,
                       ", ".join("round-off" if o is None else f"{o:.2f}" for o in s["orders"])))
    sc = scn.load_bundled("spheroid-zas-n3")
    appendix = runner.run(sc).report["convergence"]
    checks.append(("appendix carries the refinement study",
                   {"area", "minkowski", "capacity"} <= set(appendix.get("refinement", {})),
                   sorted(appendix)))
    _conclude(7, "observed convergence order on the (2,1,1) spheroid", checks)


# --- 8 -------------------------------------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    dirs = [tmp_path / "first", tmp_path / "second"]
    codes = {}
    for d in dirs:
        for name in scn.bundled_names():
            codes.setdefault(name, []).append(main(["run", name, "--seed", "0", "--out-dir", str(d)]))
    checks = []
    for name, c in codes.items():
        checks.append((f"{name} exit codes agree", c[0] == c[1] and c[0] in (0, 2), c))
    files = sorted(os.listdir(dirs[0]))
    checks.append(("same file sets", files == sorted(os.listdir(dirs[1])), files))
    reports = [f for f in files if f.endswith(".json")]
    checks.append(("every scenario wrote a report",
                   len([f for f in reports if f.endswith(".report.json")]) == len(codes), len(reports)))
    for f in files:
        same = (dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes()
        checks.append((f"{f} byte-identical", same, ""))
    _conclude(8, f"two runs of {len(codes)} bundled scenarios are byte-identical", checks)
