import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfpenrose import (BoundaryCondition, HypothesisViolated, RadialBump,
                       bump_potential, make_ball, make_perturbed_ball, pole_family, schwarzschild,
                       schwarzschild_radius, solve, solve_mixed, verify_corollaries,
                       verify_isoperimetric, verify_lemma_zas, verify_minkowski, verify_mixed,
                       verify_pfs, verify_thm_general2_delta, verify_thm_main, verify_thm_zas)
from cfpenrose.inequalities import Link, clenshaw_curtis, verdict

VERDICT_RANK = {"violated": 0, "inconclusive": 1, "holds": 2}


# --- the verdict rule ---------------------------------------------------------------

def test_verdict_rule_examples():
    assert verdict(0.0, 0.0) == "holds"
    assert verdict(-0.9e-6, 1e-7) == "holds"
    assert verdict(-1e-3, 1e-6) == "violated"
    assert verdict(-1e-3, 5e-5) == "inconclusive"


@given(st.floats(-10.0, 10.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_verdict_monotone_in_eps(margin, e1, e2):
    lo, hi = sorted((e1, e2))
    assert VERDICT_RANK[verdict(margin, lo)] <= VERDICT_RANK[verdict(margin, hi)]


@given(st.floats(0.0, 10.0), st.floats(0.0, 1.0))
def test_nonnegative_margin_holds(margin, eps):
    assert verdict(margin, eps) == "holds"


@given(st.floats(-1.0, 1.0), st.floats(1e-9, 1e-3))
def test_identity_link_symmetric(d, eps):
    a = Link("x", 1.0 + d, 1.0, eps, "identity")
    b = Link("x", 1.0, 1.0 + d, eps, "identity")
    assert a.verdict == b.verdict
    assert a.margin <= 0


# --- black-hole boundaries ------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("m", [0.5, 2.0])
def test_thm_main_schwarzschild(n, m):
    dom = make_ball(n, schwarzschild_radius(n, m))
    u = schwarzschild(n, m)
    rep = verify_thm_main(dom, u)
    assert rep.verdict == "holds"
    assert rep.margin == pytest.approx(m / 2, abs=1e-10)
    assert all(l.verdict == "holds" for l in rep.links)
    assert [l.name for l in rep.links] == ["mass_flux_identity", "robin_identity",
                                           "u_weighted_mean_curvature", "minkowski[0]"]


@pytest.mark.parametrize("n", [3, 4])
def test_corollaries_schwarzschild(n):
    m = 1.0
    dom = make_ball(n, schwarzschild_radius(n, m))
    area, vol = verify_corollaries(dom, schwarzschild(n, m))
    assert area.verdict == vol.verdict == "holds"
    # a round horizon has equal area and volume terms
    assert area.rhs == pytest.approx(vol.rhs, rel=1e-12)
    assert area.margin == pytest.approx(m / 2, abs=1e-10)


def test_thm_main_on_two_horizons():
    dom = make_ball(3, 0.5, [-2, 0, 0]).union(make_ball(3, 0.5, [2, 0, 0]))
    hf = solve(dom, bc=BoundaryCondition.robin(2))
    rep = verify_thm_main(dom, hf)
    assert rep.verdict == "holds"
    assert len([l for l in rep.links if l.name.startswith("minkowski")]) == 2
    assert all(l.verdict == "holds" for l in rep.links)


def test_thm_main_requires_minimal_boundary():
    dom = make_ball(3)
    with pytest.raises(HypothesisViolated) as info:
        verify_thm_main(dom, pole_family(3, [(np.zeros(3), 0.1)]))
    assert info.value.hypothesis == "minimal boundary"


def test_thm_main_requires_mean_convexity():
    dom = make_perturbed_ball(3, [1.0, 0.0, 0.5])
    with pytest.raises(HypothesisViolated) as info:
        verify_thm_main(dom, schwarzschild(3, 1.0))
    assert info.value.hypothesis == "mean-convexity"


def _bump_factor(amplitude):
    bg = bump_potential(3, bumps=[RadialBump(np.array([3.0, 0, 0]), 0.8, amplitude)])
    dom = make_ball(3)
    return dom, solve(dom, bc=BoundaryCondition.robin(1), background=bg)


def test_thm_main_requires_nonnegative_scalar_curvature():
    dom, hf = _bump_factor(-0.05)
    with pytest.raises(HypothesisViolated) as info:
        verify_thm_main(dom, hf)
    assert info.value.hypothesis == "superharmonic"


@pytest.mark.parametrize("amplitude", [-0.05, 0.05])
def test_general2_slack_identity(amplitude):
    dom, hf = _bump_factor(amplitude)
    rep = verify_thm_general2_delta(dom, hf)
    assert rep.verdict == "holds"
    ident = rep.link("energy_identity")
    assert ident.verdict == "holds"
    assert abs(ident.lhs - ident.rhs) < 1e-6
    assert rep.link("dirichlet_slack").verdict == "holds"
    assert rep.details["dirichlet_energy_slack"] > 0


def test_general2_on_schwarzschild_slack_is_exact():
    # for u = 1 + a/r the discarded energy is 4 pi a^2/(r0 + a), here with a = r0 = 1/2
    dom = make_ball(3, 0.5)
    rep = verify_thm_general2_delta(dom, schwarzschild(3, 1.0))
    slack = rep.details["dirichlet_energy_slack"]
    assert slack == pytest.approx(2 / (4 * math.pi) * 4 * math.pi * 0.25, rel=1e-10)
    assert rep.margin == pytest.approx(slack, abs=1e-10)


# --- zero area singularities -------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
def test_thm_zas_ratio_on_balls(n):
    m = -1.0
    dom = make_ball(n, schwarzschild_radius(n, m))
    rep = verify_thm_zas(dom, schwarzschild(n, m))
    assert rep.verdict == "holds"
    assert rep.rhs / rep.lhs == pytest.approx(1.25, abs=1e-12)
    assert all(l.verdict == "holds" for l in rep.links)


@pytest.mark.parametrize("n", [3, 4])
def test_lemma_zas_on_balls(n):
    m = -2.0
    dom = make_ball(n, schwarzschild_radius(n, m))
    rep = verify_lemma_zas(dom, schwarzschild(n, m))
    assert rep.verdict == "holds"
    # m = m_ZAS, so the margin is half the area term
    assert rep.margin == pytest.approx(0.5 * rep.details["area_term"], rel=1e-12)


def test_zas_verifiers_on_solved_potential():
    dom = make_perturbed_ball(3, [1.0, 0.2, 0.1])
    phi = solve(dom)
    lemma, thm = verify_lemma_zas(dom, phi), verify_thm_zas(dom, phi)
    assert lemma.verdict == thm.verdict == "holds"
    assert thm.link("adm_capacity").verdict == "holds"
    assert lemma.link("holder").verdict == "holds"


def test_mixed_two_balls():
    plus, minus = make_ball(3), make_ball(3, 1.0, [0, 0, 20])
    sol = solve_mixed(plus, minus)
    rep = verify_mixed(plus, minus, sol)
    assert rep.verdict == "holds"
    assert rep.details["gate_u_ge_1"]


def test_mixed_reduces_to_single_sides():
    ball = make_ball(3)
    rep = verify_mixed(None, ball, schwarzschild(3, -2.0))
    assert rep.theorem == "mixed" and rep.details["reduced_to"] == "thm_zas"
    rep = verify_mixed(make_ball(3, 0.5), None, schwarzschild(3, 1.0))
    assert rep.details["reduced_to"] == "cor_area"


# --- geometric inequalities --------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_minkowski_and_isoperimetric_equality_on_balls(n):
    dom = make_ball(n, 1.7)
    mk, = verify_minkowski(dom)
    assert mk.margin == pytest.approx(0.0, abs=1e-10)
    assert mk.verdict == "holds"
    iso = verify_isoperimetric(dom)
    assert iso.margin == pytest.approx(0.0, abs=1e-10)


@given(st.floats(-0.3, 0.3), st.floats(-0.1, 0.1))
def test_minkowski_on_perturbed_balls(c1, c2):
    dom = make_perturbed_ball(3, [1.0, c1, c2])
    for rep in verify_minkowski(dom, 16):
        assert rep.verdict == "holds"
    assert verify_isoperimetric(dom, 16).verdict == "holds"


def test_minkowski_rejects_non_mean_convex():
    with pytest.raises(HypothesisViolated):
        verify_minkowski(make_perturbed_ball(3, [1.0, 0.0, 0.5]))


# --- capacity and volume ---------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4])
def test_pfs_equality_on_ball(n):
    rep, tr = verify_pfs(make_ball(n))
    assert rep.verdict == "holds"
    assert abs(rep.margin) < 1e-10
    assert all(l.verdict == "holds" for l in rep.links)
    for l in rep.links:
        if l.name != "volume_monotone":
            assert abs(l.lhs - l.rhs) <= 1e-4 * max(1.0, abs(l.lhs))
    # level sets of a round potential are round spheres of radius (1 - t)^{-1/(n-2)}
    np.testing.assert_allclose(tr.radius, (1 - tr.t) ** (-1.0 / (n - 2)), rtol=1e-10)


def test_pfs_strict_on_perturbed_ball():
    dom = make_perturbed_ball(3, [1.0, 0.0, 0.2])
    rep, tr = verify_pfs(dom)
    assert rep.verdict == "holds"
    first = rep.links[0]
    assert first.lhs - first.rhs > 10 * first.eps
    assert np.all(np.diff(tr.volume) > 0)


def test_pfs_multi_component_has_no_trace():
    dom = make_ball(3, 0.5, [-2, 0, 0]).union(make_ball(3, 0.5, [2, 0, 0]))
    rep, tr = verify_pfs(dom)
    assert tr is None and rep.links == []
    assert rep.verdict == "holds"


@pytest.mark.parametrize("m", [2, 3, 9, 16, 64])
def test_clenshaw_curtis_exact_for_polynomials(m):
    x, w = clenshaw_curtis(m)
    assert np.all(np.diff(x) < 0)
    for k in range(m):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.dot(w, x ** k) == pytest.approx(exact, abs=1e-13)
