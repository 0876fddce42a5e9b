import math

import pytest
from hypothesis import given, settings, strategies as st

from cfpenrose import (MassReport, NotRegularZAS, SolverSpec, adm_mass_of_zas_metric,
                       black_hole_mass, capacity, make_ball, make_perturbed_ball, schwarzschild,
                       schwarzschild_radius, solve, zas_mass)
from cfpenrose.geometry import boundary_quadrature, omega
from cfpenrose.mass import holder_consistency

DIMS = [3, 4, 5, 6, 7]


@pytest.mark.parametrize("n", DIMS)
@pytest.mark.parametrize("m", [-0.5, -1.0, -2.0])
def test_zas_mass_of_negative_schwarzschild(n, m):
    u = schwarzschild(n, m)
    mesh = boundary_quadrature(make_ball(n, schwarzschild_radius(n, m)))
    assert zas_mass(u, mesh) == pytest.approx(m, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_zas_mass_from_dirichlet_solve(n):
    # the capacity potential of a ball of radius r is a negative-mass Schwarzschild factor
    r = 0.7
    dom = make_ball(n, r)
    phi = solve(dom)
    assert zas_mass(phi, boundary_quadrature(dom)) == pytest.approx(-2 * r ** (n - 2), rel=1e-10)


@settings(max_examples=8)
@given(st.floats(0.5, 2.5))
def test_zas_mass_scaling(lam):
    dom = make_perturbed_ball(3, [1.0, 0.2])
    base = zas_mass(solve(dom), boundary_quadrature(dom))
    big = dom.scaled(lam)
    assert zas_mass(solve(big), boundary_quadrature(big)) == pytest.approx(lam * base, rel=1e-7)


def test_adm_mass_is_minus_twice_capacity():
    dom = make_perturbed_ball(3, [1.0, 0.2, 0.1])
    cap = capacity(dom)
    est = adm_mass_of_zas_metric(cap.potential)
    assert est.value == pytest.approx(-2 * cap.value, rel=1e-14)
    assert est.cross_check == pytest.approx(-2 * cap.value, abs=1e-8)


def test_adm_mass_of_closed_form_zas():
    est = adm_mass_of_zas_metric(schwarzschild(4, -1.5))
    assert est.value == -1.5
    assert est.cross_check is None


def test_holder_step():
    dom = make_perturbed_ball(3, [1.0, 0.3])
    phi = solve(dom)
    hc = holder_consistency(phi, boundary_quadrature(dom))
    assert hc.holds
    # strict for a non-round boundary: the normal derivative is not constant
    assert hc.rhs - hc.lhs > 1e-6
    ball = make_ball(3)
    hb = holder_consistency(solve(ball), boundary_quadrature(ball))
    assert hb.lhs == pytest.approx(hb.rhs, rel=1e-12)


def test_not_regular_zas():
    u = schwarzschild(3, -1.0)
    with pytest.raises(NotRegularZAS):
        zas_mass(u, boundary_quadrature(make_ball(3, 1.0)))
    # vanishing but decreasing outward: the sign of the factor is wrong
    v = schwarzschild(3, -1.0).scaled_coefficients(-1.0)
    with pytest.raises(NotRegularZAS):
        zas_mass(v, boundary_quadrature(make_ball(3, 0.5)))


@pytest.mark.parametrize("n", DIMS)
def test_black_hole_mass(n):
    r = 1.3
    assert black_hole_mass(omega(n) * r ** (n - 1), n) == pytest.approx(0.5 * r ** (n - 2))
    with pytest.raises(ValueError):
        black_hole_mass(-1.0, n)


@given(st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_black_hole_mass_monotone(a, b):
    lo, hi = sorted((a, b))
    assert black_hole_mass(lo, 3) <= black_hole_mass(hi, 3)


def test_mass_report_serialization():
    rep = MassReport(3, m_adm=1.0, black_hole_terms=[0.25, 0.5], m_zas=None, capacity=0.5,
                     errors={"m_adm": 1e-12, "capacity": 2e-10})
    d = rep.to_json()
    assert list(d)[:2] == ["n", "black_hole_terms"]
    assert d["m_zas"] is None
    assert list(d["errors"]) == ["capacity", "m_adm"]
    header, row = MassReport.csv_header(), rep.csv_row()
    assert len(header) == len(row)
    assert row[1] == 0.75
    assert row[header.index("capacity_err")] == 2e-10
    assert row[header.index("m_zas")] is None


def test_adm_mass_dominates_zas_mass_n4():
    n = 4
    dom = make_perturbed_ball(n, [1.0, 0.15])
    phi = solve(dom, spec=SolverSpec(resolution=10, residual_threshold=1e-5))
    mz = zas_mass(phi, boundary_quadrature(dom, 10))
    # the ADM mass -2 cap of the ZAS metric dominates m_ZAS
    cap = phi.capacity_coefficient
    assert mz < 0
    assert mz <= -2 * cap * (1 - 1e-6)
    assert math.isfinite(mz)
