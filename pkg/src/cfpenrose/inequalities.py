"""Verifiers for the Penrose-type inequalities, each with an explicit error budget.

Every verifier returns an :class:`InequalityReport` holding both sides, the
margin ``lhs - rhs``, an error estimate ``eps`` and a verdict. Reports also
carry ``links``: the intermediate steps of the argument, each checked on its
own so that a numerical fault can be localised.

Error estimates add up two-resolution differences of every quadrature, the
ADM-mass extrapolation error, the solver residual scaled to the quantity at
hand, and a round-off floor.
"""

import hashlib
import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .conformal import (adm_mass, as_factor, conformal_mean_curvature, log_gradient_energy,
                        minimality_tolerance, weighted_scalar_integral)
from .errors import HypothesisViolated, LevelSetDegeneracy
from .geometry import (beta, boundary_quadrature, coarse_resolution, default_resolution,
                       functionals, is_mean_convex, omega, sphere_grid)
from .mass import holder_consistency, zas_mass

THEOREMS = ("thm_main", "cor_area", "cor_vol", "thm_general2_delta", "lemma_zas", "thm_zas",
            "mixed", "pfs", "minkowski", "isoperimetric")

HOLDS_FACTOR = 10.0
VIOLATION_SEPARATION = 100.0
EPS_FLOOR = 1e-12


def verdict(margin, eps):
    if margin >= -HOLDS_FACTOR * eps:
        return "holds"
    if eps < abs(margin) / VIOLATION_SEPARATION:
        return "violated"
    return "inconclusive"


def _floor(*values):
    return EPS_FLOOR * max([1.0] + [abs(v) for v in values if v is not None])


def instance_hash(*parts):
    h = hashlib.sha256(json.dumps(parts, sort_keys=True, default=_json_default).encode())
    return h.hexdigest()[:16]


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


@dataclass
class Link:
    """One step of an argument: an inequality ``lhs >= rhs`` or an identity ``lhs == rhs``."""

    name: str
    lhs: float
    rhs: float
    eps: float
    kind: str = "inequality"

    @property
    def margin(self):
        d = self.lhs - self.rhs
        return -abs(d) if self.kind == "identity" else d

    @property
    def verdict(self):
        return verdict(self.margin, self.eps)

    def to_json(self):
        return {"name": self.name, "kind": self.kind, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "eps": self.eps, "verdict": self.verdict}


@dataclass
class InequalityReport:
    theorem: str
    lhs: float
    rhs: float
    eps: float
    instance: str
    links: List[Link] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    forced: Optional[str] = None

    @property
    def margin(self):
        return self.lhs - self.rhs

    @property
    def verdict(self):
        return self.forced or verdict(self.margin, self.eps)

    def link(self, name):
        for l in self.links:
            if l.name == name:
                return l
        raise KeyError(name)

    def to_json(self):
        return {"theorem": self.theorem, "instance": self.instance, "lhs": self.lhs,
                "rhs": self.rhs, "margin": self.margin, "eps": self.eps, "verdict": self.verdict,
                "links": [l.to_json() for l in self.links],
                "details": {k: self.details[k] for k in sorted(self.details)}}

    CSV_FIELDS = ("theorem", "instance", "lhs", "rhs", "margin", "eps", "verdict")

    def csv_row(self):
        return [getattr(self, k) for k in self.CSV_FIELDS]


# --- shared plumbing -------------------------------------------------------------

def _meshes(domain, resolution):
    N = resolution or default_resolution(domain.n)
    return boundary_quadrature(domain, N), boundary_quadrature(domain, coarse_resolution(N))


def _residual(f):
    return float((f.provenance or {}).get("residual", 0.0))


def _require_mean_convex(mesh, eps=None):
    mc = is_mean_convex(mesh) if eps is None else is_mean_convex(mesh, eps)
    if not mc.convex:
        raise HypothesisViolated("mean-convexity", f"min H = {mc.margin:.4g}")
    return mc


def _minimality(f, mesh):
    """Minimal-boundary check; the tolerance widens with the solver residual."""
    n = mesh.n
    r_char = (np.sum(mesh.weights) / (mesh.k * omega(n))) ** (1.0 / (n - 1))
    tol = max(minimality_tolerance(n, r_char), 10.0 * _residual(f) * (n - 1) / r_char)
    return conformal_mean_curvature(f, mesh, tolerance=tol)


def _require_minimal(f, mesh):
    hg = _minimality(f, mesh)
    if not hg.minimal:
        raise HypothesisViolated("minimal boundary",
                                 f"max |H_g| = {np.max(np.abs(hg.values)):.3g} > {hg.tolerance:.3g}")
    return hg


def _require_superharmonic(f):
    flag = (f.provenance or {}).get("superharmonic", True)
    if not (f.superharmonic and flag):
        raise HypothesisViolated("superharmonic", "the factor has a negative density or flux")


def _base_details(domain, mesh, f):
    return {"n": int(domain.n), "k": int(domain.k), "resolution": int(mesh.resolution),
            "solver_residual": _residual(f)}


# --- black-hole boundaries ---------------------------------------------------------

def _main_pieces(domain, u, resolution, weight):
    f = as_factor(u)
    n = domain.n
    mesh, cmesh = _meshes(domain, resolution)
    _require_mean_convex(mesh)
    hg = _require_minimal(f, mesh)
    mass = adm_mass(f)
    integral = weighted_scalar_integral(f, weight, domain)
    w = omega(n)
    pieces = {}
    for key, m in (("fine", mesh), ("coarse", cmesh)):
        func = functionals(domain, m)
        val, grad = f.value_and_gradient(m.nodes)
        dnu = np.einsum("ij,ij->i", grad, m.normals)
        pieces[key] = {
            "func": func,
            "flux_term": -2.0 / ((n - 2) * w) * float(np.dot(m.weights, dnu)),
            "hu_term": float(np.dot(m.weights, m.mean_curvature * val)) / ((n - 1) * w),
            "h_term": float(np.dot(m.weights, m.mean_curvature)) / ((n - 1) * w),
        }
    fine = pieces["fine"]
    r_char = (fine["func"].area / (domain.k * w)) ** (1.0 / (n - 1))
    # a residual r in r_char (d_nu u + beta u) moves the flux term by at most this much
    res_term = _residual(f) * 2.0 * fine["func"].area / ((n - 2) * w * r_char)
    i_term = integral.value / (2.0 * (n - 1) * w)
    i_err = integral.error / (2.0 * (n - 1) * w)
    return f, mesh, hg, mass, integral, pieces, res_term, i_term, i_err


def _delta(pieces, key):
    return abs(pieces["fine"][key] - pieces["coarse"][key])


def verify_thm_main(domain, u, resolution=None):
    """``m >= sum_i (A_i/omega)^{(n-2)/(n-1)} + I_{-1} / (2(n-1) omega)``, replayed link by link."""
    f, mesh, hg, mass, integral, P, res_term, i_term, i_err = _main_pieces(domain, u, resolution, -1)
    _require_superharmonic(f)
    fine, coarse = P["fine"], P["coarse"]
    func = fine["func"]
    rhs = float(np.sum(func.area_terms)) + i_term
    rhs_c = float(np.sum(coarse["func"].area_terms)) + i_term
    lhs = mass.value
    eps = mass.error + abs(rhs - rhs_c) + i_err + res_term + _floor(lhs, rhs)
    links = []
    e1 = mass.error + _delta(P, "flux_term") + i_err + res_term + _floor(lhs)
    links.append(Link("mass_flux_identity", lhs, fine["flux_term"] + i_term, e1, "identity"))
    e2 = _delta(P, "flux_term") + _delta(P, "hu_term") + res_term + _floor(fine["hu_term"])
    links.append(Link("robin_identity", fine["flux_term"], fine["hu_term"], e2, "identity"))
    e3 = _delta(P, "hu_term") + _delta(P, "h_term") + _floor(fine["hu_term"])
    links.append(Link("u_weighted_mean_curvature", fine["hu_term"], fine["h_term"], e3))
    mk, mkc = func.minkowski, coarse["func"].minkowski
    at, atc = func.area_terms, coarse["func"].area_terms
    for i in range(domain.k):
        e = abs(mk[i] - mkc[i]) + abs(at[i] - atc[i]) + _floor(mk[i])
        links.append(Link(f"minkowski[{i}]", float(mk[i]), float(at[i]), e))
    details = _base_details(domain, mesh, f)
    details.update({"area_terms": func.area_terms.tolist(), "i_minus1": integral.value,
                    "i_minus1_err": integral.error, "adm_error": mass.error,
                    "adm_method": mass.method, "adm_cross_check": mass.cross_check,
                    "max_abs_h_g": float(np.max(np.abs(hg.values))), "h_g_tolerance": hg.tolerance})
    return InequalityReport("thm_main", lhs, rhs, eps, instance_hash("thm_main", domain.to_json(),
                            f.to_json()), links, details)


def verify_corollaries(domain, u, resolution=None):
    """Area and volume forms: ``m >= (A/omega)^{(n-2)/(n-1)}`` and ``m >= (V/beta)^{(n-2)/n}``."""
    f = as_factor(u)
    n = domain.n
    mesh, cmesh = _meshes(domain, resolution)
    _require_mean_convex(mesh)
    _require_minimal(f, mesh)
    _require_superharmonic(f)
    mass = adm_mass(f)
    func, cfunc = functionals(domain, mesh), functionals(domain, cmesh)
    lhs = mass.value
    details = _base_details(domain, mesh, f)
    # the residual only enters through the mass, whose error already covers it
    res_term = _residual(f) * abs(lhs)
    summed, summed_c = float(np.sum(func.area_terms)), float(np.sum(cfunc.area_terms))
    e_conc = abs(summed - summed_c) + abs(func.area_term - cfunc.area_term) + _floor(summed)
    concavity = Link("concavity", summed, func.area_term, e_conc)
    rhs_a = func.area_term
    eps_a = mass.error + abs(rhs_a - cfunc.area_term) + res_term + _floor(lhs, rhs_a)
    area = InequalityReport("cor_area", lhs, rhs_a, eps_a,
                            instance_hash("cor_area", domain.to_json(), f.to_json()),
                            [concavity], dict(details))
    rhs_v = func.volume_term
    eps_v = mass.error + abs(rhs_v - cfunc.volume_term) + res_term + _floor(lhs, rhs_v)
    vol = InequalityReport("cor_vol", lhs, rhs_v, eps_v,
                           instance_hash("cor_vol", domain.to_json(), f.to_json()), [],
                           dict(details, volume=func.volume, beta=beta(n)))
    return area, vol


def verify_thm_general2_delta(domain, u, resolution=None):
    """``u^{-2}``-weighted form, no sign condition on the scalar curvature.

    For a single component also reports the discarded Dirichlet-energy term
    ``(2/((n-2) omega)) int |grad u|^2 / u^2`` and checks the exact identity
    ``m = (1/((n-1) omega)) int H + I_{-2} / (2(n-1) omega) + that term``.
    """
    f, mesh, hg, mass, integral, P, res_term, i_term, i_err = _main_pieces(domain, u, resolution, -2)
    n = domain.n
    fine, coarse = P["fine"], P["coarse"]
    func = fine["func"]
    lhs = mass.value
    rhs = float(np.sum(func.area_terms)) + i_term
    rhs_c = float(np.sum(coarse["func"].area_terms)) + i_term
    eps = mass.error + abs(rhs - rhs_c) + i_err + res_term + _floor(lhs, rhs)
    links = []
    details = _base_details(domain, mesh, f)
    details.update({"i_minus2": integral.value, "i_minus2_err": integral.error,
                    "area_terms": func.area_terms.tolist()})
    if domain.k == 1:
        energy = log_gradient_energy(f, domain.components[0])
        slack = 2.0 * energy.value / ((n - 2) * omega(n))
        slack_err = 2.0 * energy.error / ((n - 2) * omega(n))
        ident_rhs = fine["h_term"] + i_term + slack
        e_id = mass.error + _delta(P, "h_term") + i_err + slack_err + res_term + _floor(lhs)
        links.append(Link("energy_identity", lhs, ident_rhs, e_id, "identity"))
        links.append(Link("dirichlet_slack", lhs - rhs, slack, eps + slack_err))
        details.update({"dirichlet_energy_slack": slack, "dirichlet_energy_slack_err": slack_err})
    else:
        details["dirichlet_energy_slack"] = None
    return InequalityReport("thm_general2_delta", lhs, rhs, eps,
                            instance_hash("thm_general2_delta", domain.to_json(), f.to_json()),
                            links, details)


# --- zero area singularities -----------------------------------------------------

def _zas_pieces(domain, u, resolution):
    f = as_factor(u)
    mesh, cmesh = _meshes(domain, resolution)
    _require_superharmonic(f)
    mz, mzc = zas_mass(f, mesh), zas_mass(f, cmesh)
    mass = adm_mass(f)
    func, cfunc = functionals(domain, mesh), functionals(domain, cmesh)
    res_term = _residual(f) * 2.0 * abs(mz)
    return f, mesh, cmesh, mz, mzc, mass, func, cfunc, res_term


def verify_lemma_zas(domain, u, resolution=None):
    """``m >= m_ZAS - (1/2) (A/omega)^{(n-2)/(n-1)}`` for a factor vanishing on the boundary."""
    f, mesh, cmesh, mz, mzc, mass, func, cfunc, res_term = _zas_pieces(domain, u, resolution)
    lhs = mass.value
    rhs = mz - 0.5 * func.area_term
    rhs_c = mzc - 0.5 * cfunc.area_term
    eps = mass.error + abs(rhs - rhs_c) + res_term + _floor(lhs, rhs)
    hc, hcc = holder_consistency(f, mesh), holder_consistency(f, cmesh)
    e_h = abs(hc.lhs - hcc.lhs) + abs(hc.rhs - hcc.rhs) + _floor(hc.rhs)
    links = [Link("holder", hc.rhs, hc.lhs, e_h)]
    details = _base_details(domain, mesh, f)
    details.update({"m_zas": mz, "area_term": func.area_term})
    return InequalityReport("lemma_zas", lhs, rhs, eps,
                            instance_hash("lemma_zas", domain.to_json(), f.to_json()), links, details)


def verify_thm_zas(domain, u, resolution=None):
    """``m >= m_ZAS (1 + iota^2 / 4)``, with the intermediate area bound checked separately."""
    f, mesh, cmesh, mz, mzc, mass, func, cfunc, res_term = _zas_pieces(domain, u, resolution)
    iota, iota_c = func.iso_ratio, cfunc.iso_ratio
    lhs = mass.value
    rhs = mz * (1.0 + 0.25 * iota ** 2)
    rhs_c = mzc * (1.0 + 0.25 * iota_c ** 2)
    eps = mass.error + abs(rhs - rhs_c) + res_term + _floor(lhs, rhs)
    bound = 0.5 * iota ** 2 * abs(mz)
    bound_c = 0.5 * iota_c ** 2 * abs(mzc)
    e_b = abs(bound - bound_c) + abs(func.area_term - cfunc.area_term) + res_term + _floor(bound)
    links = [Link("area_upper_bound", bound, func.area_term, e_b)]
    if f.is_harmonic:
        cap = -float(np.sum(f.coeffs))
        links.append(Link("adm_capacity", lhs, -2.0 * cap, mass.error + _floor(lhs), "identity"))
    details = _base_details(domain, mesh, f)
    details.update({"m_zas": mz, "iso_ratio": iota, "area_term": func.area_term,
                    "volume_term": func.volume_term})
    return InequalityReport("thm_zas", lhs, rhs, eps,
                            instance_hash("thm_zas", domain.to_json(), f.to_json()), links, details)


def verify_mixed(omega_plus, omega_minus, u, resolution=None):
    """``m >= (A_+/omega)^{(n-2)/(n-1)} + m_ZAS(Sigma_-) (1 + iota_-^2 / 4)``.

    Gated on ``min u >= 1`` over the black-hole side; a failed gate gives an
    inconclusive report carrying the measured minimum.
    """
    f = as_factor(u)
    if omega_plus is None and omega_minus is None:
        raise ValueError("at least one side is required")
    if omega_plus is None:
        rep = verify_thm_zas(omega_minus, f, resolution)
        rep.theorem = "mixed"
        rep.details["reduced_to"] = "thm_zas"
        return rep
    if omega_minus is None:
        rep = verify_corollaries(omega_plus, f, resolution)[0]
        rep.theorem = "mixed"
        rep.details["reduced_to"] = "cor_area"
        return rep
    n = omega_plus.n
    N = resolution or default_resolution(n)
    mp, mpc = boundary_quadrature(omega_plus, N), boundary_quadrature(omega_plus, coarse_resolution(N))
    mm, mmc = boundary_quadrature(omega_minus, N), boundary_quadrature(omega_minus, coarse_resolution(N))
    _require_mean_convex(mp)
    _require_superharmonic(f)
    hg = _require_minimal(f, mp)
    mz, mzc = zas_mass(f, mm), zas_mass(f, mmc)
    fp, fpc = functionals(omega_plus, mp), functionals(omega_plus, mpc)
    fm, fmc = functionals(omega_minus, mm), functionals(omega_minus, mmc)
    mass = adm_mass(f)
    lhs = mass.value
    rhs = fp.area_term + mz * (1.0 + 0.25 * fm.iso_ratio ** 2)
    rhs_c = fpc.area_term + mzc * (1.0 + 0.25 * fmc.iso_ratio ** 2)
    res = _residual(f)
    eps = mass.error + abs(rhs - rhs_c) + res * (abs(lhs) + abs(rhs)) + _floor(lhs, rhs)
    min_u = float(np.min(f.value(mp.nodes)))
    gate = min_u >= 1.0 - eps
    details = {"n": int(n), "k_plus": int(omega_plus.k), "k_minus": int(omega_minus.k),
               "resolution": int(N), "solver_residual": res, "min_u_plus": min_u,
               "gate_u_ge_1": bool(gate), "m_zas_minus": mz, "iso_ratio_minus": fm.iso_ratio,
               "area_term_plus": fp.area_term, "max_abs_h_g": float(np.max(np.abs(hg.values)))}
    links = [Link("gate_u_ge_1", min_u, 1.0, eps)]
    inst = instance_hash("mixed", omega_plus.to_json(), omega_minus.to_json(), f.to_json())
    return InequalityReport("mixed", lhs, rhs, eps, inst, links, details,
                            None if gate else "inconclusive")


# --- geometric inequalities --------------------------------------------------------

def verify_minkowski(domain, resolution=None):
    """Per component: ``(1/((n-1) omega)) int H dA >= (A_i/omega)^{(n-2)/(n-1)}``."""
    mesh, cmesh = _meshes(domain, resolution)
    _require_mean_convex(mesh)
    func, cfunc = functionals(domain, mesh), functionals(domain, cmesh)
    out = []
    for i, comp in enumerate(domain.components):
        lhs, rhs = float(func.minkowski[i]), float(func.area_terms[i])
        eps = abs(lhs - cfunc.minkowski[i]) + abs(rhs - cfunc.area_terms[i]) + _floor(lhs, rhs)
        out.append(InequalityReport("minkowski", lhs, rhs, eps,
                                    instance_hash("minkowski", domain.to_json(), i), [],
                                    {"n": int(domain.n), "component": i,
                                     "resolution": int(mesh.resolution),
                                     "min_mean_curvature": float(np.min(mesh.mean_curvature[mesh.component == i]))}))
    return out


def verify_isoperimetric(domain, resolution=None):
    """``iota >= 1``."""
    mesh, cmesh = _meshes(domain, resolution)
    func, cfunc = functionals(domain, mesh), functionals(domain, cmesh)
    lhs = func.iso_ratio
    eps = abs(lhs - cfunc.iso_ratio) + _floor(lhs)
    return InequalityReport("isoperimetric", lhs, 1.0, eps,
                            instance_hash("isoperimetric", domain.to_json()), [],
                            {"n": int(domain.n), "resolution": int(mesh.resolution),
                             "area": func.area, "volume": func.volume})


# --- capacity-volume inequality and its symmetrization trace ----------------------

TRACE_LEVELS = 64
TRACE_DELTA_T = 0.02


def clenshaw_curtis(m):
    """Nodes (descending from 1 to -1) and weights of the ``m``-point Clenshaw-Curtis rule."""
    N = m - 1
    theta = np.pi * np.arange(m) / N
    x = np.cos(theta)
    w = np.zeros(m)
    inner = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N ** 2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N ** 2 - 1)
    else:
        w[0] = w[N] = 1.0 / N ** 2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / N
    return x, w


@dataclass
class SymmetrizationTrace:
    """Level-set data of the capacity potential and the energy chain.

    ``energies`` holds, in order: the Dirichlet energy ``(n-2) omega cap``,
    the co-area/Cauchy-Schwarz bound ``int |Sigma_t|^2 / V'(t) dt``, the
    symmetrized energy ``int omega^2 (V/beta)^{2(n-1)/n} / V'(t) dt`` and the
    energy of the ball of equal volume ``(n-2) omega (V/beta)^{(n-2)/n}``.
    """

    n: int
    t: np.ndarray
    area: np.ndarray
    volume: np.ndarray
    dvolume: np.ndarray
    flux: np.ndarray
    energies: np.ndarray
    energy_errors: np.ndarray
    flux_integral: float = 0.0
    flux_integral_error: float = 0.0

    @property
    def radius(self):
        return (self.volume / beta(self.n)) ** (1.0 / self.n)

    def to_json(self):
        return {"n": int(self.n), "t": self.t.tolist(), "area": self.area.tolist(),
                "volume": self.volume.tolist(), "radius": self.radius.tolist(),
                "dvolume": self.dvolume.tolist(), "flux": self.flux.tolist(),
                "energies": self.energies.tolist(), "energy_errors": self.energy_errors.tolist(),
                "flux_integral": self.flux_integral, "flux_integral_error": self.flux_integral_error}


def _level_radii(phi, x0, dirs, t, r_start, guess, tol=1e-13, max_iter=100):
    """Solve ``phi(x0 + r w) = t`` on every ray by safeguarded Newton steps.

    ``r_start`` lies below the level on each ray and ``guess`` is the
    starting iterate; the bracket opens just above the guess.
    """
    lo = r_start.copy()
    hi = np.maximum(guess * 1.02, lo * 1.001)
    low = np.ones(len(lo), dtype=bool)
    for _ in range(60):
        idx = np.nonzero(low)[0]
        if not len(idx):
            break
        below = phi.value(x0 + hi[idx, None] * dirs[idx]) < t
        lo[idx[below]] = hi[idx[below]]
        hi[idx[below]] *= 1.5
        low[idx[~below]] = False
    else:
        raise LevelSetDegeneracy(f"level {t:.4g} not bracketed on every ray")
    r = np.clip(guess, lo, hi)
    active = np.ones(len(r), dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if not len(idx):
            break
        ri = r[idx]
        val, grad = phi.value_and_gradient(x0 + ri[:, None] * dirs[idx])
        g = np.einsum("ij,ij->i", grad, dirs[idx])
        f = val - t
        lo[idx] = np.where(f < 0, ri, lo[idx])
        hi[idx] = np.where(f >= 0, ri, hi[idx])
        mid = 0.5 * (lo[idx] + hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(g > 0, ri - f / g, mid)
        new = np.where((step >= lo[idx]) & (step <= hi[idx]), step, mid)
        hit = np.abs(f) <= 1e-15
        new = np.where(hit, ri, new)
        done = (np.abs(new - ri) <= tol * ri) | hit
        r[idx] = new
        active[idx[done]] = False
    else:
        raise LevelSetDegeneracy(f"level {t:.4g}: ray root-finding did not converge")
    val, grad = phi.value_and_gradient(x0 + r[:, None] * dirs)
    g = np.einsum("ij,ij->i", grad, dirs)
    if np.min(g) <= 0:
        raise LevelSetDegeneracy(f"level {t:.4g}: potential not increasing along some ray")
    return r, grad, g


def _trace_at(domain, phi, cap, N, levels, delta_t):
    n = domain.n
    comp = domain.components[0]
    w_n, b_n = omega(n), beta(n)
    dirs, sw = sphere_grid(n, N)
    x, cw = clenshaw_curtis(levels)
    T = 1.0 - delta_t
    t = 0.5 * T * (1.0 - x)
    wt = 0.5 * T * cw
    r = comp.radial(dirs)
    rows = []
    for k, tk in enumerate(t):
        if k == 0:
            val, grad = phi.value_and_gradient(comp.center + r[:, None] * dirs)
            g = np.einsum("ij,ij->i", grad, dirs)
            if np.min(g) <= 0:
                raise LevelSetDegeneracy("potential not increasing off the boundary")
        else:
            # level radii of a point charge scale like (1 - t)^{-1/(n-2)}
            guess = r * ((1.0 - t[k - 1]) / (1.0 - tk)) ** (1.0 / (n - 2))
            r, grad, g = _level_radii(phi, comp.center, dirs, tk, r, guess)
        gn = np.linalg.norm(grad, axis=1)
        rn1 = r ** (n - 1)
        rows.append((np.dot(sw, r ** n) / n, np.dot(sw, rn1 / g), np.dot(sw, rn1 * gn / g),
                     np.dot(sw, rn1 * gn * gn / g)))
    V, Vp, S, F = (np.array(c) for c in zip(*rows))
    e0 = (n - 2) * w_n * cap
    i1 = S ** 2 / Vp
    i2 = w_n ** 2 * (V / b_n) ** (2.0 * (n - 1) / n) / Vp
    e1 = np.dot(wt, i1) + delta_t * i1[-1]
    e2 = np.dot(wt, i2) + delta_t * i2[-1]
    e3 = (n - 2) * w_n * (V[0] / b_n) ** ((n - 2) / n)
    tails = np.array([0.0, delta_t * abs(i1[-1] - e0), delta_t * abs(i2[-1] - e0), 0.0])
    flux_trace = np.dot(wt, F) + delta_t * F[-1]
    return t, S, V, Vp, F, np.array([e0, e1, e2, e3]), tails, flux_trace


def symmetrization_trace(domain, phi, cap, resolution=None, levels=TRACE_LEVELS,
                         delta_t=TRACE_DELTA_T):
    """Ray-cast level sets of the capacity potential of a single star component."""
    if domain.k != 1:
        raise ValueError("the symmetrization trace needs a single star component")
    N = resolution or default_resolution(domain.n)
    f = as_factor(phi)
    fine = _trace_at(domain, f, cap, N, levels, delta_t)
    coarse = _trace_at(domain, f, cap, coarse_resolution(N), levels, delta_t)
    err = np.abs(fine[5] - coarse[5]) + fine[6]
    t, S, V, Vp, F, E = fine[:6]
    return SymmetrizationTrace(domain.n, t, S, V, Vp, F, E, err, float(fine[7]),
                               float(abs(fine[7] - coarse[7])))


def verify_pfs(domain, potential=None, resolution=None, spec=None, trace=True):
    """``cap >= (V/beta)^{(n-2)/n}``; single components also get the energy-chain trace.

    Returns ``(report, trace)`` with ``trace`` None for multi-component domains.
    """
    from .solver import SolverSpec, capacity

    n = domain.n
    N = resolution or default_resolution(n)
    spec = spec or SolverSpec(resolution=N)
    mesh, cmesh = _meshes(domain, N)
    cres = capacity(domain, mesh, spec, potential)
    cap = cres.value
    func, cfunc = functionals(domain, mesh), functionals(domain, cmesh)
    rhs = func.volume_term
    eps = cres.error + abs(rhs - cfunc.volume_term) + _floor(cap, rhs)
    details = {"n": int(n), "k": int(domain.k), "resolution": int(N), "capacity": cap,
               "capacity_flux": cres.flux, "capacity_error": cres.error,
               "solver_residual": cres.potential.certificate["residual"], "volume": func.volume}
    links = []
    tr = None
    if trace and domain.k == 1:
        tr = symmetrization_trace(domain, cres.potential, cap, N)
        E = tr.energies
        Ee = tr.energy_errors.copy()
        Ee[0] = max(Ee[0], (n - 2) * omega(n) * cres.error)
        tr.energy_errors = Ee
        names = ("coarea_schwarz", "isoperimetric_levels", "symmetrized_energy")
        for i, name in enumerate(names):
            links.append(Link(name, float(E[i]), float(E[i + 1]),
                              float(Ee[i] + Ee[i + 1]) + _floor(E[i])))
        links.append(Link("volume_at_boundary", float(tr.volume[0]), func.volume,
                          abs(func.volume - cfunc.volume) + _floor(func.volume), "identity"))
        links.append(Link("volume_monotone", float(np.min(np.diff(tr.volume))), 0.0,
                          _floor(tr.volume[-1])))
        links.append(Link("flux_constant", tr.flux_integral, float(E[0]),
                          tr.flux_integral_error + float(Ee[0]) + _floor(E[0]), "identity"))
        details["energies"] = E.tolist()
        details["energy_errors"] = Ee.tolist()
    rep = InequalityReport("pfs", cap, rhs, eps, instance_hash("pfs", domain.to_json(), N), links,
                           details)
    return rep, tr
