"""Mass-like functionals: black-hole mass, ZAS mass and the ZAS-metric ADM mass.

ZAS boundaries are components where the conformal factor vanishes; the
formulas here are specialised to the flat background ``delta``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .conformal import MassEstimate, adm_mass, as_factor
from .errors import NotRegularZAS
from .geometry import omega

# |u| tolerance on a ZAS boundary when the factor carries no solver certificate
ZAS_VALUE_TOL = 1e-8


def black_hole_mass(area, n):
    """``(1/2) (A/omega)^{(n-2)/(n-1)}``."""
    if area < 0:
        raise ValueError("area must be nonnegative")
    return 0.5 * (area / omega(n)) ** ((n - 2) / (n - 1))


def _zas_tolerance(u):
    f = as_factor(u)
    res = (f.provenance or {}).get("residual")
    return ZAS_VALUE_TOL if res is None else max(ZAS_VALUE_TOL, 10.0 * float(res))


def zas_normal_derivative(u, mesh):
    """``d_nu u`` on a ZAS mesh after checking the regular-ZAS conditions."""
    f = as_factor(u)
    val, grad = f.value_and_gradient(mesh.nodes)
    tol = _zas_tolerance(u)
    if np.max(np.abs(val)) > tol:
        raise NotRegularZAS(f"u does not vanish on the boundary (max |u| = {np.max(np.abs(val)):.3g})")
    dnu = np.einsum("ij,ij->i", grad, mesh.normals)
    if np.min(dnu) <= 0:
        raise NotRegularZAS(f"d_nu u <= 0 at {int(np.sum(dnu <= 0))} node(s)")
    return dnu


def zas_mass(u, mesh):
    """``-(2/(n-2)^2) ((1/omega) int (d_nu u)^{2(n-1)/n} dA)^{n/(n-1)}``."""
    n = mesh.n
    dnu = zas_normal_derivative(u, mesh)
    p = 2.0 * (n - 1) / n
    inner = float(np.dot(mesh.weights, dnu ** p)) / omega(n)
    return -2.0 / (n - 2) ** 2 * inner ** (n / (n - 1))


def adm_mass_of_zas_metric(phi):
    """``m_ADM = -2 cap``: twice the coefficient sum, with the flux mass as cross-check."""
    f = as_factor(phi)
    coef = 2.0 * float(np.sum(f.coeffs))
    flux = adm_mass(f) if f.kind == "numeric" else None
    if flux is None:
        return MassEstimate(coef, 0.0, "coefficients", None)
    check = flux.value
    return MassEstimate(coef, max(abs(check - coef), flux.error), "coefficients", check)


class HolderCheck(NamedTuple):
    lhs: float
    rhs: float

    @property
    def holds(self):
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-15


def holder_consistency(u, mesh):
    """Both sides of the Hoelder step relating the boundary flux to the ZAS integrand."""
    n = mesh.n
    dnu = zas_normal_derivative(u, mesh)
    c = 2.0 / ((n - 2) * omega(n))
    area = float(np.sum(mesh.weights))
    lhs = c * float(np.dot(mesh.weights, dnu))
    integral = float(np.dot(mesh.weights, dnu ** (2.0 * (n - 1) / n)))
    rhs = c * integral ** (n / (2.0 * (n - 1))) * area ** ((n - 2) / (2.0 * (n - 1)))
    return HolderCheck(lhs, rhs)


@dataclass
class MassReport:
    """Mass-side quantities of one instance; ``errors`` maps field name to estimate."""

    n: int
    m_adm: Optional[float] = None
    black_hole_terms: list = field(default_factory=list)
    m_zas: Optional[float] = None
    capacity: Optional[float] = None
    volume_term: Optional[float] = None
    iso_ratio: Optional[float] = None
    i_minus1: Optional[float] = None
    i_minus2: Optional[float] = None
    errors: dict = field(default_factory=dict)

    FIELDS = ("m_adm", "m_zas", "capacity", "volume_term", "iso_ratio", "i_minus1", "i_minus2")

    def to_json(self):
        d = {"n": int(self.n), "black_hole_terms": [float(t) for t in self.black_hole_terms]}
        for k in self.FIELDS:
            d[k] = getattr(self, k)
        d["errors"] = {k: self.errors[k] for k in sorted(self.errors)}
        return d

    @classmethod
    def csv_header(cls):
        cols = ["n", "black_hole_total"]
        for k in cls.FIELDS:
            cols += [k, k + "_err"]
        return cols

    def csv_row(self):
        row = [self.n, float(np.sum(self.black_hole_terms)) if self.black_hole_terms else None]
        for k in self.FIELDS:
            row += [getattr(self, k), self.errors.get(k)]
        return row
