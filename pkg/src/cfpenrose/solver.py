"""Exterior Laplace problems by the method of fundamental solutions.

The unknown is ``u = u_bg + sum_j c_j |x - y_j|^{-(n-2)}`` with sources ``y_j``
inside the domain and a fixed background ``u_bg`` (1 by default, or a factor
carrying bump densities). Coefficients come from weighted least-squares
collocation on the boundary mesh; the residual is certified on a rotated
copy of the grid that shares no nodes with the collocation set.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .conformal import ConformalFactor
from .errors import IllConditioned, ResidualTooLarge
from .geometry import (MIN_RESOLUTION, SpheroidProfile, _unit, boundary_quadrature, default_resolution,
                       omega, random_rotation)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-component boundary conditions.

    Each entry is ``("dirichlet", value)`` or ``("robin",)``; the Robin
    condition is ``d_nu u + beta u = 0`` with ``beta = (n-2) H / (2(n-1))``,
    i.e. the boundary is minimal for ``u^{4/(n-2)} delta``.
    """

    kinds: tuple

    @classmethod
    def dirichlet(cls, k, value=0.0):
        return cls(tuple(("dirichlet", float(value)) for _ in range(k)))

    @classmethod
    def robin(cls, k):
        return cls(tuple(("robin",) for _ in range(k)))

    @classmethod
    def mixed(cls, k_robin, k_dirichlet):
        return cls(tuple([("robin",)] * k_robin + [("dirichlet", 0.0)] * k_dirichlet))

    def to_json(self):
        return [{"kind": "dirichlet", "value": k[1]} if k[0] == "dirichlet" else {"kind": "robin"}
                for k in self.kinds]

    @classmethod
    def from_json(cls, d):
        return cls(tuple(("dirichlet", float(e.get("value", 0.0))) if e["kind"] == "dirichlet"
                         else ("robin",) for e in d))


def robin_coefficient(n, mean_curvature):
    return (n - 2) * np.asarray(mean_curvature) / (2.0 * (n - 1))


@dataclass(frozen=True)
class SolverSpec:
    """Solver controls.

    ``resolution`` is the quadrature/check grid. Collocation uses a rotated
    grid carrying about ``oversample`` times as many nodes (4 in n = 3, 2
    otherwise, when unset), and surface sources
    sit on a grid ``source_ratio`` times the quadrature resolution. ``amplification_limit``
    bounds ``max_i sum_j |c_j G_ij| / max |rhs|``, the cancellation factor that
    multiplies round-off in the computed solution.
    """

    resolution: Optional[int] = None
    shrink: float = 0.5
    residual_threshold: float = 1e-8
    truncation: float = 1e-12
    amplification_limit: float = 1e10
    oversample: Optional[float] = None
    source_ratio: float = 1.0
    seed: int = 0

    def to_json(self):
        return {"resolution": self.resolution, "shrink": self.shrink,
                "residual_threshold": self.residual_threshold, "truncation": self.truncation,
                "amplification_limit": self.amplification_limit, "oversample": self.oversample,
                "source_ratio": self.source_ratio, "seed": self.seed}

    @classmethod
    def from_json(cls, d):
        known = {k: d[k] for k in cls().to_json() if k in d}
        return cls(**known)


@dataclass(frozen=True)
class HarmonicFunction:
    """Numeric exterior solution ``u_bg + sum_j c_j |x - y_j|^{-(n-2)}``."""

    n: int
    sources: np.ndarray
    coeffs: np.ndarray
    bc: BoundaryCondition
    certificate: dict
    background: Optional[ConformalFactor] = None
    circumradius: float = 0.0
    run_id: str = field(default="", compare=False)

    @property
    def factor(self):
        bg = self.background
        centers = self.sources if bg is None else np.vstack([bg.centers, self.sources])
        coeffs = self.coeffs if bg is None else np.concatenate([bg.coeffs, self.coeffs])
        bumps = () if bg is None else bg.bumps
        prov = {"run_id": self.run_id, "bc": self.bc.to_json(),
                "residual": self.certificate["residual"],
                "superharmonic": self.certificate["superharmonic"],
                "circumradius": self.circumradius}
        return ConformalFactor(self.n, centers, coeffs, bumps, prov)

    @property
    def capacity_coefficient(self):
        """``-sum c_j``: the capacity when this is a Dirichlet-0 potential with no background."""
        return -float(np.sum(self.coeffs))

    def value_and_gradient(self, x):
        return self.factor.value_and_gradient(x)

    def value(self, x):
        return self.factor.value(x)

    def gradient(self, x):
        return self.factor.gradient(x)

    def to_json(self):
        return {"run_id": self.run_id, "n": int(self.n),
                "sources": self.sources.tolist(), "coeffs": self.coeffs.tolist(),
                "bc": self.bc.to_json(), "certificate": self.certificate,
                "background": None if self.background is None else self.background.to_json(),
                "circumradius": self.circumradius}

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        bg = d.get("background")
        return cls(n, np.asarray(d["sources"], dtype=float).reshape(-1, n),
                   np.asarray(d["coeffs"], dtype=float), BoundaryCondition.from_json(d["bc"]),
                   d["certificate"], None if bg is None else ConformalFactor.from_json(bg, n),
                   float(d.get("circumradius", 0.0)), d.get("run_id", ""))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _run_id(n, sources, coeffs, bc):
    h = hashlib.sha256()
    h.update(str(n).encode())
    h.update(np.ascontiguousarray(sources).tobytes())
    h.update(np.ascontiguousarray(coeffs).tobytes())
    h.update(json.dumps(bc.to_json(), sort_keys=True).encode())
    return h.hexdigest()[:16]


def _axis_sources(comp, count, n):
    """Chebyshev-spaced sources on the focal segment of a prolate spheroid.

    The exterior potential of a prolate spheroid continues harmonically up to
    that segment, which reaches far closer to the tips than any surface source
    grid; other shapes get none.
    """
    r = comp.radial
    if not isinstance(r, SpheroidProfile) or r.a <= r.b or count < 1:
        return np.empty((0, n))
    axis = _unit(r.axis, n)
    c = np.sqrt(r.a ** 2 - r.b ** 2)
    t = c * np.cos(np.pi * (np.arange(count) + 0.5) / count)
    return comp.center + t[:, None] * axis


def _source_sets(domain, N, spec):
    """Candidate source sets: component centers, then centers plus interior surfaces.

    Surface sources sit at ``x - (1 - shrink) min(|x - x0|, 1/kappa_max) nu``
    over a boundary grid, which keeps them inside the focal set of strongly
    curved regions. Prolate spheroids also get sources on their focal segment.
    """
    centers = np.array([c.center for c in domain.components])
    yield centers
    n = domain.n
    Ns = max(MIN_RESOLUTION, int(round(spec.source_ratio * N)))
    smesh = boundary_quadrature(domain, Ns, strict=False)
    reach = np.linalg.norm(smesh.nodes - smesh.centers[smesh.component], axis=1)
    reach = np.minimum(reach, 1.0 / np.maximum(smesh.max_curvature, 1e-300))
    depth = (1.0 - spec.shrink) * reach
    parts = [centers, smesh.nodes - depth[:, None] * smesh.normals]
    parts += [_axis_sources(c, N, n) for c in domain.components]
    yield np.vstack(parts)


def _rows(mesh, sources, bc, background, r_char):
    """Design matrix and right-hand side; Robin rows are scaled by ``r_char``."""
    n = mesh.n
    p = n - 2
    G = _kernels.potential_matrix(mesh.nodes, sources, p)
    bg_val, bg_grad = (np.ones(mesh.size), np.zeros((mesh.size, n))) if background is None \
        else background.value_and_gradient(mesh.nodes)
    A = np.empty_like(G)
    b = np.empty(mesh.size)
    robin_mask = np.zeros(mesh.size, dtype=bool)
    for i, kind in enumerate(bc.kinds):
        m = mesh.component == i
        if kind[0] == "dirichlet":
            A[m] = G[m]
            b[m] = kind[1] - bg_val[m]
        else:
            robin_mask |= m
    if robin_mask.any():
        D = _kernels.normal_derivative_matrix(mesh.nodes[robin_mask], mesh.normals[robin_mask],
                                              sources, p)
        beta = robin_coefficient(n, mesh.mean_curvature[robin_mask])
        A[robin_mask] = r_char * (D + beta[:, None] * G[robin_mask])
        dn_bg = np.einsum("ij,ij->i", bg_grad[robin_mask], mesh.normals[robin_mask])
        b[robin_mask] = -r_char * (dn_bg + beta * bg_val[robin_mask])
    return A, b


def _residuals(mesh, u, bc, r_char):
    n = mesh.n
    val, grad = u.value_and_gradient(mesh.nodes)
    dnu = np.einsum("ij,ij->i", grad, mesh.normals)
    res = np.empty(mesh.size)
    for i, kind in enumerate(bc.kinds):
        m = mesh.component == i
        if kind[0] == "dirichlet":
            res[m] = val[m] - kind[1]
        else:
            res[m] = r_char * (dnu[m] + robin_coefficient(n, mesh.mean_curvature[m]) * val[m])
    return res, val, dnu


def _lstsq(A, b, spec):
    colnorm = np.linalg.norm(A, axis=0)
    colnorm[colnorm == 0] = 1.0
    As = A / colnorm
    U, S, Vt = np.linalg.svd(As, full_matrices=False)
    cond = float(S[0] / S[-1]) if S[-1] > 0 else np.inf
    keep = S > spec.truncation * S[0]
    x = Vt[keep].T @ ((U[:, keep].T @ b) / S[keep])
    return x / colnorm, cond, int(keep.sum())


def _amplification(A, coeffs, b):
    return float(np.max(np.abs(A) @ np.abs(coeffs)) / max(np.max(np.abs(b)), 1e-300))


def solve(domain, mesh=None, bc=None, spec=None, background=None, check_mesh=None, certify=True):
    """Least-squares MFS solve; returns a certified :class:`HarmonicFunction`.

    Tries a single source at each component center first (exact for balls),
    then the full interior source set. ``mesh`` only fixes the resolution.
    Collocation runs on a finer grid and the residual is certified on a
    randomly rotated copy of the base grid (``spec.seed``). With
    ``certify=False`` every stage runs and a residual above the threshold is
    recorded instead of raised (for convergence studies).
    """
    spec = spec or SolverSpec()
    n = domain.n
    N = spec.resolution or (mesh.resolution if mesh is not None else default_resolution(n))
    bc = bc or BoundaryCondition.dirichlet(domain.k)
    if len(bc.kinds) != domain.k:
        raise ValueError("one boundary condition per component is required")
    rot = random_rotation(n, np.random.default_rng(spec.seed))
    if check_mesh is None:
        check_mesh = boundary_quadrature(domain, N, rotation=rot, strict=certify)
    area = float(np.sum(check_mesh.weights))
    r_char = (area / (domain.k * omega(n))) ** (1.0 / (n - 1))
    last = None
    for stage, sources in enumerate(_source_sets(domain, N, spec)):
        ov = spec.oversample or (4.0 if n == 3 else 2.0)
        Nc = N if stage == 0 else int(np.ceil(N * ov ** (1.0 / (n - 1)) - 1e-9))
        colloc = boundary_quadrature(domain, Nc, strict=certify)
        sw = np.sqrt(colloc.weights / np.mean(colloc.weights))
        A, b = _rows(colloc, sources, bc, background, r_char)
        coeffs, cond, rank = _lstsq(A * sw[:, None], b * sw, spec)
        amp = _amplification(A, coeffs, b)
        hf = _assemble(domain, sources, coeffs, bc, background, {})
        res, val, dnu = _residuals(check_mesh, hf.factor, bc, r_char)
        coll = float(np.max(np.abs(A @ coeffs - b)))
        last = (sources, coeffs, cond, rank, stage, float(np.max(np.abs(res))), coll, amp)
        logger.debug("stage %d: %d sources, cond %.3g, amp %.3g, residual %.3g",
                     stage, len(sources), cond, amp, last[5])
        if certify and last[5] <= spec.residual_threshold:
            break
    sources, coeffs, cond, rank, stage, resid, coll, amp = last
    if amp > spec.amplification_limit:
        raise IllConditioned(f"coefficient amplification {amp:.3g} exceeds {spec.amplification_limit:.3g}")
    if certify and resid > spec.residual_threshold:
        raise ResidualTooLarge(f"check-node residual {resid:.3g} > {spec.residual_threshold:.3g}")
    cert = _certificate(domain, check_mesh, bc, background, sources, coeffs, r_char)
    cert.update({"residual": resid, "collocation_residual": coll, "threshold": spec.residual_threshold,
                 "condition": cond, "amplification": amp, "rank": rank, "stage": stage,
                 "n_sources": int(len(sources)), "n_collocation": int(colloc.size),
                 "resolution": int(N), "seed": int(spec.seed)})
    return _assemble(domain, sources, coeffs, bc, background, cert)


def _assemble(domain, sources, coeffs, bc, background, cert):
    cert = dict(cert)
    cert.setdefault("residual", np.inf)
    cert.setdefault("superharmonic", background is None or background.superharmonic)
    hf = HarmonicFunction(domain.n, np.asarray(sources), np.asarray(coeffs), bc, cert, background,
                          domain.circumradius())
    return replace(hf, run_id=_run_id(domain.n, hf.sources, hf.coeffs, bc))


def _certificate(domain, check_mesh, bc, background, sources, coeffs, r_char):
    u = _assemble(domain, sources, coeffs, bc, background, {}).factor
    val, grad = u.value_and_gradient(check_mesh.nodes)
    dnu = np.einsum("ij,ij->i", grad, check_mesh.normals)
    cert = {}
    d0 = [i for i, k in enumerate(bc.kinds) if k[0] == "dirichlet" and k[1] == 0.0]
    rb = [i for i, k in enumerate(bc.kinds) if k[0] == "robin"]
    positive_flux = True
    if d0:
        m = check_mesh.mask(d0)
        cert["min_dnu_dirichlet0"] = float(np.min(dnu[m]))
        positive_flux = cert["min_dnu_dirichlet0"] > 0
    if rb:
        m = check_mesh.mask(rb)
        cert["min_u_minus_1_robin"] = float(np.min(val[m]) - 1.0)
    harmonic_ok = background is None or background.superharmonic
    cert["superharmonic"] = bool(harmonic_ok and positive_flux)
    return cert


# --- capacity ----------------------------------------------------------------

class CapacityResult(NamedTuple):
    value: float
    error: float
    coefficient: float
    flux: float
    potential: HarmonicFunction


def flux_capacity(potential, mesh):
    """``(1/((n-2) omega)) int_Sigma d_nu phi dA``."""
    n = mesh.n
    dnu = potential.factor.normal_derivative(mesh)
    return float(np.dot(mesh.weights, dnu)) / ((n - 2) * omega(n))


def capacity(domain, mesh=None, spec=None, potential=None, certify=True):
    """Capacity by the coefficient sum (primary) and the boundary flux (cross-check).

    The error estimate combines the flux/coefficient gap with the maximum
    principle bound ``residual * cap``.
    """
    spec = spec or SolverSpec()
    mesh = mesh if mesh is not None else boundary_quadrature(domain, spec.resolution)
    if potential is None:
        potential = solve(domain, mesh, BoundaryCondition.dirichlet(domain.k), spec, certify=certify)
    coef = potential.capacity_coefficient
    flux = flux_capacity(potential, mesh)
    err = max(abs(flux - coef), potential.certificate["residual"] * abs(coef), 1e-15 * abs(coef))
    return CapacityResult(coef, err, coef, flux, potential)


# --- mixed problems --------------------------------------------------------------

class MixedSolution(NamedTuple):
    harmonic: HarmonicFunction
    min_u_plus: Optional[float]
    k_plus: int

    @property
    def factor(self):
        return self.harmonic.factor


def solve_mixed(omega_plus, omega_minus, spec=None, mesh=None, background=None):
    """Robin (minimal) on the components of ``omega_plus``, Dirichlet 0 on ``omega_minus``.

    Either side may be ``None``. The combined domain lists the plus
    components first. Reports the sampled minimum of ``u`` on the plus side.
    """
    spec = spec or SolverSpec()
    if omega_plus is None and omega_minus is None:
        raise ValueError("at least one of the two domains is required")
    if omega_plus is None:
        domain, kp = omega_minus, 0
    elif omega_minus is None:
        domain, kp = omega_plus, omega_plus.k
    else:
        domain, kp = omega_plus.union(omega_minus), omega_plus.k
    bc = BoundaryCondition.mixed(kp, domain.k - kp)
    mesh = mesh if mesh is not None else boundary_quadrature(domain, spec.resolution)
    hf = solve(domain, mesh, bc, spec, background)
    min_u = None
    if kp:
        m = mesh.mask(list(range(kp)))
        min_u = float(np.min(hf.value(mesh.nodes[m])))
    return MixedSolution(hf, min_u, kp)
