"""Conformal factors ``u`` for metrics ``g = u^{4/(n-2)} delta`` and their curvature laws.

A factor is ``u(x) = 1 + sum_i a_i |x - x_i|^{-(n-2)} + sum_b N_b(x)`` where the
``N_b`` are Newtonian potentials of radial polynomial bumps,
``Delta N_b = -density_b``. Closed-form pole families, bump potentials and
numeric exterior solutions (whose fundamental-solution sources are poles) all
share this representation; ``provenance`` marks numeric ones.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy import special

from . import _kernels
from .errors import EvaluationAtSingularity, NonConvergentFlux, NonConvergentIntegral
from .geometry import omega, sphere_grid

FLUX_RESOLUTION = {3: 24, 4: 10, 5: 7, 6: 5, 7: 4}
MINIMAL_REL_TOL = 1e-6


@dataclass(frozen=True)
class RadialBump:
    """Density ``amplitude * (1 - r^2/s^2)^2`` on the ball ``|x - center| < s``.

    Its potential solves ``Delta N = -density`` and decays like
    ``mass / ((n-2) omega) |x|^{-(n-2)}``.
    """

    center: np.ndarray
    radius: float
    amplitude: float

    def density(self, x):
        r2 = np.sum((np.atleast_2d(x) - self.center) ** 2, axis=1) / self.radius ** 2
        return np.where(r2 < 1.0, self.amplitude * (1.0 - r2) ** 2, 0.0)

    def _inner(self, r, n):
        # I(r) = int_0^r density(t) t^{n-1} dt, for r <= s
        s = self.radius
        return self.amplitude * (r ** n / n - 2 * r ** (n + 2) / ((n + 2) * s ** 2)
                                 + r ** (n + 4) / ((n + 4) * s ** 4))

    def _outer(self, r):
        # J(r) = int_r^s density(t) t dt, for r <= s
        s = self.radius

        def prim(t):
            return t ** 2 / 2 - t ** 4 / (2 * s ** 2) + t ** 6 / (6 * s ** 4)

        return self.amplitude * (prim(s) - prim(r))

    def mass(self, n):
        """Total mass ``int density dV``, by Gauss-Jacobi quadrature of the radial profile."""
        t, w = special.roots_jacobi(8, 0.0, n - 1.0)  # weight (1+t)^{n-1} on [-1, 1]
        r = 0.5 * (t + 1.0) * self.radius
        prof = self.amplitude * (1.0 - (r / self.radius) ** 2) ** 2
        return omega(n) * float(np.dot(w, prof)) * (0.5 * self.radius) ** n

    def value_and_gradient(self, x, n):
        y = np.atleast_2d(x) - self.center
        r = np.linalg.norm(y, axis=1)
        rc = np.minimum(r, self.radius)
        inner = self._inner(rc, n)
        safe = np.where(r > 0, r, 1.0)
        val = (np.where(r > 0, safe ** (2 - n) * inner, 0.0) + self._outer(rc)) / (n - 2)
        grad = np.where(r[:, None] > 0, (-safe ** (-n) * inner)[:, None] * y, 0.0)
        return val, grad

    def to_json(self):
        return {"center": [float(v) for v in self.center], "radius": float(self.radius),
                "amplitude": float(self.amplitude)}

    @classmethod
    def from_json(cls, d):
        return cls(np.asarray(d["center"], dtype=float), float(d["radius"]), float(d["amplitude"]))


@dataclass(frozen=True)
class ConformalFactor:
    """``u = 1 + poles + bumps``; immutable and safe to share."""

    n: int
    centers: np.ndarray
    coeffs: np.ndarray
    bumps: tuple = ()
    provenance: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, self.n)
        a = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if len(c) != len(a):
            raise ValueError("centers and coefficients differ in length")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "coeffs", a)

    @property
    def kind(self):
        if self.provenance is not None:
            return "numeric"
        return "bump" if self.bumps else "poles"

    @property
    def is_harmonic(self):
        return not self.bumps

    @property
    def superharmonic(self):
        """Delta u <= 0 away from the poles.

        Poles sit inside the excised domain, so only bump densities matter.
        """
        return all(b.amplitude >= 0 for b in self.bumps)

    def value_and_gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        val, grad = _kernels.evaluate(x, self.centers, self.coeffs, self.n - 2)
        val = val + 1.0
        for b in self.bumps:
            bv, bg = b.value_and_gradient(x, self.n)
            val = val + bv
            grad = grad + bg
        return val, grad

    def value(self, x):
        return self.value_and_gradient(x)[0]

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def laplacian(self, x):
        """Exact Laplacian away from the poles."""
        x = np.atleast_2d(x)
        out = np.zeros(len(x))
        for b in self.bumps:
            out -= b.density(x)
        return out

    def normal_derivative(self, mesh):
        return np.einsum("ij,ij->i", self.gradient(mesh.nodes), mesh.normals)

    def extent(self):
        """Radius about the origin enclosing every pole and bump support."""
        r = 0.0
        if len(self.centers):
            r = float(np.max(np.linalg.norm(self.centers, axis=1)))
        for b in self.bumps:
            r = max(r, float(np.linalg.norm(b.center)) + b.radius)
        if self.provenance and "circumradius" in self.provenance:
            r = max(r, float(self.provenance["circumradius"]))
        return r

    def coefficient_mass(self):
        """Far-field monopole ``2 (sum a_i + sum_b mass_b / ((n-2) omega))``."""
        n = self.n
        total = float(np.sum(self.coeffs))
        total += sum(b.mass(n) for b in self.bumps) / ((n - 2) * omega(n))
        return 2.0 * total

    def scaled_coefficients(self, lam):
        return replace(self, coeffs=self.coeffs * lam)

    def check_against(self, domain):
        """Raise unless poles lie inside the domain and bump supports avoid its boundary."""
        if len(self.centers) and not np.all(domain.contains(self.centers)):
            raise EvaluationAtSingularity("a pole of the conformal factor lies outside the domain")
        dirs, _ = sphere_grid(self.n, 8)
        for b in self.bumps:
            pts = b.center + b.radius * dirs
            inside = domain.contains(np.vstack([pts, b.center[None]]))
            if inside.any() and not inside.all():
                raise EvaluationAtSingularity("a bump support straddles the domain boundary")

    def bumps_in_exterior(self, domain):
        return tuple(b for b in self.bumps if not domain.contains(b.center[None])[0])

    def to_json(self):
        d = {"kind": self.kind, "n": int(self.n),
             "poles": [{"x": [float(v) for v in c], "a": float(a)}
                       for c, a in zip(self.centers, self.coeffs)]}
        if self.bumps:
            d["bump"] = [b.to_json() for b in self.bumps]
        if self.provenance is not None:
            d["provenance"] = self.provenance
        return d

    @classmethod
    def from_json(cls, d, n=None):
        n = int(d.get("n", n))
        poles = d.get("poles", [])
        centers = np.array([p["x"] for p in poles], dtype=float).reshape(-1, n)
        coeffs = np.array([p["a"] for p in poles], dtype=float)
        bumps = tuple(RadialBump.from_json(b) for b in d.get("bump", []))
        return cls(n, centers, coeffs, bumps, d.get("provenance"))


def pole_family(n, poles):
    """Factor ``1 + sum a_i |x - x_i|^{-(n-2)}`` from ``[(x_i, a_i), ...]``."""
    centers = np.array([np.asarray(p, dtype=float) for p, _ in poles]).reshape(-1, n)
    coeffs = np.array([a for _, a in poles], dtype=float)
    return ConformalFactor(n, centers, coeffs)


def schwarzschild(n, m, center=None):
    """``u = 1 + m / (2 |x|^{n-2})``; for ``m < 0`` it vanishes on ``|x| = (|m|/2)^{1/(n-2)}``."""
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return pole_family(n, [(center, m / 2.0)])


def schwarzschild_radius(n, m):
    return (abs(m) / 2.0) ** (1.0 / (n - 2))


def bump_potential(n, poles=(), bumps=()):
    base = pole_family(n, poles) if poles else ConformalFactor(n, np.zeros((0, n)), np.zeros(0))
    return replace(base, bumps=tuple(bumps))


def as_factor(u):
    """Accept a :class:`ConformalFactor` or anything exposing ``.factor``."""
    return u if isinstance(u, ConformalFactor) else u.factor


# --- curvature laws ------------------------------------------------------------

def _conformal_exponent(n):
    return 4.0 * (n - 1) / (n - 2)


def scalar_curvature(u, x):
    """``R_g = -(4(n-1)/(n-2)) u^{-(n+2)/(n-2)} Delta u`` at the points ``x``."""
    u = as_factor(u)
    n = u.n
    val = u.value(x)
    if np.any(val <= 0):
        raise EvaluationAtSingularity("u <= 0: scalar curvature undefined")
    return -_conformal_exponent(n) * val ** (-(n + 2) / (n - 2)) * u.laplacian(x)


class ConformalMeanCurvature(NamedTuple):
    values: np.ndarray
    minimal: bool
    tolerance: float


def minimality_tolerance(n, r_char):
    return MINIMAL_REL_TOL * (n - 1) / r_char


def conformal_mean_curvature(u, mesh, tolerance=None, r_char=None):
    """``H_g = u^{-n/(n-2)} (H u + (2(n-1)/(n-2)) d_nu u)`` at each boundary node."""
    u = as_factor(u)
    n = u.n
    val, grad = u.value_and_gradient(mesh.nodes)
    if np.any(val <= 0):
        raise EvaluationAtSingularity("u vanishes on the boundary: mean curvature of g undefined")
    dnu = np.einsum("ij,ij->i", grad, mesh.normals)
    hg = val ** (-n / (n - 2)) * (mesh.mean_curvature * val + 2.0 * (n - 1) / (n - 2) * dnu)
    if tolerance is None:
        if r_char is None:
            r_char = (np.sum(mesh.weights) / omega(n)) ** (1.0 / (n - 1))
        tolerance = minimality_tolerance(n, r_char)
    return ConformalMeanCurvature(hg, bool(np.max(np.abs(hg)) <= tolerance), float(tolerance))


def metric_area(u, mesh, components=None):
    """g-area ``int u^{2(n-1)/(n-2)} dA`` of boundary components."""
    u = as_factor(u)
    n = u.n
    return mesh.integrate(u.value(mesh.nodes) ** (2.0 * (n - 1) / (n - 2)), components)


# --- ADM mass ------------------------------------------------------------------

class MassEstimate(NamedTuple):
    value: float
    error: float
    method: str
    cross_check: Optional[float] = None


def flux_mass(u, radii, resolution=None, center=None):
    """``-(2/((n-2) omega)) int_{S_r} d_r u dA`` for each radius."""
    u = as_factor(u)
    n = u.n
    N = resolution or FLUX_RESOLUTION.get(n, 4)
    dirs, w = sphere_grid(n, N)
    center = np.zeros(n) if center is None else np.asarray(center)
    out = []
    for r in radii:
        grad = u.gradient(center + r * dirs)
        dr = np.einsum("ij,ij->i", grad, dirs)
        out.append(-2.0 / ((n - 2) * omega(n)) * r ** (n - 1) * float(np.dot(w, dr)))
    return np.array(out)


def adm_mass_flux(u, levels=7, resolution=None):
    """Richardson-extrapolated flux mass on ``r_k = r_min 2^k``.

    ``r_min`` is four times the radius enclosing the factor's sources. The
    error estimate is the last extrapolation gap.
    """
    u = as_factor(u)
    n = u.n
    r_min = 4.0 * max(u.extent(), 1e-3)
    radii = r_min * 2.0 ** np.arange(levels)
    F = flux_mass(u, radii, resolution)
    q = radii ** (n - 2)
    extrap = (q[1:] * F[1:] - q[:-1] * F[:-1]) / (q[1:] - q[:-1])
    gaps = np.abs(np.diff(extrap))
    floor = 1e-12 * max(1.0, float(np.max(np.abs(F))))
    if gaps[-1] > floor and gaps[-1] > gaps[0]:
        raise NonConvergentFlux(f"extrapolation gaps grow: {gaps[0]:.3g} -> {gaps[-1]:.3g}")
    return MassEstimate(float(extrap[-1]), float(max(gaps[-1], floor)), "flux")


def adm_mass(u):
    """ADM mass of ``u^{4/(n-2)} delta``.

    Closed-form families use the exact monopole coefficient with the flux path
    as cross-check; numeric factors use the flux path with the coefficient
    sum as cross-check.
    """
    u = as_factor(u)
    exact = u.coefficient_mass()
    flux = adm_mass_flux(u)
    if u.kind == "numeric":
        return MassEstimate(flux.value, max(flux.error, abs(flux.value - exact)), "flux", exact)
    return MassEstimate(exact, 0.0, "coefficients", flux.value)


# --- weighted scalar-curvature integrals ----------------------------------------

class IntegralEstimate(NamedTuple):
    value: float
    error: float


def _ball_quadrature(n, center, radius, nr, N):
    t, wt = special.roots_legendre(nr)
    r = 0.5 * radius * (t + 1.0)
    wr = 0.5 * radius * wt * r ** (n - 1)
    dirs, ws = sphere_grid(n, N)
    pts = center + (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    return pts, (wr[:, None] * ws[None, :]).ravel()


def _bump_integral(u, w, bump, nr, N):
    n = u.n
    pts, wts = _ball_quadrature(n, bump.center, bump.radius, nr, N)
    val = u.value(pts)
    if np.any(val <= 0):
        raise EvaluationAtSingularity("u <= 0 inside a bump support")
    integrand = -_conformal_exponent(n) * val ** (w + 1.0) * u.laplacian(pts)
    return float(np.dot(wts, integrand))


def weighted_scalar_integral(u, w, domain=None, radial_nodes=24, resolution=None):
    """``I_w = int_M R_g u^w dV_g`` for ``w`` in {-1, -2}.

    Uses ``R_g u^w dV_g = -(4(n-1)/(n-2)) u^{w+1} Delta u dV``; ``Delta u``
    vanishes outside bump supports, so the exterior integral reduces to
    product quadrature (radial Gauss x sphere) over the supports lying in M.
    """
    u = as_factor(u)
    if w not in (-1, -2):
        raise ValueError("weight exponent must be -1 or -2")
    bumps = u.bumps if domain is None else u.bumps_in_exterior(domain)
    if not bumps:
        return IntegralEstimate(0.0, 0.0)
    n = u.n
    N = resolution or FLUX_RESOLUTION.get(n, 4)
    fine = sum(_bump_integral(u, w, b, radial_nodes, N) for b in bumps)
    coarse = sum(_bump_integral(u, w, b, max(4, (3 * radial_nodes) // 4), max(4, (3 * N) // 4))
                 for b in bumps)
    err = abs(fine - coarse)
    if err > 1e-4 * max(abs(fine), 1e-12):
        raise NonConvergentIntegral(f"bump quadrature gap {err:.3g} vs value {fine:.3g}")
    return IntegralEstimate(fine, err)


def exterior_integral(f, component, n, radial_nodes=32, resolution=None):
    """``int f dV`` over the exterior of one star component.

    Rays ``x0 + (rho(w)/s) w`` with ``s`` in (0, 1]; the substitution maps
    the unbounded ray onto a finite interval so no cutoff radius is needed,
    provided ``f`` decays at least like ``|x|^{-n-1}``.
    """
    N = resolution or FLUX_RESOLUTION.get(n, 4)
    dirs, ws = sphere_grid(n, N)
    rho = component.radial(dirs)
    t, wt = special.roots_legendre(radial_nodes)
    s = 0.5 * (t + 1.0)
    ws_ = 0.5 * wt
    r = rho[None, :] / s[:, None]
    pts = component.center + (r[..., None] * dirs[None, :, :]).reshape(-1, n)
    jac = (rho[None, :] ** n * s[:, None] ** (-(n + 1)))
    wts = (ws_[:, None] * ws[None, :] * jac).ravel()
    return float(np.dot(wts, f(pts)))


def log_gradient_energy(u, component, radial_nodes=32, resolution=None):
    """``int_M |grad u|^2 / u^2 dV`` outside one star component, with a two-resolution error."""
    u = as_factor(u)
    n = u.n

    def f(x):
        val, grad = u.value_and_gradient(x)
        return np.einsum("ij,ij->i", grad, grad) / val ** 2

    N = resolution or FLUX_RESOLUTION.get(n, 4)
    fine = exterior_integral(f, component, n, radial_nodes, N)
    coarse = exterior_integral(f, component, n, max(8, (3 * radial_nodes) // 4), max(4, (3 * N) // 4))
    return IntegralEstimate(fine, abs(fine - coarse))
