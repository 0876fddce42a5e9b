"""Star-shaped domains in R^n, their boundary quadrature and Euclidean functionals.

A domain is a finite union of components ``{x0 + r w : 0 <= r < rho(w)}``
where ``rho`` is a positive function on the unit sphere. Boundary nodes are
the images of a product quadrature on the sphere; normals and mean
curvatures come from the level-set function ``F(x) = |x - x0| - rho(...)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import special
from scipy.spatial import cKDTree

from .errors import NonPositiveRadius, OverlappingComponents, UnresolvedSpec

EPS_QUAD = 1e-8
MIN_RESOLUTION = 4
# polar-node count giving a few thousand boundary nodes per component
DEFAULT_RESOLUTION = {3: 24, 4: 10, 5: 6, 6: 5, 7: 4}
_FD_REL_STEP = 2e-3


def omega(n):
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)


def beta(n):
    """Volume of the unit ball in R^n."""
    return np.pi ** (n / 2.0) / special.gamma(n / 2.0 + 1.0)


def default_resolution(n):
    return DEFAULT_RESOLUTION.get(n, 4)


# --- sphere quadrature -----------------------------------------------------

@lru_cache(maxsize=64)
def _sphere_grid_cached(n, N):
    # hyperspherical coordinates with w_1 = cos(theta_1) along the first axis
    ts, ws = [], []
    for k in range(1, n - 1):
        x, w = special.roots_gegenbauer(N, (n - 1 - k) / 2.0)
        ts.append(x)
        ws.append(w)
    nphi = 2 * N
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = np.full(nphi, 2.0 * np.pi / nphi)
    grids = np.meshgrid(*ts, phi, indexing="ij")
    wgrids = np.meshgrid(*ws, wphi, indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids]), axis=0)
    cols = []
    prod_s = np.ones(grids[0].size)
    for t in grids[:-1]:
        t = t.ravel()
        cols.append(prod_s * t)
        prod_s = prod_s * np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    ph = grids[-1].ravel()
    cols.append(prod_s * np.cos(ph))
    cols.append(prod_s * np.sin(ph))
    dirs = np.stack(cols, axis=1)
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def sphere_grid(n, N, rotation=None):
    """Product quadrature on S^{n-1}: directions ``(M, n)`` and weights ``(M,)``.

    Gauss-Gegenbauer in the cosine of each of the ``n - 2`` polar angles
    (Gauss-Legendre for n = 3) times the trapezoid rule in the azimuth, so the
    rule is exact for spherical polynomials of degree ``<= 2N - 1``.
    ``M = 2 N^{n-1}``.
    """
    if n < 3:
        raise ValueError("dimension must be >= 3")
    if N < 1:
        raise ValueError("resolution must be positive")
    dirs, weights = _sphere_grid_cached(int(n), int(N))
    if rotation is not None:
        dirs = dirs @ np.asarray(rotation).T
    return dirs, weights


def grid_size(n, N):
    return 2 * N ** (n - 1)


def random_rotation(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _unit(v, n):
    v = np.zeros(n) if v is None else np.asarray(v, dtype=float)
    if not v.any():
        v = np.zeros(n)
        v[0] = 1.0
    return v / np.linalg.norm(v)


# --- radial functions --------------------------------------------------------

class RadialFunction:
    """Positive function on the unit sphere, evaluated on arrays of unit vectors."""

    kind = "abstract"

    def __call__(self, w):
        raise NotImplementedError

    def scaled(self, lam):
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantRadius(RadialFunction):
    r: float
    kind = "constant"

    def __call__(self, w):
        return np.full(np.shape(w)[:-1], float(self.r))

    def scaled(self, lam):
        return ConstantRadius(self.r * lam)

    def to_json(self):
        return {"kind": "constant", "r": float(self.r)}


@dataclass(frozen=True)
class CosineProfile(RadialFunction):
    """Axisymmetric ``rho(theta) = sum_k c_k cos(k theta)``, theta measured from ``axis``."""

    coeffs: tuple
    axis: Optional[tuple] = None
    kind = "axisymmetric"

    def __call__(self, w):
        w = np.asarray(w)
        ct = np.clip(w @ _unit(self.axis, w.shape[-1]), -1.0, 1.0)
        return np.polynomial.chebyshev.chebval(ct, np.asarray(self.coeffs, dtype=float))

    def scaled(self, lam):
        return CosineProfile(tuple(lam * c for c in self.coeffs), self.axis)

    def to_json(self):
        d = {"kind": "axisymmetric", "profile": "cosine", "coeffs": [float(c) for c in self.coeffs]}
        if self.axis is not None:
            d["axis"] = [float(a) for a in self.axis]
        return d


@dataclass(frozen=True)
class SpheroidProfile(RadialFunction):
    """Spheroid with semi-axis ``a`` along ``axis`` and ``b`` across it."""

    a: float
    b: float
    axis: Optional[tuple] = None
    kind = "axisymmetric"

    def __call__(self, w):
        w = np.asarray(w)
        c2 = np.clip((w @ _unit(self.axis, w.shape[-1])) ** 2, 0.0, 1.0)
        return 1.0 / np.sqrt(c2 / self.a ** 2 + (1.0 - c2) / self.b ** 2)

    def scaled(self, lam):
        return SpheroidProfile(self.a * lam, self.b * lam, self.axis)

    def to_json(self):
        d = {"kind": "axisymmetric", "profile": "spheroid", "a": float(self.a), "b": float(self.b)}
        if self.axis is not None:
            d["axis"] = [float(a) for a in self.axis]
        return d


@dataclass(frozen=True)
class SphericalHarmonicSum(RadialFunction):
    """n = 3 only: ``r0 + sum a P_l^|m|(cos theta) trig(m phi)`` in the usual z-polar angles.

    ``m >= 0`` pairs with ``cos(m phi)``, ``m < 0`` with ``sin(|m| phi)``.
    """

    r0: float
    terms: tuple = ()
    kind = "sph_harmonic"

    def __call__(self, w):
        w = np.asarray(w)
        if w.shape[-1] != 3:
            raise ValueError("spherical-harmonic radial functions are defined for n = 3 only")
        z = np.clip(w[..., 2], -1.0, 1.0)
        phi = np.arctan2(w[..., 1], w[..., 0])
        out = np.full(z.shape, float(self.r0))
        for l, m, a in self.terms:
            trig = np.cos(m * phi) if m >= 0 else np.sin(-m * phi)
            out = out + a * special.lpmv(abs(m), l, z) * trig
        return out

    def scaled(self, lam):
        return SphericalHarmonicSum(self.r0 * lam, tuple((l, m, a * lam) for l, m, a in self.terms))

    def to_json(self):
        return {"kind": "sph_harmonic", "r0": float(self.r0),
                "terms": [{"l": int(l), "m": int(m), "a": float(a)} for l, m, a in self.terms]}


def radial_from_json(d):
    """Build a :class:`RadialFunction` from its JSON descriptor."""
    kind = d.get("kind")
    if kind == "constant":
        return ConstantRadius(float(d["r"]))
    if kind == "axisymmetric":
        profile = d.get("profile", "cosine")
        axis = tuple(float(a) for a in d["axis"]) if "axis" in d else None
        if profile == "cosine":
            return CosineProfile(tuple(float(c) for c in d["coeffs"]), axis)
        if profile == "spheroid":
            return SpheroidProfile(float(d["a"]), float(d["b"]), axis)
        raise ValueError(f"unknown axisymmetric profile {profile!r}")
    if kind == "sph_harmonic":
        terms = tuple((int(t["l"]), int(t["m"]), float(t["a"])) for t in d.get("terms", []))
        return SphericalHarmonicSum(float(d["r0"]), terms)
    raise ValueError(f"unknown radial kind {kind!r}")


# --- domains -------------------------------------------------------------------

@dataclass(frozen=True)
class StarComponent:
    center: np.ndarray
    radial: RadialFunction

    def contains(self, x):
        y = np.atleast_2d(x) - self.center
        r = np.linalg.norm(y, axis=1)
        inside = np.zeros(len(r), dtype=bool)
        pos = r > 0
        inside[~pos] = True
        inside[pos] = r[pos] < self.radial(y[pos] / r[pos, None])
        return inside


@dataclass(frozen=True)
class StarDomain:
    n: int
    components: tuple

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("dimension n must be an integer >= 3")
        if not self.components:
            raise ValueError("a domain needs at least one component")
        for c in self.components:
            if np.shape(c.center) != (self.n,):
                raise ValueError("component center has wrong dimension")
        _validate_radii(self)
        _validate_disjoint(self)

    @property
    def k(self):
        return len(self.components)

    def scaled(self, lam):
        return StarDomain(self.n, tuple(StarComponent(lam * c.center, c.radial.scaled(lam))
                                        for c in self.components))

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float)
        return StarDomain(self.n, tuple(StarComponent(c.center + shift, c.radial)
                                        for c in self.components))

    def contains(self, x):
        x = np.atleast_2d(x)
        out = np.zeros(len(x), dtype=bool)
        for c in self.components:
            out |= c.contains(x)
        return out

    def circumradius(self, about=None):
        """Radius of a ball about ``about`` (default origin) enclosing the domain."""
        about = np.zeros(self.n) if about is None else np.asarray(about)
        dirs, _ = sphere_grid(self.n, 8)
        r = 0.0
        for c in self.components:
            r = max(r, np.linalg.norm(c.center - about) + 1.05 * float(np.max(c.radial(dirs))))
        return r

    def to_json(self):
        return {"n": int(self.n),
                "components": [{"center": [float(v) for v in c.center], "radial": c.radial.to_json()}
                               for c in self.components]}

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        comps = tuple(StarComponent(np.asarray(c["center"], dtype=float), radial_from_json(c["radial"]))
                      for c in d["components"])
        return cls(n, comps)

    def union(self, other):
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return StarDomain(self.n, self.components + other.components)


def _validation_grid(n):
    N = {3: 48, 4: 16, 5: 8, 6: 6, 7: 5}.get(n, 4)
    return sphere_grid(n, N)


def _validate_radii(domain):
    dirs, _ = _validation_grid(domain.n)
    for i, c in enumerate(domain.components):
        rho = c.radial(dirs)
        if not np.all(np.isfinite(rho)) or np.min(rho) <= 0:
            raise NonPositiveRadius(f"component {i}: radial function reaches {np.min(rho):.4g} <= 0")


def _validate_disjoint(domain):
    if domain.k < 2:
        return
    dirs, _ = sphere_grid(domain.n, 8)
    pts = [c.center + c.radial(dirs)[:, None] * dirs for c in domain.components]
    for i, ci in enumerate(domain.components):
        for j, cj in enumerate(domain.components):
            if i != j and (cj.contains(pts[i]).any() or cj.contains(ci.center[None]).any()):
                raise OverlappingComponents(f"components {i} and {j} intersect")


def make_ball(n, r=1.0, center=None):
    if r <= 0:
        raise NonPositiveRadius("ball radius must be positive")
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return StarDomain(int(n), (StarComponent(center, ConstantRadius(float(r))),))


def make_star_domain(n, center, radial_spec, resolution=None):
    """Validated single-component domain; ``radial_spec`` is a JSON descriptor or a RadialFunction.

    With ``resolution`` given, also checks that the grid resolves the radial function.
    """
    radial = radial_spec if isinstance(radial_spec, RadialFunction) else radial_from_json(radial_spec)
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    dom = StarDomain(int(n), (StarComponent(center, radial),))
    if resolution is not None:
        boundary_quadrature(dom, resolution)
    return dom


def make_spheroid(a, b, center=None, n=3):
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return StarDomain(n, (StarComponent(center, SpheroidProfile(float(a), float(b))),))


def make_perturbed_ball(n, coeffs, center=None):
    """Axisymmetric ``rho = sum c_k cos(k theta)`` domain."""
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return StarDomain(n, (StarComponent(center, CosineProfile(tuple(float(c) for c in coeffs))),))


# --- boundary quadrature -------------------------------------------------------

@dataclass(frozen=True)
class BoundaryMesh:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    mean_curvature: np.ndarray
    component: np.ndarray
    directions: np.ndarray
    sphere_weights: np.ndarray
    resolution: int
    centers: np.ndarray
    max_curvature: np.ndarray = field(repr=False, default=None)

    @property
    def size(self):
        return len(self.weights)

    @property
    def k(self):
        return len(self.centers)

    def mask(self, components):
        return np.isin(self.component, np.atleast_1d(components))

    def restrict(self, components):
        """Sub-mesh of the given component indices, renumbered from 0."""
        comps = list(np.atleast_1d(components))
        m = self.mask(comps)
        remap = np.full(self.k, -1)
        remap[comps] = np.arange(len(comps))
        return BoundaryMesh(self.n, self.nodes[m], self.weights[m], self.normals[m],
                            self.mean_curvature[m], remap[self.component[m]], self.directions[m],
                            self.sphere_weights[m], self.resolution, self.centers[comps],
                            None if self.max_curvature is None else self.max_curvature[m])

    def integrate(self, values, components=None):
        if components is None:
            return float(np.dot(self.weights, values))
        m = self.mask(components)
        return float(np.dot(self.weights[m], np.asarray(values)[m]))


def _fd_stencil(n):
    """Offsets (in units of h) for 4th-order gradient and Hessian stencils."""
    offs = [np.zeros(n)]
    eye = np.eye(n)
    for a in range(n):
        for s in (1, -1, 2, -2):
            offs.append(s * eye[a])
    for a in range(n):
        for b in range(a + 1, n):
            for s in (1, 2):
                for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    offs.append(s * (sa * eye[a] + sb * eye[b]))
    return np.array(offs)


def _level_set_derivatives(radial, y, h):
    """Gradient and Hessian of ``F(y) = |y| - rho(y/|y|)`` by 4th-order central differences."""
    m, n = y.shape
    offs = _fd_stencil(n)
    pts = y[:, None, :] + h[:, None, None] * offs[None, :, :]
    r = np.linalg.norm(pts, axis=2)
    F = r - radial(pts / r[..., None])
    grad = np.empty((m, n))
    hess = np.empty((m, n, n))
    f0 = F[:, 0]
    h2 = h * h
    for a in range(n):
        fp1, fm1, fp2, fm2 = (F[:, 1 + 4 * a + j] for j in range(4))
        grad[:, a] = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
        hess[:, a, a] = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h2)
    idx = 1 + 4 * n
    for a in range(n):
        for b in range(a + 1, n):
            d1 = (F[:, idx] - F[:, idx + 1] - F[:, idx + 2] + F[:, idx + 3]) / (4 * h2)
            d2 = (F[:, idx + 4] - F[:, idx + 5] - F[:, idx + 6] + F[:, idx + 7]) / (16 * h2)
            hess[:, a, b] = hess[:, b, a] = (4 * d1 - d2) / 3.0
            idx += 8
    return grad, hess


def boundary_quadrature(domain, resolution=None, rotation=None, strict=True):
    """Discretize the boundary of ``domain``.

    ``resolution`` is the number of Gauss nodes per polar angle; the azimuth
    gets twice as many, so each component carries ``2 N^{n-1}`` nodes. The
    minimum is ``MIN_RESOLUTION`` for every n; finer grids are demanded by
    :class:`UnresolvedSpec` when the boundary curvature outruns the spacing.
    ``rotation`` rotates the sphere grid (used for off-collocation check nodes).
    ``strict=False`` skips the resolution and separation checks, for auxiliary
    grids such as source placement.
    """
    n = domain.n
    N = default_resolution(n) if resolution is None else int(resolution)
    if N < MIN_RESOLUTION:
        raise UnresolvedSpec(f"resolution {N} below the minimum {MIN_RESOLUTION}")
    dirs, sw = sphere_grid(n, N, rotation)
    parts = []
    for i, comp in enumerate(domain.components):
        rho = comp.radial(dirs)
        if np.min(rho) <= 0:
            raise NonPositiveRadius(f"component {i}: radial function reaches {np.min(rho):.4g}")
        y = rho[:, None] * dirs
        if isinstance(comp.radial, ConstantRadius):
            # round spheres have exact normals and curvatures
            r = comp.radial.r
            w = r ** (n - 1) * sw
            parts.append((comp.center + y, w, dirs.copy(), np.full(len(w), (n - 1) / r),
                          np.full(len(w), i), dirs, sw, np.full(len(w), 1.0 / r)))
            continue
        grad, hess = _level_set_derivatives(comp.radial, y, _FD_REL_STEP * rho)
        gnorm = np.linalg.norm(grad, axis=1)
        nu = grad / gnorm[:, None]
        trace = np.einsum("ijj->i", hess)
        nhn = np.einsum("ij,ijk,ik->i", nu, hess, nu)
        H = (trace - nhn) / gnorm
        # principal curvatures are the tangential eigenvalues of hess / |grad|
        proj = np.eye(n)[None] - nu[:, :, None] * nu[:, None, :]
        th = proj @ hess @ proj
        kmax = np.max(np.abs(np.linalg.eigvalsh(th)), axis=1) / gnorm
        spacing = rho * np.pi / N
        worst = float(np.max(kmax * spacing))
        if strict and worst > 1.0:
            raise UnresolvedSpec(
                f"component {i}: curvature x grid spacing = {worst:.3g} > 1 at resolution {N}")
        w = rho ** (n - 1) * gnorm * sw
        parts.append((comp.center + y, w, nu, H, np.full(len(w), i), dirs, sw, kmax))
    cat = [np.concatenate([p[j] for p in parts]) for j in range(8)]
    mesh = BoundaryMesh(n, cat[0], cat[1], cat[2], cat[3], cat[4].astype(int), cat[5], cat[6], N,
                        np.array([c.center for c in domain.components]), cat[7])
    if strict:
        _check_separation(domain, mesh)
    return mesh


def _check_separation(domain, mesh):
    if domain.k < 2:
        return
    trees = [cKDTree(mesh.nodes[mesh.component == i]) for i in range(domain.k)]
    for i in range(domain.k):
        for j in range(i + 1, domain.k):
            pi = mesh.nodes[mesh.component == i]
            pj = mesh.nodes[mesh.component == j]
            dist = float(np.min(trees[j].query(pi)[0]))
            spacing = np.pi / mesh.resolution * max(
                np.max(np.linalg.norm(pi - mesh.centers[i], axis=1)),
                np.max(np.linalg.norm(pj - mesh.centers[j], axis=1)))
            if dist <= 10.0 * spacing:
                raise OverlappingComponents(
                    f"components {i} and {j}: gap {dist:.3g} <= 10 x mesh spacing {spacing:.3g}")


# --- functionals -------------------------------------------------------------

@dataclass(frozen=True)
class GeometricFunctionals:
    n: int
    areas: np.ndarray
    volumes: np.ndarray
    mean_curvature_integrals: np.ndarray
    omega: float
    beta: float

    @property
    def area(self):
        return float(np.sum(self.areas))

    @property
    def volume(self):
        return float(np.sum(self.volumes))

    @property
    def minkowski(self):
        """Per-component ``(1/((n-1) omega)) int H dA``."""
        return self.mean_curvature_integrals / ((self.n - 1) * self.omega)

    @property
    def area_terms(self):
        """Per-component ``(A_i/omega)^{(n-2)/(n-1)}``."""
        return (self.areas / self.omega) ** ((self.n - 2) / (self.n - 1))

    @property
    def area_term(self):
        return (self.area / self.omega) ** ((self.n - 2) / (self.n - 1))

    @property
    def volume_term(self):
        return (self.volume / self.beta) ** ((self.n - 2) / self.n)

    @property
    def iso_ratio(self):
        return self.area_term / self.volume_term

    def to_json(self):
        return {"n": self.n, "areas": self.areas.tolist(), "area": self.area,
                "volumes": self.volumes.tolist(), "volume": self.volume,
                "minkowski": self.minkowski.tolist(), "iso_ratio": self.iso_ratio}


def functionals(domain, mesh):
    n = domain.n
    k = domain.k
    areas = np.zeros(k)
    vols = np.zeros(k)
    hint = np.zeros(k)
    for i in range(k):
        m = mesh.component == i
        w = mesh.weights[m]
        areas[i] = w.sum()
        support = np.einsum("ij,ij->i", mesh.nodes[m] - mesh.centers[i], mesh.normals[m])
        vols[i] = np.dot(w, support) / n
        hint[i] = np.dot(w, mesh.mean_curvature[m])
    return GeometricFunctionals(n, areas, vols, hint, omega(n), beta(n))


class MeanConvexity(NamedTuple):
    convex: bool
    margin: float


def is_mean_convex(mesh, eps=EPS_QUAD):
    h = float(np.min(mesh.mean_curvature))
    return MeanConvexity(h >= -eps, h)


def coarse_resolution(N):
    """Companion resolution used for two-resolution error estimates."""
    return max(MIN_RESOLUTION, int(round(0.75 * N)))


def observed_order(errors, ratio=2.0):
    """Observed convergence orders from errors at successively refined resolutions."""
    e = np.abs(np.asarray(errors, dtype=float))
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


def characteristic_radius(func):
    return (func.area / func.omega) ** (1.0 / (func.n - 1))


def component_meshes(mesh) -> Sequence[BoundaryMesh]:
    return [mesh.restrict(i) for i in range(mesh.k)]
