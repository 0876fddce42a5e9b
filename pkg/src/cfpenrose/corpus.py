"""Fixed corpus of mean-convex, axisymmetrically perturbed balls.

Radii are ``rho(theta) = sum_k c_k cos(k theta)`` with every ``|c_k| <= 0.3``
for ``k >= 1``. Each entry carries the resolution and the residual
thresholds its Dirichlet and Robin solves are certified at; the n = 4
Robin solves only reach about 1e-4 at desk-scale resolution.
"""

from dataclasses import dataclass

from .geometry import make_perturbed_ball
from .solver import SolverSpec


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    n: int
    coeffs: tuple
    resolution: int
    dirichlet_threshold: float = 1e-8
    robin_threshold: float = 1e-8

    @property
    def domain(self):
        return make_perturbed_ball(self.n, self.coeffs)

    def spec(self, kind, seed=0):
        t = self.dirichlet_threshold if kind == "dirichlet" else self.robin_threshold
        return SolverSpec(resolution=self.resolution, residual_threshold=t, seed=seed)

    def scenario(self, recipe, suite, seed=0):
        """Scenario dict for the CLI runner."""
        kind = "dirichlet" if recipe == "dirichlet-zas" else "robin"
        spec = self.spec(kind, seed)
        return {"name": f"{self.name}-{recipe}", "n": self.n,
                "domain": {"components": [{"center": [0.0] * self.n, "radial": {
                    "kind": "axisymmetric", "profile": "cosine", "coeffs": list(self.coeffs)}}]},
                "factor": {"recipe": recipe},
                "solver": {"resolution": spec.resolution, "residual_threshold": spec.residual_threshold},
                "seed": seed, "suite": list(suite)}


def _e(n, coeffs, resolution, dt=1e-8, rt=1e-8):
    tag = "_".join(f"{c:g}" for c in coeffs[1:]).replace("-", "m").replace(".", "p")
    return CorpusEntry(f"perturbed-n{n}-{tag}", n, tuple(float(c) for c in coeffs), resolution, dt, rt)


CORPUS = (
    _e(3, (1, 0.1), 24),
    _e(3, (1, 0.2), 24),
    _e(3, (1, 0.3), 24),
    _e(3, (1, 0, 0.1), 24),
    _e(3, (1, 0, 0.2), 24, rt=1e-5),
    _e(3, (1, 0.1, 0.1), 24),
    _e(3, (1, 0.2, -0.1), 24, rt=1e-5),
    _e(3, (1, 0.1, 0.05, 0.05), 24, rt=1e-6),
    _e(3, (1, -0.15, 0.1), 24),
    _e(3, (1, 0.3, 0.1), 24),
    _e(3, (1, 0, -0.2), 24, rt=1e-5),
    _e(3, (1, 0, 0, 0.1), 24, dt=1e-6, rt=1e-5),
    _e(4, (1, 0.15), 10, dt=1e-5, rt=1e-4),
    _e(4, (1, 0.1, 0.05), 10, dt=1e-5, rt=5e-4),
    _e(4, (1, 0.3), 10, dt=1e-4, rt=5e-4),
)


def corpus(n=None):
    return [e for e in CORPUS if n is None or e.n == n]
