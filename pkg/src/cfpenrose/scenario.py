"""Scenario files: JSON descriptions of one instance and the theorems to check on it.

A scenario names a dimension, a domain (plus ``domain_minus`` for mixed
problems), a recipe for the conformal factor, solver controls, a seed and a
suite of theorem IDs. Loading validates structure against a JSON schema and
then checks the semantics (domain construction, recipe/suite compatibility);
every problem is reported as :class:`ConfigInvalid` with a JSON pointer.
"""

import itertools
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import jsonschema
import numpy as np

from .conformal import ConformalFactor, RadialBump, schwarzschild_radius
from .errors import ConfigInvalid, DomainError, EvaluationAtSingularity
from .geometry import StarDomain, make_ball, radial_from_json
from .inequalities import THEOREMS
from .solver import SolverSpec

RECIPES = ("schwarzschild", "robin-minimal", "dirichlet-zas", "mixed", "pole-family", "bump")

# theorems that only look at the domain
GEOMETRIC = {"minkowski", "isoperimetric", "pfs"}
# recipes each factor-dependent theorem accepts
FACTOR_THEOREMS = {
    "thm_main": {"schwarzschild+", "robin-minimal", "pole-family", "bump"},
    "cor_area": {"schwarzschild+", "robin-minimal", "pole-family", "bump"},
    "cor_vol": {"schwarzschild+", "robin-minimal", "pole-family", "bump"},
    "thm_general2_delta": {"schwarzschild+", "robin-minimal", "pole-family", "bump"},
    "lemma_zas": {"schwarzschild-", "dirichlet-zas"},
    "thm_zas": {"schwarzschild-", "dirichlet-zas"},
    "mixed": {"mixed"},
}

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_POLES = {"type": "array", "items": {"type": "object", "required": ["x", "a"],
                                     "properties": {"x": _VEC, "a": _NUM},
                                     "additionalProperties": False}}
_BUMPS = {"type": "array", "items": {"type": "object", "required": ["center", "radius", "amplitude"],
                                     "properties": {"center": _VEC, "radius": _NUM, "amplitude": _NUM},
                                     "additionalProperties": False}}
_DOMAIN = {
    "type": "object", "required": ["components"],
    "properties": {
        "n": {"type": "integer"},
        "components": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["radial"],
            "properties": {"center": _VEC, "radial": {"type": "object", "required": ["kind"]}},
            "additionalProperties": False}},
    },
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "required": ["name", "n", "factor", "suite"],
    "properties": {
        "name": {"type": "string", "pattern": r"^[A-Za-z0-9._-]+$"},
        "description": {"type": "string"},
        "n": {"type": "integer", "minimum": 3},
        "domain": _DOMAIN,
        "domain_minus": _DOMAIN,
        "factor": {
            "type": "object", "required": ["recipe"],
            "properties": {
                "recipe": {"enum": list(RECIPES)},
                "m": _NUM,
                "center": _VEC,
                "poles": _POLES,
                "bump": _BUMPS,
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "resolution": {"type": ["integer", "null"], "minimum": 4},
                "shrink": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "residual_threshold": {"type": "number", "exclusiveMinimum": 0},
                "truncation": {"type": "number", "exclusiveMinimum": 0},
                "amplification_limit": {"type": "number", "exclusiveMinimum": 0},
                "oversample": {"type": ["number", "null"], "minimum": 1},
                "source_ratio": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "suite": {"type": "array", "items": {"enum": list(THEOREMS)}, "minItems": 1,
                  "uniqueItems": True},
        "convergence": {
            "type": "object",
            "properties": {
                "resolutions": {"type": "array", "items": {"type": "integer", "minimum": 4},
                                "minItems": 2},
                "quantities": {"type": "array", "items": {"enum": ["area", "minkowski", "capacity",
                                                                   "volume"]}},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def pointer(path):
    """RFC 6901 pointer for a sequence of keys and indices."""
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


@dataclass
class Scenario:
    name: str
    n: int
    recipe: str
    suite: tuple
    spec: SolverSpec
    seed: int
    domain: Optional[StarDomain]
    domain_minus: Optional[StarDomain] = None
    factor: Optional[ConformalFactor] = None
    m: Optional[float] = None
    background: Optional[ConformalFactor] = None
    convergence: dict = field(default_factory=dict)
    description: str = ""
    source: dict = field(default_factory=dict)

    @property
    def resolution(self):
        return self.spec.resolution

    def with_overrides(self, resolution=None, seed=None):
        d = json.loads(json.dumps(self.source))
        if resolution is not None:
            d.setdefault("solver", {})["resolution"] = int(resolution)
        if seed is not None:
            d["seed"] = int(seed)
        return parse(d)


def _domain(d, n, path):
    d = dict(d)
    if d.get("n", n) != n:
        raise ConfigInvalid(pointer(path + ["n"]), f"domain dimension {d['n']} differs from n = {n}")
    comps = []
    for i, c in enumerate(d["components"]):
        cp = path + ["components", i]
        center = c.get("center", [0.0] * n)
        if len(center) != n:
            raise ConfigInvalid(pointer(cp + ["center"]), f"center needs {n} coordinates")
        try:
            radial_from_json(c["radial"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigInvalid(pointer(cp + ["radial"]), f"bad radial function: {exc}") from None
        comps.append({"center": center, "radial": c["radial"]})
    try:
        return StarDomain.from_json({"n": n, "components": comps})
    except DomainError as exc:
        raise ConfigInvalid(pointer(path), f"{type(exc).__name__}: {exc}") from None
    except ValueError as exc:
        raise ConfigInvalid(pointer(path), str(exc)) from None


def _factor(fd, n, path):
    for key in ("poles", "bump"):
        for i, p in enumerate(fd.get(key, [])):
            x = p.get("x", p.get("center"))
            if len(x) != n:
                raise ConfigInvalid(pointer(path + [key, i]), f"point needs {n} coordinates")
            if key == "bump" and p["radius"] <= 0:
                raise ConfigInvalid(pointer(path + [key, i, "radius"]), "bump radius must be positive")
    centers = [p["x"] for p in fd.get("poles", [])]
    coeffs = [p["a"] for p in fd.get("poles", [])]
    bumps = tuple(RadialBump.from_json(b) for b in fd.get("bump", []))
    if not centers and not bumps:
        return None
    return ConformalFactor(n, np.array(centers, dtype=float).reshape(-1, n), np.array(coeffs), bumps)


def _recipe_key(recipe, m):
    if recipe == "schwarzschild":
        return "schwarzschild+" if m > 0 else "schwarzschild-"
    return recipe


def parse(data):
    """Validate a decoded scenario and build a :class:`Scenario`."""
    errors = sorted(_VALIDATOR.iter_errors(data),
                    key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        if e.validator == "required":
            # point at the missing member rather than its parent
            missing = [k for k in e.validator_value if k not in e.instance]
            path.append(missing[0])
        raise ConfigInvalid(pointer(path), e.message)
    n = data["n"]
    fd = data["factor"]
    recipe = fd["recipe"]
    m = fd.get("m")
    extra = set(fd) - {"recipe"}
    allowed = {"schwarzschild": {"m", "center"}, "robin-minimal": {"poles", "bump"},
               "dirichlet-zas": set(), "mixed": {"poles", "bump"}, "pole-family": {"poles"},
               "bump": {"poles", "bump"}}[recipe]
    for k in sorted(extra - allowed):
        raise ConfigInvalid(pointer(["factor", k]), f"not a parameter of recipe {recipe!r}")
    if recipe == "schwarzschild":
        if m is None:
            raise ConfigInvalid("/factor/m", "schwarzschild needs a mass m")
        if m == 0:
            raise ConfigInvalid("/factor/m", "the mass must be nonzero")
        center = fd.get("center", [0.0] * n)
        if len(center) != n:
            raise ConfigInvalid("/factor/center", f"center needs {n} coordinates")
        if "domain" in data:
            raise ConfigInvalid("/domain", "schwarzschild derives its domain from m")
        domain = make_ball(n, schwarzschild_radius(n, m), center)
    else:
        if "domain" not in data:
            raise ConfigInvalid("/domain", f"recipe {recipe!r} needs a domain")
        domain = _domain(data["domain"], n, ["domain"])
    if recipe == "pole-family" and not fd.get("poles"):
        raise ConfigInvalid("/factor/poles", "pole-family needs at least one pole")
    if recipe == "bump" and not fd.get("bump"):
        raise ConfigInvalid("/factor/bump", "bump needs at least one bump")
    factor = _factor(fd, n, ["factor"])
    domain_minus = None
    if recipe == "mixed":
        if "domain_minus" not in data:
            raise ConfigInvalid("/domain_minus", "mixed needs domain_minus")
        domain_minus = _domain(data["domain_minus"], n, ["domain_minus"])
        try:
            domain.union(domain_minus)
        except (DomainError, ValueError) as exc:
            raise ConfigInvalid("/domain_minus", str(exc)) from None
    elif "domain_minus" in data:
        raise ConfigInvalid("/domain_minus", "only the mixed recipe takes domain_minus")
    key = _recipe_key(recipe, m)
    for i, thm in enumerate(data["suite"]):
        if thm in GEOMETRIC:
            if thm == "pfs" and recipe == "mixed":
                raise ConfigInvalid(pointer(["suite", i]), "pfs needs a single domain")
            continue
        if key not in FACTOR_THEOREMS[thm]:
            raise ConfigInvalid(pointer(["suite", i]), f"recipe {recipe!r} cannot feed {thm}")
    background = factor if recipe in ("robin-minimal", "mixed") else None
    if factor is not None:
        try:
            factor.check_against(domain if domain_minus is None else domain.union(domain_minus))
        except EvaluationAtSingularity as exc:
            raise ConfigInvalid("/factor", str(exc)) from None
    solver = dict(data.get("solver", {}))
    seed = int(data.get("seed", 0))
    spec = SolverSpec.from_json(dict(solver, seed=seed))
    conv = dict(data.get("convergence", {}))
    return Scenario(data["name"], n, recipe, tuple(data["suite"]), spec, seed, domain, domain_minus,
                    factor if recipe in ("pole-family", "bump") else None, m, background, conv,
                    data.get("description", ""), json.loads(json.dumps(data)))


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("", f"not valid JSON: {exc}") from None
    return parse(data)


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigInvalid("", f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


# --- bundled scenarios --------------------------------------------------------

def _bundle():
    return resources.files("cfpenrose") / "scenarios"


def bundled_names():
    return sorted(p.name[:-5] for p in _bundle().iterdir() if p.name.endswith(".json"))


def bundled_text(name):
    p = _bundle() / f"{name}.json"
    if not p.is_file():
        raise ConfigInvalid("", f"no bundled scenario named {name!r}")
    return p.read_text()


def load_bundled(name):
    return loads(bundled_text(name))


# --- sweep templates ------------------------------------------------------------

_PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def placeholders(template):
    """Placeholder names in order of first appearance."""
    seen = []

    def walk(v):
        if isinstance(v, dict):
            for x in v.values():
                walk(x)
        elif isinstance(v, list):
            for x in v:
                walk(x)
        elif isinstance(v, str):
            for name in _PLACEHOLDER.findall(v):
                if name not in seen:
                    seen.append(name)

    walk(template)
    return seen


def substitute(template, values, path=()):
    """Fill ``${name}`` placeholders; a string that is exactly one placeholder takes the value's type."""
    if isinstance(template, dict):
        return {k: substitute(v, values, path + (k,)) for k, v in template.items()}
    if isinstance(template, list):
        return [substitute(v, values, path + (i,)) for i, v in enumerate(template)]
    if isinstance(template, str):
        whole = _PLACEHOLDER.fullmatch(template)
        missing = [k for k in _PLACEHOLDER.findall(template) if k not in values]
        if missing:
            raise ConfigInvalid(pointer(path), f"no value for placeholder {missing[0]!r}")
        if whole:
            return values[whole.group(1)]
        return _PLACEHOLDER.sub(lambda mt: str(values[mt.group(1)]), template)
    return template


def grid_points(grid):
    """Expand a parameter grid: a dict of value lists (Cartesian product) or a list of dicts."""
    if isinstance(grid, dict) and "points" in grid and len(grid) == 1:
        grid = grid["points"]
    if isinstance(grid, list):
        for i, p in enumerate(grid):
            if not isinstance(p, dict):
                raise ConfigInvalid(pointer([i]), "grid points must be objects")
        return [dict(p) for p in grid]
    if isinstance(grid, dict):
        if not grid:
            return []
        for k, v in grid.items():
            if not isinstance(v, list):
                raise ConfigInvalid(pointer([k]), "grid values must be lists")
        keys = list(grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    raise ConfigInvalid("", "a grid is an object of lists or a list of objects")
