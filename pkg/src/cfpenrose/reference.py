"""Closed-form functionals of round balls and of spheroids in R^3.

Used as references in convergence studies. Each function returns None when
the shape has no closed form here.
"""

import math

from .geometry import ConstantRadius, SpheroidProfile, beta, omega


def _single(domain):
    if domain.k != 1:
        return None
    return domain.components[0].radial


def _spheroid(domain):
    rad = _single(domain)
    if isinstance(rad, SpheroidProfile) and domain.n == 3:
        return rad.a, rad.b
    return None


def spheroid_area(a, b):
    """Surface area of the spheroid with polar semi-axis ``a`` and equatorial ``b``."""
    if a == b:
        return 4 * math.pi * a * a
    if a > b:
        e = math.sqrt(1 - (b / a) ** 2)
        return 2 * math.pi * b * b * (1 + a / (b * e) * math.asin(e))
    e = math.sqrt(1 - (a / b) ** 2)
    return 2 * math.pi * b * b * (1 + (1 - e * e) / e * math.atanh(e))


def spheroid_capacity(a, b):
    """Capacity normalised so that the unit ball has capacity 1."""
    if a == b:
        return a
    if a > b:
        return math.sqrt(a * a - b * b) / math.acosh(a / b)
    return math.sqrt(b * b - a * a) / math.acos(a / b)


def spheroid_minkowski(a, b):
    """``(1/(2 omega_2)) int H dA``: the mean of the support function over the sphere."""
    if a == b:
        return a
    c = math.sqrt(abs(a * a - b * b))
    arc = math.asinh(c / b) if a > b else math.asin(c / b)
    return 0.5 * (a + b * b / c * arc)


def exact(domain, quantity):
    """Closed-form value of ``quantity`` for a ball or an R^3 spheroid, else None."""
    n = domain.n
    rad = _single(domain)
    if isinstance(rad, ConstantRadius):
        r = rad.r
        return {"area": omega(n) * r ** (n - 1), "volume": beta(n) * r ** n,
                "minkowski": r ** (n - 2), "capacity": r ** (n - 2)}.get(quantity)
    ab = _spheroid(domain)
    if ab is None:
        return None
    a, b = ab
    return {"area": spheroid_area(a, b), "volume": 4 * math.pi * a * b * b / 3,
            "minkowski": spheroid_minkowski(a, b), "capacity": spheroid_capacity(a, b)}.get(quantity)
