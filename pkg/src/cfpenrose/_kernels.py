"""Fundamental-solution kernels for the Laplacian in R^n.

Every routine works with the kernel ``G(x, y) = |x - y|^{-p}``, ``p = n - 2``,
an integer, so the numba loops use one square root and repeated products.
Two backends implement the same functions: numba ``@njit`` loops (default)
and chunked numpy broadcasting. Set ``CFPENROSE_PURE_NUMPY=1`` before import
to force the numpy path; it is also used when numba cannot be imported.
"""

import os
import warnings

import numpy as np

warnings.filterwarnings("ignore", message="The TBB threading layer")

_CHUNK = 2048

try:
    import numba as nb
except ImportError:  # pragma: no cover
    nb = None

USE_NUMBA = nb is not None and os.environ.get("CFPENROSE_PURE_NUMPY", "0") not in ("1", "true", "yes")


# --- numpy backend ---------------------------------------------------------

def potential_matrix_numpy(targets, sources, p):
    out = np.empty((targets.shape[0], sources.shape[0]))
    for s in range(0, targets.shape[0], _CHUNK):
        d = targets[s:s + _CHUNK, None, :] - sources[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        out[s:s + _CHUNK] = r2 ** (-0.5 * p)
    return out


def normal_derivative_matrix_numpy(targets, normals, sources, p):
    out = np.empty((targets.shape[0], sources.shape[0]))
    for s in range(0, targets.shape[0], _CHUNK):
        d = targets[s:s + _CHUNK, None, :] - sources[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        dn = np.einsum("ijk,ik->ij", d, normals[s:s + _CHUNK])
        out[s:s + _CHUNK] = -p * r2 ** (-0.5 * p - 1.0) * dn
    return out


def evaluate_numpy(targets, sources, coeffs, p):
    m, n = targets.shape
    val = np.zeros(m)
    grad = np.zeros((m, n))
    for s in range(0, m, _CHUNK):
        d = targets[s:s + _CHUNK, None, :] - sources[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", d, d)
        g = r2 ** (-0.5 * p)
        val[s:s + _CHUNK] = g @ coeffs
        fac = (-p * g / r2) * coeffs[None, :]
        grad[s:s + _CHUNK] = np.einsum("ij,ijk->ik", fac, d)
    return val, grad


# --- numba backend ---------------------------------------------------------

if nb is not None:

    @nb.njit(inline="always")
    def _ipow(x, p):
        out = 1.0
        for _ in range(p):
            out *= x
        return out

    @nb.njit(parallel=True, cache=True)
    def potential_matrix_numba(targets, sources, p):
        m, n = targets.shape
        k = sources.shape[0]
        out = np.empty((m, k))
        for i in nb.prange(m):
            for j in range(k):
                r2 = 0.0
                for a in range(n):
                    t = targets[i, a] - sources[j, a]
                    r2 += t * t
                out[i, j] = _ipow(1.0 / np.sqrt(r2), p)
        return out

    @nb.njit(parallel=True, cache=True)
    def normal_derivative_matrix_numba(targets, normals, sources, p):
        m, n = targets.shape
        k = sources.shape[0]
        out = np.empty((m, k))
        for i in nb.prange(m):
            for j in range(k):
                r2 = 0.0
                dn = 0.0
                for a in range(n):
                    t = targets[i, a] - sources[j, a]
                    r2 += t * t
                    dn += t * normals[i, a]
                inv = 1.0 / np.sqrt(r2)
                out[i, j] = -p * _ipow(inv, p + 2) * dn
        return out

    @nb.njit(parallel=True, cache=True)
    def evaluate_numba(targets, sources, coeffs, p):
        m, n = targets.shape
        k = sources.shape[0]
        val = np.zeros(m)
        grad = np.zeros((m, n))
        for i in nb.prange(m):
            d = np.empty(n)
            v = 0.0
            for j in range(k):
                r2 = 0.0
                for a in range(n):
                    d[a] = targets[i, a] - sources[j, a]
                    r2 += d[a] * d[a]
                inv2 = 1.0 / r2
                g = coeffs[j] * _ipow(np.sqrt(inv2), p)
                v += g
                f = -p * g * inv2
                for a in range(n):
                    grad[i, a] += f * d[a]
            val[i] = v
        return val, grad


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def potential_matrix(targets, sources, p):
    """Matrix ``G[i, j] = |targets[i] - sources[j]|^{-p}``."""
    targets, sources = _as_f64(targets), _as_f64(sources)
    if USE_NUMBA:
        return potential_matrix_numba(targets, sources, int(p))
    return potential_matrix_numpy(targets, sources, float(p))


def normal_derivative_matrix(targets, normals, sources, p):
    """Matrix of ``normals[i] . grad_x G(targets[i], sources[j])``."""
    targets, normals, sources = _as_f64(targets), _as_f64(normals), _as_f64(sources)
    if USE_NUMBA:
        return normal_derivative_matrix_numba(targets, normals, sources, int(p))
    return normal_derivative_matrix_numpy(targets, normals, sources, float(p))


def evaluate(targets, sources, coeffs, p):
    """Value and gradient of ``sum_j coeffs[j] G(x, sources[j])`` at targets."""
    targets, sources, coeffs = _as_f64(targets), _as_f64(sources), _as_f64(coeffs)
    if sources.shape[0] == 0:
        return np.zeros(targets.shape[0]), np.zeros(targets.shape)
    if USE_NUMBA:
        return evaluate_numba(targets, sources, coeffs, int(p))
    return evaluate_numpy(targets, sources, coeffs, float(p))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
