"""Geometry of the unit sphere S^m embedded in R^{m+1}.

Points are plain numpy arrays of length m+1 with unit norm; tangent vectors
at a point are ambient vectors orthogonal to it.  Everything broadcasts
over a leading batch axis.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ANTIPODAL_TOL",
    "CutLocusError",
    "unit_vector",
    "check_points",
    "north_pole",
    "exp_map",
    "log_map",
    "log_map_zero_fill",
    "geodesic_distance",
    "y_delta",
    "tangent_project",
]

# Angular margin for cut-locus detection: below estimator tolerances, well
# above double-precision noise.
ANTIPODAL_TOL = 1e-8


class CutLocusError(ValueError):
    """The target lies on the cut locus (antipode) of the base point."""


def unit_vector(coords):
    """Validate and renormalize one point of S^m.

    Raises ValueError for non-finite input or a vector of near-zero norm.
    """
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ValueError("a sphere point is a vector of length m+1 >= 2")
    if not np.all(np.isfinite(v)):
        raise ValueError("sphere point has non-finite coordinates")
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise ValueError("cannot normalize a (near-)zero vector")
    return v / n


def check_points(X, dim=None):
    """Validate an (n, m+1) array of sphere points, renormalizing rows.

    ``dim`` optionally pins the manifold dimension m.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 2:
        raise ValueError("expected a nonempty (n, m+1) array of points")
    if dim is not None and X.shape[1] != dim + 1:
        raise ValueError(f"expected points on S^{dim} (length {dim + 1} rows)")
    if not np.all(np.isfinite(X)):
        raise ValueError("points contain non-finite values")
    norms = np.linalg.norm(X, axis=-1)
    if np.any(norms < 1e-12):
        raise ValueError("points contain a (near-)zero row")
    return X / norms[:, None]


def north_pole(m):
    """The canonical pole (0, 1, 0, ..., 0) of S^m."""
    mu = np.zeros(m + 1)
    mu[1] = 1.0
    return mu


def exp_map(base, v):
    """Follow the geodesic from ``base`` with initial velocity ``v`` for unit time.

    cos(|v|) base + sin(|v|) v/|v|; returns ``base`` for |v| = 0.
    """
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    small = norm < 1e-300
    direction = np.where(small, 0.0, v / np.where(small, 1.0, norm))
    out = np.cos(norm) * base + np.sin(norm) * direction
    # renormalize against drift over long walks
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def log_map(base, target):
    """Inverse of exp_map: the tangent vector at ``base`` pointing to ``target``.

    Raises CutLocusError when ``target`` is antipodal to ``base`` within
    ANTIPODAL_TOL radians (single-point form only).
    """
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    c = float(np.clip(np.dot(base, target), -1.0, 1.0))
    theta = math.acos(c)
    if math.pi - theta < ANTIPODAL_TOL:
        raise CutLocusError("target is antipodal to base (cut locus)")
    w = target - c * base
    wn = float(np.linalg.norm(w))
    if wn < 1e-300 or theta == 0.0:
        return np.zeros_like(base)
    return (theta / wn) * w


def log_map_zero_fill(base, targets):
    """Batched log map sending cut-locus targets to 0.

    Returns (vectors, n_antipodal).  This is the convention used when
    estimator fluctuations are measured in the tangent space: antipodal
    points contribute the zero vector.
    """
    base = np.asarray(base, dtype=float)
    X = np.asarray(targets, dtype=float)
    c = np.clip(X @ base, -1.0, 1.0)
    theta = np.arccos(c)
    antipodal = math.pi - theta < ANTIPODAL_TOL
    w = X - c[:, None] * base
    wn = np.linalg.norm(w, axis=-1)
    safe = (wn > 1e-300) & ~antipodal
    scale = np.where(safe, theta / np.where(wn > 1e-300, wn, 1.0), 0.0)
    return scale[:, None] * w, int(np.count_nonzero(antipodal))


def geodesic_distance(x, y):
    """arccos of the clamped inner product; in [0, pi]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("points must have the same ambient dimension")
    c = np.clip(np.sum(x * y, axis=-1), -1.0, 1.0)
    d = np.arccos(c)
    return float(d) if np.ndim(d) == 0 else d


def y_delta(m, delta):
    """The point at polar angle ``delta`` from the north pole of S^m.

    Runs along the canonical meridian: (-sin delta, cos delta, 0, ..., 0),
    so <north_pole, y_delta> = cos delta.
    """
    if not 0.0 <= delta <= math.pi:
        raise ValueError("delta must lie in [0, pi]")
    p = np.zeros(m + 1)
    p[0] = -math.sin(delta)
    p[1] = math.cos(delta)
    return p


def tangent_project(base, w):
    """Orthogonal projection of an ambient vector onto the tangent space."""
    base = np.asarray(base, dtype=float)
    w = np.asarray(w, dtype=float)
    if base.shape[-1] != w.shape[-1]:
        raise ValueError("vectors must have the same ambient dimension")
    return w - np.sum(w * base, axis=-1, keepdims=True) * base
