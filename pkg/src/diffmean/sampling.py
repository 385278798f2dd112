"""Seeded random generation: geodesic-walk Brownian motion on S^m, the
synthetic test distributions, and lat/lon CSV ingestion.

All draws are reproducible from a 64-bit seed via numpy's PCG64 generator;
seed sequences can be split for deterministic parallel replication.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .manifold import check_points, exp_map, north_pole, tangent_project

__all__ = [
    "TwoPole",
    "BimodalBrownianNormal",
    "HemispherePointMass",
    "BrownianNormal",
    "EuclideanGaussian",
    "EmpiricalSample",
    "make_rng",
    "default_steps",
    "population_mean",
    "uniform_sphere",
    "brownian_sample",
    "draw",
    "ingest_latlon_csv",
    "export_latlon_csv",
    "latlon_to_unit",
    "unit_to_latlon",
]


def make_rng(seed):
    """A numpy Generator from a seed, SeedSequence or existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class TwoPole:
    """Atoms at the poles: P(-mu) = alpha, P(mu) = 1 - alpha, alpha <= 1/2."""

    alpha: float
    dim: int = 2

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError("two-pole weight alpha must lie in [0, 1/2]")


@dataclass(frozen=True)
class BimodalBrownianNormal:
    """Brownian normals at both poles; the southern one carries weight alpha."""

    sigma2: float
    alpha: float
    dim: int = 2

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class HemispherePointMass:
    """Uniform mass alpha on the lower hemisphere {q2 <= 0} of S^2 plus an
    atom of mass 1 - alpha at the north pole."""

    alpha: float
    dim: int = 2

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("hemisphere mass alpha must lie in (0, 1)")
        if self.dim != 2:
            raise ValueError("hemisphere mixture is defined on S^2")


@dataclass(frozen=True)
class BrownianNormal:
    """End-point distribution of a Brownian motion run for time sigma2."""

    sigma2: float
    center: tuple = None
    dim: int = 2

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if self.center is not None:
            c = np.asarray(self.center, dtype=float)
            if c.shape != (self.dim + 1,):
                raise ValueError("center must be a point of S^dim")
            object.__setattr__(self, "center", tuple(float(v) for v in c))

    def center_point(self):
        if self.center is None:
            return north_pole(self.dim)
        from .manifold import unit_vector

        return unit_vector(np.asarray(self.center))


@dataclass(frozen=True)
class EuclideanGaussian:
    """Isotropic Gaussian on R^dim; flat-space control for rate experiments."""

    sigma2: float
    dim: int = 2
    center: tuple = None

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if self.center is not None:
            c = np.asarray(self.center, dtype=float)
            if c.shape != (self.dim,):
                raise ValueError("center must be a vector of length dim")
            object.__setattr__(self, "center", tuple(float(v) for v in c))


DistributionSpec = (
    TwoPole | BimodalBrownianNormal | HemispherePointMass | BrownianNormal
    | EuclideanGaussian
)


@dataclass
class EmpiricalSample:
    """Weighted data points plus the seed (or "external") they came from."""

    points: np.ndarray
    weights: np.ndarray | None = None
    seed_provenance: object = "external"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("sample must be a nonempty (n, d) array")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.points.shape[0],):
                raise ValueError("weights must match the number of points")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            s = float(w.sum())
            if abs(s - 1.0) > 1e-12:
                raise ValueError("weights must sum to 1")
            self.weights = w

    @property
    def n(self):
        return self.points.shape[0]

    def effective_weights(self):
        if self.weights is not None:
            return self.weights
        return np.full(self.n, 1.0 / self.n)


def population_mean(dist):
    """The distribution's center of symmetry (its diffusion/Frechet mean)."""
    if isinstance(dist, EuclideanGaussian):
        if dist.center is None:
            return np.zeros(dist.dim)
        return np.asarray(dist.center, dtype=float)
    if isinstance(dist, BrownianNormal):
        return dist.center_point()
    return north_pole(dist.dim)


def default_steps(total_time):
    """Walk discretization: 100 steps per unit time, at least 100."""
    return max(100, 100 * math.ceil(total_time))


def uniform_sphere(n, dim, rng):
    """n points uniform on S^dim (normalized Gaussians)."""
    rng = make_rng(rng)
    g = rng.standard_normal((n, dim + 1))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _walk(starts, total_time, steps, rng):
    """Geodesic random walk: isotropic tangent Gaussian steps of variance
    total_time/steps per coordinate, pushed through the exponential map.
    Matches the Delta/2 generator of the sphere series."""
    x = np.array(starts, dtype=float)
    sd = math.sqrt(total_time / steps)
    for _ in range(steps):
        g = rng.standard_normal(x.shape) * sd
        x = exp_map(x, tangent_project(x, g))
    return x


def brownian_sample(center, total_time, steps=None, seed=0):
    """End point of one Brownian path from ``center`` run for ``total_time``."""
    if total_time <= 0:
        raise ValueError("total_time must be > 0")
    steps = steps or default_steps(total_time)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = make_rng(seed)
    center = np.asarray(center, dtype=float)
    return _walk(center[None, :], total_time, steps, rng)[0]


def brownian_batch(center, total_time, n, steps=None, seed=0):
    """n independent Brownian end points from a common center."""
    steps = steps or default_steps(total_time)
    rng = make_rng(seed)
    center = np.asarray(center, dtype=float)
    starts = np.broadcast_to(center, (n, center.shape[0]))
    return _walk(starts, total_time, steps, rng)


def draw(dist, n, seed=0, steps=None):
    """n i.i.d. draws from a DistributionSpec as an EmpiricalSample."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    provenance = seed if not isinstance(seed, np.random.Generator) else "generator"

    if isinstance(dist, EuclideanGaussian):
        center = population_mean(dist)
        pts = center + math.sqrt(dist.sigma2) * rng.standard_normal((n, dist.dim))
        return EmpiricalSample(pts, None, provenance)

    mu = north_pole(dist.dim)
    if isinstance(dist, TwoPole):
        south = rng.random(n) < dist.alpha
        pts = np.where(south[:, None], -mu, mu)
    elif isinstance(dist, BimodalBrownianNormal):
        south = rng.random(n) < dist.alpha
        starts = np.where(south[:, None], -mu, mu)
        pts = _walk(starts, dist.sigma2, steps or default_steps(dist.sigma2), rng)
    elif isinstance(dist, HemispherePointMass):
        lower = rng.random(n) < dist.alpha
        pts = np.broadcast_to(mu, (n, 3)).copy()
        k = int(lower.sum())
        if k:
            u = uniform_sphere(k, 2, rng)
            u[:, 1] = -np.abs(u[:, 1])  # reflect into {q2 <= 0}
            pts[lower] = u
    elif isinstance(dist, BrownianNormal):
        pts = _walk(
            np.broadcast_to(dist.center_point(), (n, dist.dim + 1)).copy(),
            dist.sigma2,
            steps or default_steps(dist.sigma2),
            rng,
        )
    else:
        raise TypeError(f"unknown distribution spec {type(dist).__name__}")
    return EmpiricalSample(pts, None, provenance)


# ---------------------------------------------------------------------------
# lat/lon CSV ingestion (geographic convention, degrees)
# ---------------------------------------------------------------------------


def latlon_to_unit(lat_deg, lon_deg):
    """Geographic convention: x=cos(lat)cos(lon), y=cos(lat)sin(lon), z=sin(lat)."""
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    return np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )


def unit_to_latlon(p):
    """Inverse of latlon_to_unit, degrees."""
    p = np.asarray(p, dtype=float)
    lat = math.degrees(math.asin(max(-1.0, min(1.0, p[2]))))
    lon = math.degrees(math.atan2(p[1], p[0]))
    return lat, lon


def ingest_latlon_csv(path):
    """Read lat,lon rows (degrees) into an EmpiricalSample on S^2.

    UTF-8, comma-separated.  Lines starting with '#' are skipped; a single
    non-numeric header row is auto-detected.  Latitudes outside [-90, 90]
    are rejected with the offending line number.
    """
    pts = []
    header_skipped = False
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            stripped = [c.strip() for c in row if c.strip() != ""]
            if len(stripped) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns lat,lon")
            try:
                lat, lon = float(stripped[0]), float(stripped[1])
            except ValueError:
                if not pts and not header_skipped:
                    header_skipped = True  # single leading header row
                    continue
                raise ValueError(
                    f"{path}:{lineno}: could not parse {stripped[:2]} as numbers"
                ) from None
            if not (math.isfinite(lat) and math.isfinite(lon)):
                raise ValueError(f"{path}:{lineno}: non-finite coordinate")
            if abs(lat) > 90.0:
                raise ValueError(f"{path}:{lineno}: latitude {lat} outside [-90, 90]")
            pts.append(latlon_to_unit(lat, lon))
    if not pts:
        raise ValueError(f"{path}: no data rows found")
    return EmpiricalSample(check_points(np.array(pts)), None, "external")


def export_latlon_csv(points, path):
    """Write points of S^2 as lat,lon rows (degrees) with a header."""
    X = check_points(points, dim=2)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat", "lon"])
        for p in X:
            lat, lon = unit_to_latlon(p)
            writer.writerow([repr(lat), repr(lon)])
