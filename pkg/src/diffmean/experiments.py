"""Bootstrap rate experiments: scaled-variance curves over sample size,
log-log slope fits, diffusion-time traces, and table export/import.

Replicates are seeded from a spawned SeedSequence grid, so splitting them
across workers reproduces the single-worker results exactly.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    EstimateReport,
    OptimizerConfig,
    estimate_diffusion_mean,
    estimate_frechet_mean,
    estimate_joint,
    estimate_t,
)
from .kernels import EUCLIDEAN, SPHERE, KernelSpec, TailBound
from .manifold import ANTIPODAL_TOL, geodesic_distance, log_map, north_pole
from .analysis import LikelihoodProfile
from .sampling import (
    EmpiricalSample,
    EuclideanGaussian,
    TwoPole,
    draw,
    population_mean,
)

__all__ = [
    "ScalingTable",
    "DEFAULT_N_GRID",
    "fit_slope",
    "bootstrap_scaling",
    "slope_standard_error",
    "t_trace",
    "table_payload",
    "export_table",
    "import_table",
    "load_scaling_csv",
]

DEFAULT_N_GRID = (30, 100, 300, 1000, 3000)

ESTIMATOR_TAGS = ("frechet", "diffusion", "joint")


@dataclass
class ScalingTable:
    """Scaled estimator variances over a sample-size grid.

    ``scaled_variance[i]`` is n_grid[i] times the trace of the replicate
    covariance in the tangent space at the base point.  A flat curve
    (slope ~ 0) is the standard CLT rate; slope ~ 2/3 indicates
    2-smeariness.
    """

    n_grid: tuple
    scaled_variance: tuple
    replicates: int
    seed: int
    fitted_slope: float
    estimator: str
    t: float | None = None
    dropped_antipodal: int = 0
    replicate_vectors: list | None = field(
        default=None, compare=False, repr=False
    )


def fit_slope(n_grid, scaled_variance):
    """OLS slope of log scaled-variance against log n."""
    x = np.log(np.asarray(n_grid, dtype=float))
    y = np.log(np.asarray(scaled_variance, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _thread_count():
    raw = os.environ.get("DIFFMEAN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    workers = _thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _source_family(source):
    if isinstance(source, EuclideanGaussian):
        return EUCLIDEAN
    return SPHERE


def _replicate_sample(source, n, rng, steps):
    if isinstance(source, EmpiricalSample):
        idx = rng.choice(source.n, size=n, replace=True, p=source.weights)
        return EmpiricalSample(source.points[idx])
    return draw(source, n, rng, steps=steps)


def _replicate_estimate(tag, sample, family, config, t, t_init, seed):
    if tag == "frechet":
        if family == EUCLIDEAN:
            w = sample.effective_weights()
            return w @ sample.points, True
        rep = estimate_frechet_mean(sample, config, seed=seed)
        return rep.point, rep.converged
    if tag == "diffusion":
        dim = sample.points.shape[1] - (1 if family == SPHERE else 0)
        spec = KernelSpec(family, dim, t, TailBound())
        rep = estimate_diffusion_mean(sample, spec, config, seed=seed)
        return rep.point, rep.converged
    if tag == "joint":
        rep = estimate_joint(sample, config, t_init=t_init, family=family,
                             seed=seed)
        return rep.point, rep.converged
    raise ValueError(f"unknown estimator tag {tag!r}; use one of {ESTIMATOR_TAGS}")


def _base_point(source, tag, family, config, t, t_init):
    if isinstance(source, EmpiricalSample):
        point, _ = _replicate_estimate(tag, source, family, config, t, t_init, 0)
        return point
    return population_mean(source)


def bootstrap_scaling(source, estimator, n_grid=DEFAULT_N_GRID, B=100,
                      config=None, seed=0, t=None, t_init=1.0, steps=None):
    """Scaled-variance curve of an estimator over a sample-size grid.

    Parameters
    ----------
    source : DistributionSpec or EmpiricalSample
        Synthetic sources are drawn fresh per replicate; an empirical
        sample is resampled with replacement.
    estimator : str
        "frechet", "diffusion" (requires ``t``) or "joint".
    n_grid : increasing sample sizes.
    B : replicates per grid point (>= 20).
    config : OptimizerConfig for the per-replicate fits.
    seed : root seed; replicates get split substreams.
    """
    if B < 20:
        raise ValueError("B must be >= 20 for a usable variance estimate")
    n_grid = tuple(int(n) for n in n_grid)
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if estimator == "diffusion" and t is None:
        raise ValueError("the diffusion estimator needs a time t")
    config = config or OptimizerConfig(max_iters=500, grad_tol=1e-6, restarts=0)
    family = _source_family(source)
    base = _base_point(source, estimator, family, config, t, t_init)

    root = np.random.SeedSequence(seed)
    per_n = root.spawn(len(n_grid))
    scaled = []
    vectors = []
    dropped_total = 0
    failures = 0
    for n, ss in zip(n_grid, per_n):
        rep_seeds = ss.spawn(B)

        def one(rep_seed, n=n):
            rng = np.random.default_rng(rep_seed)
            sample = _replicate_sample(source, n, rng, steps)
            return _replicate_estimate(
                estimator, sample, family, config, t, t_init, rng
            )

        results = _map_ordered(one, rep_seeds)
        failures += sum(1 for _, ok in results if not ok)
        vs = []
        dropped = 0
        for point, _ in results:
            if family == EUCLIDEAN:
                vs.append(point - base)
            else:
                if math.pi - geodesic_distance(base, point) < ANTIPODAL_TOL:
                    dropped += 1
                    continue
                vs.append(log_map(base, point))
        if len(vs) < 2:
            raise RuntimeError(
                f"fewer than two usable replicates at n={n} "
                f"({dropped} dropped as antipodal)"
            )
        vs = np.array(vs)
        dropped_total += dropped
        vectors.append(vs)
        cov = np.atleast_2d(np.cov(vs, rowvar=False))
        scaled.append(n * float(np.trace(cov)))

    total = B * len(n_grid)
    if failures > 0.05 * total:
        raise RuntimeError(
            f"estimator failed to converge in {failures}/{total} replicates; "
            "loosen the optimizer config or shrink the grid"
        )
    return ScalingTable(
        n_grid=n_grid,
        scaled_variance=tuple(float(v) for v in scaled),
        replicates=B,
        seed=seed,
        fitted_slope=fit_slope(n_grid, scaled),
        estimator=estimator,
        t=t,
        dropped_antipodal=dropped_total,
        replicate_vectors=vectors,
    )


def slope_standard_error(table, n_boot=200, seed=0):
    """Bootstrap standard error of the fitted slope.

    Resamples the stored replicate tangent vectors within each grid point
    and refits; requires a table built in-process (the vectors are not
    serialized).
    """
    if table.replicate_vectors is None:
        raise ValueError("table carries no replicate vectors (re-run in process)")
    rng = np.random.default_rng(seed)
    slopes = []
    for _ in range(n_boot):
        sv = []
        for n, vs in zip(table.n_grid, table.replicate_vectors):
            idx = rng.integers(0, len(vs), size=len(vs))
            cov = np.atleast_2d(np.cov(vs[idx], rowvar=False))
            sv.append(n * float(np.trace(cov)))
        slopes.append(fit_slope(table.n_grid, sv))
    return float(np.std(slopes))


def t_trace(source, y=None, t_init=1.0, config=None, n=None, seed=0,
            steps=None, t_bounds=(0.01, 50.0)):
    """Per-iteration diffusion-time estimates for plotting.

    ``n=None`` uses exact population weights (two-pole sources only);
    otherwise a fresh sample of size n is drawn.  Returns the full
    EstimateReport; the trace lives in ``report.t_path``.
    """
    config = config or OptimizerConfig()
    family = _source_family(source)
    if n is None:
        if not isinstance(source, TwoPole):
            raise ValueError("population mode (n=None) supports two-pole sources")
        mu = north_pole(source.dim)
        sample = EmpiricalSample(
            np.stack([mu, -mu]), np.array([1.0 - source.alpha, source.alpha])
        )
    else:
        sample = draw(source, n, seed, steps=steps)
    if y is None:
        y = population_mean(source)
    return estimate_t(sample, y, family, config, t_init=t_init, t_bounds=t_bounds)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------


def table_payload(table):
    """JSON-ready dict of a ScalingTable (replicate vectors excluded)."""
    d = dataclasses.asdict(table)
    d.pop("replicate_vectors")
    d["n_grid"] = list(table.n_grid)
    d["scaled_variance"] = list(table.scaled_variance)
    return {"type": "ScalingTable", **d}


def _report_rows(report):
    rows = [(it, obj, gn) for it, obj, gn in report.trace]
    if report.t_path is not None:
        out = []
        for k, row in enumerate(rows):
            t_at = report.t_path[min(k, len(report.t_path) - 1)]
            out.append((*row, t_at))
        return out, ("iteration", "objective", "grad_norm", "t")
    return rows, ("iteration", "objective", "grad_norm")


def export_table(obj, path, fmt="json"):
    """Write a ScalingTable, LikelihoodProfile or EstimateReport to disk.

    JSON serializes every field (floats round-trip exactly); CSV writes
    plot-ready rows with metadata in '#' comment lines.
    """
    fmt = fmt.lower()
    if fmt not in ("json", "csv"):
        raise ValueError("format must be 'json' or 'csv'")
    try:
        if isinstance(obj, ScalingTable):
            if fmt == "json":
                _dump_json(table_payload(obj), path)
            else:
                meta = {
                    "estimator": obj.estimator, "t": obj.t,
                    "replicates": obj.replicates, "seed": obj.seed,
                    "fitted_slope": repr(obj.fitted_slope),
                    "dropped_antipodal": obj.dropped_antipodal,
                }
                rows = list(zip(obj.n_grid, map(repr, obj.scaled_variance)))
                _dump_csv(path, ("n", "scaled_variance"), rows, meta)
        elif isinstance(obj, LikelihoodProfile):
            if fmt == "json":
                payload = {
                    "type": "LikelihoodProfile",
                    "delta_grid": list(obj.delta_grid),
                    "values": list(obj.values),
                    "t": obj.spec.t,
                    "dim": obj.spec.dim,
                    "distribution": repr(obj.distribution),
                }
                _dump_json(payload, path)
            else:
                rows = list(zip(map(repr, obj.delta_grid), map(repr, obj.values)))
                _dump_csv(path, ("delta", "value"), rows,
                          {"t": obj.spec.t, "dim": obj.spec.dim})
        elif isinstance(obj, EstimateReport):
            if fmt == "json":
                d = dataclasses.asdict(obj)
                d["point"] = list(np.asarray(obj.point, dtype=float))
                _dump_json({"type": "EstimateReport", **d}, path)
            else:
                rows, header = _report_rows(obj)
                _dump_csv(path, header, rows, {"t": obj.t})
        else:
            raise TypeError(f"cannot export object of type {type(obj).__name__}")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def _dump_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _dump_csv(path, header, rows, meta=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}: {val}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def import_table(path):
    """Load a JSON export; ScalingTable JSON round-trips to an equal object."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    kind = payload.pop("type", None)
    if kind == "ScalingTable":
        payload["n_grid"] = tuple(payload["n_grid"])
        payload["scaled_variance"] = tuple(payload["scaled_variance"])
        return ScalingTable(**payload)
    raise ValueError(f"cannot import payload of type {kind!r}")


def load_scaling_csv(path):
    """Read back a ScalingTable CSV as (n_grid, scaled_variance) arrays."""
    ns, sv = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            s = line.strip()
            if not s or s.startswith("#") or s.startswith("n,"):
                continue
            a, b = s.split(",")
            ns.append(int(a))
            sv.append(float(b))
    return np.array(ns), np.array(sv)
