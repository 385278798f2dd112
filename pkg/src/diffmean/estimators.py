"""Maximum-likelihood location and variance estimators.

The functional layer (``estimate_*``) runs Riemannian gradient descent on
the sample log-likelihood and returns full ``EstimateReport`` objects; the
class layer wraps it in scikit-learn estimator conventions (``fit`` on an
(n, m+1) array, fitted attributes with trailing underscores).
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import kernels
from .kernels import EUCLIDEAN, SPHERE, KernelSpec, TailBound
from .manifold import (
    check_points,
    exp_map,
    geodesic_distance,
    log_map_zero_fill,
    north_pole,
    tangent_project,
    unit_vector,
)
from .sampling import EmpiricalSample, make_rng, uniform_sphere

__all__ = [
    "OptimizerConfig",
    "EstimateReport",
    "DegenerateSampleWarning",
    "T_BOUNDS",
    "sample_log_likelihood",
    "riemannian_gradient",
    "estimate_diffusion_mean",
    "estimate_frechet_mean",
    "estimate_t",
    "estimate_joint",
    "DiffusionMean",
    "FrechetMean",
    "DiffusionVariance",
    "JointDiffusionMean",
]

# search box for the diffusion time: the kernel accuracy floor and a ceiling
# past which the sphere kernel is numerically uniform
T_BOUNDS = (0.01, 50.0)


class DegenerateSampleWarning(UserWarning):
    """The sample's extrinsic average vanishes (antipodally symmetric mass)."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-descent settings shared by all estimators.

    ``step_policy`` is "backtracking" (Armijo, the default) or "fixed",
    which applies ``step_size`` verbatim as the learning rate.
    ``restarts`` adds that many uniform random initial points.
    """

    max_iters: int = 1000
    grad_tol: float = 1e-8
    step_size: float = 1.0
    step_policy: str = "backtracking"
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    restarts: int = 5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be > 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.step_policy not in ("backtracking", "fixed"):
            raise ValueError("step_policy must be 'backtracking' or 'fixed'")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")


@dataclass
class EstimateReport:
    """Outcome of one estimation run."""

    point: np.ndarray
    t: float | None
    objective: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    restarts_best_of: int = 1
    nonunique: bool = False
    boundary_hit: bool = False
    t_path: list | None = None


def _as_sample(sample):
    if isinstance(sample, EmpiricalSample):
        return sample
    return EmpiricalSample(np.asarray(sample, dtype=float))


def sample_log_likelihood(sample, y, spec):
    """Weighted mean of -ln p(X_i, y, t) under the given kernel.

    Supports the sphere and Euclidean families (the ones with estimators).
    """
    sample = _as_sample(sample)
    w = sample.effective_weights()
    if spec.family == SPHERE:
        X = sample.points
        if X.shape[1] != spec.dim + 1:
            raise ValueError("sample dimension does not match kernel spec")
        cos = np.clip(X @ np.asarray(y, dtype=float), -1.0, 1.0)
        return float(-np.dot(w, kernels.sphere_log_heat(spec, cos, 0)))
    if spec.family == EUCLIDEAN:
        X = sample.points
        y = np.asarray(y, dtype=float)
        if X.shape[1] != spec.dim or y.shape != (spec.dim,):
            raise ValueError("sample dimension does not match kernel spec")
        q = float(np.dot(w, np.sum((X - y) ** 2, axis=-1)))
        return 0.5 * spec.dim * math.log(4.0 * math.pi * spec.t) + q / (4.0 * spec.t)
    raise ValueError(f"no estimator support for family {spec.family!r}")


def riemannian_gradient(sample, y, spec):
    """Tangent-space gradient of the sample log-likelihood on S^m.

    Chain rule on ell(<x_i, y>): the ambient gradient is
    -sum_i w_i ell'(<x_i, y>) x_i, projected onto T_y S^m.
    """
    if spec.family != SPHERE:
        raise ValueError("riemannian_gradient is defined for the sphere family")
    sample = _as_sample(sample)
    X = sample.points
    w = sample.effective_weights()
    y = np.asarray(y, dtype=float)
    cos = np.clip(X @ y, -1.0, 1.0)
    lp = kernels.sphere_log_heat(spec, cos, 1)
    ambient = -(w * lp) @ X
    return tangent_project(y, ambient)


def _probe(objective, x):
    # candidate evaluations may land where the kernel series has no
    # significant digits left; treat that as +inf and let Armijo reject
    try:
        return objective(x)
    except kernels.KernelError:
        return math.inf


def _descend(y0, objective, gradient, config, retract):
    """Generic descent with optional Armijo backtracking.

    Returns (point, value, iterations, converged, trace) with trace entries
    (iteration, objective, gradient norm).  The objective sequence is
    nonincreasing under backtracking.
    """
    y = y0
    f = objective(y)
    trace = []
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        g = gradient(y)
        gn = float(np.linalg.norm(g))
        trace.append((it, f, gn))
        if gn < config.grad_tol:
            converged = True
            break
        if config.step_policy == "fixed":
            y = retract(y, -config.step_size * g)
            f = objective(y)
            continue
        step = config.step_size
        accepted = False
        while step > 1e-20:
            cand = retract(y, -step * g)
            f_cand = _probe(objective, cand)
            if f_cand <= f - config.sufficient_decrease * step * gn * gn:
                y, f = cand, f_cand
                accepted = True
                break
            step *= config.shrink
        if not accepted:
            # no representable decrease remains; stationary in float terms
            converged = gn < max(config.grad_tol, 1e3 * config.grad_tol)
            break
    return y, f, it, converged, trace


def _sphere_inits(sample, config, init, seed, dim):
    inits = []
    if init is not None:
        inits.append(unit_vector(init))
    else:
        w = sample.effective_weights()
        avg = w @ sample.points
        if np.linalg.norm(avg) < 1e-12:
            warnings.warn(
                "sample extrinsic average vanishes (antipodally symmetric "
                "mass); falling back to the canonical pole",
                DegenerateSampleWarning,
            )
            inits.append(north_pole(dim))
        else:
            inits.append(unit_vector(avg))
    if config.restarts:
        rng = make_rng(seed)
        inits.extend(uniform_sphere(config.restarts, dim, rng))
    return inits


def _multistart(sample, config, init, seed, dim, objective, gradient):
    runs = []
    for y0 in _sphere_inits(sample, config, init, seed, dim):
        runs.append(_descend(y0, objective, gradient, config, exp_map))
    best = min(range(len(runs)), key=lambda i: runs[i][1])
    y, f, it, conv, trace = runs[best]
    nonunique = any(
        i != best
        and runs[i][3]
        and abs(runs[i][1] - f) <= 1e-9
        and geodesic_distance(runs[i][0], y) > 1e-3
        for i in range(len(runs))
    )
    return EstimateReport(
        point=y,
        t=None,
        objective=f,
        iterations=it,
        converged=conv,
        trace=trace,
        restarts_best_of=len(runs),
        nonunique=nonunique,
    )


def estimate_diffusion_mean(sample, spec, config=None, init=None, seed=0):
    """Minimize the sample log-likelihood over locations y.

    Sphere family: Riemannian gradient descent from the normalized
    extrinsic average (canonical pole if the average vanishes) plus
    ``config.restarts`` random starts; best local minimum wins and runs
    agreeing in objective but not location set the ``nonunique`` flag.
    Euclidean family: the minimizer is the weighted average for every t;
    descent starts there and verifies stationarity.
    """
    sample = _as_sample(sample)
    config = config or OptimizerConfig()
    w = sample.effective_weights()

    if spec.family == EUCLIDEAN:
        X = sample.points

        def objective(y):
            return sample_log_likelihood(sample, y, spec)

        def gradient(y):
            return (y - w @ X) / (2.0 * spec.t)

        y0 = np.asarray(init, dtype=float) if init is not None else w @ X
        y, f, it, conv, trace = _descend(
            y0, objective, gradient, config, lambda y, v: y + v
        )
        return EstimateReport(y, spec.t, f, it, conv, trace)

    if spec.family != SPHERE:
        raise ValueError(f"no mean estimator for family {spec.family!r}")

    X = check_points(sample.points, dim=spec.dim)

    def objective(y):
        return sample_log_likelihood(sample, y, spec)

    def gradient(y):
        return riemannian_gradient(sample, y, spec)

    report = _multistart(sample, config, init, seed, spec.dim, objective, gradient)
    report.t = spec.t
    return report


def estimate_frechet_mean(sample, config=None, init=None, seed=0):
    """Minimize the Frechet function sum_i w_i dist(y, x_i)^2 on S^m.

    Gradient -2 sum_i w_i log_y(x_i), with antipodal points contributing
    the zero vector.
    """
    sample = _as_sample(sample)
    config = config or OptimizerConfig()
    X = check_points(sample.points)
    dim = X.shape[1] - 1
    w = sample.effective_weights()

    def objective(y):
        d = np.arccos(np.clip(X @ y, -1.0, 1.0))
        return float(np.dot(w, d * d))

    def gradient(y):
        logs, _ = log_map_zero_fill(y, X)
        return -2.0 * (w @ logs)

    report = _multistart(sample, config, init, seed, dim, objective, gradient)
    return report


def _t_objective_and_slope(sample, y, family, dim, truncation):
    sample = _as_sample(sample)
    w = sample.effective_weights()
    if family == SPHERE:
        cos = np.clip(sample.points @ np.asarray(y, dtype=float), -1.0, 1.0)

        def objective(t):
            spec = KernelSpec(SPHERE, dim, t, truncation)
            return float(-np.dot(w, kernels.sphere_log_heat(spec, cos, 0)))

        def slope(t):
            spec = KernelSpec(SPHERE, dim, t, truncation)
            h = kernels.sphere_heat(spec, cos).value
            hdt = kernels.sphere_heat_dt(spec, cos)
            return float(-np.dot(w, hdt / h))

    elif family == EUCLIDEAN:
        q = float(np.dot(w, np.sum((sample.points - y) ** 2, axis=-1)))

        def objective(t):
            return 0.5 * dim * math.log(4.0 * math.pi * t) + q / (4.0 * t)

        def slope(t):
            return 0.5 * dim / t - q / (4.0 * t * t)

    else:
        raise ValueError(f"no t estimator for family {family!r}")
    return objective, slope


def estimate_t(sample, y, family=SPHERE, config=None, t_init=1.0,
               t_bounds=T_BOUNDS, truncation=None):
    """Gradient descent on the diffusion time at a fixed location.

    dL/dt = -mean_i [d_t p(X_i, y, t) / p(X_i, y, t)] (the Laplace-Beltrami
    form, via the heat equation).  t is clipped to ``t_bounds``; an optimum
    pinned at either end sets ``boundary_hit``.
    """
    sample = _as_sample(sample)
    config = config or OptimizerConfig()
    truncation = truncation or TailBound()
    lo, hi = t_bounds
    if not lo <= t_init <= hi:
        raise ValueError("t_init outside t_bounds")
    dim = sample.points.shape[1] - (1 if family == SPHERE else 0)
    objective, slope = _t_objective_and_slope(sample, y, family, dim, truncation)

    t = float(t_init)
    f = objective(t)
    path = [t]
    trace = []
    converged = False
    boundary = False
    it = 0
    for it in range(1, config.max_iters + 1):
        g = slope(t)
        trace.append((it, f, abs(g)))
        if abs(g) < config.grad_tol:
            converged = True
            break
        if (t <= lo and g > 0) or (t >= hi and g < 0):
            converged = True
            boundary = True
            break
        if config.step_policy == "fixed":
            t = min(hi, max(lo, t - config.step_size * g))
            f = objective(t)
            path.append(t)
            continue
        step = config.step_size
        accepted = False
        while step > 1e-20:
            cand = min(hi, max(lo, t - step * g))
            if cand == t:
                break
            f_cand = _probe(objective, cand)
            if f_cand <= f + config.sufficient_decrease * g * (cand - t):
                t, f = cand, f_cand
                accepted = True
                break
            step *= config.shrink
        path.append(t)
        if not accepted:
            converged = abs(g) < max(config.grad_tol, 1e3 * config.grad_tol)
            break
    return EstimateReport(
        point=np.asarray(y, dtype=float),
        t=t,
        objective=f,
        iterations=it,
        converged=converged,
        trace=trace,
        boundary_hit=boundary,
        t_path=path,
    )


def estimate_joint(sample, config=None, t_init=1.0, family=SPHERE, seed=0,
                   truncation=None, t_bounds=T_BOUNDS):
    """Block-coordinate descent alternating the location and time steps.

    Each outer round holds t fixed for the mean update, then the mean fixed
    for the t update; both inner solvers are monotone, so the joint
    objective is nonincreasing.  Stops when an outer round improves the
    objective by less than ``grad_tol``.
    """
    sample = _as_sample(sample)
    config = config or OptimizerConfig()
    truncation = truncation or TailBound()
    dim = sample.points.shape[1] - (1 if family == SPHERE else 0)

    t = float(t_init)
    mean_report = None
    point = None
    prev = math.inf
    trace = []
    t_path = [t]
    converged = False
    rounds = 0
    for rounds in range(1, config.max_iters + 1):
        inner = config if rounds == 1 else dataclasses.replace(config, restarts=0)
        spec = KernelSpec(family, dim, t, truncation)
        mean_report = estimate_diffusion_mean(
            sample, spec, inner, init=point, seed=seed
        )
        point = mean_report.point
        t_report = estimate_t(
            sample, point, family, config, t_init=t, t_bounds=t_bounds,
            truncation=truncation,
        )
        t = t_report.t
        t_path.append(t)
        obj = t_report.objective
        trace.append((rounds, obj, prev - obj))
        if prev - obj < config.grad_tol:
            converged = mean_report.converged and t_report.converged
            break
        prev = obj
    return EstimateReport(
        point=point,
        t=t,
        objective=trace[-1][1],
        iterations=rounds,
        converged=converged,
        trace=trace,
        restarts_best_of=1 + config.restarts,
        boundary_hit=t_report.boundary_hit,
        t_path=t_path,
    )


# ---------------------------------------------------------------------------
# scikit-learn style wrappers
# ---------------------------------------------------------------------------


class _MeanEstimatorBase(BaseEstimator):
    """Shared plumbing: config assembly, validation, tangent transform."""

    def _config(self):
        return OptimizerConfig(
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            step_size=self.step_size,
            step_policy=self.step_policy,
            restarts=self.restarts,
        )

    def _weights(self, X, sample_weight):
        if sample_weight is None:
            return None
        w = np.asarray(sample_weight, dtype=float)
        return w / w.sum()

    def transform(self, X):
        """Map points to tangent coordinates at the fitted mean (log map)."""
        X = check_points(X, dim=self.mean_.shape[0] - 1)
        logs, _ = log_map_zero_fill(self.mean_, X)
        return logs

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, **fit_params).transform(X)


class DiffusionMean(_MeanEstimatorBase):
    """Diffusion t-mean of points on S^m (rows of unit vectors).

    Parameters mirror OptimizerConfig; ``t`` is the diffusion time and
    ``truncation_epsilon`` the kernel series tail tolerance.  After
    ``fit``: ``mean_``, ``objective_``, ``n_iter_``, ``converged_`` and the
    full ``report_``.
    """

    def __init__(self, t=1.0, max_iters=1000, grad_tol=1e-8, step_size=1.0,
                 step_policy="backtracking", restarts=5, seed=0,
                 truncation_epsilon=1e-12):
        self.t = t
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.step_size = step_size
        self.step_policy = step_policy
        self.restarts = restarts
        self.seed = seed
        self.truncation_epsilon = truncation_epsilon

    def fit(self, X, y=None, sample_weight=None):
        X = check_points(X)
        dim = X.shape[1] - 1
        spec = KernelSpec(SPHERE, dim, self.t, TailBound(self.truncation_epsilon))
        sample = EmpiricalSample(X, self._weights(X, sample_weight))
        report = estimate_diffusion_mean(
            sample, spec, self._config(), seed=self.seed
        )
        self.mean_ = report.point
        self.objective_ = report.objective
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.report_ = report
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X, y=None):
        """Mean log-likelihood of X under the fitted mean (higher is better)."""
        X = check_points(X, dim=self.mean_.shape[0] - 1)
        spec = KernelSpec(
            SPHERE, X.shape[1] - 1, self.t, TailBound(self.truncation_epsilon)
        )
        return -sample_log_likelihood(EmpiricalSample(X), self.mean_, spec)


class FrechetMean(_MeanEstimatorBase):
    """Frechet (Riemann center of mass) estimator on S^m."""

    def __init__(self, max_iters=1000, grad_tol=1e-8, step_size=1.0,
                 step_policy="backtracking", restarts=5, seed=0):
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.step_size = step_size
        self.step_policy = step_policy
        self.restarts = restarts
        self.seed = seed

    def fit(self, X, y=None, sample_weight=None):
        X = check_points(X)
        sample = EmpiricalSample(X, self._weights(X, sample_weight))
        report = estimate_frechet_mean(sample, self._config(), seed=self.seed)
        self.mean_ = report.point
        self.objective_ = report.objective
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.report_ = report
        self.n_features_in_ = X.shape[1]
        return self


class DiffusionVariance(BaseEstimator):
    """Diffusion time (variance proxy) at a fixed or fitted location.

    ``at=None`` uses the normalized extrinsic average of the data.
    """

    def __init__(self, at=None, t_init=1.0, max_iters=1000, grad_tol=1e-8,
                 step_size=1.0, step_policy="backtracking",
                 truncation_epsilon=1e-12):
        self.at = at
        self.t_init = t_init
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.step_size = step_size
        self.step_policy = step_policy
        self.truncation_epsilon = truncation_epsilon

    def fit(self, X, y=None, sample_weight=None):
        X = check_points(X)
        if self.at is not None:
            base = unit_vector(np.asarray(self.at, dtype=float))
        else:
            avg = X.mean(axis=0)
            base = unit_vector(avg) if np.linalg.norm(avg) > 1e-12 else north_pole(
                X.shape[1] - 1
            )
        w = None
        if sample_weight is not None:
            w = np.asarray(sample_weight, dtype=float)
            w = w / w.sum()
        config = OptimizerConfig(
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            step_size=self.step_size,
            step_policy=self.step_policy,
            restarts=0,
        )
        report = estimate_t(
            EmpiricalSample(X, w), base, SPHERE, config, t_init=self.t_init,
            truncation=TailBound(self.truncation_epsilon),
        )
        self.base_point_ = base
        self.t_ = report.t
        self.converged_ = report.converged
        self.boundary_hit_ = report.boundary_hit
        self.report_ = report
        self.n_features_in_ = X.shape[1]
        return self


class JointDiffusionMean(_MeanEstimatorBase):
    """Joint location and diffusion-time fit by block-coordinate descent."""

    def __init__(self, t_init=1.0, max_iters=1000, grad_tol=1e-8, step_size=1.0,
                 step_policy="backtracking", restarts=5, seed=0,
                 truncation_epsilon=1e-12):
        self.t_init = t_init
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.step_size = step_size
        self.step_policy = step_policy
        self.restarts = restarts
        self.seed = seed
        self.truncation_epsilon = truncation_epsilon

    def fit(self, X, y=None, sample_weight=None):
        X = check_points(X)
        sample = EmpiricalSample(X, self._weights(X, sample_weight))
        report = estimate_joint(
            sample, self._config(), t_init=self.t_init, seed=self.seed,
            truncation=TailBound(self.truncation_epsilon),
        )
        self.mean_ = report.point
        self.t_ = report.t
        self.objective_ = report.objective
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.report_ = report
        self.n_features_in_ = X.shape[1]
        return self
