"""Analytic bounds and diagnostics for spherical diffusion means.

Houses the concavity time threshold delta(m), the critical antipodal
weight Lambda_m(t) and hemisphere weight Sigma(t), exact population
likelihood profiles for the two reference distributions, numerical
smeariness classification, and the small-time Frechet-limit checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .estimators import (
    OptimizerConfig,
    estimate_diffusion_mean,
    estimate_frechet_mean,
)
from .kernels import SPHERE, KernelSpec, TailBound
from .manifold import geodesic_distance
from .sampling import HemispherePointMass, TwoPole

__all__ = [
    "SmearinessOrder",
    "SmearinessReport",
    "LikelihoodProfile",
    "MinimumNotAtZeroError",
    "delta_bound",
    "lambda_bound",
    "sigma_bound",
    "two_pole_profile",
    "hemisphere_profile",
    "classify_smeariness",
    "small_t_gap",
    "frechet_limit_check",
]


class MinimumNotAtZeroError(ValueError):
    """The profile does not take its minimum at delta = 0."""


class SmearinessOrder(enum.Enum):
    NON_SMEARY = "NonSmeary"
    AT_LEAST_TWO_SMEARY = "AtLeastTwoSmeary"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class SmearinessReport:
    second_derivative_at_zero: float
    order_claim: SmearinessOrder
    critical_alpha: float


@dataclass
class LikelihoodProfile:
    """Population log-likelihood along the canonical meridian.

    ``values[i]`` is the negative mean log kernel at polar angle
    ``delta_grid[i]``; ``evaluate`` gives the same function at arbitrary
    angles (profiles here are even in delta).
    """

    delta_grid: np.ndarray
    values: np.ndarray
    spec: KernelSpec
    distribution: object
    _fn: object = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        self.delta_grid = np.asarray(self.delta_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.delta_grid) <= 0):
            raise ValueError("delta_grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")

    def evaluate(self, delta):
        return self._fn(abs(float(delta)))


def delta_bound(m):
    """Time threshold above which the log kernel on S^m is concave.

    Piecewise in the dimension:
      m in {2, 3}: (2/(m+1)) ln((m+1) + 4(m+3))
      m >= 4:      ln(32(m+3) / (9(m+1)))
    """
    if m < 2:
        raise ValueError("delta bound requires dim >= 2")
    if m in (2, 3):
        return 2.0 / (m + 1) * math.log((m + 1) + 4 * (m + 3))
    return math.log(32.0 * (m + 3) / (9.0 * (m + 1)))


def lambda_bound(m, t, policy=None):
    """Critical antipodal weight for the two-pole distribution.

    Lambda_m(t) = h(-1) h'(1) / (h'(-1) h(1) + h(-1) h'(1)); for
    t > delta_bound(m) the heavy pole is the unique diffusion t-mean
    whenever alpha <= Lambda_m(t).
    """
    spec = KernelSpec(SPHERE, m, t, policy or TailBound())
    h1 = kernels.sphere_heat(spec, 1.0).value
    hm1 = kernels.sphere_heat(spec, -1.0).value
    d1 = kernels.sphere_heat_deriv(spec, 1.0, 1).value
    dm1 = kernels.sphere_heat_deriv(spec, -1.0, 1).value
    return hm1 * d1 / (dm1 * h1 + hm1 * d1)


def sigma_bound(t, policy=None):
    """Critical hemisphere mass for the hemisphere-plus-atom mixture on S^2.

    Sigma(t) = 2 h'(1) h(0) / (h'(0) h(1) + 2 h'(1) h(0)); the uniqueness
    guarantee holds for t > 2.12.
    """
    spec = KernelSpec(SPHERE, 2, t, policy or TailBound())
    h1 = kernels.sphere_heat(spec, 1.0).value
    h0 = kernels.sphere_heat(spec, 0.0).value
    d1 = kernels.sphere_heat_deriv(spec, 1.0, 1).value
    d0 = kernels.sphere_heat_deriv(spec, 0.0, 1).value
    return 2.0 * d1 * h0 / (d0 * h1 + 2.0 * d1 * h0)


def _default_grid(n=1001):
    return np.linspace(0.0, math.pi, n)


def two_pole_profile(m, t, alpha, grid=None, policy=None):
    """Exact population profile -(1-a) ell(cos d) - a ell(-cos d)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    spec = KernelSpec(SPHERE, m, t, policy or TailBound())
    grid = _default_grid() if grid is None else np.asarray(grid, dtype=float)

    def fn(delta):
        c = math.cos(delta)
        return float(
            -(1.0 - alpha) * kernels.sphere_log_heat(spec, c, 0)
            - alpha * kernels.sphere_log_heat(spec, -c, 0)
        )

    c = np.cos(grid)
    vals = -(1.0 - alpha) * kernels.sphere_log_heat(spec, c, 0) - (
        alpha
    ) * kernels.sphere_log_heat(spec, -c, 0)
    dist = TwoPole(alpha=alpha, dim=m) if alpha <= 0.5 else None
    return LikelihoodProfile(grid, vals, spec, dist, fn)


def _gauss_nodes(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def crescent_integrals(t, delta, policy=None, n_theta=64, n_phi=64):
    """The pair (C_+, C_-) of crescent integrals at angle delta.

    C_+- = -int_{-pi/2}^{pi/2} cos(theta) int_0^delta ell(+-cos(theta)
    sin(phi)) dphi dtheta, by 2-D Gauss-Legendre quadrature.
    """
    spec = KernelSpec(SPHERE, 2, t, policy or TailBound())
    if delta == 0.0:
        return 0.0, 0.0
    th, wth = _gauss_nodes(-0.5 * math.pi, 0.5 * math.pi, n_theta)
    ph, wph = _gauss_nodes(0.0, delta, n_phi)
    args = np.outer(np.cos(th), np.sin(ph))
    lp = kernels.sphere_log_heat(spec, args, 0)
    lm = kernels.sphere_log_heat(spec, -args, 0)
    wcos = wth * np.cos(th)
    c_plus = -float(wcos @ lp @ wph)
    c_minus = -float(wcos @ lm @ wph)
    return c_plus, c_minus


def hemisphere_profile(t, alpha, grid=None, policy=None, n_theta=64, n_phi=64):
    """Population profile of the hemisphere-plus-atom mixture on S^2.

    Point-mass term -(1-a) ell(cos d) plus the hemisphere term written
    through the crescent integrals:  a [H(0) + (C_+(d) - C_-(d)) / (2 pi)]
    where H(0) = -int_{-1}^{0} ell(u) du is the value under the atom's pole.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    spec = KernelSpec(SPHERE, 2, t, policy or TailBound())
    grid = _default_grid() if grid is None else np.asarray(grid, dtype=float)

    u, wu = _gauss_nodes(-1.0, 0.0, 128)
    h0 = -float(wu @ kernels.sphere_log_heat(spec, u, 0))

    def fn(delta):
        cp, cm = crescent_integrals(t, delta, policy, n_theta, n_phi)
        point = -(1.0 - alpha) * kernels.sphere_log_heat(spec, math.cos(delta), 0)
        return float(point + alpha * (h0 + (cp - cm) / (2.0 * math.pi)))

    vals = np.array([fn(d) for d in grid])
    return LikelihoodProfile(grid, vals, spec, HemispherePointMass(alpha), fn)


def _critical_alpha(profile):
    dist = profile.distribution
    if isinstance(dist, TwoPole):
        return lambda_bound(dist.dim, profile.spec.t, profile.spec.truncation)
    if isinstance(dist, HemispherePointMass):
        return sigma_bound(profile.spec.t, profile.spec.truncation)
    return math.nan


def classify_smeariness(profile, base_step=1e-2, levels=3, tol_scale=1e-6):
    """Classify the profile's minimum at delta = 0 by its second derivative.

    Estimates the second derivative with Richardson-extrapolated central
    differences on the profile function (profiles are even in delta).
    NonSmeary when it exceeds the tolerance, AtLeastTwoSmeary when it
    vanishes within tolerance, Inconclusive when it is clearly negative.
    The tolerance is ``tol_scale`` times the profile's value range.

    Raises MinimumNotAtZeroError when the sampled profile dips below its
    delta = 0 value anywhere on the grid.
    """
    if profile._fn is None:
        raise ValueError("profile lacks an evaluator; build it with the "
                         "two_pole_profile/hemisphere_profile constructors")
    scale = float(np.ptp(profile.values))
    check_tol = 1e-9 * max(1.0, scale)
    if profile.values[0] - float(profile.values.min()) > check_tol:
        raise MinimumNotAtZeroError(
            "profile minimum is not at delta = 0; smeariness order is "
            "classified only at an interior-free minimum"
        )

    f0 = profile.evaluate(0.0)

    def second_diff(h):
        # even profile: f(-h) = f(h)
        return 2.0 * (profile.evaluate(h) - f0) / (h * h)

    estimates = [second_diff(base_step / 2 ** k) for k in range(levels)]
    # Richardson: successive elimination of h^2, h^4, ... error terms
    table = list(estimates)
    for level in range(1, levels):
        factor = 4.0 ** level
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]
    second = table[0]

    tol = tol_scale * max(scale, 1e-300)
    if second > tol:
        claim = SmearinessOrder.NON_SMEARY
    elif abs(second) <= tol:
        claim = SmearinessOrder.AT_LEAST_TWO_SMEARY
    else:
        claim = SmearinessOrder.INCONCLUSIVE
    return SmearinessReport(second, claim, _critical_alpha(profile))


def small_t_gap(m, t, delta_grid=None, guard_digits=25):
    """Uniform defect of the Varadhan limit on a compact angle set.

    max over the grid of |-2t ln h_{t,m}(cos d) - d^2|.  Angles must stay
    inside [0, 0.9 pi], away from the cut locus where the convergence is
    only compact-uniform.  Evaluations use the arbitrary-precision log
    kernel: near t = 0.01 the double-precision series has no significant
    digits left at order-1 angles.
    """
    if t < kernels.SPHERE_T_FLOOR:
        raise ValueError(f"t below the kernel floor {kernels.SPHERE_T_FLOOR}")
    if delta_grid is None:
        delta_grid = np.linspace(0.0, 2.0, 41)
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(delta_grid < 0) or np.any(delta_grid > 0.9 * math.pi):
        raise ValueError("delta grid must lie within [0, 0.9 pi]")
    worst = 0.0
    for d in delta_grid:
        ell = kernels.sphere_log_heat_highprec(m, t, math.cos(d), guard_digits)
        worst = max(worst, abs(-2.0 * t * ell - d * d))
    return worst


def frechet_limit_check(sample, t_sequence, config=None, dim=None, seed=0):
    """Distance from the diffusion mean to the Frechet mean per time value.

    Runs the diffusion estimator at every t in the (decreasing) sequence
    and the Frechet estimator once; for samples with a unique nondegenerate
    Frechet mean the distances decrease toward 0 as t -> 0.
    """
    config = config or OptimizerConfig()
    frechet = estimate_frechet_mean(sample, config, seed=seed)
    points = np.asarray(
        sample.points if hasattr(sample, "points") else sample, dtype=float
    )
    m = dim or points.shape[1] - 1
    out = []
    for t in t_sequence:
        spec = KernelSpec(SPHERE, m, t, TailBound())
        rep = estimate_diffusion_mean(sample, spec, config, seed=seed)
        out.append((float(t), geodesic_distance(rep.point, frechet.point)))
    return out
