"""Heat kernels and their derivatives on the supported geometries.

Four families are implemented, each with the formula conventional for that
space:

* Euclidean R^m        -- Gaussian with 4t denominator (generator Delta).
* Circle S^1           -- wrapped Gaussian, 4t denominator.
* Spheres S^m, m >= 2  -- Gegenbauer eigenfunction series with spectral
                          weights exp(-l(l+m-1)t/2) (generator Delta/2).
* Hyperbolic 3-space   -- closed form, 4t denominator.

No cross-family time rescaling is performed; the per-family convention is
part of each function's contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

__all__ = [
    "EUCLIDEAN",
    "CIRCLE",
    "SPHERE",
    "HYPERBOLIC3",
    "SPHERE_T_FLOOR",
    "FixedTerms",
    "TailBound",
    "KernelSpec",
    "SeriesEval",
    "KernelError",
    "TruncationNotConvergedError",
    "KernelPrecisionError",
    "gegenbauer",
    "sphere_surface_area",
    "sphere_heat",
    "sphere_heat_deriv",
    "sphere_heat_dt",
    "sphere_log_heat",
    "sphere_log_heat_highprec",
    "circle_heat",
    "euclidean_heat",
    "hyperbolic3_heat",
    "sphere_normalization_error",
    "circle_normalization_error",
    "semigroup_error",
    "s2_quadrature",
]

EUCLIDEAN = "euclidean"
CIRCLE = "circle"
SPHERE = "sphere"
HYPERBOLIC3 = "hyperbolic3"

# Below this diffusion time the S^m series needs hundreds of terms and the
# double-precision sum loses all significant digits far from the diagonal.
SPHERE_T_FLOOR = 0.01


class KernelError(Exception):
    """Base class for kernel evaluation failures."""


class TruncationNotConvergedError(KernelError):
    """The tail bound could not be met within the term budget."""


class KernelPrecisionError(KernelError):
    """Floating-point cancellation destroyed the result (value <= 0)."""


@dataclass(frozen=True)
class FixedTerms:
    """Sum exactly ``terms`` series terms (symmetric images for S^1)."""

    terms: int

    def __post_init__(self):
        if self.terms < 1:
            raise ValueError("FixedTerms.terms must be >= 1")


@dataclass(frozen=True)
class TailBound:
    """Stop once a geometric tail majorant drops below ``epsilon``."""

    epsilon: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("TailBound.epsilon must be > 0")
        if self.max_terms < 1:
            raise ValueError("TailBound.max_terms must be >= 1")


#: Either truncation rule.
TruncationPolicy = FixedTerms | TailBound


@dataclass(frozen=True)
class KernelSpec:
    """Identifies one heat kernel: family, dimension, time and truncation.

    ``dim`` is the manifold dimension m (1 for the circle, 3 for
    hyperbolic 3-space). ``t`` is the diffusion time of the family's own
    convention.
    """

    family: str
    dim: int
    t: float
    truncation: TruncationPolicy = field(default_factory=TailBound)

    def __post_init__(self):
        if self.family not in (EUCLIDEAN, CIRCLE, SPHERE, HYPERBOLIC3):
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not self.t > 0:
            raise ValueError("diffusion time t must be > 0")
        if self.family == SPHERE and self.dim < 2:
            raise ValueError("sphere family requires dim >= 2")
        if self.family == EUCLIDEAN and self.dim < 1:
            raise ValueError("euclidean family requires dim >= 1")
        if self.family == CIRCLE and self.dim != 1:
            raise ValueError("circle family has dim 1")
        if self.family == HYPERBOLIC3 and self.dim != 3:
            raise ValueError("hyperbolic3 family has dim 3")
        if self.family == SPHERE and self.t < SPHERE_T_FLOOR:
            raise TruncationNotConvergedError(
                f"sphere kernel not evaluated below t={SPHERE_T_FLOOR} "
                "(series accuracy floor); use sphere_log_heat_highprec"
            )


@dataclass(frozen=True)
class SeriesEval:
    """A truncated series value plus how it was truncated."""

    value: float
    terms_used: int
    tail_estimate: float


def gegenbauer(l, alpha, x):
    """Gegenbauer polynomial C_l^alpha(x) by the three-term recurrence.

    Parameters
    ----------
    l : int
        Degree, >= 0.
    alpha : float
        Parameter, > 0.  alpha = 1/2 gives the Legendre polynomials.
    x : float or ndarray
        Argument(s) in [-1, 1].

    Returns
    -------
    float or ndarray
    """
    if l < 0:
        raise ValueError("degree l must be >= 0")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("Gegenbauer argument outside [-1, 1]")
    c_prev = np.ones_like(x)
    if l == 0:
        return c_prev if c_prev.ndim else float(c_prev)
    c_curr = 2.0 * alpha * x
    for n in range(2, l + 1):
        c_prev, c_curr = c_curr, (
            2.0 * x * (n + alpha - 1.0) * c_curr - (n + 2.0 * alpha - 2.0) * c_prev
        ) / n
    return c_curr if c_curr.ndim else float(c_curr)


def sphere_surface_area(m):
    """Surface area of the unit sphere S^m embedded in R^{m+1}."""
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


# ---------------------------------------------------------------------------
# S^m series machinery
#
# All sphere quantities are sums  sum_n w_n C_n^beta(x)  for some weight
# sequence w_n and Gegenbauer parameter beta:
#
#   h       : beta = (m-1)/2, w_n = c_n
#   h^(k)   : beta = (m-1)/2 + k, w_n = c_{n+k} * prod_{j<k}(m-1+2j)
#             (repeated use of d/dx C_n^a = 2a C_{n-1}^{a+1})
#   dh/dt   : beta = (m-1)/2, w_n = c_n * (-n(n+m-1)/2)
#
# with c_l = exp(-l(l+m-1)t/2) (2l+m-1) / ((m-1) A_{S^m}).  Tail estimates
# use |C_n^beta(x)| <= C_n^beta(1) and the fact that successive majorant
# ratios decrease (each factor does), so the first observed ratio r < 1
# gives the geometric bound b/(1-r).
# ---------------------------------------------------------------------------


def _series_weight(m, t, n, order, dt):
    l = n + order
    c = math.exp(-l * (l + m - 1) * 0.5 * t) * (2 * l + m - 1) / (
        (m - 1) * sphere_surface_area(m)
    )
    if dt:
        return c * (-l * (l + m - 1) * 0.5)
    g = 1.0
    for j in range(order):
        g *= m - 1 + 2 * j
    return c * g


@lru_cache(maxsize=256)
def _sphere_plan(m, t, policy, order, dt):
    """Weights, Gegenbauer parameter and tail estimate for one S^m series."""
    beta = (m - 1) / 2.0 + order
    if isinstance(policy, FixedTerms):
        budget = policy.terms
        epsilon = None
    else:
        budget = policy.max_terms
        epsilon = policy.epsilon

    weights = []
    cb = 1.0  # C_n^beta(1) via C_n(1) = C_{n-1}(1) (n-1+2 beta)/n
    majorant_prev = None
    tail = math.inf
    n = 0
    while True:
        w = _series_weight(m, t, n, order, dt)
        majorant = abs(w) * cb
        if weights and majorant_prev:
            ratio = majorant / majorant_prev
            if ratio < 1.0:
                bound = majorant / (1.0 - ratio)
                if epsilon is not None and bound <= epsilon:
                    tail = bound
                    break
                if epsilon is None and n >= budget:
                    tail = bound
                    break
        if epsilon is None and n >= budget:
            break  # fixed-terms budget reached before the bound was valid
        if n >= budget:
            raise TruncationNotConvergedError(
                f"S^{m} series tail above {epsilon:g} after {budget} terms "
                f"(t={t:g} too small for the budget)"
            )
        weights.append(w)
        if majorant > 0:
            majorant_prev = majorant
        cb *= (n + 2.0 * beta) / (n + 1.0)
        n += 1
    arr = np.array(weights)
    arr.flags.writeable = False
    return arr, beta, len(weights), tail


def _eval_series(weights, beta, x):
    """sum_n weights[n] C_n^beta(x), vectorized over x."""
    acc = weights[0] * np.ones_like(x)
    if len(weights) == 1:
        return acc
    c_prev = np.ones_like(x)
    c_curr = 2.0 * beta * x
    acc = acc + weights[1] * c_curr
    for n in range(2, len(weights)):
        c_prev, c_curr = c_curr, (
            2.0 * x * (n + beta - 1.0) * c_curr - (n + 2.0 * beta - 2.0) * c_prev
        ) / n
        acc += weights[n] * c_curr
    return acc


def _check_cosangle(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("cosangle outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def _require_sphere(spec):
    if spec.family != SPHERE:
        raise ValueError(f"expected a sphere kernel spec, got {spec.family!r}")


def _maybe_scalar(x, like):
    return float(x) if np.ndim(like) == 0 else x


def sphere_heat(spec, cosangle):
    """Heat kernel h_{t,m} on S^m as a function of <x, y>.

    Evaluates the Gegenbauer eigenfunction series

        sum_l exp(-l(l+m-1)t/2) (2l+m-1)/(m-1) C_l^{(m-1)/2}(cosangle) / A

    with A the surface area of S^m, truncated per ``spec.truncation``.

    Parameters
    ----------
    spec : KernelSpec
        Must have ``family == "sphere"``.
    cosangle : float or ndarray
        Inner product(s) of the two points, in [-1, 1].

    Returns
    -------
    SeriesEval
        value > 0, plus terms used and the tail majorant.
    """
    _require_sphere(spec)
    x = _check_cosangle(cosangle)
    w, beta, used, tail = _sphere_plan(spec.dim, spec.t, spec.truncation, 0, False)
    v = _eval_series(w, beta, x)
    if np.any(v <= 0.0):
        raise KernelPrecisionError(
            "sphere heat kernel evaluated <= 0; the series lost all "
            "significant digits (t too small for this argument)"
        )
    return SeriesEval(_maybe_scalar(v, cosangle), used, tail)


def sphere_heat_deriv(spec, cosangle, order):
    """order-th derivative of h_{t,m} in its cosine argument (order 1..3)."""
    _require_sphere(spec)
    if order not in (1, 2, 3):
        raise ValueError("derivative order must be 1, 2 or 3")
    x = _check_cosangle(cosangle)
    w, beta, used, tail = _sphere_plan(spec.dim, spec.t, spec.truncation, order, False)
    v = _eval_series(w, beta, x)
    return SeriesEval(_maybe_scalar(v, cosangle), used, tail)


def sphere_heat_dt(spec, cosangle):
    """Termwise t-derivative of h_{t,m}; drives diffusion-time descent."""
    _require_sphere(spec)
    x = _check_cosangle(cosangle)
    w, beta, _, _ = _sphere_plan(spec.dim, spec.t, spec.truncation, 0, True)
    v = _eval_series(w, beta, x)
    return _maybe_scalar(v, cosangle)


def sphere_log_heat(spec, cosangle, order=0):
    """Logarithmic heat kernel ell_{t,m} = ln h_{t,m} or a derivative of it.

    order 0 returns ell itself, orders 1..3 the derivatives in the cosine
    argument, combined from the series derivatives of h:

        ell'   = h'/h
        ell''  = (h'' h - h'^2) / h^2
        ell''' = (h''' h^2 - 3 h'' h' h + 2 h'^3) / h^3
    """
    _require_sphere(spec)
    if order not in (0, 1, 2, 3):
        raise ValueError("log-kernel derivative order must be 0..3")
    h = sphere_heat(spec, cosangle).value
    if order == 0:
        return np.log(h) if np.ndim(h) else math.log(h)
    h1 = sphere_heat_deriv(spec, cosangle, 1).value
    if order == 1:
        return h1 / h
    h2 = sphere_heat_deriv(spec, cosangle, 2).value
    if order == 2:
        return (h2 * h - h1 * h1) / (h * h)
    h3 = sphere_heat_deriv(spec, cosangle, 3).value
    return (h3 * h * h - 3.0 * h2 * h1 * h + 2.0 * h1 ** 3) / (h * h * h)


def sphere_log_heat_highprec(m, t, cosangle, guard_digits=25):
    """ln h_{t,m}(cosangle) summed in arbitrary precision.

    In double precision the series loses all digits once the kernel value
    drops below ~1e-16 of the largest term (small t, large angle).  This
    path sizes the working precision from the Varadhan estimate
    ln h ~ -arccos(x)^2/(2t) and is intended for small-time diagnostics,
    not bulk evaluation.
    """
    if m < 2:
        raise ValueError("sphere family requires dim >= 2")
    if t < SPHERE_T_FLOOR:
        raise ValueError(f"t below the documented floor {SPHERE_T_FLOOR}")
    x = float(cosangle)
    if abs(x) > 1.0 + 1e-12:
        raise ValueError("cosangle outside [-1, 1]")
    x = min(1.0, max(-1.0, x))
    delta = math.acos(x)
    cancel_digits = (delta * delta / (2.0 * t)) / math.log(10.0)
    dps = int(30 + guard_digits + cancel_digits)
    # terms until the spectral weight is negligible at the target precision
    need = delta * delta / (2.0 * t) + (dps + 10) * math.log(10.0)
    lmax = int(math.sqrt(2.0 * need / t)) + m + 10
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        beta = mpmath.mpf(m - 1) / 2
        area = 2 * mpmath.pi ** (mpmath.mpf(m + 1) / 2) / mpmath.gamma(
            mpmath.mpf(m + 1) / 2
        )
        acc = mpmath.mpf(0)
        c_prev = mpmath.mpf(1)
        c_curr = 2 * beta * xm
        for l in range(lmax + 1):
            if l == 0:
                c = c_prev
            elif l == 1:
                c = c_curr
            else:
                c_prev, c_curr = c_curr, (
                    2 * xm * (l + beta - 1) * c_curr - (l + 2 * beta - 2) * c_prev
                ) / l
                c = c_curr
            acc += (
                mpmath.e ** (-l * (l + m - 1) * mpmath.mpf(t) / 2)
                * (2 * l + m - 1)
                / ((m - 1) * area)
                * c
            )
        if acc <= 0:
            raise KernelPrecisionError("high-precision sum still nonpositive")
        return float(mpmath.log(acc))


# ---------------------------------------------------------------------------
# circle, euclidean, hyperbolic
# ---------------------------------------------------------------------------


def _circle_image_count(t, policy, prefactor):
    if isinstance(policy, FixedTerms):
        return policy.terms
    for k in range(policy.max_terms):
        # bound on everything beyond |k|: both images at |k|+1 and further
        edge = 2.0 * math.pi * (k + 1) - math.pi
        bound = 2.0 * prefactor * math.exp(-edge * edge / (4.0 * t)) / (
            1.0 - math.exp(-math.pi * math.pi / t)
        )
        if bound <= policy.epsilon:
            return k
    raise TruncationNotConvergedError(
        f"circle image sum tail above {policy.epsilon:g} "
        f"after {policy.max_terms} images"
    )


def circle_heat(x, y, t, policy=None):
    """Wrapped-Gaussian heat kernel on S^1.

    (4 pi t)^{-1/2} sum_k exp(-(x - y + 2 pi k)^2 / (4t)), images summed
    symmetrically in k so that swapping x and y gives the identical float.
    """
    if not t > 0:
        raise ValueError("diffusion time t must be > 0")
    policy = policy or TailBound()
    pref = 1.0 / math.sqrt(4.0 * math.pi * t)
    d = math.remainder(x - y, 2.0 * math.pi)  # principal difference
    kmax = _circle_image_count(t, policy, pref)
    acc = math.exp(-d * d / (4.0 * t))
    for k in range(1, kmax + 1):
        dp = d + 2.0 * math.pi * k
        dm = d - 2.0 * math.pi * k
        acc += math.exp(-dp * dp / (4.0 * t)) + math.exp(-dm * dm / (4.0 * t))
    return pref * acc


def euclidean_heat(x, y, t):
    """Gaussian heat kernel (4 pi t)^{-m/2} exp(-|x-y|^2 / 4t) on R^m."""
    if not t > 0:
        raise ValueError("diffusion time t must be > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError("euclidean points must have matching dimension")
    m = x.shape[-1]
    d2 = float(np.sum((x - y) ** 2))
    return (4.0 * math.pi * t) ** (-m / 2.0) * math.exp(-d2 / (4.0 * t))


def hyperbolic3_heat(rho, t):
    """Heat kernel on hyperbolic 3-space at geodesic distance rho.

    Closed form from the odd-dimension recursion, worked once by hand at
    m = 1:  (4 pi t)^{-3/2} (rho/sinh rho) exp(-t - rho^2/4t), with the
    limit rho/sinh rho -> 1 at rho = 0.  Positive and strictly decreasing
    in rho.  Higher odd and all even dimensions are not supported.
    """
    if not t > 0:
        raise ValueError("diffusion time t must be > 0")
    if rho < 0:
        raise ValueError("distance rho must be >= 0")
    ratio = 1.0 if rho == 0.0 else rho / math.sinh(rho)
    return (4.0 * math.pi * t) ** (-1.5) * ratio * math.exp(-t - rho * rho / (4.0 * t))


# ---------------------------------------------------------------------------
# quadrature checks
# ---------------------------------------------------------------------------


def s2_quadrature(n_theta=64, n_phi=128):
    """Product Gauss-Legendre nodes and weights for integrals over S^2.

    Returns (points, weights) with points of shape (n_theta * n_phi, 3);
    weights sum to the sphere area 4 pi.
    """
    xs, ws = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * math.pi * (xs + 1.0)  # polar angle in (0, pi)
    w_theta = 0.5 * math.pi * ws * np.sin(theta)
    xp, wp = np.polynomial.legendre.leggauss(n_phi)
    phi = math.pi * (xp + 1.0)
    w_phi = math.pi * wp
    st, ct = np.sin(theta), np.cos(theta)
    pts = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.outer(ct, np.ones_like(phi)).ravel(),
        ],
        axis=-1,
    )
    return pts, np.outer(w_theta, w_phi).ravel()


def sphere_normalization_error(spec, n_theta=64, n_phi=128):
    """|integral of the kernel over S^m minus 1|.

    For m = 2 the integral uses the product Gauss-Legendre rule in
    (theta, phi); for other m it reduces to the polar angle with the
    sin^{m-1} area factor.
    """
    _require_sphere(spec)
    m = spec.dim
    if m == 2:
        pts, wts = s2_quadrature(n_theta, n_phi)
        vals = sphere_heat(spec, pts[:, 2]).value  # kernel at the north pole
        return abs(float(np.dot(wts, vals)) - 1.0)
    xs, ws = np.polynomial.legendre.leggauss(max(n_theta, 64))
    theta = 0.5 * math.pi * (xs + 1.0)
    vals = sphere_heat(spec, np.cos(theta)).value
    ring = sphere_surface_area(m - 1) * np.sin(theta) ** (m - 1)
    integral = 0.5 * math.pi * float(np.dot(ws, vals * ring))
    return abs(integral - 1.0)


def circle_normalization_error(t, policy=None, nodes=4096):
    """|integral of the S^1 kernel over [0, 2 pi) minus 1| (trapezoid)."""
    ys = np.linspace(0.0, 2.0 * math.pi, nodes, endpoint=False)
    vals = np.array([circle_heat(0.0, y, t, policy) for y in ys])
    return abs(float(vals.mean()) * 2.0 * math.pi - 1.0)


def semigroup_error(s, t, deltas=(0.4, 1.1, 2.3), n_theta=64, n_phi=128,
                    policy=None):
    """Max relative Chapman-Kolmogorov defect on S^2.

    Checks integral over z of p(x,z,s) p(z,y,t) against p(x,y,s+t) for y at
    the given polar angles from x.
    """
    policy = policy or TailBound()
    pts, wts = s2_quadrature(n_theta, n_phi)
    spec_s = KernelSpec(SPHERE, 2, s, policy)
    spec_t = KernelSpec(SPHERE, 2, t, policy)
    spec_st = KernelSpec(SPHERE, 2, s + t, policy)
    x = np.array([0.0, 0.0, 1.0])
    first = sphere_heat(spec_s, pts @ x).value
    worst = 0.0
    for delta in deltas:
        y = np.array([math.sin(delta), 0.0, math.cos(delta)])
        second = sphere_heat(spec_t, pts @ y).value
        lhs = float(np.dot(wts, first * second))
        rhs = sphere_heat(spec_st, math.cos(delta)).value
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst
