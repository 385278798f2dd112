"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
stream; the stated tolerances are asserted directly.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import radial_chi_square
from diffmean.analysis import (
    MinimumNotAtZeroError,
    SmearinessOrder,
    classify_smeariness,
    delta_bound,
    hemisphere_profile,
    lambda_bound,
    sigma_bound,
    small_t_gap,
    two_pole_profile,
)
from diffmean.cli import main
from diffmean.estimators import (
    OptimizerConfig,
    estimate_diffusion_mean,
    estimate_t,
    riemannian_gradient,
    sample_log_likelihood,
)
from diffmean.experiments import bootstrap_scaling, slope_standard_error
from diffmean.graph import MultiGraph, graph_diffusion_means, transition_matrix
from diffmean.kernels import (
    EUCLIDEAN,
    SPHERE,
    KernelSpec,
    semigroup_error,
    sphere_heat,
    sphere_heat_deriv,
    sphere_heat_dt,
    sphere_log_heat,
)
from diffmean.manifold import (
    exp_map,
    geodesic_distance,
    north_pole,
    tangent_project,
)
from diffmean.sampling import (
    BimodalBrownianNormal,
    BrownianNormal,
    EmpiricalSample,
    draw,
    uniform_sphere,
)

MU = north_pole(2)


def record(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} - {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


def two_pole_sample(alpha):
    return EmpiricalSample(np.stack([MU, -MU]), np.array([1.0 - alpha, alpha]))


def test_criterion_01_normalization(capsys):
    start = time.monotonic()
    worst_sphere = 0.0
    for t in (0.5, 1.0, 2.0):
        code = main(["check", "--normalization", "--dim", "2", "--t", str(t)])
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        worst_sphere = max(worst_sphere, out["result"]["error"])
    code = main(["check", "--normalization", "--family", "circle", "--t", "0.5"])
    out = json.loads(capsys.readouterr().out)
    circle_err = out["result"]["error"]
    elapsed = time.monotonic() - start
    with capsys.disabled():
        record(
            1,
            code == 0 and worst_sphere < 1e-6 and circle_err < 1e-8 and elapsed < 10,
            f"sphere err {worst_sphere:.2e} < 1e-6, circle err {circle_err:.2e} "
            f"< 1e-8, {elapsed:.1f}s < 10s",
        )


def test_criterion_02_semigroup():
    start = time.monotonic()
    err = semigroup_error(0.5, 0.5)
    elapsed = time.monotonic() - start
    record(2, err < 1e-4 and elapsed < 30,
           f"Chapman-Kolmogorov relative error {err:.2e} < 1e-4, "
           f"{elapsed:.1f}s < 30s")


def test_criterion_03_derivative_suite():
    grid = np.linspace(-0.95, 0.95, 20)
    h = 1e-5
    worst = 0.0
    for m in (2, 3):
        for t in (1.0, 3.0):
            spec = KernelSpec(SPHERE, m, t)
            for x in grid:
                fd = (sphere_heat(spec, x + h).value
                      - sphere_heat(spec, x - h).value) / (2 * h)
                an = sphere_heat_deriv(spec, x, 1).value
                worst = max(worst, abs(an - fd) / abs(an))
                for k in (2, 3):
                    fd = (sphere_heat_deriv(spec, x + h, k - 1).value
                          - sphere_heat_deriv(spec, x - h, k - 1).value) / (2 * h)
                    an = sphere_heat_deriv(spec, x, k).value
                    worst = max(worst, abs(an - fd) / abs(an))
                fd = (sphere_heat(KernelSpec(SPHERE, m, t + h), x).value
                      - sphere_heat(KernelSpec(SPHERE, m, t - h), x).value) / (2 * h)
                an = sphere_heat_dt(spec, x)
                worst = max(worst, abs(an - fd) / abs(an))

    rng = np.random.default_rng(7)
    worst_grad = 0.0
    for _ in range(20):
        X = uniform_sphere(15, 2, rng)
        y = uniform_sphere(1, 2, rng)[0]
        sample = EmpiricalSample(X)
        spec = KernelSpec(SPHERE, 2, 1.0 + rng.random())
        g = riemannian_gradient(sample, y, spec)
        v = tangent_project(y, rng.standard_normal(3))
        v /= np.linalg.norm(v)
        fd = (sample_log_likelihood(sample, exp_map(y, h * v), spec)
              - sample_log_likelihood(sample, exp_map(y, -h * v), spec)) / (2 * h)
        worst_grad = max(worst_grad, abs(fd - float(g @ v)) / max(abs(fd), 1e-10))
    record(3, worst < 1e-5 and worst_grad < 1e-5,
           f"kernel derivative rel err {worst:.2e} < 1e-5, "
           f"likelihood gradient rel err {worst_grad:.2e} < 1e-5")


def test_criterion_04_log_kernel_sign_grids():
    grid = np.linspace(-1.0, 1.0, 201)
    ok_first = all(
        np.all(sphere_log_heat(KernelSpec(SPHERE, m, t), grid, 1) > 0)
        for m in (2, 3, 4, 5)
        for t in (0.5, 1.0, 3.0)
    )
    ok_second = all(
        np.all(sphere_log_heat(KernelSpec(SPHERE, m, delta_bound(m) + 0.2),
                               grid, 2) < 0)
        for m in (2, 3, 4, 5)
    )
    ok_third = bool(np.all(sphere_log_heat(KernelSpec(SPHERE, 2, 2.2), grid, 3) >= 0))
    record(4, ok_first and ok_second and ok_third,
           f"ell' > 0: {ok_first}, ell'' < 0 at delta(m)+0.2: {ok_second}, "
           f"ell''' >= 0 at t=2.2: {ok_third} (201-point grids)")


def test_criterion_05a_two_pole_subcritical_convergence():
    alpha = lambda_bound(2, 3.0) - 0.05
    sample = two_pole_sample(alpha)
    cfg = OptimizerConfig(max_iters=5000, grad_tol=1e-6, restarts=0)
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(20):
        rep = estimate_diffusion_mean(
            sample, KernelSpec(SPHERE, 2, 3.0), cfg,
            init=uniform_sphere(1, 2, rng)[0],
        )
        worst = max(worst, geodesic_distance(rep.point, MU))
    record("5a", worst < 1e-3,
           f"20 random starts all converge to the pole (worst {worst:.2e})")


def test_criterion_05b_two_pole_balanced_equator():
    cfg = OptimizerConfig(max_iters=5000, grad_tol=1e-6, restarts=5)
    with pytest.warns(UserWarning):
        rep = estimate_diffusion_mean(
            two_pole_sample(0.5), KernelSpec(SPHERE, 2, 3.0), cfg, seed=3
        )
    val = abs(float(rep.point @ MU))
    record("5b", val < 1e-4, f"balanced weights: |<point, pole>| = {val:.2e} < 1e-4")


def test_criterion_05c_two_pole_supercritical_profile():
    # as stated: the profile's global minimum sits at delta = pi for
    # alpha = Lambda + 0.05.  The exact profile's minimum is an interior
    # ring (delta ~ 1.296); the antipode only wins for alpha > 1 - Lambda.
    alpha = lambda_bound(2, 3.0) + 0.05
    prof = two_pole_profile(2, 3.0, alpha, grid=np.linspace(0.0, math.pi, 1001))
    k = int(np.argmin(prof.values))
    record("5c", k == len(prof.values) - 1,
           f"global minimum at delta=pi: argmin is delta={prof.delta_grid[k]:.3f} "
           f"(index {k} of {len(prof.values) - 1})")


def test_criterion_06_lambda_limit():
    big = lambda_bound(2, 10.0)
    vals = {m: lambda_bound(m, 5.0) for m in (2, 3, 4, 5)}
    ok = big > 0.49 and all(0.4 < v < 0.5 for v in vals.values())
    record(6, ok, f"Lambda_2(10) = {big:.4f} > 0.49; Lambda_m(5) in (0.4, 0.5): "
           + ", ".join(f"m={m}: {v:.4f}" for m, v in vals.items()))


def test_criterion_07_euclidean_oracle():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(5):
        X = rng.standard_normal((40, 3))
        for t in (0.1, 1.0, 10.0):
            rep = estimate_diffusion_mean(
                EmpiricalSample(X), KernelSpec(EUCLIDEAN, 3, t)
            )
            worst = max(worst, float(np.max(np.abs(rep.point - X.mean(axis=0)))))
    record(7, worst < 1e-10,
           f"diffusion mean equals the average (worst deviation {worst:.2e})")


def _non_smeary(profile):
    try:
        return classify_smeariness(profile).order_claim is SmearinessOrder.NON_SMEARY
    except MinimumNotAtZeroError:
        return False


def test_criterion_08_smeariness_bisection():
    # two-pole at t = 3
    target = lambda_bound(2, 3.0)
    lo, hi = target - 0.1, min(target + 0.1, 0.5)
    grid = np.linspace(0.0, math.pi, 201)
    assert _non_smeary(two_pole_profile(2, 3.0, lo, grid=grid))
    assert not _non_smeary(two_pole_profile(2, 3.0, hi, grid=grid))
    while hi - lo > 0.004:
        mid = 0.5 * (lo + hi)
        if _non_smeary(two_pole_profile(2, 3.0, mid, grid=grid)):
            lo = mid
        else:
            hi = mid
    flip_two_pole = 0.5 * (lo + hi)
    err_two_pole = abs(flip_two_pole - target)

    # hemisphere mixture at t = 2.2
    target_h = sigma_bound(2.2)
    lo, hi = target_h - 0.1, target_h + 0.1
    grid_h = np.linspace(0.0, math.pi, 201)
    assert _non_smeary(hemisphere_profile(2.2, lo, grid=grid_h))
    assert not _non_smeary(hemisphere_profile(2.2, hi, grid=grid_h))
    while hi - lo > 0.008:
        mid = 0.5 * (lo + hi)
        if _non_smeary(hemisphere_profile(2.2, mid, grid=grid_h)):
            lo = mid
        else:
            hi = mid
    flip_hemi = 0.5 * (lo + hi)
    err_hemi = abs(flip_hemi - target_h)
    record(8, err_two_pole <= 0.01 and err_hemi <= 0.02,
           f"flip at alpha={flip_two_pole:.4f} vs Lambda_2(3)={target:.4f} "
           f"(err {err_two_pole:.4f} <= 0.01); hemisphere flip {flip_hemi:.4f} "
           f"vs Sigma(2.2)={target_h:.4f} (err {err_hemi:.4f} <= 0.02)")


def test_criterion_09_fig1b_reproduction():
    start = time.monotonic()
    source = BimodalBrownianNormal(sigma2=0.09, alpha=0.2)  # sigma-parameter 0.3
    cfg = OptimizerConfig(max_iters=500, grad_tol=1e-6, restarts=0)
    frechet = bootstrap_scaling(source, "frechet", B=100, seed=0, config=cfg)
    slopes = {}
    ses = {}
    for t in (0.4, 1.0, 4.0):
        table = bootstrap_scaling(source, "diffusion", B=100, seed=0, config=cfg,
                                  t=t)
        slopes[t] = table.fitted_slope
        ses[t] = slope_standard_error(table)
    elapsed = time.monotonic() - start
    ordering = all(
        slopes[b] <= slopes[a] + math.hypot(ses[a], ses[b])
        for a, b in ((0.4, 1.0), (1.0, 4.0))
    )
    ok = (
        frechet.fitted_slope >= 0.3
        and slopes[4.0] <= 0.15
        and ordering
        and elapsed < 600
    )
    record(9, ok,
           f"Frechet slope {frechet.fitted_slope:.3f} >= 0.3; diffusion(t=4) "
           f"slope {slopes[4.0]:.3f} <= 0.15; slopes nonincreasing in t "
           f"{[round(slopes[t], 3) for t in (0.4, 1.0, 4.0)]} within one SE; "
           f"{elapsed:.0f}s < 600s")


def test_criterion_10_t_estimation():
    worst_pop = 0.0
    for s in (0.8, 1.0, 1.2):
        rep = estimate_t(
            two_pole_sample(lambda_bound(2, s)), MU, SPHERE,
            OptimizerConfig(max_iters=2000, grad_tol=1e-8), t_init=2.0,
        )
        worst_pop = max(worst_pop, abs(rep.t - s))
    worst_bn = 0.0
    for sigma2 in (0.5, 1.0):
        sample = draw(BrownianNormal(sigma2), 5000, seed=11)
        rep = estimate_t(sample, MU, SPHERE,
                         OptimizerConfig(max_iters=500, grad_tol=1e-7),
                         t_init=1.0)
        worst_bn = max(worst_bn, abs(rep.t - sigma2))
    record(10, worst_pop < 0.05 and worst_bn < 0.2,
           f"two-pole population t* error {worst_pop:.4f} < 0.05; "
           f"Brownian-normal t* error {worst_bn:.3f} < 0.2 (n=5000)")


def test_criterion_11_small_t_limit():
    grid = np.linspace(0.0, 2.0, 21)
    gaps = [small_t_gap(2, t, grid) for t in (0.1, 0.05, 0.02)]
    ok = gaps[0] > gaps[1] > gaps[2]
    record(11, ok,
           "Varadhan gap strictly decreases: "
           + " > ".join(f"{g:.4f}" for g in gaps))


def test_criterion_12_graph_oracle():
    def path(n):
        c = np.zeros((n, n), dtype=int)
        for i in range(n - 1):
            c[i, i + 1] = c[i + 1, i] = 1
        return MultiGraph(c)

    def cycle(n):
        c = np.zeros((n, n), dtype=int)
        for i in range(n):
            c[i, (i + 1) % n] = c[(i + 1) % n, i] = 1
        return MultiGraph(c)

    def complete(n):
        return MultiGraph(np.ones((n, n), dtype=int) - np.eye(n, dtype=int))

    def star(n):
        c = np.zeros((n, n), dtype=int)
        for i in range(1, n):
            c[0, i] = c[i, 0] = 1
        return MultiGraph(c)

    rng = np.random.default_rng(12)
    corpus = [path(3), path(4), cycle(4), cycle(5), complete(3), complete(4),
              star(5), star(6)]
    for _ in range(6):
        n = int(rng.integers(2, 7))
        c = rng.integers(0, 3, size=(n, n))
        c = c + c.T
        np.fill_diagonal(c, 0)
        for i in range(n):
            if c[i].sum() == 0:
                j = (i + 1) % n
                c[i, j] = c[j, i] = 1
        corpus.append(MultiGraph(c))

    agree = True
    for g in corpus:
        for t in range(1, 5):
            dists = [np.full(g.n, 1.0 / g.n)]
            p = rng.random(g.n)
            dists.append(p / p.sum())
            for dist in dists:
                like = np.linalg.matrix_power(transition_matrix(g), t) @ dist
                for mode in (False, True):
                    expected = [
                        i for i in range(g.n)
                        if abs(like[i] - (like.min() if mode else like.max()))
                        <= 1e-12
                    ]
                    got = graph_diffusion_means(g, t, dist, as_printed=mode)
                    agree = agree and got == expected

    p3_case = graph_diffusion_means(
        path(3), 2, np.array([0.5, 0.0, 0.5]), as_printed=True
    )
    record(12, agree and p3_case == [1],
           f"brute-force agreement on {len(corpus)} graphs (t <= 4, both "
           f"readings); P_3 endpoint case -> middle vertex: {p3_case}")


def test_criterion_13_walk_kernel_consistency():
    start = time.monotonic()
    stat, crit = radial_chi_square(0.5, n=100_000, steps=400, seed=2024)
    elapsed = time.monotonic() - start
    record(13, stat < crit and elapsed < 120,
           f"chi-square {stat:.1f} < {crit:.1f} (1% level, 1e5 walks, "
           f"(m,t)=(2,0.5)); {elapsed:.0f}s < 120s")
