"""Command-line interface.

One executable, ``diffmean``, exposing kernel evaluation, invariant
checks, mean/variance estimation, analytic bounds, likelihood profiles,
bootstrap rate experiments, time traces, graph means and sampling.  Every
run echoes its fully resolved configuration next to the result; results
are JSON by default, CSV for tables and profiles.

Exit codes: 0 success, 1 numerical failure (diagnostic names the failed
invariant), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis, experiments, graph as graphmod, kernels, sampling
from .estimators import (
    OptimizerConfig,
    estimate_diffusion_mean,
    estimate_frechet_mean,
    estimate_joint,
    estimate_t,
)
from .kernels import EUCLIDEAN, SPHERE, KernelSpec, TailBound
from .manifold import north_pole, unit_vector
from .sampling import (
    BimodalBrownianNormal,
    BrownianNormal,
    EuclideanGaussian,
    HemispherePointMass,
    TwoPole,
)

__all__ = ["main"]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _resolved_config(args):
    skip = {"command", "func", "reproduce"}
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, result):
    payload = {
        "command": args.command or f"reproduce:{args.reproduce}",
        "config": _resolved_config(args),
        "result": _jsonable(result),
    }
    text = json.dumps(payload, indent=1)
    out = getattr(args, "out", None)
    if out and getattr(args, "format", "json") == "json" and not os.path.isdir(out):
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _report_dict(report):
    d = {
        "point": _jsonable(np.asarray(report.point)),
        "t": report.t,
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "restarts_best_of": report.restarts_best_of,
        "nonunique": report.nonunique,
        "boundary_hit": report.boundary_hit,
    }
    if report.t_path is not None:
        d["t_path"] = list(report.t_path)
    return d


def _add_optim_flags(p):
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--step-size", type=float, default=1.0)
    p.add_argument("--step-policy", choices=["backtracking", "fixed"],
                   default="backtracking")
    p.add_argument("--restarts", type=int, default=5)


def _config(args):
    return OptimizerConfig(
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        step_size=args.step_size,
        step_policy=args.step_policy,
        restarts=getattr(args, "restarts", 0),
    )


def _add_dist_flags(p):
    p.add_argument("--dist", choices=[
        "two-pole", "bimodal", "hemisphere", "brownian", "euclidean-gaussian",
    ])
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--alpha-from-lambda", type=float, metavar="S",
                   help="set alpha to the critical two-pole weight at time S")


def _distribution(args):
    alpha = args.alpha
    if args.alpha_from_lambda is not None:
        alpha = analysis.lambda_bound(args.dim, args.alpha_from_lambda)
    if args.dist == "two-pole":
        _require(alpha is not None, "--alpha or --alpha-from-lambda")
        return TwoPole(alpha, args.dim)
    if args.dist == "bimodal":
        _require(alpha is not None and args.sigma2 is not None,
                 "--alpha and --sigma2")
        return BimodalBrownianNormal(args.sigma2, alpha, args.dim)
    if args.dist == "hemisphere":
        _require(alpha is not None, "--alpha")
        return HemispherePointMass(alpha)
    if args.dist == "brownian":
        _require(args.sigma2 is not None, "--sigma2")
        return BrownianNormal(args.sigma2, dim=args.dim)
    if args.dist == "euclidean-gaussian":
        _require(args.sigma2 is not None, "--sigma2")
        return EuclideanGaussian(args.sigma2, args.dim)
    raise SystemExit2("--dist is required")


class SystemExit2(Exception):
    """Usage error discovered after argparse (still exit code 2)."""


def _require(cond, what):
    if not cond:
        raise SystemExit2(f"missing {what} for this subcommand")


def _load_points(args):
    if args.input is None:
        raise SystemExit2("--input CSV is required")
    if getattr(args, "kernel", "sphere") == "euclidean":
        pts = np.loadtxt(args.input, delimiter=",", comments="#", ndmin=2)
        return sampling.EmpiricalSample(pts)
    return sampling.ingest_latlon_csv(args.input)


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------


def _run_kernel(args):
    policy = TailBound(args.epsilon, args.max_terms)
    if args.family == "sphere":
        spec = KernelSpec(SPHERE, args.dim, args.t, policy)
        if args.dt:
            return _emit(args, {"dt": kernels.sphere_heat_dt(spec, args.cos)})
        if args.log is not None:
            return _emit(
                args, {"log_heat": kernels.sphere_log_heat(spec, args.cos, args.log)}
            )
        if args.deriv:
            ev = kernels.sphere_heat_deriv(spec, args.cos, args.deriv)
        else:
            ev = kernels.sphere_heat(spec, args.cos)
        return _emit(args, {
            "value": ev.value, "terms_used": ev.terms_used,
            "tail_estimate": ev.tail_estimate,
        })
    if args.family == "circle":
        _require(args.x is not None and args.y is not None, "--x and --y angles")
        return _emit(args, {
            "value": kernels.circle_heat(float(args.x), float(args.y), args.t, policy)
        })
    if args.family == "euclidean":
        _require(args.x is not None and args.y is not None, "--x and --y vectors")
        x = np.array([float(v) for v in args.x.split(",")])
        y = np.array([float(v) for v in args.y.split(",")])
        return _emit(args, {"value": kernels.euclidean_heat(x, y, args.t)})
    _require(args.rho is not None, "--rho")
    return _emit(args, {"value": kernels.hyperbolic3_heat(args.rho, args.t)})


def _run_check(args):
    if args.normalization:
        if args.family == "circle":
            err = kernels.circle_normalization_error(args.t)
            tol = args.tol if args.tol is not None else 1e-8
        else:
            spec = KernelSpec(SPHERE, args.dim, args.t)
            err = kernels.sphere_normalization_error(spec)
            tol = args.tol if args.tol is not None else 1e-6
        ok = err < tol
        ret = _emit(args, {"check": "normalization", "error": err,
                           "tolerance": tol, "passed": bool(ok)})
        if not ok:
            print(f"invariant failed: normalization error {err:g} >= {tol:g}",
                  file=sys.stderr)
            return 1
        return ret
    if args.semigroup:
        err = kernels.semigroup_error(args.s, args.t)
        tol = args.tol if args.tol is not None else 1e-4
        ok = err < tol
        ret = _emit(args, {"check": "semigroup", "relative_error": err,
                           "tolerance": tol, "passed": bool(ok)})
        if not ok:
            print(f"invariant failed: semigroup relative error {err:g} >= {tol:g}",
                  file=sys.stderr)
            return 1
        return ret
    raise SystemExit2("choose --normalization or --semigroup")


def _run_mean(args):
    sample = _load_points(args)
    config = _config(args)
    if args.estimator == "frechet":
        report = estimate_frechet_mean(sample, config, seed=args.seed)
    else:
        dim = sample.points.shape[1] - (0 if args.kernel == "euclidean" else 1)
        spec = KernelSpec(
            EUCLIDEAN if args.kernel == "euclidean" else SPHERE, dim, args.t
        )
        report = estimate_diffusion_mean(sample, spec, config, seed=args.seed)
    out = _report_dict(report)
    if args.kernel == "sphere":
        lat, lon = sampling.unit_to_latlon(report.point)
        out["latlon"] = [lat, lon]
    return _emit(args, out)


def _run_tvar(args):
    sample = _load_points(args)
    if args.at is not None:
        lat, lon = (float(v) for v in args.at.split(","))
        base = sampling.latlon_to_unit(lat, lon)
    elif args.at_pole:
        base = north_pole(sample.points.shape[1] - 1)
    else:
        base = unit_vector(sample.points.mean(axis=0))
    report = estimate_t(sample, base, SPHERE, _config(args), t_init=args.t_init)
    return _emit(args, _report_dict(report))


def _run_joint(args):
    sample = _load_points(args)
    report = estimate_joint(sample, _config(args), t_init=args.t_init,
                            seed=args.seed)
    return _emit(args, _report_dict(report))


def _run_bounds(args):
    if args.lambda_:
        return _emit(args, {"lambda": analysis.lambda_bound(args.dim, args.t)})
    if args.sigma:
        return _emit(args, {"sigma": analysis.sigma_bound(args.t)})
    if args.delta:
        return _emit(args, {"delta": analysis.delta_bound(args.dim)})
    raise SystemExit2("choose --lambda, --sigma or --delta")


def _run_profile(args):
    grid = np.linspace(0.0, math.pi, args.points)
    if args.two_pole:
        _require(args.alpha is not None, "--alpha")
        prof = analysis.two_pole_profile(args.dim, args.t, args.alpha, grid)
    elif args.hemisphere:
        _require(args.alpha is not None, "--alpha")
        prof = analysis.hemisphere_profile(args.t, args.alpha, grid)
    else:
        raise SystemExit2("choose --two-pole or --hemisphere")
    if args.out and args.format == "csv":
        experiments.export_table(prof, args.out, "csv")
        return _emit(args, {"written": args.out,
                            "argmin_delta": float(grid[np.argmin(prof.values)])})
    return _emit(args, {
        "delta_grid": list(prof.delta_grid), "values": list(prof.values),
        "argmin_delta": float(grid[np.argmin(prof.values)]),
    })


def _run_bootstrap(args):
    source = _load_points(args) if args.input else _distribution(args)
    n_grid = tuple(int(v) for v in args.n_grid.split(","))
    table = experiments.bootstrap_scaling(
        source, args.estimator, n_grid, args.replicates,
        config=OptimizerConfig(max_iters=args.max_iters, grad_tol=args.grad_tol,
                               restarts=0),
        seed=args.seed, t=args.t, t_init=args.t_init,
    )
    if args.out and args.format == "csv":
        experiments.export_table(table, args.out, "csv")
        return _emit(args, {"written": args.out, "fitted_slope": table.fitted_slope})
    payload = experiments.table_payload(table)
    return _emit(args, payload)


def _run_ttrace(args):
    source = _distribution(args)
    report = experiments.t_trace(
        source, t_init=args.t_init, config=_config(args), n=args.n, seed=args.seed
    )
    return _emit(args, _report_dict(report))


def _run_graph(args):
    g = graphmod.read_edge_list(args.edges)
    if args.dist_json:
        with open(args.dist_json, encoding="utf-8") as fh:
            probs = np.asarray(json.load(fh), dtype=float)
    else:
        probs = np.full(g.n, 1.0 / g.n)
    dist = graphmod.VertexDistribution(probs)
    means = graphmod.graph_diffusion_means(g, args.t, dist,
                                           as_printed=args.as_printed)
    like = graphmod.graph_likelihood(g, args.t, dist)
    return _emit(args, {"means": means, "likelihood": list(like)})


def _run_sample(args):
    dist = _distribution(args)
    sample = sampling.draw(dist, args.n, args.seed)
    if args.out and not isinstance(dist, EuclideanGaussian):
        sampling.export_latlon_csv(sample.points, args.out)
        return _emit(args, {"written": args.out, "n": sample.n})
    return _emit(args, {"points": _jsonable(sample.points), "n": sample.n})


# ---------------------------------------------------------------------------
# figure reproductions (desk scale)
# ---------------------------------------------------------------------------


def _run_reproduce(args):
    name = args.reproduce
    seed = args.seed
    outdir = args.out or "."
    written = []

    def path(tag):
        return f"{outdir}/{name}_{tag}_{seed}.csv"

    if name == "fig1b":
        # sigma-parameter 0.3 read as the walk standard deviation
        source = BimodalBrownianNormal(sigma2=0.09, alpha=0.2)
        cfg = OptimizerConfig(max_iters=500, grad_tol=1e-6, restarts=0)
        table = experiments.bootstrap_scaling(source, "frechet", seed=seed,
                                              config=cfg)
        experiments.export_table(table, path("frechet"), "csv")
        written.append((path("frechet"), table.fitted_slope))
        for t in (0.4, 1.0, 4.0):
            table = experiments.bootstrap_scaling(source, "diffusion", seed=seed,
                                                  config=cfg, t=t)
            experiments.export_table(table, path(f"diffusion{t:g}"), "csv")
            written.append((path(f"diffusion{t:g}"), table.fitted_slope))
    elif name == "fig5":
        if args.input:
            source = sampling.ingest_latlon_csv(args.input)
        else:
            # synthetic stand-in for the magnetic-pole reversal data
            source = sampling.draw(BimodalBrownianNormal(0.09, 0.2), 500, seed)
        cfg = OptimizerConfig(max_iters=500, grad_tol=1e-6, restarts=0)
        grid = (30, 100, 300)
        table = experiments.bootstrap_scaling(source, "frechet", grid, seed=seed,
                                              config=cfg)
        experiments.export_table(table, path("frechet"), "csv")
        written.append((path("frechet"), table.fitted_slope))
        for t in (1.0, 2.0):
            table = experiments.bootstrap_scaling(source, "diffusion", grid,
                                                  seed=seed, config=cfg, t=t)
            experiments.export_table(table, path(f"diffusion{t:g}"), "csv")
            written.append((path(f"diffusion{t:g}"), table.fitted_slope))
    elif name == "fig7a":
        for s in (0.8, 1.0, 1.2):
            alpha = analysis.lambda_bound(2, s)
            report = experiments.t_trace(TwoPole(alpha), t_init=2.0)
            experiments.export_table(report, path(f"lambda{s:g}"), "csv")
            written.append((path(f"lambda{s:g}"), report.t))
    elif name == "fig7b":
        for sigma2 in (0.5, 1.0, 1.5, 2.0):
            report = experiments.t_trace(
                BrownianNormal(sigma2), t_init=2.0, n=5000, seed=seed
            )
            experiments.export_table(report, path(f"sigma{sigma2:g}"), "csv")
            written.append((path(f"sigma{sigma2:g}"), report.t))
    return _emit(args, {"written": [{"path": p, "final": v} for p, v in written]})


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="diffmean",
        description="Diffusion means: heat-kernel ML location statistics.",
    )
    parser.add_argument("--reproduce", choices=["fig1b", "fig5", "fig7a", "fig7b"],
                        help="run a packaged desk-scale experiment")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output file (or directory for --reproduce)")
    parser.add_argument("--input", help="input CSV (lat,lon degrees)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("kernel", help="evaluate one heat kernel")
    p.add_argument("--family", choices=["sphere", "circle", "euclidean",
                                        "hyperbolic3"], required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--cos", type=float, default=1.0,
                   help="cosine of the angle (sphere family)")
    p.add_argument("--x", help="first point (angle or comma-separated vector)")
    p.add_argument("--y", help="second point")
    p.add_argument("--rho", type=float, help="hyperbolic distance")
    p.add_argument("--deriv", type=int, choices=[1, 2, 3])
    p.add_argument("--log", type=int, choices=[0, 1, 2, 3],
                   help="log-kernel derivative order")
    p.add_argument("--dt", action="store_true", help="time derivative")
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.add_argument("--max-terms", type=int, default=10000)
    p.set_defaults(func=_run_kernel)

    p = sub.add_parser("check", help="kernel invariant checks")
    p.add_argument("--normalization", action="store_true")
    p.add_argument("--semigroup", action="store_true")
    p.add_argument("--family", choices=["sphere", "circle"], default="sphere")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_run_check)

    p = sub.add_parser("mean", help="estimate a diffusion or Frechet mean")
    p.add_argument("--kernel", choices=["sphere", "euclidean"], default="sphere")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--estimator", choices=["diffusion", "frechet"],
                   default="diffusion")
    _add_optim_flags(p)
    p.set_defaults(func=_run_mean)

    p = sub.add_parser("tvar", help="estimate the diffusion time at a point")
    p.add_argument("--at", help="base point as 'lat,lon' degrees")
    p.add_argument("--at-pole", action="store_true")
    p.add_argument("--t-init", type=float, default=1.0)
    _add_optim_flags(p)
    p.set_defaults(func=_run_tvar)

    p = sub.add_parser("joint", help="jointly estimate location and time")
    p.add_argument("--t-init", type=float, default=1.0)
    _add_optim_flags(p)
    p.set_defaults(func=_run_joint)

    p = sub.add_parser("bounds", help="analytic critical values")
    p.add_argument("--lambda", dest="lambda_", action="store_true")
    p.add_argument("--sigma", action="store_true")
    p.add_argument("--delta", action="store_true")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--t", type=float, default=3.0)
    p.set_defaults(func=_run_bounds)

    p = sub.add_parser("profile", help="population likelihood profiles")
    p.add_argument("--two-pole", action="store_true")
    p.add_argument("--hemisphere", action="store_true")
    p.add_argument("--alpha", type=float)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--t", type=float, default=3.0)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_run_profile)

    p = sub.add_parser("bootstrap", help="bootstrap variance-scaling experiment")
    _add_dist_flags(p)
    p.add_argument("--estimator", choices=list(experiments.ESTIMATOR_TAGS),
                   required=True)
    p.add_argument("--t", type=float)
    p.add_argument("--t-init", type=float, default=1.0)
    p.add_argument("--n-grid", default="30,100,300,1000,3000")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=_run_bootstrap)

    p = sub.add_parser("ttrace", help="diffusion-time estimation trace")
    _add_dist_flags(p)
    p.add_argument("--n", type=int, help="sample size (omit for population mode)")
    p.add_argument("--t-init", type=float, default=1.0)
    _add_optim_flags(p)
    p.set_defaults(func=_run_ttrace)

    p = sub.add_parser("graph", help="graph diffusion means")
    p.add_argument("--edges", required=True, help="edge list file 'i j mult'")
    p.add_argument("--dist-json", help="JSON array of vertex probabilities")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--as-printed", action="store_true",
                   help="use the literal argmin reading")
    p.set_defaults(func=_run_graph)

    p = sub.add_parser("sample", help="draw from a synthetic distribution")
    _add_dist_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_run_sample)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.reproduce is None and args.command is None:
        parser.print_usage(sys.stderr)
        print("diffmean: error: a subcommand or --reproduce is required",
              file=sys.stderr)
        return 2
    try:
        if args.reproduce is not None:
            return _run_reproduce(args)
        return args.func(args)
    except SystemExit2 as exc:
        print(f"diffmean: error: {exc}", file=sys.stderr)
        return 2
    except (kernels.KernelError, ValueError, RuntimeError, OSError) as exc:
        print(f"diffmean: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
