"""Command-line front end.

Subcommands:

- ``srw dist``  — distance between two measure files, result as JSON.
- ``srw curve`` — full k = 1..d profile as CSV.
- ``srw gen``   — write synthetic measure pairs to files.
- ``srw exp``   — run an experiment and write its CSV bundle.

Exit codes: 0 success, 2 input error, 3 non-convergence (the result is
still written). Every command is deterministic given ``--seed``; wall-clock
timing columns are the only exception.
"""

import argparse
import json
import sys

from .exceptions import InvalidInput
from .experiments import EXPERIMENT_NAMES, experiment_defaults, run_experiment
from .measure_io import read_measure, result_document, write_measure, write_result
from .solver import SolverConfig, solve, srw_curve
from .synthetic import GeneratorSpec, generate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_CONVERGENCE = 3

_ALGO_NAMES = {"fw": "frank_wolfe", "supergradient": "supergradient"}

_GEN_KINDS = {
    "hypercube": "hypercube_pair",
    "disk-annulus": "disk_annulus_pair",
    "gaussians": "wishart_gaussian_pair",
    "dirac": "dirac_pair",
    "sphere-dirac": "sphere_vs_dirac",
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _config_from_args(args, k: int) -> SolverConfig:
    return SolverConfig(
        algorithm=_ALGO_NAMES[args.algo],
        k=k,
        gamma=args.gamma,
        tau0=getattr(args, "tau0", None),
        epsilon=args.eps,
        max_iter=args.max_iter,
        seed=args.seed,
    )


def cmd_dist(args) -> int:
    mu = read_measure(args.mu)
    nu = read_measure(args.nu)
    k = mu.d if args.plain else args.k
    config = _config_from_args(args, k)
    result = solve(mu, nu, config)
    if args.verbose:
        for i, rec in enumerate(result.trace):
            print(
                f"iter {i}: objective={rec.objective:.12g} gap={rec.gap:.3g}"
                f" inner={rec.sinkhorn_iterations}",
                file=sys.stderr,
            )
    doc = result_document(
        result,
        d=mu.d,
        algorithm=config.algorithm,
        gamma=config.gamma,
        epsilon=config.epsilon,
        seed=args.seed,
        emit_plan=args.emit_plan or args.dense_plan,
        dense_plan=args.dense_plan,
    )
    if args.out:
        write_result(doc, args.out)
    else:
        print(json.dumps(doc, indent=1))
    if not result.converged:
        print("warning: solver did not reach the requested gap", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_curve(args) -> int:
    mu = read_measure(args.mu)
    nu = read_measure(args.nu)
    config = _config_from_args(args, k=1)
    sweep = srw_curve(mu, nu, config)
    lines = ["k,value_squared,gap,iterations,converged"]
    all_converged = True
    for k in range(1, mu.d + 1):
        if k in sweep.results:
            res = sweep.results[k]
            lines.append(
                f"{k},{_fmt(res.value_squared)},{_fmt(res.gap)},"
                f"{res.iterations},{_fmt(res.converged)}"
            )
            all_converged = all_converged and res.converged
        else:
            print(f"warning: k={k}: {sweep.errors[k]}", file=sys.stderr)
            lines.append(f"{k},,,,false")
            all_converged = False
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all_converged else EXIT_NO_CONVERGENCE


def cmd_gen(args) -> int:
    spec = GeneratorSpec(
        kind=_GEN_KINDS[args.kind],
        d=args.d,
        n=args.n,
        kstar=args.kstar,
        degrees_of_freedom=args.dof,
        noise_sigma=args.sigma,
        seed=args.seed,
        coupled=args.coupled,
        sphere_sampled=args.sampled,
    )
    mu, nu = generate(spec)
    mu_path = f"{args.out}_mu.csv"
    nu_path = f"{args.out}_nu.csv"
    write_measure(mu, mu_path)
    write_measure(nu, nu_path)
    print(mu_path)
    print(nu_path)
    return EXIT_OK


def cmd_exp(args) -> int:
    overrides = {
        key: getattr(args, key)
        for key in (
            "d", "n", "k", "kstar", "dof", "sigma", "setup", "algo",
            "gamma", "eps", "max_iter", "ns", "kstars", "sigmas", "ds",
        )
        if getattr(args, key) is not None
    }
    defaults = experiment_defaults(args.name)
    if "sigma" in overrides and "sigma" not in defaults and "sigmas" in defaults:
        overrides.setdefault("sigmas", (overrides.pop("sigma"),))
    path = run_experiment(
        args.name,
        out_dir=args.out_dir,
        trials=args.trials,
        seed=args.seed,
        workers=args.workers,
        **overrides,
    )
    print(path)
    return EXIT_OK


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _float_tuple(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _add_solver_flags(parser, with_tau0: bool) -> None:
    parser.add_argument("--algo", choices=sorted(_ALGO_NAMES), default="fw",
                        help="solver (default: fw)")
    parser.add_argument("--gamma", type=float, default=0.1,
                        help="entropic regularization; 0 selects exact inner OT (default: 0.1)")
    parser.add_argument("--eps", type=float, default=0.05,
                        help="relative duality-gap stopping threshold (default: 0.05)")
    if with_tau0:
        parser.add_argument("--tau0", type=float, help="supergradient step scale")
    parser.add_argument("--max-iter", type=int, dest="max_iter", help="outer iteration cap")
    parser.add_argument("--seed", type=int, help="recorded in the output (solvers are deterministic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srw", description="Subspace robust Wasserstein distances."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    dist = sub.add_parser("dist", help="distance between two measure files")
    dist.add_argument("--mu", required=True, help="measure file for the source")
    dist.add_argument("--nu", required=True, help="measure file for the target")
    kgroup = dist.add_mutually_exclusive_group(required=True)
    kgroup.add_argument("--k", type=int, help="subspace dimension")
    kgroup.add_argument("--plain", action="store_true",
                        help="plain Wasserstein distance (equivalent to --k d)")
    _add_solver_flags(dist, with_tau0=True)
    dist.add_argument("--out", help="write the result document here instead of stdout")
    dist.add_argument("--emit-plan", action="store_true", dest="emit_plan",
                      help="include the transport plan (sparse triples)")
    dist.add_argument("--dense-plan", action="store_true", dest="dense_plan",
                      help="include the transport plan as a dense matrix")
    dist.add_argument("--verbose", action="store_true", help="per-iteration log on stderr")
    dist.set_defaults(func=cmd_dist)

    curve = sub.add_parser("curve", help="value profile over k = 1..d")
    curve.add_argument("--mu", required=True)
    curve.add_argument("--nu", required=True)
    _add_solver_flags(curve, with_tau0=True)
    curve.add_argument("--out", help="write the CSV here instead of stdout")
    curve.set_defaults(func=cmd_curve)

    gen = sub.add_parser("gen", help="write a synthetic measure pair")
    gen.add_argument("kind", choices=sorted(_GEN_KINDS))
    gen.add_argument("--out", required=True, help="output path prefix")
    gen.add_argument("--d", type=int, required=True, help="ambient dimension")
    gen.add_argument("--n", type=int, default=1, help="atoms per measure")
    gen.add_argument("--kstar", type=int, help="intrinsic displacement dimension")
    gen.add_argument("--dof", type=int, help="Wishart degrees of freedom")
    gen.add_argument("--sigma", type=float, default=0.0, help="additive noise scale")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--coupled", action="store_true",
                     help="hypercube: map the source atoms instead of resampling")
    gen.add_argument("--sampled", action="store_true",
                     help="sphere-dirac: sample the sphere instead of the exact variant")
    gen.set_defaults(func=cmd_gen)

    exp = sub.add_parser("exp", help="run an experiment, write CSV + schema")
    exp.add_argument("name", choices=EXPERIMENT_NAMES)
    exp.add_argument("--trials", type=int, help="independent repetitions (default: 20)")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--out-dir", dest="out_dir", default=".")
    exp.add_argument("--workers", type=int, help="parallel workers (default: SRW_THREADS or CPU count)")
    exp.add_argument("--d", type=int)
    exp.add_argument("--n", type=int)
    exp.add_argument("--k", type=int)
    exp.add_argument("--kstar", type=int)
    exp.add_argument("--dof", type=int)
    exp.add_argument("--sigma", type=float)
    exp.add_argument("--setup", choices=("hypercube", "disk-annulus", "dirac"))
    exp.add_argument("--algo", choices=sorted(_ALGO_NAMES))
    exp.add_argument("--gamma", type=float)
    exp.add_argument("--eps", type=float)
    exp.add_argument("--max-iter", type=int, dest="max_iter")
    exp.add_argument("--ns", type=_int_tuple, help="comma-separated sample sizes")
    exp.add_argument("--kstars", type=_int_tuple, help="comma-separated intrinsic dimensions")
    exp.add_argument("--sigmas", type=_float_tuple, help="comma-separated noise scales")
    exp.add_argument("--ds", type=_int_tuple, help="comma-separated ambient dimensions")
    exp.set_defaults(func=cmd_exp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
