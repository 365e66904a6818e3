"""Command-line interface.

Subcommands: ``design gen``, ``simulate``, ``sweep``, ``bounds``,
``disguise``, ``oracle``.  Exit codes: 0 on success, 2 on invalid
parameters or usage, 3 on capacity errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import thresholds
from .decoders import ENUMERATION_CAP, enumerate_consistent_sets, map_oracle_decode
from .designs import DEFAULT_BERNOULLI_DENSITY, DesignSpec
from .disguise import aldridge_item_bound, construct_set, disguise_report
from .errors import CapacityError, GroupTestError, InvalidParameterError
from .harness import (ExperimentConfig, converse_experiment, derive_rng, emit,
                      sweep)
from .model import Prior, load_design, save_design, dumps_design


def _add_experiment_flags(sub: argparse.ArgumentParser, with_t: bool) -> None:
    sub.add_argument("--config", help="JSON experiment config file")
    sub.add_argument("--n", type=int)
    sub.add_argument("--prior", help="iid:P, comb:K or coupled:K")
    sub.add_argument("--design", help="ncc, bernoulli, individual or file:PATH")
    sub.add_argument("--k", type=float, help="defective scale for ncc/bernoulli")
    sub.add_argument("--nu", type=float, default=DEFAULT_BERNOULLI_DENSITY,
                     help="bernoulli density (default ln 2)")
    sub.add_argument("--decoder", choices=("comp", "dd", "map"), default="dd")
    if with_t:
        sub.add_argument("--T", type=int, help="test budget")
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--xi", type=float, default=0.1)
    sub.add_argument("--epsilon", type=float, default=0.1)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--fixed-design", action="store_true",
                     help="reuse one design across trials (quenched ensemble)")
    sub.add_argument("--out", default="-", help="output path, '-' for stdout")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def _config_from_args(args, T) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_json(fh.read())
    missing = [name for name in ("n", "prior", "design") if getattr(args, name) is None]
    if missing:
        raise InvalidParameterError(
            f"either --config or all of --n/--prior/--design are required "
            f"(missing {', '.join('--' + m for m in missing)})")
    if T is None:
        raise InvalidParameterError("--T is required without --config")
    prior = Prior.from_string(args.prior)
    k = args.k if args.k is not None else prior.mean_defectives(args.n)
    design = DesignSpec.from_string(args.design, k=k, nu=args.nu)
    return ExperimentConfig(
        n=args.n, prior=prior, design=design, T=T, decoder=args.decoder,
        trials=args.trials, master_seed=args.seed, xi=args.xi,
        epsilon=args.epsilon, output=args.out, format=args.format,
        fixed_design=args.fixed_design, workers=args.workers)


def _emit_result(result, config: ExperimentConfig) -> None:
    text = emit(result, config.format, config.output)
    if not config.output or config.output == "-":
        sys.stdout.write(text)


def _cmd_design_gen(args) -> int:
    rng = derive_rng(args.seed)
    spec = DesignSpec.from_string(args.kind, k=args.k, nu=args.nu)
    design = spec.build(args.n, args.T, rng)
    if args.out == "-":
        sys.stdout.write(dumps_design(design))
    else:
        save_design(design, args.out)
    return 0


def _cmd_simulate(args) -> int:
    config = _config_from_args(args, args.T)
    _emit_result(sweep(config), config)
    return 0


def _parse_grid(text: str) -> list[float]:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise InvalidParameterError(f"grid must be LO:HI:STEP, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise InvalidParameterError(f"grid must be ascending with step > 0: {text!r}")
    count = int(round((hi - lo) / step)) + 1
    return [lo + i * step for i in range(count) if lo + i * step <= hi + 1e-9]


def _cmd_sweep(args) -> int:
    values = _parse_grid(args.t_grid)
    config = _config_from_args(args, 0)
    if args.relative_to == "abs":
        grid = [int(round(v)) for v in values]
    else:
        base = (config.n if args.relative_to == "n"
                else thresholds.t_star(config.n,
                                       config.prior.mean_defectives(config.n)))
        grid = [math.ceil(v * base - 1e-9) for v in values]
    grid = sorted(set(grid))
    config = ExperimentConfig.from_dict({**config.to_dict(), "T": grid})
    _emit_result(sweep(config), config)
    return 0


def _cmd_converse(args) -> int:
    config = _config_from_args(args, args.T)
    report = converse_experiment(config)
    text = emit(report, "json", config.output)
    if not config.output or config.output == "-":
        sys.stdout.write(text)
    return 0


def _cmd_bounds(args) -> int:
    n, k = args.n, args.k
    p = args.p if args.p is not None else k / n
    out: dict = {"n": n, "k": k, "p": p, "xi": args.xi, "epsilon": args.epsilon}
    out["t_star"] = thresholds.t_star(n, k)
    out["optimal_tests"] = (thresholds.optimal_tests(n, k) if k <= n / 2 else None)
    exponent = thresholds.disguise_exponent(p, n)
    out["disguise_exponent"] = {"value": exponent.value, "size": exponent.size}
    c_p = -exponent.value * p
    out["converse_constant"] = c_p
    d, value = thresholds.disguise_objective_peak()
    out["objective_peak"] = {"d": d, "value": value}
    out["converse_budget"] = thresholds.converse_budget(n, p, args.xi, c_p)
    T = args.T if args.T is not None else math.ceil(out["t_star"])
    params = thresholds.dd_params(n, k, T, args.epsilon, xi=args.xi)
    out["dd_params"] = {
        "T": T, "L": params.L, "delta": params.delta,
        "w_minus": params.w_minus, "w_plus": params.w_plus,
        "g_star": params.g_star, "z": params.z,
        "psi3_valid": params.psi3_valid}
    _write_json(out, args.out)
    return 0


def _cmd_disguise(args) -> int:
    design = load_design(args.matrix)
    extraction = construct_set(design, args.p, args.xi,
                               score_mode="exact" if args.exact else "product",
                               cap=args.cap)
    payload = {
        "n": design.n, "T": design.T, "p": args.p, "xi": args.xi,
        "extraction": extraction.to_dict(),
        "item_bounds": [aldridge_item_bound(design, args.p, i)
                        for i in range(design.n)],
        "exact_report": (disguise_report(design, "exact", p=args.p,
                                         cap=args.cap).to_dict()
                         if args.exact else None)}
    _write_json(payload, args.out)
    return 0


def _cmd_oracle(args) -> int:
    design = load_design(args.matrix)
    if any(c not in "01" for c in args.outcomes):
        raise InvalidParameterError(
            f"outcomes must be a 0/1 string, got {args.outcomes!r}")
    outcomes = [c == "1" for c in args.outcomes]
    prior = Prior.from_string(args.prior)
    cardinality = prior.k if prior.kind == "combinatorial" else None
    consistent = enumerate_consistent_sets(design, outcomes,
                                           cardinality=cardinality, cap=args.cap)
    estimate = map_oracle_decode(design, outcomes, prior, cap=args.cap)
    payload = {"consistent_sets": [sorted(s) for s in consistent],
               "map_estimate": sorted(estimate.estimate)}
    _write_json(payload, args.out)
    return 0


def _write_json(payload: dict, out: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grouptest",
        description="Simulate and analyze noiseless non-adaptive group testing.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_design = subs.add_parser("design", help="design file utilities")
    design_subs = p_design.add_subparsers(dest="design_command", required=True)
    p_gen = design_subs.add_parser("gen", help="generate a design matrix file")
    p_gen.add_argument("--kind", required=True,
                       choices=("ncc", "bernoulli", "individual"))
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--T", type=int, required=True)
    p_gen.add_argument("--k", type=float)
    p_gen.add_argument("--nu", type=float, default=DEFAULT_BERNOULLI_DENSITY)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default="-")
    p_gen.set_defaults(func=_cmd_design_gen)

    p_sim = subs.add_parser("simulate", help="Monte Carlo at fixed T")
    _add_experiment_flags(p_sim, with_t=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = subs.add_parser("sweep", help="success-rate sweep over a T grid")
    _add_experiment_flags(p_sweep, with_t=False)
    p_sweep.add_argument("--t-grid", required=True, help="LO:HI:STEP")
    p_sweep.add_argument("--relative-to", choices=("tstar", "n", "abs"),
                         default="abs")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_conv = subs.add_parser("converse",
                             help="disguised-item converse experiment")
    _add_experiment_flags(p_conv, with_t=True)
    p_conv.set_defaults(func=_cmd_converse)

    p_bounds = subs.add_parser("bounds", help="threshold quantities as JSON")
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--k", type=float, required=True)
    p_bounds.add_argument("--p", type=float)
    p_bounds.add_argument("--xi", type=float, default=0.1)
    p_bounds.add_argument("--epsilon", type=float, default=0.1)
    p_bounds.add_argument("--T", type=int)
    p_bounds.add_argument("--out", default="-")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_disg = subs.add_parser("disguise",
                             help="disguise analysis of a design file")
    p_disg.add_argument("--matrix", required=True)
    p_disg.add_argument("--p", type=float, required=True)
    p_disg.add_argument("--xi", type=float, default=0.1)
    p_disg.add_argument("--exact", action="store_true")
    p_disg.add_argument("--cap", type=int, default=ENUMERATION_CAP)
    p_disg.add_argument("--out", default="-")
    p_disg.set_defaults(func=_cmd_disguise)

    p_oracle = subs.add_parser("oracle",
                               help="consistent sets and MAP estimate")
    p_oracle.add_argument("--matrix", required=True)
    p_oracle.add_argument("--outcomes", required=True, help="0/1 string")
    p_oracle.add_argument("--prior", required=True)
    p_oracle.add_argument("--cap", type=int, default=ENUMERATION_CAP)
    p_oracle.add_argument("--out", default="-")
    p_oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GroupTestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
