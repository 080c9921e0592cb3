"""Command-line entry point: simulate, interval, experiment, oracle-check, plot.

Exit codes: 0 success (including infeasible interval results, which carry
their status in the CSV), 1 domain/validation problems, 2 IO problems.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import baseline, estimate, experiments, oracle, rates, simulate, solve
from .core import (
    ConvergenceError,
    DegenerateData,
    DomainError,
    ModelSpec,
    NumericalError,
    SampleData,
    ScalingSchedule,
    Status,
)

_IID_KINDS = ("normal", "exponential", "gamma", "poisson", "bernoulli",
              "binomial", "geometric")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="mdpci", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a batch or diffusion path as CSV")
    sim.add_argument("--model", required=True,
                     choices=("ou", "cir") + _IID_KINDS)
    sim.add_argument("--theta", type=float, required=True,
                     help="true parameter (drift or mean)")
    sim.add_argument("--delta", type=float)
    sim.add_argument("--sigma", type=float)
    sim.add_argument("--nu", type=float, help="gamma scale")
    sim.add_argument("--m", type=int, help="binomial trial count")
    sim.add_argument("--T", type=float, required=True,
                     help="horizon (paths) or draw count (batches)")
    sim.add_argument("--step", type=float, default=0.05)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--stream", type=int, default=0)
    sim.add_argument("--scheme", choices=("exact", "euler"), default="exact")
    sim.add_argument("--out", default=None, help="output path (default stdout)")

    ival = sub.add_parser("interval", help="confidence interval for one estimate")
    ival.add_argument("--model", required=True,
                      choices=("ou", "cir", "dro") + _IID_KINDS)
    src = ival.add_mutually_exclusive_group(required=True)
    src.add_argument("--theta-hat", type=float, dest="theta_hat")
    src.add_argument("--data", help="CSV sample to estimate from")
    ival.add_argument("--T", type=float, required=True)
    ival.add_argument("--beta", type=float, default=5.0 / 11.0)
    ival.add_argument("--r", type=float, required=True)
    ival.add_argument("--method", default="closed-form",
                      choices=("closed-form", "dual", "generic", "clt"))
    ival.add_argument("--delta", type=float)
    ival.add_argument("--sigma", type=float)
    ival.add_argument("--nu", type=float)
    ival.add_argument("--m", type=int)
    ival.add_argument("--variance", type=float, default=1.0,
                      help="observation variance for the normal family")
    ival.add_argument("--step", type=float, default=0.05,
                      help="grid step of --data paths")

    exp = sub.add_parser("experiment", help="Monte Carlo coverage/disappointment run")
    exp.add_argument("mode", choices=("coverage", "disappointment"))
    exp.add_argument("--config", required=True, help="flat key = value file")
    exp.add_argument("--seed", type=int, default=None, help="override config seed")
    exp.add_argument("--out", default=None, help="CSV output path (default stdout)")

    chk = sub.add_parser("oracle-check",
                         help="cross-validate solvers against brute-force oracles")
    chk.add_argument("--quiet", action="store_true")

    plot = sub.add_parser("plot", help="render an experiment CSV as a static SVG")
    plot.add_argument("--in", dest="infile", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--spec", required=True,
                      help="one of: " + ", ".join(sorted(experiments._NAMED_SPECS)))
    return parser


def _default_seed(flag_value, config_value=None) -> int:
    if flag_value is not None:
        return int(flag_value)
    if config_value is not None:
        return int(config_value)
    env = os.environ.get("MDPCI_SEED")
    return int(env) if env else 0


def _write_lines(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _iid_family(args) -> rates.RateFamily:
    kind = args.model
    if kind == "normal":
        return rates.normal([[args.variance]])
    if kind == "gamma":
        if args.nu is None:
            raise DomainError("gamma needs --nu")
        return rates.gamma(args.nu)
    if kind == "binomial":
        if args.m is None:
            raise DomainError("binomial needs --m")
        return rates.binomial(args.m)
    return getattr(rates, kind)()


def _cmd_simulate(args) -> int:
    seed = _default_seed(args.seed)
    rng = simulate.RngSpec(seed=seed, stream=args.stream)
    if args.model == "ou":
        data = simulate.simulate_ou(args.theta, args.T, args.step, rng)
    elif args.model == "cir":
        if args.delta is None or args.sigma is None:
            raise DomainError("cir needs --delta and --sigma")
        data = simulate.simulate_cir(args.delta, args.sigma, args.theta,
                                     args.T, args.step, rng, scheme=args.scheme)
    else:
        data = simulate.sample_iid(_iid_family(args), args.theta, int(args.T), rng)
    if data.kind == "path":
        lines = ["t,x"] + [f"{repr(t)},{repr(x)}"
                           for t, x in zip(data.times, data.values)]
    else:
        lines = ["i,x"] + [f"{i},{repr(float(x))}"
                           for i, x in enumerate(data.values)]
    _write_lines(lines, args.out)
    return 0


def _read_sample_csv(path: str, step: float) -> SampleData:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DomainError(f"empty sample file {path}")
    header = lines[0].lower()
    values = [float(line.split(",")[1]) for line in lines[1:]]
    if header.startswith("t,"):
        return SampleData(kind="path", values=np.asarray(values), step=step)
    return SampleData(kind="batch", values=np.asarray(values))


def _cmd_interval(args) -> int:
    schedule = ScalingSchedule(T=args.T, beta=args.beta, r=args.r)
    model = args.model

    if model == "dro":
        if args.data is None:
            raise DomainError("dro needs --data with a loss sample")
        data = _read_sample_csv(args.data, args.step)
        ci = solve.stochastic_program_interval(
            np.asarray(data.values, dtype=float).reshape(-1, 1), schedule)
    else:
        theta_hat = args.theta_hat
        if theta_hat is None:
            data = _read_sample_csv(args.data, args.step)
            if model == "ou":
                theta_hat = estimate.mle_ou(estimate.path_integrals(data))
            elif model == "cir":
                if args.delta is None:
                    raise DomainError("cir estimation needs --delta")
                theta_hat = estimate.mle_cir(estimate.path_integrals(data), args.delta)
            else:
                theta_hat = estimate.empirical_mean(data)
        if model == "ou":
            if args.method == "closed-form":
                ci = solve.ou_interval(theta_hat, schedule)
            elif args.method == "generic":
                ci = solve.scalar_mean_interval(rates.ou(), theta_hat, schedule,
                                                solve.ou_variance_cost())
            elif args.method == "clt":
                ci = baseline.clt_interval_ou(theta_hat, schedule)
            else:
                raise DomainError("ou supports closed-form, generic, or clt")
        elif model == "cir":
            if args.delta is None or args.sigma is None:
                raise DomainError("cir needs --delta and --sigma")
            if args.method == "closed-form":
                ci = solve.cir_interval(theta_hat, args.delta, args.sigma, schedule)
            elif args.method == "dual":
                ci = solve.cir_interval_sdp_dual(theta_hat, args.delta, args.sigma,
                                                 schedule)
            elif args.method == "clt":
                ci = baseline.clt_interval_cir(theta_hat, args.delta, args.sigma,
                                               schedule)
            else:
                raise DomainError("cir supports closed-form, dual, or clt")
        else:
            family = _iid_family(args)
            if args.method in ("closed-form", "generic"):
                ci = solve.scalar_mean_interval(family, theta_hat, schedule)
            elif args.method == "clt":
                var = float(np.asarray(family.variance(theta_hat)).item())
                ci = baseline.clt_interval_generic(theta_hat, 1.0, [[var]], schedule)
            else:
                raise DomainError("iid families support generic or clt")
    _write_lines(["lower,upper,status,method",
                  f"{repr(ci.lower)},{repr(ci.upper)},{ci.status.value},{ci.method}"],
                 None)
    return 0


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` text; later keys override earlier ones."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"bad config line {raw.strip()!r}")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def config_to_experiment(values: dict, seed_flag=None) -> experiments.ExperimentConfig:
    known = {"model", "theta", "delta", "sigma", "beta", "r", "t_grid", "reps",
             "seed", "step", "variants", "kappa_list"}
    unknown = set(values) - known
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    try:
        kind = values["model"]
        theta = float(values["theta"])
        beta = float(values["beta"])
        r = float(values["r"])
        t_grid = tuple(float(x) for x in values["t_grid"].split(","))
        reps = int(values["reps"])
    except KeyError as exc:
        raise DomainError(f"config is missing key {exc.args[0]!r}") from exc
    if kind == "ou":
        model = ModelSpec(kind="ou", theta=theta)
    elif kind == "cir":
        model = ModelSpec(kind="cir", theta=theta,
                          delta=float(values["delta"]), sigma=float(values["sigma"]))
    else:
        raise DomainError("experiment model must be ou or cir")
    variants = []
    kappas = [float(x) for x in values.get("kappa_list", "").split(",") if x.strip()]
    for name in values.get("variants", "optimal,clt").split(","):
        name = name.strip()
        if name == "fixed":
            if not kappas:
                raise DomainError("fixed variants need kappa_list")
            variants.extend(experiments.fixed_offset(k) for k in kappas)
        elif name == "optimal":
            variants.append(experiments.OPTIMAL)
        elif name == "clt":
            variants.append(experiments.CLT)
        elif name:
            raise DomainError(f"unknown variant {name!r}")
    return experiments.ExperimentConfig(
        model=model, t_grid=t_grid, beta=beta, r=r, replications=reps,
        variants=tuple(variants),
        seed=_default_seed(seed_flag, values.get("seed")),
        step=float(values.get("step", 0.05)),
    )


def _cmd_experiment(args) -> int:
    config = config_to_experiment(parse_config_file(args.config), args.seed)
    runner = (experiments.run_coverage if args.mode == "coverage"
              else experiments.run_disappointment)
    result = runner(config)
    text = experiments.render_csv(result)
    if args.out is None:
        sys.stdout.write(text)
    else:
        experiments.emit_csv(result, args.out)
    return 0


def _cmd_oracle_check(args) -> int:
    rows = oracle.oracle_check()
    print("check,instances,max_err,status")
    all_ok = True
    for name, n, err, ok in rows:
        all_ok &= ok
        print(f"{name},{n},{err:.3e},{'PASS' if ok else 'FAIL'}")
    return 0 if all_ok else 1


def _cmd_plot(args) -> int:
    result = experiments.parse_csv(args.infile)
    spec = experiments.named_plot_spec(args.spec)
    experiments.emit_svg(result, spec, args.out)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "interval": _cmd_interval,
    "experiment": _cmd_experiment,
    "oracle-check": _cmd_oracle_check,
    "plot": _cmd_plot,
}


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (DomainError, DegenerateData, ConvergenceError, NumericalError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
