"""Command-line entry point: ``jointreg <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .cache import CalibrationCache
from .calibration import Target, calibrate, make_request
from .config import (
    APP_NAME,
    CACHE_DIR,
    CACHE_FILE_NAME,
    DEFAULT_ALPHA,
    DEFAULT_MAX_ROUNDS,
    DEFAULT_POWER_REPLICATIONS,
    DEFAULT_REPLICATIONS,
    DEFAULT_SCHEME,
    DEFAULT_SEED,
    DEFAULT_SQUEEZE,
    DELGADO_WALK_STEPS,
    LOG_LEVEL,
    OUTPUT_DIR,
)
from .data_model import Sample
from .errors import InvalidRequest, JointRegError
from .intervals import IntervalScheme
from .joint import build_joint_spec, joint_region_empty
from .noise import HONEST_MIN_POINTS, estimate_scale
from .pipeline import load_samples, write_csv, write_fit_csv, write_json, write_manifest
from .taut_string import joint_taut_fit, modality_cost
from .two_sample import DeviationScenario, an_two_sample_test, delgado_test, detection_bound, fanlin_test

logger = logging.getLogger(__name__)

TARGET_ALIASES: Dict[str, Target] = {
    "tau": Target.TAU_SINGLE,
    "gamma": Target.GAMMA_SINGLE,
    "tau2": Target.TAU_TWO_SAMPLE,
    "gamma2": Target.GAMMA_TWO_SAMPLE,
    "delgado": Target.DELGADO_ASYMPTOTIC,
    "delgado-finite": Target.DELGADO_FINITE,
    "fanlin": Target.FANLIN_FINITE,
}
TARGET_ALIASES.update({t.value: t for t in Target})

# subcommands that never calibrate, so the cache is left alone
CACHELESS_COMMANDS = frozenset({"bounds"})


# ---- argument types: bad numbers are usage errors (exit 2) ----


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _grid_size(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"grid size must be at least 2, got {value}")
    return value


def _open_unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {value}")
    return value


def _non_negative(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if value < 0.0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {value}")
    return value


def _scheme(text: str) -> str:
    try:
        return IntervalScheme.parse(text).label()
    except InvalidRequest as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _target(text: str) -> Target:
    try:
        return TARGET_ALIASES[text]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown target {text!r}; choose from {', '.join(sorted(TARGET_ALIASES))}")


# ---- helpers ----


class Context:
    """Per-run state: the calibration cache and every threshold consulted."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.threads: Optional[int] = args.threads
        self.cache: Optional[CalibrationCache] = None
        if not args.no_cache and args.command not in CACHELESS_COMMANDS:
            self.cache = CalibrationCache.load(args.cache_file)
        self.thresholds: Dict[str, Any] = {}

    def calibrated(self, target: Target, n: int, alpha: float, scheme: str = DEFAULT_SCHEME, **extra: Any) -> float:
        req = make_request(
            target=target,
            n=n,
            scheme=scheme,
            alpha=alpha,
            replications=self.args.reps,
            master_seed=self.args.seed,
            **extra,
        )
        result = calibrate(req, cache=self.cache, threads=self.threads)
        self.thresholds[req.key()] = result.threshold
        return result.threshold

    def finish(self) -> None:
        if self.cache is not None:
            self.cache.save()


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out) if args.out else OUTPUT_DIR / args.command


def _samples(args: argparse.Namespace) -> List[Sample]:
    return load_samples([Path(p) for p in args.files], rescale=args.rescale)


def _manifest(args: argparse.Namespace, ctx: Context, inputs: Sequence[Path] = ()) -> None:
    arguments = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "handler"}
    arguments = {k: (v.value if isinstance(v, Target) else v) for k, v in arguments.items()}
    write_manifest(_out_dir(args), args.command, arguments, inputs=inputs, seed=args.seed, thresholds=ctx.thresholds)


def _joint_spec(args: argparse.Namespace, ctx: Context, samples: Sequence[Sample]):
    scheme = IntervalScheme.parse(args.scheme)
    explicit = args.tau if args.kind == "tau" else args.gamma
    target = Target.TAU_SINGLE if args.kind == "tau" else Target.GAMMA_SINGLE

    def lookup(n: int, alpha_k: float) -> float:
        if explicit is not None:
            ctx.thresholds[f"{args.kind}|given"] = explicit
            return float(explicit)
        return ctx.calibrated(target, n, alpha_k, scheme.label())

    return build_joint_spec(samples, args.alpha, scheme, args.kind, lookup, sigma_method=args.sigma)


# ---- subcommands ----


def cmd_sigma(args: argparse.Namespace, ctx: Context) -> int:
    samples = _samples(args)
    report = []
    for s in samples:
        honest = estimate_scale(s, "honest").model_dump() if s.n >= HONEST_MIN_POINTS else None
        report.append({"label": s.label, "n": s.n, "median": estimate_scale(s, "median").model_dump(), "honest": honest})
    print(json.dumps(report, indent=2))
    write_json(report, _out_dir(args) / "sigma.json")
    _manifest(args, ctx, args.files)
    return 0


def cmd_calibrate(args: argparse.Namespace, ctx: Context) -> int:
    req = make_request(
        target=args.target,
        n=args.n,
        scheme=args.scheme,
        alpha=args.alpha,
        replications=args.reps,
        master_seed=args.seed,
        plug_in_scale=not args.known_sigma,
        walk_steps=args.walk_steps,
    )
    result = calibrate(req, cache=ctx.cache, threads=ctx.threads)
    ctx.thresholds[req.key()] = result.threshold
    text = result.model_dump_json(indent=2)
    print(text)
    write_json(result, _out_dir(args) / "calibration.json")
    _manifest(args, ctx)
    return 0


def cmd_jointcheck(args: argparse.Namespace, ctx: Context) -> int:
    samples = _samples(args)
    spec = _joint_spec(args, ctx, samples)
    result = joint_region_empty(samples, spec)
    print(f"status={result.status} layout={result.layout} alpha_k={spec.alpha_k:.6g}")
    for report in result.membership.reports:
        worst = report.worst()
        detail = f" worst=[{worst.lo},{worst.hi}] ratio={report.max_ratio:.4g}" if worst else ""
        print(f"{report.label}\tmember={report.is_member}\tviolations={len(report.violations)}{detail}")
    write_json(result, _out_dir(args) / "jointcheck.json")
    _manifest(args, ctx, args.files)
    return 0


def cmd_jointfit(args: argparse.Namespace, ctx: Context) -> int:
    samples = _samples(args)
    spec = _joint_spec(args, ctx, samples)
    out = _out_dir(args)
    fit = joint_taut_fit(samples, spec.specs, squeeze=args.squeeze, max_rounds=args.max_rounds)
    summary: Dict[str, Any] = {
        "n_local_extremes": fit.n_local_extremes,
        "squeeze_rounds": fit.squeeze_rounds,
        "alpha_k": spec.alpha_k,
        "history": [r.model_dump() for r in fit.history],
        "reports": [r.model_dump() for r in fit.reports],
    }
    if args.modality_cost and len(samples) > 1:
        cost = modality_cost(samples, spec.specs, squeeze=args.squeeze, max_rounds=args.max_rounds)
        summary["modality_cost"] = cost.model_dump()
        print(f"modality_cost={cost.cost} individual={cost.individual_extremes}")
    print(f"n_local_extremes={fit.n_local_extremes} squeeze_rounds={fit.squeeze_rounds} points={fit.t.size}")
    write_fit_csv(fit.t, fit.values, out / "fit.csv")
    write_json(summary, out / "fit.json")
    if args.plot:
        from .plots import plot_fit

        plot_fit(samples, fit.t, fit.values, out / "fit.svg", title=f"{fit.n_local_extremes} local extremes")
    _manifest(args, ctx, args.files)
    return 0


def cmd_test(args: argparse.Namespace, ctx: Context) -> int:
    samples = _samples(args)
    if len(samples) != 2:
        raise InvalidRequest(f"two-sample tests need exactly 2 samples, got {len(samples)}")
    s1, s2 = samples
    critical = args.critical
    if args.method == "delgado":
        if critical is None and abs(args.alpha - 0.95) > 1e-12:
            critical = ctx.calibrated(Target.DELGADO_FINITE, s1.n, args.alpha)
        outcome = delgado_test(s1, s2, alpha=args.alpha, critical=critical)
    elif args.method == "fanlin":
        if critical is None:
            critical = ctx.calibrated(Target.FANLIN_FINITE, s1.n, args.alpha)
        outcome = fanlin_test(s1, s2, alpha=args.alpha, critical=critical)
    else:
        kind = "tau" if args.method == "an" else "gamma"
        target = Target.TAU_TWO_SAMPLE if kind == "tau" else Target.GAMMA_TWO_SAMPLE
        if critical is None:
            critical = ctx.calibrated(target, s1.n, args.alpha, args.scheme)
        outcome = an_two_sample_test(
            s1, s2, kind=kind, threshold=critical, scheme=IntervalScheme.parse(args.scheme), alpha=args.alpha
        )
    ctx.thresholds[f"{args.method}|critical"] = outcome.critical_value
    print(outcome.model_dump_json(indent=2))
    write_json(outcome, _out_dir(args) / "test.json")
    _manifest(args, ctx, args.files)
    return 0


def cmd_power(args: argparse.Namespace, ctx: Context) -> int:
    from .simulation import PowerStudyConfig, g_id_from_number, run_power_study

    criticals: Dict[str, float] = {}
    targets = {
        "delgado": Target.DELGADO_FINITE,
        "fanlin": Target.FANLIN_FINITE,
        "an": Target.TAU_TWO_SAMPLE,
        "anstar": Target.GAMMA_TWO_SAMPLE,
    }
    for method in args.methods:
        criticals[method] = ctx.calibrated(targets[method], args.n, args.alpha, args.scheme)
    config = PowerStudyConfig(
        methods=args.methods,
        g_ids=[g_id_from_number(g) for g in args.g],
        etas=args.etas,
        n=args.n,
        replications=args.power_reps,
        master_seed=args.seed,
        scheme=args.scheme,
        criticals=criticals,
    )
    result = run_power_study(config, threads=ctx.threads)
    out = _out_dir(args)
    rows = [r.model_dump() for r in result.rows]
    write_csv(rows, ["g_id", "eta", "method", "power", "se"], out / "power.csv")
    write_json(result, out / "power.json")
    for r in result.rows:
        print(f"{r.g_id}\t{r.eta:g}\t{r.method}\t{r.power:.3f}\t{r.se:.3f}")
    if args.plot:
        from .plots import plot_power

        plot_power(result, out / "power.svg")
    _manifest(args, ctx)
    return 0


def cmd_detect(args: argparse.Namespace, ctx: Context) -> int:
    from .simulation import run_detection_study

    result = run_detection_study(
        args.etas,
        n=args.n,
        interval=(args.interval[0], args.interval[1]),
        sigma=args.noise,
        tau=args.tau,
        replications=args.power_reps,
        seed=args.seed,
        scheme=args.scheme,
        threads=ctx.threads,
    )
    ctx.thresholds["tau|given"] = args.tau
    out = _out_dir(args)
    write_csv([r.model_dump() for r in result.rows], ["eta", "detection_rate", "replications", "se"], out / "detect.csv")
    write_json(result, out / "detect.json")
    for r in result.rows:
        print(f"{r.eta:g}\t{r.detection_rate:.3f}\t{r.se:.3f}")
    _manifest(args, ctx)
    return 0


def cmd_bounds(args: argparse.Namespace, ctx: Context) -> int:
    kind = args.kind
    lam = args.lam
    if kind == "tau-all" and lam is not None:
        # an explicit scheme factor selects the I_n(lambda) bound
        kind = "tau-multi"
    scenario = DeviationScenario(
        n=args.n,
        delta=args.delta,
        sigma1=args.sigma1,
        sigma2=args.sigma2,
        tau=args.tau,
        gamma=args.gamma,
        lam=2.0 if lam is None else lam,
    )
    eta = detection_bound(scenario, kind)
    print(f"{eta:.3f}")
    if args.out:
        write_json({"kind": kind, "eta": eta, "scenario": scenario.model_dump()}, _out_dir(args) / "bounds.json")
        _manifest(args, ctx)
    return 0


# ---- parser ----


def _add_region_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("files", nargs="+", type=Path, help="CSV files with t,y[,sample] columns")
    p.add_argument("--alpha", type=_open_unit, default=DEFAULT_ALPHA, help="joint confidence level")
    p.add_argument("--scheme", type=_scheme, default=DEFAULT_SCHEME, help="'all' or 'multi:<lambda>'")
    p.add_argument("--kind", choices=["tau", "gamma"], default="tau")
    p.add_argument("--tau", type=float, default=None, help="use this tau instead of calibrating")
    p.add_argument("--gamma", type=float, default=None, help="use this gamma instead of calibrating")
    p.add_argument("--sigma", choices=["median", "honest"], default="median", help="noise scale estimator")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed of all random streams")
    common.add_argument("--reps", type=_positive_int, default=DEFAULT_REPLICATIONS, help="calibration replications")
    common.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--rescale", action="store_true", help="min-max rescale t to [0, 1] before validation")
    common.add_argument("--cache-file", type=Path, default=CACHE_DIR / CACHE_FILE_NAME)
    common.add_argument("--no-cache", action="store_true", help="neither read nor write the calibration cache")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog=APP_NAME, description="Joint approximation and comparison of regression samples")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", parents=[common], help="noise scale of each sample")
    p.add_argument("files", nargs="+", type=Path)
    p.set_defaults(handler=cmd_sigma)

    p = sub.add_parser("calibrate", parents=[common], help="Monte Carlo threshold calibration")
    p.add_argument("--target", type=_target, required=True)
    p.add_argument("--n", type=_grid_size, required=True)
    p.add_argument("--alpha", type=_open_unit, default=DEFAULT_ALPHA)
    p.add_argument("--scheme", type=_scheme, default=DEFAULT_SCHEME)
    p.add_argument("--known-sigma", action="store_true", help="two-sample targets: use sigma = 1 instead of estimates")
    p.add_argument("--walk-steps", type=_positive_int, default=DELGADO_WALK_STEPS)
    p.set_defaults(handler=cmd_calibrate)

    p = sub.add_parser("jointcheck", parents=[common], help="is the joint approximation region non-empty?")
    _add_region_flags(p)
    p.set_defaults(handler=cmd_jointcheck)

    p = sub.add_parser("jointfit", parents=[common], help="joint taut-string fit")
    _add_region_flags(p)
    p.add_argument("--squeeze", type=_open_unit, default=DEFAULT_SQUEEZE)
    p.add_argument("--max-rounds", type=_positive_int, default=DEFAULT_MAX_ROUNDS)
    p.add_argument("--modality-cost", action="store_true", help="also fit each sample alone")
    p.add_argument("--plot", action="store_true", help="write fit.svg")
    p.set_defaults(handler=cmd_jointfit)

    p = sub.add_parser("test", parents=[common], help="two-sample test on a common design")
    p.add_argument("files", nargs="+", type=Path)
    p.add_argument("--method", choices=["delgado", "fanlin", "an", "anstar"], required=True)
    p.add_argument("--alpha", type=_open_unit, default=DEFAULT_ALPHA)
    p.add_argument("--critical", type=float, default=None, help="critical value or threshold to use as is")
    p.add_argument("--scheme", type=_scheme, default=DEFAULT_SCHEME)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("power", parents=[common], help="power study of the four tests")
    p.add_argument("--g", type=int, nargs="+", choices=[1, 2, 3, 4], default=[1, 2, 3, 4])
    p.add_argument("--etas", type=_non_negative, nargs="+", required=True)
    p.add_argument("--n", type=_grid_size, default=500)
    p.add_argument("--alpha", type=_open_unit, default=DEFAULT_ALPHA)
    p.add_argument("--power-reps", type=_positive_int, default=DEFAULT_POWER_REPLICATIONS)
    p.add_argument("--methods", nargs="+", choices=["delgado", "fanlin", "an", "anstar"], default=["delgado", "fanlin", "an", "anstar"])
    p.add_argument("--scheme", type=_scheme, default=DEFAULT_SCHEME)
    p.add_argument("--plot", action="store_true", help="write power.svg")
    p.set_defaults(handler=cmd_power)

    p = sub.add_parser("detect", parents=[common], help="detection rate of a localized deviation")
    p.add_argument("--etas", type=_non_negative, nargs="+", required=True)
    p.add_argument("--n", type=_grid_size, default=500)
    p.add_argument("--interval", type=float, nargs=2, default=[0.402, 0.440], metavar=("A", "B"))
    p.add_argument("--noise", type=_non_negative, default=0.25, help="noise standard deviation")
    p.add_argument("--tau", type=float, default=2.973)
    p.add_argument("--power-reps", type=_positive_int, default=500)
    p.add_argument("--scheme", type=_scheme, default=DEFAULT_SCHEME)
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("bounds", parents=[common], help="closed-form detection bound")
    p.add_argument("--kind", choices=["tau-all", "tau-multi", "gamma", "delgado"], required=True)
    p.add_argument("--n", type=_grid_size, required=True)
    p.add_argument("--sigma1", type=_non_negative, required=True)
    p.add_argument("--sigma2", type=_non_negative, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.set_defaults(handler=cmd_bounds)

    return parser


def _configure_logging(verbose: int) -> None:
    level = LOG_LEVEL
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace, Context], int] = args.handler
    try:
        ctx = Context(args)
        code = handler(args, ctx)
        ctx.finish()
        return code
    except JointRegError as exc:
        print(f"error: {exc.name}: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: InvalidRequest: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
