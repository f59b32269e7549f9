"""Command-line front end.

Exit codes: 0 success, 1 configuration error or bad flags, 2 resource guard
refusal, 3 internal inconsistency (failed invariant, infeasible band, or a
cross-validation that disagrees).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from . import io as tio
from .errors import ConfigurationError, GuardRefusal, InconsistencyError
from .experiments import (
    DISTRIBUTION_SCENARIOS,
    SWEEP_SCENARIOS,
    ExperimentConfig,
    ExperimentReport,
    load_config,
    run_experiment,
)
from .models import DelayModel
from .oracle import DEFAULT_GUARD, exact_delay_pmf, exact_skew_pmf
from .stats import (
    confidence_band,
    dkw_epsilon,
    dkw_sample_size,
    ecdf_and_qq,
    empirical_stddev,
    fit_exponential_tail,
    stddev_interval,
)

OUT_ENV = "TRIXSIM_OUT"
DEFAULT_OUT = "trixsim-out"

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_INCONSISTENT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")


def _count(text: str) -> int:
    """Integer that may be written as 25000000, 2.5e7 or 25_000_000."""
    try:
        value = float(text.replace("_", ""))
    except ValueError:
        value = math.nan
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected a whole number, got {text!r}")
    return int(value)


def _pair(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two integers 'lo,hi', got {text!r}")
    return vals[0], vals[1]


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _run_flags(p: argparse.ArgumentParser, scenarios=None) -> None:
    # every default is None so that a config file can supply it
    if scenarios:
        p.add_argument("--scenario", choices=scenarios)
    p.add_argument("--config", help="JSON file with the same keys as these flags")
    p.add_argument("--height", type=int)
    p.add_argument("--heights", type=_int_list, help="comma-separated, strictly increasing")
    p.add_argument("--delta", type=int)
    p.add_argument("--deltas", type=_int_list)
    p.add_argument("--samples", type=_count)
    p.add_argument("--seed", help="64-bit seed, decimal or 0x-hex (default: drawn from the OS)")
    p.add_argument("--rng", choices=("xoshiro512ss", "os"))
    p.add_argument("--model", help="binary | ternary | split:<x*> | const:<w>")
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda-min", type=float, dest="lambda_min")
    p.add_argument("--tail-range", type=_pair, dest="tail_range")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--guard", type=float, help="node-update ceiling")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true", default=None)
    p.add_argument("--record-grid", action="store_true", default=None, dest="record_grid")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trixsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trixsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _run_flags(sub.add_parser("simulate", help="delay/skew pmf or oracle check"),
               DISTRIBUTION_SCENARIOS + ("oracle-check",))
    _run_flags(sub.add_parser("sweep", help="stddev against height or distance"), SWEEP_SCENARIOS)
    _run_flags(sub.add_parser("cross-validate", help="rng pair and model pair agreement"))

    p = sub.add_parser("enumerate", help="exact pmf by exhaustive enumeration")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--target", choices=("delay", "skew"), default="delay")
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--model", default="binary")
    p.add_argument("--guard", type=int, default=DEFAULT_GUARD)
    p.add_argument("--force", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")

    for name, helptext in (("analyze", "band, stddev and tail of a histogram CSV"),
                           ("qq", "normal quantiles of a histogram CSV")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--input", required=True)
        p.add_argument("--samples", type=_count, help="sample count for rate tables")
        p.add_argument("--alpha", type=float, default=0.01)
        p.add_argument("--out")
        if name == "analyze":
            p.add_argument("--dkw", action="store_true", help="report the DKW half-width")
            p.add_argument("--lambda-min", type=float, default=2.0, dest="lambda_min")
            p.add_argument("--tail-range", type=_pair, dest="tail_range")
        else:
            p.add_argument("--mu", type=float)
            p.add_argument("--sigma", type=float)
    return parser


def config_from_args(args, scenario: str | None = None) -> ExperimentConfig:
    data = {}
    if args.config:
        data = load_config(args.config).to_dict()
        data = {k: v for k, v in data.items() if v is not None}
    flags = vars(args)
    for key in ("scenario", "samples", "seed", "rng", "model", "alpha", "lambda_min",
                "tail_range", "bootstrap", "guard", "out", "workers", "force", "record_grid"):
        if flags.get(key) is not None:
            data[key] = flags[key]
    if args.height is not None and args.heights is not None:
        raise ConfigurationError("give --height or --heights, not both")
    if args.delta is not None and args.deltas is not None:
        raise ConfigurationError("give --delta or --deltas, not both")
    if args.height is not None:
        data["heights"] = [args.height]
    elif args.heights is not None:
        data["heights"] = args.heights
    if args.delta is not None:
        data["deltas"] = [args.delta]
    elif args.deltas is not None:
        data["deltas"] = args.deltas
    if scenario:
        data["scenario"] = scenario
    if "scenario" not in data:
        raise ConfigurationError("--scenario is required")
    return ExperimentConfig.from_dict(data)


def _print_report(report: ExperimentReport) -> None:
    for key, s in report.distributions.items():
        print(f"{key}: n={s.histogram.n} mean={s.mean:.6g} stddev={s.stddev:.6g} "
              f"[{s.stddev_lo:.6g}, {s.stddev_hi:.6g}]")
    for key, t in report.tails.items():
        print(f"tail {key}: decay={t.decay:.4g} over |k| in [{t.k_lo}, {t.k_hi}]")
    if report.sweep is not None:
        for name, f in report.sweep.fits.items():
            print(f"fit {name}: slope={f.slope:.4g} residual={f.residual:.3g}")
    for c in report.checks:
        status = {True: "pass", False: "FAIL", None: "n/a"}[c.passed]
        print(f"check {c.name}: {status}")
    if report.verdict:
        print(f"verdict: {report.verdict}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"elapsed {report.elapsed:.2f}s, {report.samples_per_second:.4g} samples/s")


def _cmd_run(args, scenario=None) -> int:
    cfg = config_from_args(args, scenario).resolved()
    print(json.dumps({"effective_config": cfg.to_dict(), "seed": cfg.seed_text,
                      "config_hash": cfg.config_hash()}, indent=2))
    report = run_experiment(cfg)
    out = Path(cfg.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    files = report.write(out)
    _print_report(report)
    print(f"wrote {len(files)} files to {out}")
    if not report.ok or report.verdict == "fail":
        print("error: invariant check failed", file=sys.stderr)
        return EXIT_INCONSISTENT
    return EXIT_OK


def _cmd_enumerate(args) -> int:
    try:
        model = DelayModel.parse(args.model)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    kw = dict(guard=args.guard, force=args.force, workers=args.workers)
    try:
        if args.target == "delay":
            pmf = exact_delay_pmf(args.height, model, **kw)
            stem = f"exact_delay_h{args.height}"
        else:
            pmf = exact_skew_pmf(args.height, args.delta, model, **kw)
            stem = f"exact_skew_h{args.height}_d{args.delta}"
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    body = {"height": args.height, "target": args.target, "model": args.model,
            "delta": args.delta if args.target == "skew" else 0}
    digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]
    prov = tio.Provenance("none", digest, (("model", args.model),))
    text = "\n".join(prov.lines()) + "\n" + pmf.to_csv()
    out = _out_dir(args)
    tio.write_text(out / f"{stem}.csv", text)
    tio.write_text(out / f"{stem}.json", pmf.to_json() + "\n")
    sys.stdout.write(pmf.to_csv())
    return EXIT_OK


def _cmd_analyze(args) -> int:
    loaded = tio.load_histogram_csv(args.input, args.samples)
    hist, meta = loaded.histogram, loaded.metadata
    declared_n = args.samples or (int(float(meta["n"])) if "n" in meta else hist.n)
    band = confidence_band(hist, args.alpha)
    result = {
        "input": str(args.input),
        "mode": loaded.mode,
        "n": hist.n,
        "declared_n": declared_n,
        "alpha": args.alpha,
        "support": [hist.min_value, hist.max_value],
        "mean": hist.mean(),
        "stddev": empirical_stddev(hist) if hist.n >= 2 else None,
        "buckets": band.buckets,
        "notes": [],
    }
    if hist.n >= 2:
        result["stddev_interval"] = list(stddev_interval(hist, band, args.lambda_min))
    if args.dkw:
        eps = dkw_epsilon(declared_n, args.alpha)
        result["dkw_epsilon"] = eps
        if "dkw_epsilon" in meta:
            stated = float(meta["dkw_epsilon"])
            result["declared_dkw_epsilon"] = stated
            if not math.isclose(stated, eps, rel_tol=1e-3):
                implied = dkw_sample_size(stated, args.alpha)
                result["notes"].append(
                    f"declared DKW half-width {stated:g} does not match the formula value "
                    f"{eps:.7f} for n = {declared_n}, alpha = {args.alpha}; it corresponds "
                    f"to n = {implied:.4g}")
    lo_hi = args.tail_range or ((1, 4) if hist.min_value < 0 < hist.max_value else None)
    if lo_hi:
        try:
            fit = fit_exponential_tail(hist, *lo_hi, side="pooled")
            result["tail"] = {"decay": fit.decay, "range": list(lo_hi), "residual": fit.residual}
        except ValueError as exc:
            result["notes"].append(f"tail fit skipped: {exc}")
    out = _out_dir(args)
    digest = hashlib.sha256(Path(args.input).read_bytes()).hexdigest()[:16]
    prov = tio.Provenance(meta.get("seed", "unknown"), digest)
    stem = Path(args.input).stem
    tio.write_text(out / f"{stem}_band.csv", tio.histogram_csv(hist, band, prov))
    tio.write_json(out / f"{stem}_analysis.json", result)
    print(json.dumps(result, indent=2))
    for note in result["notes"]:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def _cmd_qq(args) -> int:
    loaded = tio.load_histogram_csv(args.input, args.samples)
    hist = loaded.histogram
    mu = hist.mean() if args.mu is None else args.mu
    if args.sigma is not None:
        sigma = args.sigma
    elif hist.n >= 2:
        sigma = empirical_stddev(hist)
    else:
        raise ConfigurationError("need --sigma for a single-sample histogram")
    if sigma <= 0:
        raise ConfigurationError("reference sigma must be positive")
    points = ecdf_and_qq(hist, mu, sigma)
    digest = hashlib.sha256(Path(args.input).read_bytes()).hexdigest()[:16]
    prov = tio.Provenance(loaded.metadata.get("seed", "unknown"), digest,
                          (("mu", repr(mu)), ("sigma", repr(sigma))))
    text = tio.qq_csv(points, prov)
    tio.write_text(_out_dir(args) / f"qq_{Path(args.input).stem}.csv", text)
    sys.stdout.write(tio.qq_csv(points))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate" or args.command == "sweep":
            return _cmd_run(args)
        if args.command == "cross-validate":
            return _cmd_run(args, "cross-validate")
        if args.command == "enumerate":
            return _cmd_enumerate(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_qq(args)
    except ConfigurationError as exc:
        print(f"trixsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardRefusal as exc:
        print(f"trixsim: refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InconsistencyError as exc:
        print(f"trixsim: inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
