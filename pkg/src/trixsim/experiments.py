"""Batch scenarios: distributions, sweeps, cross-validation and oracle checks.

Sample ``i`` of a run always uses the stream derived from (seed, i), so the
merged histograms do not depend on how the index range is split across
workers. Histograms are kept in scaled units; reported means and standard
deviations are converted to physical units (divided by the resolution).
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from . import _kernels as K
from . import io as tio
from .errors import ConfigurationError, GuardRefusal
from .grid import ConeSpec, simulate_sample
from .models import DelayModel
from .oracle import DEFAULT_GUARD as ENUMERATION_GUARD
from .oracle import ExactPmf, exact_delay_pmf, exact_skew_pmf
from .rng import ALGORITHMS, DRAW_ORDER, derive_stream, parse_seed
from .stats import (
    ConfidenceBand,
    Histogram,
    PowerLawFit,
    SweepResult,
    TailFit,
    bootstrap_stddev_interval,
    confidence_band,
    dkw_epsilon,
    ecdf_and_qq,
    empirical_stddev,
    fit_exponential_tail,
    fit_power_law,
    ks_distance,
    stddev_interval,
)

SCENARIOS = ("delay-pmf", "skew-pmf", "delay-sweep", "skew-sweep", "delta-sweep",
             "cross-validate", "oracle-check")
DISTRIBUTION_SCENARIOS = ("delay-pmf", "skew-pmf")
SWEEP_SCENARIOS = ("delay-sweep", "skew-sweep", "delta-sweep")

# Node updates per run above which a job needs ``force``; ~10 minutes of one core.
DEFAULT_UPDATE_GUARD = 3e11
NS_PER_UPDATE = 2.0
# Two DKW half-widths adding up to more than this cannot tell distributions apart.
MAX_INFORMATIVE_BAND = 0.25
MEAN_PIN_SIGMAS = 5.0


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    heights: tuple[int, ...] = (20,)
    deltas: tuple[int, ...] = (1,)
    samples: int = 1_000_000
    model: str = "binary"
    rng: str = "xoshiro512ss"
    seed: int | None = None
    alpha: float = 0.01
    lambda_min: float = 2.0
    tail_range: tuple[int, int] = (1, 4)
    bootstrap: int = 1000
    guard: float = DEFAULT_UPDATE_GUARD
    force: bool = False
    workers: int = 1
    out: str | None = None
    record_grid: bool = False

    # fields that cannot change any number in the outputs
    RUNTIME_ONLY = ("force", "workers", "out")

    def __post_init__(self):
        object.__setattr__(self, "heights", tuple(int(h) for h in self.heights))
        object.__setattr__(self, "deltas", tuple(int(d) for d in self.deltas))
        object.__setattr__(self, "tail_range", tuple(int(k) for k in self.tail_range))
        if self.seed is not None:
            try:
                object.__setattr__(self, "seed", parse_seed(self.seed))
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from exc
        self.validate()

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.samples < 1:
            raise ConfigurationError("samples must be at least 1")
        if not self.heights:
            raise ConfigurationError("at least one height is required")
        if min(self.heights) < 0:
            raise ConfigurationError("heights must be non-negative")
        if any(b <= a for a, b in zip(self.heights, self.heights[1:])):
            raise ConfigurationError("heights must be strictly increasing")
        if not self.deltas:
            raise ConfigurationError("at least one delta is required")
        for h in self.heights:
            for d in self.deltas:
                if not 0 <= d <= 2 * h:
                    raise ConfigurationError(f"delta {d} outside [0, 2H] = [0, {2 * h}]")
        try:
            DelayModel.parse(self.model)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        if self.rng not in ALGORITHMS:
            raise ConfigurationError(f"unknown rng {self.rng!r}; choose from {ALGORITHMS}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.lambda_min <= 0:
            raise ConfigurationError("lambda_min must be positive")
        lo, hi = self.tail_range
        if not 1 <= lo < hi:
            raise ConfigurationError("tail range needs 1 <= k_lo < k_hi")
        if self.bootstrap < 0:
            raise ConfigurationError("bootstrap resample count must be non-negative")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if self.scenario == "delta-sweep" and len(self.heights) != 1:
            raise ConfigurationError("delta-sweep runs at exactly one height")

    @property
    def delay_model(self) -> DelayModel:
        return DelayModel.parse(self.model)

    def resolved(self) -> ExperimentConfig:
        """Copy with a concrete seed (drawn from the OS if none was given)."""
        if self.seed is not None:
            return self
        return replace(self, seed=int.from_bytes(os.urandom(8), "little"))

    @property
    def seed_text(self) -> str:
        if self.rng == "os":
            return "os-entropy"
        return "unset" if self.seed is None else f"0x{self.seed:016x}"

    def to_dict(self) -> dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["heights"] = list(self.heights)
        out["deltas"] = list(self.deltas)
        out["tail_range"] = list(self.tail_range)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        if "scenario" not in data:
            raise ConfigurationError("config needs a scenario")
        for key in ("heights", "deltas"):
            if isinstance(data.get(key), int):
                data[key] = (data[key],)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    def config_hash(self) -> str:
        body = {k: v for k, v in self.to_dict().items() if k not in self.RUNTIME_ONLY}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def provenance(self) -> tio.Provenance:
        return tio.Provenance(self.seed_text, self.config_hash(),
                              (("scenario", self.scenario), ("model", self.model)))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object")
    return ExperimentConfig.from_dict(data)


# --- sampling --------------------------------------------------------------

@dataclass
class ConeCounts:
    """Merged top-layer histograms of one cone; index arrays are in scaled units."""

    spec: ConeSpec
    model: DelayModel
    delay: np.ndarray
    skew: np.ndarray
    tmax: int
    n: int

    def delay_histogram(self) -> Histogram:
        return Histogram.from_counts(self.delay, 0)

    def skew_histogram(self, delta: int) -> Histogram:
        if not 0 <= delta <= self.spec.span:
            raise ConfigurationError(f"delta {delta} outside the sampled span 0..{self.spec.span}")
        return Histogram.from_counts(self.skew[delta], -self.tmax)

    def merge(self, other: ConeCounts) -> ConeCounts:
        if other.spec != self.spec or other.model != self.model:
            raise ConfigurationError("only counts of the same cone and model can be merged")
        return ConeCounts(self.spec, self.model, self.delay + other.delay,
                          self.skew + other.skew, self.tmax, self.n + other.n)


def _batch(args):
    return K.run_batch(*args)


def estimated_updates(spec: ConeSpec, samples: int) -> int:
    return spec.updates * samples


def check_guard(updates: int, guard: float, force: bool) -> None:
    if updates > guard and not force:
        hours = updates * NS_PER_UPDATE * 1e-9 / 3600
        raise GuardRefusal(
            f"job needs ~{updates:.3g} node updates (guard {guard:.3g}); expected "
            f"~{hours:.3g} core-hours. Pass --force to run it anyway")


def sample_cone(spec: ConeSpec, model: DelayModel, count: int, seed: int | None = 0,
                rng: str = "xoshiro512ss", start: int = 0, workers: int = 1) -> ConeCounts:
    """Simulate samples ``start .. start+count-1`` of the cone and histogram the top layer."""
    if not model.stochastic and model.kind != "table":
        rng = "xoshiro512ss"
    src = K.SRC_OS if rng == "os" else K.SRC_XOSHIRO
    master = np.uint64(0 if seed is None else seed)
    tmax = spec.height * model.max_delay
    table = model.kernel_table()
    head = (spec.height, spec.span, model.kernel_code, model.kernel_param, table, src, master)
    if workers <= 1 or count < 2 * workers:
        delay, skew = K.run_batch(*head, start, count, tmax)
    else:
        parts = 4 * workers
        bounds = [start + count * i // parts for i in range(parts + 1)]
        jobs = [head + (lo, hi - lo, tmax) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch, jobs))
        delay = sum(r[0] for r in results)
        skew = sum(r[1] for r in results)
    return ConeCounts(spec, model, delay, skew, tmax, count)


# --- per-histogram summaries -----------------------------------------------

@dataclass
class DistributionSummary:
    quantity: str
    height: int
    delta: int
    resolution: int
    histogram: Histogram
    band: ConfidenceBand
    mean: float
    stddev: float
    stddev_lo: float
    stddev_hi: float
    boot_lo: float
    boot_hi: float
    rng: str = "xoshiro512ss"

    def to_dict(self) -> dict[str, Any]:
        return {
            "quantity": self.quantity,
            "height": self.height,
            "delta": self.delta,
            "resolution": self.resolution,
            "rng": self.rng,
            "n": self.histogram.n,
            "support": [self.histogram.min_value, self.histogram.max_value],
            "mean": self.mean,
            "stddev": self.stddev,
            "stddev_interval": [self.stddev_lo, self.stddev_hi],
            "stddev_bootstrap": [self.boot_lo, self.boot_hi],
            "band": {
                "method": self.band.method,
                "alpha": self.band.alpha,
                "buckets": self.band.buckets,
                "policy": self.band.policy.describe(),
                "dkw_epsilon": self.band.dkw_epsilon,
                "pooled": [self.band.pool_min, self.band.pool_max],
            },
        }


def summarize(hist: Histogram, quantity: str, height: int, delta: int, resolution: int,
              cfg: ExperimentConfig, rng: str | None = None) -> DistributionSummary:
    band = confidence_band(hist, cfg.alpha)
    mean = hist.mean() / resolution
    if hist.n >= 2:
        sigma = empirical_stddev(hist) / resolution
        lo, hi = (v / resolution for v in stddev_interval(hist, band, cfg.lambda_min))
        if cfg.bootstrap:
            blo, bhi = (v / resolution for v in bootstrap_stddev_interval(
                hist, cfg.bootstrap, 1 - cfg.alpha, seed=cfg.seed or 0))
        else:
            blo = bhi = math.nan
    else:
        sigma = lo = hi = blo = bhi = math.nan
    return DistributionSummary(quantity, height, delta, resolution, hist, band, mean, sigma,
                               lo, hi, blo, bhi, rng or cfg.rng)


@dataclass
class Check:
    name: str
    passed: bool | None
    detail: dict[str, Any]
    required: bool = True


def _symmetric(model: DelayModel) -> bool:
    return model.kind in ("binary", "ternary")


def mean_pin(summary: DistributionSummary, target: float) -> Check:
    """|mean - target| <= 5 sigma / sqrt(n), all in physical units."""
    n = summary.histogram.n
    name = f"mean-pin {summary.quantity} H={summary.height}" + (
        f" delta={summary.delta}" if summary.quantity == "skew" else "")
    if n < 2:
        return Check(name, None, {"reason": "fewer than two samples"})
    bound = MEAN_PIN_SIGMAS * summary.stddev / math.sqrt(n)
    err = abs(summary.mean - target)
    return Check(name, err <= bound, {"mean": summary.mean, "target": target, "bound": bound})


def support_check(summary: DistributionSummary, lo: int, hi: int) -> Check:
    h = summary.histogram
    ok = lo <= h.min_value and h.max_value <= hi
    return Check(f"support {summary.quantity} H={summary.height}", ok,
                 {"observed": [h.min_value, h.max_value], "allowed": [lo, hi]})


def distribution_checks(summary: DistributionSummary, model: DelayModel) -> list[Check]:
    H, top = summary.height, summary.height * model.max_delay
    if summary.quantity == "delay":
        out = [support_check(summary, 0, top)]
        if _symmetric(model):
            out.append(mean_pin(summary, H * model.max_delay / 2 / model.resolution))
    else:
        out = [support_check(summary, -top, top)]
        if _symmetric(model):
            out.append(mean_pin(summary, 0.0))
    return out


# --- reports ---------------------------------------------------------------

@dataclass
class ExperimentReport:
    config: ExperimentConfig
    distributions: dict[str, DistributionSummary] = field(default_factory=dict)
    sweep: SweepResult | None = None
    qq: dict[str, list[tuple[float, float]]] = field(default_factory=dict)
    tails: dict[str, TailFit] = field(default_factory=dict)
    exact: dict[str, ExactPmf] = field(default_factory=dict)
    grids: dict[str, Any] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    verdict: str | None = None
    samples_total: int = 0
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.checks if c.required)

    @property
    def samples_per_second(self) -> float:
        return self.samples_total / self.elapsed if self.elapsed > 0 else math.nan

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "version": __version__,
            "draw_order": DRAW_ORDER,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed_text,
            "distributions": {k: s.to_dict() for k, s in self.distributions.items()},
            "tails": {k: asdict(t) for k, t in self.tails.items()},
            "checks": [asdict(c) for c in self.checks],
            "notes": list(self.notes),
            "verdict": self.verdict,
            "ok": self.ok,
            "samples": self.samples_total,
            "elapsed_seconds": self.elapsed,
            "samples_per_second": self.samples_per_second,
        }
        if self.sweep is not None:
            out["sweep"] = {
                "axis": self.sweep.axis_name,
                "points": [dict(zip(tio.SWEEP_COLUMNS, row)) for row in self.sweep.rows()],
                "bootstrap": [[lo, hi] for lo, hi in zip(self.sweep.boot_lo, self.sweep.boot_hi)],
                "fits": {k: asdict(f) for k, f in self.sweep.fits.items()},
            }
        if self.exact:
            out["exact"] = {k: json.loads(p.to_json()) for k, p in self.exact.items()}
        return out

    def write(self, out_dir) -> list[Path]:
        """Write one CSV per histogram / sweep / QQ series plus ``report.json``."""
        out_dir = Path(out_dir)
        prov = self.config.provenance()
        written = []
        for key, s in self.distributions.items():
            extra = prov.extra + (("quantity", s.quantity), ("height", str(s.height)),
                                  ("delta", str(s.delta)), ("resolution", str(s.resolution)),
                                  ("alpha", repr(s.band.alpha)))
            seed = "os-entropy" if s.rng == "os" else prov.seed
            p = tio.Provenance(seed, prov.config_hash, extra)
            written.append(tio.write_text(out_dir / f"{key}.csv",
                                          tio.histogram_csv(s.histogram, s.band, p)))
        for key, points in self.qq.items():
            written.append(tio.write_text(out_dir / f"qq_{key}.csv", tio.qq_csv(points, prov)))
        if self.sweep is not None:
            written.append(tio.write_text(out_dir / f"sweep_{self.sweep.axis_name}.csv",
                                          tio.sweep_csv(self.sweep, prov)))
        for key, pmf in self.exact.items():
            written.append(tio.write_text(out_dir / f"exact_{key}.csv", pmf.to_csv()))
        for key, sample in self.grids.items():
            rows = []
            for y, layer in enumerate(sample.layers):
                lo, _ = sample.spec.bounds(y)
                rows += [(y, lo + i, int(t)) for i, t in enumerate(layer)]
            written.append(tio.write_text(out_dir / f"grid_{key}.csv",
                                          tio._render(prov, ("y", "x", "time"), rows)))
        body = self.to_dict()
        body["files"] = [p.name for p in written]
        written.append(tio.write_json(out_dir / "report.json", body))
        return written


def _fit_or_note(report: ExperimentReport, name: str, axis, values, coords: str):
    try:
        report.sweep.fits[name] = fit_power_law(axis, values, coords)
    except ValueError as exc:
        report.notes.append(f"{name} fit skipped: {exc}")


def _record_grid(report: ExperimentReport, cfg: ExperimentConfig, spec: ConeSpec,
                 model: DelayModel) -> None:
    stream = derive_stream(cfg.seed, 0) if model.stochastic and cfg.rng != "os" else None
    if model.stochastic and stream is None:
        report.notes.append("grid recording skipped: os-entropy samples are not reproducible")
        return
    report.grids[f"h{spec.height}_s{spec.span}"] = simulate_sample(spec, model, stream, record=True)


def _tail(report: ExperimentReport, key: str, hist: Histogram, cfg: ExperimentConfig,
          resolution: int) -> None:
    lo, hi = cfg.tail_range
    try:
        fit = fit_exponential_tail(hist, lo, hi, "pooled")
    except ValueError as exc:
        report.notes.append(f"tail fit for {key} skipped: {exc}")
        return
    # decay per physical unit
    report.tails[key] = replace(fit, decay=fit.decay * resolution)


# --- scenarios -------------------------------------------------------------

def run_distribution(config: ExperimentConfig) -> ExperimentReport:
    """Delay or skew pmf at each configured height."""
    if config.scenario not in DISTRIBUTION_SCENARIOS:
        raise ConfigurationError(f"run_distribution cannot run {config.scenario!r}")
    cfg = config.resolved()
    model = cfg.delay_model
    skew = cfg.scenario == "skew-pmf"
    span = max(cfg.deltas) if skew else 0
    specs = [ConeSpec(h, span) for h in cfg.heights]
    check_guard(sum(estimated_updates(s, cfg.samples) for s in specs), cfg.guard, cfg.force)
    report = ExperimentReport(cfg)
    t0 = time.perf_counter()
    for spec in specs:
        H = spec.height
        counts = sample_cone(spec, model, cfg.samples, cfg.seed, cfg.rng, workers=cfg.workers)
        report.samples_total += cfg.samples
        if skew:
            for d in cfg.deltas:
                key = f"skew_h{H}_d{d}"
                s = summarize(counts.skew_histogram(d), "skew", H, d, model.resolution, cfg)
                report.distributions[key] = s
                report.checks += distribution_checks(s, model)
                _tail(report, key, s.histogram, cfg, model.resolution)
        else:
            key = f"delay_h{H}"
            s = summarize(counts.delay_histogram(), "delay", H, 0, model.resolution, cfg)
            report.distributions[key] = s
            report.checks += distribution_checks(s, model)
            if s.stddev > 0:
                mu = H * model.max_delay / 2
                report.qq[key] = ecdf_and_qq(s.histogram, mu, s.stddev * model.resolution)
            else:
                report.notes.append(f"QQ for {key} skipped: zero spread")
        if cfg.record_grid:
            _record_grid(report, cfg, spec, model)
    report.elapsed = time.perf_counter() - t0
    if model.resolution != 1:
        report.notes.append(f"histogram values are in units of 1/{model.resolution}")
    return report


def run_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Standard deviation against height (delay, skew) or horizontal distance."""
    if config.scenario not in SWEEP_SCENARIOS:
        raise ConfigurationError(f"run_sweep cannot run {config.scenario!r}")
    cfg = config.resolved()
    model = cfg.delay_model
    report = ExperimentReport(cfg)
    res = model.resolution
    points: list[tuple[int, DistributionSummary]] = []
    t0 = time.perf_counter()

    if cfg.scenario == "delta-sweep":
        H = cfg.heights[0]
        spec = ConeSpec(H, max(cfg.deltas))
        check_guard(estimated_updates(spec, cfg.samples), cfg.guard, cfg.force)
        counts = sample_cone(spec, model, cfg.samples, cfg.seed, cfg.rng, workers=cfg.workers)
        report.samples_total += cfg.samples
        for d in cfg.deltas:
            s = summarize(counts.skew_histogram(d), "skew", H, d, res, cfg)
            report.distributions[f"skew_h{H}_d{d}"] = s
            points.append((d, s))
        axis_name = "delta"
    else:
        skew = cfg.scenario == "skew-sweep"
        d = cfg.deltas[0] if skew else 0
        specs = [ConeSpec(h, d) for h in cfg.heights]
        check_guard(sum(estimated_updates(s, cfg.samples) for s in specs), cfg.guard, cfg.force)
        for spec in specs:
            counts = sample_cone(spec, model, cfg.samples, cfg.seed, cfg.rng, workers=cfg.workers)
            report.samples_total += cfg.samples
            if skew:
                s = summarize(counts.skew_histogram(d), "skew", spec.height, d, res, cfg)
                report.distributions[f"skew_h{spec.height}_d{d}"] = s
            else:
                s = summarize(counts.delay_histogram(), "delay", spec.height, 0, res, cfg)
                report.distributions[f"delay_h{spec.height}"] = s
            points.append((spec.height, s))
        axis_name = "height"

    for _, s in points:
        report.checks += distribution_checks(s, model)
    report.sweep = SweepResult(
        axis_name=axis_name,
        axis=[a for a, _ in points],
        n=[s.histogram.n for _, s in points],
        mean=[s.mean for _, s in points],
        stddev=[s.stddev for _, s in points],
        stddev_lo=[s.stddev_lo for _, s in points],
        stddev_hi=[s.stddev_hi for _, s in points],
        boot_lo=[s.boot_lo for _, s in points],
        boot_hi=[s.boot_hi for _, s in points],
    )
    sw = report.sweep
    if cfg.scenario == "delay-sweep":
        _fit_or_note(report, "beta", sw.axis, sw.stddev, "log-log")
    elif cfg.scenario == "skew-sweep":
        _fit_or_note(report, "log-lin", sw.axis, sw.stddev, "log-lin")
        _fit_or_note(report, "loglog-lin", sw.axis, sw.stddev, "loglog-lin")
    else:
        H = cfg.heights[0]
        early = [(a, s) for a, s in zip(sw.axis, sw.stddev) if 1 <= a <= H / 20]
        _fit_or_note(report, "gamma", [a for a, _ in early], [s for _, s in early], "log-log")
    report.elapsed = time.perf_counter() - t0
    return report


def _dkw_pair(name: str, a: Histogram, b: Histogram, alpha: float) -> Check:
    """Do the two DKW bands overlap at every point?"""
    lo = min(a.min_value, b.min_value)
    hi = max(a.max_value, b.max_value)
    dist = ks_distance(a, b.ecdf, lo, hi)
    width = dkw_epsilon(a.n, alpha) + dkw_epsilon(b.n, alpha)
    if width > MAX_INFORMATIVE_BAND:
        return Check(name, None, {"verdict": "inconclusive", "distance": dist, "bound": width})
    ok = dist <= width
    return Check(name, ok, {"verdict": "pass" if ok else "fail", "distance": dist, "bound": width})


def run_cross_validation(config: ExperimentConfig) -> ExperimentReport:
    """Same cone under xoshiro512** vs OS entropy, and binary vs ternary delays."""
    if config.scenario != "cross-validate":
        raise ConfigurationError(f"run_cross_validation cannot run {config.scenario!r}")
    cfg = config.resolved()
    H, d = cfg.heights[0], cfg.deltas[0]
    spec = ConeSpec(H, d)
    check_guard(4 * estimated_updates(spec, cfg.samples), cfg.guard, cfg.force)
    report = ExperimentReport(cfg)
    t0 = time.perf_counter()

    model = cfg.delay_model
    runs = {}
    for rng in ("xoshiro512ss", "os"):
        runs[rng] = sample_cone(spec, model, cfg.samples, cfg.seed, rng, workers=cfg.workers)
        report.samples_total += cfg.samples
    pair = []
    for rng, counts in runs.items():
        tag = "xoshiro" if rng != "os" else "os"
        for key, hist, qty, dd in ((f"delay_h{H}_{tag}", counts.delay_histogram(), "delay", 0),
                                   (f"skew_h{H}_d{d}_{tag}", counts.skew_histogram(d), "skew", d)):
            report.distributions[key] = summarize(hist, qty, H, dd, model.resolution, cfg, rng)
    xo, os_ = runs["xoshiro512ss"], runs["os"]
    pair.append(_dkw_pair("rng-pair delay", xo.delay_histogram(), os_.delay_histogram(), cfg.alpha))
    pair.append(_dkw_pair("rng-pair skew", xo.skew_histogram(d), os_.skew_histogram(d), cfg.alpha))
    report.checks += pair

    sig = {}
    for m in (DelayModel.binary(), DelayModel.ternary()):
        counts = sample_cone(spec, m, cfg.samples, cfg.seed, "xoshiro512ss", workers=cfg.workers)
        report.samples_total += cfg.samples
        for key, hist, qty, dd in ((f"delay_h{H}_{m.kind}", counts.delay_histogram(), "delay", 0),
                                   (f"skew_h{H}_d{d}_{m.kind}", counts.skew_histogram(d), "skew", d)):
            s = summarize(hist, qty, H, dd, m.resolution, cfg, "xoshiro512ss")
            report.distributions[key] = s
            sig[(qty, m.kind)] = s.stddev
    for qty in ("delay", "skew"):
        t, b = sig[(qty, "ternary")], sig[(qty, "binary")]
        ok = None if math.isnan(t) or math.isnan(b) else t <= b
        report.checks.append(Check(f"model-pair {qty} ternary<=binary", ok,
                                   {"ternary": t, "binary": b}, required=False))

    verdicts = [c.detail["verdict"] for c in pair]
    if "fail" in verdicts:
        report.verdict = "fail"
    elif "inconclusive" in verdicts:
        report.verdict = "inconclusive"
    else:
        report.verdict = "pass"
    report.elapsed = time.perf_counter() - t0
    return report


def run_oracle_check(config: ExperimentConfig) -> ExperimentReport:
    """Monte Carlo against exhaustive enumeration at small heights."""
    if config.scenario != "oracle-check":
        raise ConfigurationError(f"run_oracle_check cannot run {config.scenario!r}")
    cfg = config.resolved()
    model = cfg.delay_model
    d = cfg.deltas[0]
    report = ExperimentReport(cfg)
    t0 = time.perf_counter()
    for H in cfg.heights:
        exact_delay = exact_delay_pmf(H, model, guard=ENUMERATION_GUARD, force=cfg.force,
                                      workers=cfg.workers)
        exact_skew = exact_skew_pmf(H, d, model, guard=ENUMERATION_GUARD, force=cfg.force,
                                    workers=cfg.workers)
        report.exact[f"delay_h{H}"] = exact_delay
        report.exact[f"skew_h{H}_d{d}"] = exact_skew
        counts = sample_cone(ConeSpec(H, d), model, cfg.samples, cfg.seed, cfg.rng,
                             workers=cfg.workers)
        report.samples_total += cfg.samples
        for key, hist, exact, qty, dd in (
                (f"delay_h{H}", counts.delay_histogram(), exact_delay, "delay", 0),
                (f"skew_h{H}_d{d}", counts.skew_histogram(d), exact_skew, "skew", d)):
            s = summarize(hist, qty, H, dd, model.resolution, cfg)
            report.distributions[key] = s
            lo = min(min(exact.counts), hist.min_value)
            hi = max(max(exact.counts), hist.max_value)
            dist = ks_distance(hist, lambda v, e=exact: float(e.cdf(v)), lo, hi)
            eps = dkw_epsilon(hist.n, cfg.alpha)
            report.checks.append(Check(f"oracle-dkw {key}", dist <= eps,
                                       {"distance": dist, "epsilon": eps}))
            pmf = {v: float(p) for v, p in exact.entries.items()}
            report.checks.append(Check(f"oracle-band {key}", s.band.contains(pmf),
                                       {"alpha": cfg.alpha, "buckets": s.band.buckets}))
    report.elapsed = time.perf_counter() - t0
    return report


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.scenario in DISTRIBUTION_SCENARIOS:
        return run_distribution(config)
    if config.scenario in SWEEP_SCENARIOS:
        return run_sweep(config)
    if config.scenario == "cross-validate":
        return run_cross_validation(config)
    return run_oracle_check(config)
