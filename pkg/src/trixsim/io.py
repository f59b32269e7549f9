"""CSV and JSON serialisation.

Every CSV starts with ``#`` comment lines carrying the package version, the
draw-order tag, the seed and a hash of the result-determining configuration,
followed by a single header row. Comment lines never contain timings or
worker counts, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .rng import DRAW_ORDER
from .stats import ConfidenceBand, Histogram, SweepResult

HISTOGRAM_COLUMNS = ("value", "count", "phat", "pmin", "pmax")
SWEEP_COLUMNS = ("axis", "n", "mean", "stddev", "stddev_lo", "stddev_hi")
QQ_COLUMNS = ("x", "quantile")


def _num(x: float) -> str:
    return format(float(x), ".12g")


@dataclass(frozen=True)
class Provenance:
    seed: str
    config_hash: str
    extra: tuple[tuple[str, str], ...] = ()

    def lines(self) -> list[str]:
        out = [
            f"# trixsim {__version__}",
            f"# draw-order {DRAW_ORDER}",
            f"# seed {self.seed}",
            f"# config {self.config_hash}",
        ]
        out += [f"# {k} {v}" for k, v in self.extra]
        return out


def _render(prov: Provenance | None, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    for line in prov.lines() if prov else ():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def histogram_csv(hist: Histogram, band: ConfidenceBand | None = None,
                  prov: Provenance | None = None) -> str:
    rows = []
    for v, c in zip(hist.values.tolist(), hist.counts.tolist()):
        lo, hi = band.bounds(v) if band is not None else (math.nan, math.nan)
        rows.append((v, c, _num(c / hist.n), _num(lo), _num(hi)))
    if prov is not None:
        prov = Provenance(prov.seed, prov.config_hash, prov.extra + (("n", str(hist.n)),))
    return _render(prov, HISTOGRAM_COLUMNS, rows)


def sweep_csv(sweep: SweepResult, prov: Provenance | None = None) -> str:
    rows = [(a, n, _num(m), _num(s), _num(lo), _num(hi)) for a, n, m, s, lo, hi in sweep.rows()]
    if prov is not None:
        prov = Provenance(prov.seed, prov.config_hash, prov.extra + (("axis", sweep.axis_name),))
    return _render(prov, SWEEP_COLUMNS, rows)


def qq_csv(points: Sequence[tuple[float, float]], prov: Provenance | None = None) -> str:
    return _render(prov, QQ_COLUMNS, [(_num(x), _num(q)) for x, q in points])


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


def write_json(path: Path, obj) -> Path:
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# --- loading -------------------------------------------------------------

@dataclass(frozen=True)
class LoadedHistogram:
    histogram: Histogram
    metadata: dict[str, str]
    mode: str


def _parse_meta(line: str, meta: dict[str, str]) -> None:
    body = line.lstrip("#").strip()
    if not body:
        return
    if "=" in body:
        key, _, value = body.partition("=")
    else:
        key, _, value = body.partition(" ")
    meta[key.strip().lower()] = value.strip()


def _apportion(counts: dict[int, int], rates: dict[int, float], n: int) -> None:
    """Shift rounded counts by at most one each so that they sum to ``n``.

    Rows whose rounding moved furthest in the wrong direction go first; ties
    go to the largest counts, where one sample changes the rate least.
    """
    excess = sum(counts.values()) - n
    step = -1 if excess > 0 else 1
    eligible = [v for v in counts if counts[v] + step >= 0 and rates[v] > 0]
    eligible.sort(key=lambda v: (-step * (rates[v] * n - counts[v]), counts[v]), reverse=True)
    for v in eligible[:abs(excess)]:
        counts[v] += step


def load_histogram_csv(path, samples: int | None = None) -> LoadedHistogram:
    """Read a histogram written by this package or a rate table.

    Count mode needs a ``count`` column. Rate mode reads ``phat`` (or
    ``rate``) and a sample count from ``samples`` or an ``n`` comment line;
    counts are ``round(rate * n)``, which may mis-sum by at most one per
    row; the difference is then apportioned so the counts total ``n``.
    Other columns are ignored.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror or exc}") from exc
    meta: dict[str, str] = {}
    body = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("#"):
            _parse_meta(line, meta)
        elif line.strip():
            body.append((lineno, line))
    if not body:
        raise ConfigurationError(f"{path}: no header row")
    header_no, header_line = body[0]
    header = [h.strip().lower() for h in next(csv.reader([header_line]))]
    if "value" not in header:
        raise ConfigurationError(f"{path}:{header_no}: header needs a 'value' column")
    if "count" in header:
        mode, col = "count", header.index("count")
    elif "phat" in header or "rate" in header:
        mode, col = "rate", header.index("phat" if "phat" in header else "rate")
    else:
        raise ConfigurationError(f"{path}:{header_no}: header needs 'count', 'phat' or 'rate'")
    vcol = header.index("value")
    if len(body) < 2:
        raise ConfigurationError(f"{path}: no data rows")

    n_declared = samples
    if n_declared is None and "n" in meta:
        try:
            n_declared = int(float(meta["n"]))
        except ValueError as exc:
            raise ConfigurationError(f"{path}: bad sample count {meta['n']!r}") from exc
    if mode == "rate" and n_declared is None:
        raise ConfigurationError(f"{path}: rate table needs a sample count (n)")

    entries: dict[int, int] = {}
    rates: dict[int, float] = {}
    for lineno, line in body[1:]:
        fields = next(csv.reader([line]))
        if len(fields) != len(header):
            raise ConfigurationError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            value = int(fields[vcol])
            if mode == "count":
                count = int(fields[col])
            else:
                rate = float(fields[col])
                if not 0.0 <= rate <= 1.0:
                    raise ValueError("rate outside [0, 1]")
                count = round(rate * n_declared)
                rates[value] = rate
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from exc
        if count < 0:
            raise ConfigurationError(f"{path}:{lineno}: negative count")
        if value in entries:
            raise ConfigurationError(f"{path}:{lineno}: duplicate value {value}")
        entries[value] = count

    total = sum(entries.values())
    if mode == "rate":
        if abs(total - n_declared) > len(entries):
            raise ConfigurationError(
                f"{path}: rounded counts sum to {total}, declared n = {n_declared}")
        _apportion(entries, rates, n_declared)
        total = n_declared
    if mode == "count" and n_declared is not None and total != n_declared:
        raise ConfigurationError(f"{path}: counts sum to {total}, declared n = {n_declared}")
    try:
        hist = Histogram.from_mapping(entries)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return LoadedHistogram(hist, meta, mode)
