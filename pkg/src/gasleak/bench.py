"""Leak-size by leak-location sweeps and the comparison tables built from them.

A sweep injects every (size, location) scenario into a no-leak stream, runs
the detector and records minutes-to-detect, the location estimate and the
size estimate. Fragments from several observers are then combined into
time-to-detect, localization and ranking tables.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np
from scipy.stats import rankdata

from gasleak import detect, simulate

DEFAULT_SIZES = (0.001, 0.01, 0.05, 0.1)
DEFAULT_LOCATIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

DETECTED = "detected"
NOT_DETECTED = "not_detected"
INFEASIBLE = "infeasible"
FALSE_ALARM = "false_alarm"
STATUSES = (DETECTED, NOT_DETECTED, INFEASIBLE, FALSE_ALARM)

# Literature transient-model figures, quoted for side-by-side columns only.
_RTTM = MappingProxyType({
    "minutes": MappingProxyType({0.001: 173.0, 0.01: 100.0, 0.05: 36.0, 0.1: 32.0}),
    "localization_pct": MappingProxyType({0.001: None, 0.01: 10.0, 0.05: 8.0, 0.1: 7.0}),
})


def rttm_reference() -> MappingProxyType:
    """Read-only literature values keyed by leak fraction."""
    return _RTTM


def cell_seed(master: int, location_index: int) -> int:
    """Stream seed for one location. Every size at a location shares it, so
    sizes are compared on the same operating history."""
    return int(np.random.SeedSequence([master, location_index]).generate_state(1)[0])


@dataclass(frozen=True)
class SweepGrid:
    """Scenarios to sweep and the stream each one is injected into.

    Streams generated for a sweep are ``onset_index`` samples of normal
    operation followed by enough samples to cover the time budget.
    """

    sizes: tuple[float, ...] = DEFAULT_SIZES
    locations: tuple[float, ...] = DEFAULT_LOCATIONS
    seed: int = 0
    budget_minutes: float = 240.0
    onset_index: int = 30
    sampling_interval_min: float = 2.0
    noise: simulate.NoiseModel = field(default_factory=simulate.NoiseModel.none)
    profile: simulate.OperatingProfile = field(default_factory=simulate.OperatingProfile)

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(float(s) for s in self.sizes))
        object.__setattr__(self, "locations", tuple(float(x) for x in self.locations))
        if not self.sizes or not self.locations:
            raise ValueError("sweep grid needs at least one size and one location")
        if any(not 0.0 <= s < 1.0 for s in self.sizes):
            raise ValueError(f"leak sizes must lie in [0, 1), got {self.sizes}")
        if any(not 0.0 < x <= 1.0 for x in self.locations):
            raise ValueError(f"leak locations must lie in (0, 1], got {self.locations}")
        if not self.budget_minutes > 0:
            raise ValueError(f"time budget must be positive, got {self.budget_minutes}")
        if self.onset_index < 0:
            raise ValueError(f"onset index must be >= 0, got {self.onset_index}")

    @property
    def stream_samples(self) -> int:
        # the minutes accounting starts two samples after onset
        return self.onset_index + int(math.ceil(self.budget_minutes / self.sampling_interval_min)) + 3

    def cells(self):
        for i, size in enumerate(self.sizes):
            for j, loc in enumerate(self.locations):
                yield i, j, size, loc

    def with_noise(self, noise: simulate.NoiseModel) -> "SweepGrid":
        return replace(self, noise=noise)


@dataclass(frozen=True)
class CellResult:
    size: float
    location: float
    seed: int
    status: str
    minutes: float | None = None
    location_estimate: float | None = None
    size_estimate: float | None = None

    @property
    def detected(self) -> bool:
        return self.status == DETECTED

    @property
    def location_error_pct(self) -> float | None:
        if not self.detected or self.location_estimate is None:
            return None
        return abs(self.location_estimate - self.location) * 100.0 / self.location


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


@dataclass(frozen=True)
class SweepFragment:
    """One observer's sweep plus its reliability and robustness figures."""

    name: str
    grid: SweepGrid
    cells: tuple[CellResult, ...]
    false_alarms: int | None = None
    clean_streams: int = 0
    robustness: float | None = None
    scores: dict | None = None

    def at_size(self, size: float) -> list[CellResult]:
        return [c for c in self.cells if c.size == size]

    def mean_minutes(self, size: float) -> float | None:
        """Mean over detected cells only; None when nothing was detected."""
        return _mean(c.minutes for c in self.at_size(size) if c.detected)

    def coverage(self, size: float) -> float:
        cells = self.at_size(size)
        return sum(c.detected for c in cells) / len(cells) if cells else 0.0

    def censored_mean(self, size: float) -> float | None:
        """Mean with undetected feasible cells counted at the time budget."""
        vals = [c.minutes if c.detected else self.grid.budget_minutes
                for c in self.at_size(size) if c.status != INFEASIBLE]
        return _mean(vals)

    def size_error(self, size: float) -> float | None:
        """Mean absolute error of the leak-size estimate, in percentage points."""
        return _mean(abs(c.size_estimate - size * 100.0) for c in self.at_size(size)
                     if c.detected and c.size_estimate is not None)

    def min_detectable(self) -> tuple[float, float, float] | None:
        """(size, location, minutes) of the fastest detection at the smallest detected size."""
        for size in sorted(self.grid.sizes):
            hits = [c for c in self.at_size(size) if c.detected]
            if hits:
                best = min(hits, key=lambda c: (c.minutes, c.location))
                return size, best.location, best.minutes
        return None

    @property
    def overall_coverage(self) -> float:
        feasible = [c for c in self.cells if c.status != INFEASIBLE and c.size > 0]
        return sum(c.detected for c in feasible) / len(feasible) if feasible else 0.0

    @property
    def false_alarm_rate(self) -> float | None:
        if self.false_alarms is None or self.clean_streams == 0:
            return None
        return self.false_alarms / self.clean_streams


def localization_error(fragment: SweepFragment) -> dict[float, float | None]:
    """Per-size mean of |estimated - true| / true location, in percent (None = n/a)."""
    return {size: _mean(c.location_error_pct for c in fragment.at_size(size))
            for size in fragment.grid.sizes}


def _run_cell(args) -> CellResult:
    model, inlet_model, spec, grid, config, base, i, j, size, loc = args
    seed = cell_seed(grid.seed, j)
    if base is None:
        base = simulate.synth_stream(spec, grid.stream_samples, grid.profile, grid.noise, seed)
    try:
        stream = simulate.inject_leak(base, spec, simulate.LeakScenario(size, loc, grid.onset_index))
    except simulate.ScenarioInfeasibleError:
        return CellResult(size, loc, seed, INFEASIBLE)
    result = detect.run_detection(stream, model, config, inlet_model=inlet_model)
    alarm = result.alarm
    if alarm is None:
        return CellResult(size, loc, seed, NOT_DETECTED)
    if alarm.alarm_ordinal < grid.onset_index:
        return CellResult(size, loc, seed, FALSE_ALARM)
    if alarm.minutes > grid.budget_minutes:
        return CellResult(size, loc, seed, NOT_DETECTED)
    return CellResult(size, loc, seed, DETECTED, alarm.minutes, alarm.location, alarm.leak_percent)


def run_sweep(model, grid: SweepGrid | None = None, spec: simulate.PipelineSpec | None = None,
              base_stream=None, inlet_model=None, config: detect.DetectorConfig | None = None,
              name: str | None = None, jobs: int = 1) -> SweepFragment:
    """Inject, detect and record every cell of ``grid``.

    With ``base_stream`` every scenario goes into that one stream (as the
    reference sweep does); otherwise each location gets its own stream seeded
    from (grid seed, location index), shared by all sizes there.
    """
    grid = grid or SweepGrid()
    spec = spec or simulate.PipelineSpec()
    config = config or detect.DetectorConfig(onset_index=grid.onset_index,
                                             sampling_interval_min=grid.sampling_interval_min)
    if base_stream is not None:
        base_stream = base_stream.reset_index(drop=True)
    jobs_args = [(model, inlet_model, spec, grid, config, base_stream, i, j, s, x)
                 for i, j, s, x in grid.cells()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, jobs_args))
    else:
        cells = [_run_cell(a) for a in jobs_args]
    return SweepFragment(name or getattr(model, "family", "model"), grid, tuple(cells),
                         scores=_test_scores(model))


def _test_scores(model) -> dict | None:
    scores = getattr(model, "metadata", {}).get("scores")
    if not scores:
        return None
    return {"rmse": scores["test"]["rmse"], "mae": scores["test"]["mae"],
            "r2_train": scores["train"]["r2"], "r2_test": scores["test"]["r2"],
            "r2_cv": scores["cv_r2"]}


def clean_stream_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence([seed, 7]).spawn(n)]


def false_alarm_runs(model, n_streams: int = 20, seed: int = 1000, duration_samples: int = 5000,
                     spec: simulate.PipelineSpec | None = None,
                     noise: simulate.NoiseModel | None = None,
                     config: detect.DetectorConfig | None = None) -> list[bool]:
    """Alarm outcome on each of ``n_streams`` seeded leak-free streams."""
    spec = spec or simulate.PipelineSpec()
    noise = noise or simulate.NoiseModel()
    out = []
    for s in clean_stream_seeds(seed, n_streams):
        stream = simulate.synth_stream(spec, duration_samples, noise=noise, seed=s)
        out.append(detect.run_detection(stream, model, config).detected)
    return out


def robustness(model, grid: SweepGrid | None = None, factor: float = 2.0,
               base_noise: simulate.NoiseModel | None = None, **kwargs) -> float | None:
    """Relative rise in censored mean time-to-detect when noise stddevs scale by ``factor``.

    0 means no slowdown. Sizes whose censored mean is undefined in either
    run are left out; None when no size survives.
    """
    grid = grid or SweepGrid()
    base_noise = base_noise or simulate.NoiseModel()
    calm = run_sweep(model, grid.with_noise(base_noise), **kwargs)
    rough = run_sweep(model, grid.with_noise(base_noise.scaled(factor)), **kwargs)
    a = [calm.censored_mean(s) for s in grid.sizes if s > 0]
    b = [rough.censored_mean(s) for s in grid.sizes if s > 0]
    pairs = [(x, y) for x, y in zip(a, b) if x is not None and y is not None]
    if not pairs:
        return None
    base = sum(x for x, _ in pairs)
    if base == 0:
        return 0.0 if sum(y for _, y in pairs) == 0 else math.inf
    return sum(y for _, y in pairs) / base - 1.0


def evaluate(model, grid: SweepGrid | None = None, inlet_model=None, name: str | None = None,
             n_clean: int = 20, clean_seed: int = 1000, clean_samples: int = 5000,
             with_robustness: bool = True, config: detect.DetectorConfig | None = None,
             jobs: int = 1) -> SweepFragment:
    """Sweep plus false-alarm and robustness runs for one observer."""
    grid = grid or SweepGrid()
    frag = run_sweep(model, grid, inlet_model=inlet_model, config=config, name=name, jobs=jobs)
    alarms = false_alarm_runs(model, n_clean, clean_seed, clean_samples, config=config)
    rob = robustness(model, grid, inlet_model=inlet_model, config=config, jobs=jobs) \
        if with_robustness else None
    return replace(frag, false_alarms=sum(alarms), clean_streams=len(alarms), robustness=rob)


# ---------------------------------------------------------------- ranking

SARR_METRICS = ("sensitivity", "accuracy", "robustness", "reliability")


@dataclass(frozen=True)
class RankTable:
    names: tuple[str, ...]
    ranks: dict
    totals: tuple[int, ...]

    def rows(self):
        for k, name in enumerate(self.names):
            yield name, [self.ranks[m][k] for m in SARR_METRICS], self.totals[k]


def _lexi_rank(keys) -> list[int]:
    """Rank tuples ascending; equal tuples share the lower rank."""
    order = sorted(set(keys))
    pos = {key: order.index(key) for key in order}
    dense = [pos[k] for k in keys]
    return [int(r) for r in rankdata(dense, method="min")]


def _finite(value, worst=math.inf) -> float:
    return worst if value is None or (isinstance(value, float) and math.isnan(value)) else value


def sarr_keys(fragment: SweepFragment) -> dict:
    """Sort keys per metric; lower is better."""
    md = fragment.min_detectable()
    sens = (md[0], md[2]) if md else (math.inf, math.inf)
    errs = [e for e in localization_error(fragment).values() if e is not None]
    size_errs = [fragment.size_error(s) for s in fragment.grid.sizes]
    size_errs = [e for e in size_errs if e is not None]
    acc = (float(np.mean(errs)) if errs else math.inf,
           float(np.mean(size_errs)) if size_errs else math.inf)
    rel = (_finite(fragment.false_alarm_rate), -fragment.overall_coverage)
    rob = (_finite(fragment.robustness),)
    return {"sensitivity": sens, "accuracy": acc, "robustness": rob, "reliability": rel}


def sarr_rank(fragments) -> RankTable:
    """Rank observers 1..n on each metric and total the ranks (lower is better)."""
    fragments = list(fragments)
    if len(fragments) < 2:
        raise ValueError("ranking needs at least two models")
    keys = [sarr_keys(f) for f in fragments]
    ranks = {m: _lexi_rank([k[m] for k in keys]) for m in SARR_METRICS}
    totals = tuple(sum(ranks[m][i] for m in SARR_METRICS) for i in range(len(fragments)))
    return RankTable(tuple(f.name for f in fragments), ranks, totals)


# ---------------------------------------------------------------- rendering

def _fmt(value, spec: str = ".1f", missing: str = "n/a") -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return missing
    return format(value, spec)


def _size_label(size: float) -> str:
    return format(size * 100.0, "g")


def render_text(fragments, ranks: RankTable | None = None) -> str:
    fragments = list(fragments)
    if not fragments:
        return ""
    names = [f.name for f in fragments]
    sizes = fragments[0].grid.sizes
    rttm = rttm_reference()
    width = max(12, *(len(n) + 2 for n in names))
    out = []

    def row(label, cells):
        out.append(f"{label:<14}" + "".join(f"{c:>{width}}" for c in cells))

    scored = [f for f in fragments if f.scores]
    if scored:
        out.append("Observer accuracy (test split)")
        row("", [f.name for f in scored])
        for key, label in (("rmse", "RMSE"), ("mae", "MAE"), ("r2_train", "R2 (train)"),
                           ("r2_test", "R2 (test)"), ("r2_cv", "R2 (CV)")):
            row(label, [_fmt(f.scores[key], ".4f") for f in scored])
        out.append("")

    out.append("Mean time to detection (minutes, detected cells only)")
    row("Leak size (%)", names + ["RTTM"])
    for s in sizes:
        row(_size_label(s), [_fmt(f.mean_minutes(s), ".1f", "N/A") for f in fragments]
            + [_fmt(rttm["minutes"].get(s), ".0f")])
    out.append("N/A: not detected within the time budget")
    out.append("")
    out.append("Detection coverage (%) / censored mean (minutes)")
    row("Leak size (%)", names)
    for s in sizes:
        row(_size_label(s), [f"{f.coverage(s) * 100:.0f}/{_fmt(f.censored_mean(s), '.1f')}"
                             for f in fragments])
    out.append("")

    out.append("Mean localization error (%)")
    row("Leak size (%)", names + ["RTTM"])
    errs = [localization_error(f) for f in fragments]
    for s in sizes:
        row(_size_label(s), [_fmt(e[s], ".1f") for e in errs]
            + [_fmt(rttm["localization_pct"].get(s), ".0f")])
    out.append("")

    out.append("Reliability and sensitivity")
    row("", names)
    row("False alarms", [f"{f.false_alarms}/{f.clean_streams}" if f.false_alarms is not None
                         else "n/a" for f in fragments])
    md = [f.min_detectable() for f in fragments]
    row("Min size (%)", [_size_label(m[0]) if m else "none" for m in md])
    row("at location", [_fmt(m[1], ".1f") if m else "n/a" for m in md])
    row("Robustness", [_fmt(f.robustness, "+.3f") for f in fragments])

    if ranks is not None:
        out.append("")
        out.append("Rankings (lower is better)")
        out.append(f"{'':<{width}}" + "".join(f"{m.capitalize():>13}" for m in SARR_METRICS)
                   + f"{'Total':>8}")
        for name, rk, total in ranks.rows():
            out.append(f"{name:<{width}}" + "".join(f"{r:>13}" for r in rk) + f"{total:>8}")
    return "\n".join(out) + "\n"


def render_csv(fragments) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "size_pct", "mean_minutes", "coverage", "censored_mean_minutes",
                "localization_error_pct", "size_error_pct_points"])
    for f in fragments:
        errs = localization_error(f)
        for s in f.grid.sizes:
            w.writerow([f.name, _size_label(s), _fmt(f.mean_minutes(s), ".4f", ""),
                        f"{f.coverage(s):.4f}", _fmt(f.censored_mean(s), ".4f", ""),
                        _fmt(errs[s], ".4f", ""), _fmt(f.size_error(s), ".4f", "")])
    return buf.getvalue()


def render_cells_csv(fragments) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "size", "location", "seed", "status", "minutes",
                "location_estimate", "size_estimate_pct"])
    for f in fragments:
        for c in f.cells:
            w.writerow([f.name, repr(c.size), repr(c.location), c.seed, c.status,
                        _fmt(c.minutes, ".1f", ""), _fmt(c.location_estimate, ".6f", ""),
                        _fmt(c.size_estimate, ".6f", "")])
    return buf.getvalue()


def render_rank_csv(ranks: RankTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", *SARR_METRICS, "total"])
    for name, rk, total in ranks.rows():
        w.writerow([name, *rk, total])
    return buf.getvalue()


def render_kv(fragments, ranks: RankTable | None = None) -> str:
    """Flat ``key=value`` lines, sorted, for scripted checks."""
    kv = {}
    for f in fragments:
        p = f"model.{f.name}"
        for s in f.grid.sizes:
            q = f"{p}.size.{_size_label(s)}"
            kv[f"{q}.mean_minutes"] = _fmt(f.mean_minutes(s), ".4f", "nan")
            kv[f"{q}.coverage"] = f"{f.coverage(s):.4f}"
            kv[f"{q}.censored_mean_minutes"] = _fmt(f.censored_mean(s), ".4f", "nan")
            kv[f"{q}.localization_error_pct"] = _fmt(localization_error(f)[s], ".4f", "nan")
        kv[f"{p}.false_alarms"] = "nan" if f.false_alarms is None else str(f.false_alarms)
        kv[f"{p}.clean_streams"] = str(f.clean_streams)
        kv[f"{p}.robustness"] = _fmt(f.robustness, ".6f", "nan")
        md = f.min_detectable()
        kv[f"{p}.min_detectable_size_pct"] = _size_label(md[0]) if md else "nan"
        kv[f"{p}.min_detectable_location"] = _fmt(md[1], ".4f", "nan") if md else "nan"
        for status in STATUSES:
            kv[f"{p}.cells.{status}"] = str(sum(c.status == status for c in f.cells))
    if ranks is not None:
        for name, rk, total in ranks.rows():
            for m, r in zip(SARR_METRICS, rk):
                kv[f"rank.{name}.{m}"] = str(r)
            kv[f"rank.{name}.total"] = str(total)
    return "".join(f"{k}={kv[k]}\n" for k in sorted(kv))


# ---------------------------------------------------------------- fragment files

def fragment_to_dict(fragment: SweepFragment) -> dict:
    g = fragment.grid
    return {
        "name": fragment.name,
        "grid": {"sizes": list(g.sizes), "locations": list(g.locations), "seed": g.seed,
                 "budget_minutes": g.budget_minutes, "onset_index": g.onset_index,
                 "sampling_interval_min": g.sampling_interval_min,
                 "noise": [g.noise.inlet_pressure, g.noise.outlet_pressure, g.noise.flowrate,
                           g.noise.inlet_temp, g.noise.outlet_temp]},
        "cells": [[c.size, c.location, c.seed, c.status, c.minutes, c.location_estimate,
                   c.size_estimate] for c in fragment.cells],
        "false_alarms": fragment.false_alarms,
        "clean_streams": fragment.clean_streams,
        "robustness": fragment.robustness,
        "scores": fragment.scores,
    }


def fragment_from_dict(data: dict) -> SweepFragment:
    g = data["grid"]
    grid = SweepGrid(tuple(g["sizes"]), tuple(g["locations"]), g["seed"], g["budget_minutes"],
                     g["onset_index"], g["sampling_interval_min"],
                     simulate.NoiseModel(*g["noise"]))
    cells = tuple(CellResult(*c) for c in data["cells"])
    return SweepFragment(data["name"], grid, cells, data["false_alarms"],
                         data["clean_streams"], data["robustness"], data["scores"])


__all__ = [
    "CellResult", "DEFAULT_LOCATIONS", "DEFAULT_SIZES", "RankTable", "SARR_METRICS",
    "STATUSES", "SweepFragment", "SweepGrid", "cell_seed", "clean_stream_seeds", "evaluate",
    "false_alarm_runs", "fragment_from_dict", "fragment_to_dict", "localization_error",
    "render_cells_csv", "render_csv", "render_kv", "render_rank_csv", "render_text",
    "robustness", "rttm_reference", "run_sweep", "sarr_keys", "sarr_rank",
]
