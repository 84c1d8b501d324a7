"""Synthetic pipeline telemetry and leak injection.

Steady flow obeys the general flow equation ``Q = c * sqrt(P_in^2 - P_out^2)``.
A leak of fraction ``q`` of the metered (outlet) flow at fractional position
``l`` raises the upstream segment's flow to ``(1 + q) Q``; the pipe then
behaves like a single segment whose constant is ``c * F_l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from gasleak import dataio

# Table 4.1 means and standard deviations for the measured channels.
REFERENCE_MEANS = {
    dataio.INLET_PRESSURE: 1317.60,
    dataio.INLET_TEMP: 90.71,
    dataio.OUTLET_PRESSURE: 1269.96,
    dataio.OUTLET_TEMP: 83.56,
    dataio.FLOWRATE: 8.54,
}
REFERENCE_STDS = {
    dataio.INLET_PRESSURE: 11.40,
    dataio.INLET_TEMP: 6.25,
    dataio.OUTLET_PRESSURE: 24.16,
    dataio.OUTLET_TEMP: 2.35,
    dataio.FLOWRATE: 1.64,
}


class ScenarioInfeasibleError(ValueError):
    """The leak is too large for the operating point (negative radicand)."""

    def __init__(self, ordinal: int, radicand: float):
        super().__init__(f"leak infeasible at record {ordinal}: "
                         f"P_in^2 - (Q/(c*F_l))^2 = {radicand:.6g} < 0")
        self.ordinal = ordinal


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineSpec:
    length_miles: float = 6.84
    diameter_in: float = 21.0
    roughness_in: float = 0.002
    flow_constant: float = 0.0244
    sampling_interval_min: float = 2.0

    def __post_init__(self):
        for name in ("length_miles", "diameter_in", "roughness_in", "flow_constant",
                     "sampling_interval_min"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value}")

    def flow(self, p_in, p_out):
        return self.flow_constant * np.sqrt(np.asarray(p_in) ** 2 - np.asarray(p_out) ** 2)

    def outlet_pressure(self, p_in, q, factor: float = 1.0):
        return np.sqrt(np.asarray(p_in) ** 2 - (np.asarray(q) / (self.flow_constant * factor)) ** 2)

    def consistency(self, stream: pd.DataFrame) -> float:
        """Largest relative gap between metered flow and the flow equation."""
        q = stream[dataio.FLOWRATE].to_numpy(float)
        q_eq = self.flow(stream[dataio.INLET_PRESSURE].to_numpy(float),
                         stream[dataio.OUTLET_PRESSURE].to_numpy(float))
        return float(np.max(np.abs(q_eq - q) / np.abs(q)))


@dataclass(frozen=True)
class LeakScenario:
    q_ld: float
    l_ld: float
    onset_index: int = 30

    def __post_init__(self):
        if not 0.0 <= self.q_ld <= 0.5:
            raise ValueError(f"q_ld must be in [0, 0.5], got {self.q_ld}")
        if not 0.0 < self.l_ld < 1.0:
            raise ValueError(f"l_ld must be in (0, 1), got {self.l_ld}")
        if self.onset_index < 1:
            raise ValueError(f"onset_index must be >= 1, got {self.onset_index}")


@dataclass(frozen=True)
class OperatingProfile:
    """Flow schedule and ambient conditions for the synthetic generator.

    Flow holds piecewise levels drawn uniformly from ``flow_range`` for
    ``segment_range`` samples, with linear ramps between levels, plus
    per-sample process jitter. ``transient`` adds an overshoot of that
    fraction of each level change to the metered flow only, decaying by
    ``e`` per sample over ``transient_samples`` samples. The pressures do
    not see it, so it shows up in observer residuals as short spikes.
    """

    inlet_pressure: float = 1317.60
    inlet_pressure_jitter: float = 0.05
    flow_mean: float = 8.54
    flow_range: tuple[float, float] = (6.0, 11.0)
    segment_range: tuple[int, int] = (60, 600)
    ramp_range: tuple[int, int] = (3, 8)
    flow_jitter: float = 0.25
    transient: float = 0.15
    transient_samples: int = 3
    inlet_temp_mean: float = 90.71
    inlet_temp_amplitude: float = 6.0
    inlet_temp_jitter: float = 1.0
    outlet_temp_mean: float = 83.56
    outlet_temp_amplitude: float = 2.0
    outlet_temp_jitter: float = 0.5
    day_samples: int = 720

    @classmethod
    def constant(cls, flow: float = 8.54, inlet_pressure: float = 1317.60) -> "OperatingProfile":
        return cls(inlet_pressure=inlet_pressure, inlet_pressure_jitter=0.0, flow_mean=flow,
                   flow_range=(flow, flow), flow_jitter=0.0, transient=0.0,
                   inlet_temp_amplitude=0.0,
                   inlet_temp_jitter=0.0, outlet_temp_amplitude=0.0, outlet_temp_jitter=0.0)


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian measurement noise per channel (standard deviations)."""

    inlet_pressure: float = 0.01
    outlet_pressure: float = 0.01
    flowrate: float = 0.005
    inlet_temp: float = 0.1
    outlet_temp: float = 0.1

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    @classmethod
    def reference_fraction(cls, fraction: float = 0.1) -> "NoiseModel":
        """Noise at ``fraction`` of the field-data standard deviations."""
        s = REFERENCE_STDS
        return cls(fraction * s[dataio.INLET_PRESSURE], fraction * s[dataio.OUTLET_PRESSURE],
                   fraction * s[dataio.FLOWRATE], fraction * s[dataio.INLET_TEMP],
                   fraction * s[dataio.OUTLET_TEMP])

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(*(factor * v for v in (self.inlet_pressure, self.outlet_pressure,
                                                  self.flowrate, self.inlet_temp,
                                                  self.outlet_temp)))

    @property
    def is_silent(self) -> bool:
        return self == NoiseModel.none()


def leak_factor_exact(q_ld: float, l_ld: float) -> float:
    if q_ld < 0 or l_ld < 0:
        raise ValueError(f"leak size and location must be non-negative, got {q_ld}, {l_ld}")
    return (1.0 + l_ld * (q_ld * q_ld + 2.0 * q_ld)) ** -0.5


def leak_factor(q_ld: float, l_ld: float) -> float:
    """Equivalent single-segment multiplier on the flow constant, 4 decimals."""
    return round(leak_factor_exact(q_ld, l_ld), 4)


def inject_leak(stream: pd.DataFrame, spec: PipelineSpec, scenario: LeakScenario) -> pd.DataFrame:
    """Overwrite outlet pressure from the onset record onward as if leaking.

    The inlet flow channel, when present, carries the extra upstream flow
    ``(1 + q) Q`` from onset. Everything else is left as is.
    """
    out = stream.copy()
    if dataio.BASELINE_OUTLET_PRESSURE not in out.columns:
        out[dataio.BASELINE_OUTLET_PRESSURE] = out[dataio.OUTLET_PRESSURE]
    if scenario.q_ld == 0:
        return out
    onset = scenario.onset_index
    if onset >= len(out):
        return out
    factor = leak_factor(scenario.q_ld, scenario.l_ld)
    p_in = out[dataio.INLET_PRESSURE].to_numpy(float)[onset:]
    q = out[dataio.FLOWRATE].to_numpy(float)[onset:]
    radicand = p_in ** 2 - (q / (spec.flow_constant * factor)) ** 2
    bad = np.flatnonzero(~(radicand >= 0))
    if bad.size:
        first = int(bad[0])
        raise ScenarioInfeasibleError(int(out.index[onset + first]), float(radicand[first]))
    col = out.columns.get_loc(dataio.OUTLET_PRESSURE)
    out.iloc[onset:, col] = np.sqrt(radicand)
    if dataio.INLET_FLOWRATE in out.columns:
        col = out.columns.get_loc(dataio.INLET_FLOWRATE)
        out.iloc[onset:, col] = out.iloc[onset:, col].to_numpy(float) * (1.0 + scenario.q_ld)
    return out


def implied_leak_flow(p_in, p_out, q_out, l_ld: float, flow_constant: float):
    """Upstream minus downstream flow implied by the two-segment equations."""
    p_in, p_out, q_out = (np.asarray(v, dtype=float) for v in (p_in, p_out, q_out))
    mid_sq = p_out ** 2 + (q_out / flow_constant) ** 2 * (1.0 - l_ld)
    q_in = flow_constant * np.sqrt((p_in ** 2 - mid_sq) / l_ld)
    return q_in - q_out


def _flow_schedule(n: int, profile: OperatingProfile, rng: np.random.Generator):
    lo, hi = profile.flow_range
    q = np.empty(n)
    shock = np.zeros(n)
    level = profile.flow_mean
    i = 0
    while i < n:
        dur = int(rng.integers(profile.segment_range[0], profile.segment_range[1] + 1))
        ramp = int(rng.integers(profile.ramp_range[0], profile.ramp_range[1] + 1))
        new = float(rng.uniform(lo, hi)) if hi > lo else lo
        seg = np.concatenate([np.linspace(level, new, ramp), np.full(dur, new)])
        bump = np.zeros(seg.size)
        k = min(profile.transient_samples, seg.size)
        bump[:k] = profile.transient * (new - level) * np.exp(-np.arange(k))
        take = min(seg.size, n - i)
        q[i:i + take] = seg[:take]
        shock[i:i + take] = bump[:take]
        i += take
        level = new
    return q, shock


def synth_stream(spec: PipelineSpec | None = None, duration_samples: int = 21000,
                 profile: OperatingProfile | None = None, noise: NoiseModel | None = None,
                 seed: int = 0) -> pd.DataFrame:
    """Seeded leak-free telemetry with the baseline outlet pressure in ``P2``."""
    spec = spec or PipelineSpec()
    profile = profile or OperatingProfile()
    noise = noise if noise is not None else NoiseModel()
    if duration_samples < 1:
        raise ValueError(f"duration_samples must be >= 1, got {duration_samples}")
    n = duration_samples
    rng = np.random.default_rng(seed)

    q, shock = _flow_schedule(n, profile, rng)
    q = q + rng.normal(0.0, profile.flow_jitter, n) if profile.flow_jitter > 0 else q
    q = q - q.mean() + profile.flow_mean
    # a fixed envelope keeps every seed inside the same operating region
    margin = 2.0 * profile.flow_jitter
    q = np.clip(q, profile.flow_range[0] - margin, profile.flow_range[1] + margin)
    p_in = profile.inlet_pressure + (rng.normal(0.0, profile.inlet_pressure_jitter, n)
                                     if profile.inlet_pressure_jitter > 0 else np.zeros(n))
    p_out = spec.outlet_pressure(p_in, q)
    if not np.all(np.isfinite(p_out)):
        raise ValueError("operating profile exceeds the pipeline's capacity")

    phase = 2.0 * np.pi * np.arange(n) / profile.day_samples
    t_in = profile.inlet_temp_amplitude * np.sin(phase) + _jitter(rng, profile.inlet_temp_jitter, n)
    t_out = profile.outlet_temp_amplitude * np.sin(phase) + _jitter(rng, profile.outlet_temp_jitter, n)
    t_in = t_in - t_in.mean() + profile.inlet_temp_mean
    t_out = t_out - t_out.mean() + profile.outlet_temp_mean

    measured_p_out = p_out + _jitter(rng, noise.outlet_pressure, n)
    frame = pd.DataFrame({
        dataio.INLET_PRESSURE: p_in + _jitter(rng, noise.inlet_pressure, n),
        dataio.INLET_TEMP: t_in + _jitter(rng, noise.inlet_temp, n),
        dataio.OUTLET_PRESSURE: measured_p_out,
        dataio.OUTLET_TEMP: t_out + _jitter(rng, noise.outlet_temp, n),
        dataio.FLOWRATE: q + shock + _jitter(rng, noise.flowrate, n),
        dataio.BASELINE_OUTLET_PRESSURE: measured_p_out,
        dataio.INLET_FLOWRATE: q + _jitter(rng, noise.flowrate, n),
    })
    frame.index = pd.RangeIndex(n, name="index")
    return frame


def _jitter(rng: np.random.Generator, std: float, n: int) -> np.ndarray:
    # Always draw so every channel consumes the same stream regardless of noise level.
    z = rng.standard_normal(n)
    return std * z if std > 0 else np.zeros(n)


@dataclass(frozen=True)
class Calibration:
    flow_constant: float
    r2: float
    n_records: int


def calibrate_flow_constant(stream: pd.DataFrame) -> Calibration:
    """Least-squares fit of Q = c * sqrt(P_in^2 - P_out^2) through the origin."""
    p_in = stream[dataio.INLET_PRESSURE].to_numpy(float)
    p_out = stream[dataio.OUTLET_PRESSURE].to_numpy(float)
    q = stream[dataio.FLOWRATE].to_numpy(float)
    if len(q) < 100:
        raise dataio.InsufficientDataError(f"need at least 100 records, got {len(q)}")
    ok = (p_in > p_out) & np.isfinite(p_in) & np.isfinite(p_out) & np.isfinite(q)
    if not ok.any():
        raise CalibrationError("no record has inlet pressure above outlet pressure")
    x = np.sqrt(p_in[ok] ** 2 - p_out[ok] ** 2)
    y = q[ok]
    c = float(x @ y / (x @ x))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - c * x) ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return Calibration(c, r2, int(ok.sum()))

