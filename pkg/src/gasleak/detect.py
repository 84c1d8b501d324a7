"""Residual-based leak detection with a windowed leak index.

Every sample whose absolute residual (measured minus predicted flow) exceeds
the threshold is flagged. With ``a`` equal to one plus the number of flags
among the previous ``window`` samples, the leak index is
``exp(-1 / (1 + a^2))``. An alarm fires once the index has stayed above the
trip level for more than ``persistence`` consecutive samples, and latches.
"""

from __future__ import annotations

import copy
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from gasleak import _accel, dataio

THRESHOLD_MARGIN = 0.01


class InsufficientStreamError(ValueError):
    pass


class UndefinedLeakSizeError(ValueError):
    pass


class LocalizationUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    """Detector settings.

    ``threshold=None`` means the observer's test MAE plus 0.01. ``flag_only``
    reproduces the reference loop, which only updates the trip counter on
    flagged samples.
    """

    threshold: float | None = None
    window: int = 30
    index_trip: float = 0.99
    persistence: int = 3
    flag_only: bool = False
    onset_index: int = 30
    sampling_interval_min: float = 2.0

    def __post_init__(self):
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not 0.0 < self.index_trip < 1.0:
            raise ValueError(f"index_trip must be in (0, 1), got {self.index_trip}")
        if self.persistence < 1:
            raise ValueError(f"persistence must be >= 1, got {self.persistence}")

    @classmethod
    def code_faithful(cls, **overrides) -> "DetectorConfig":
        return cls(**{"window": 20, "flag_only": True, **overrides})

    def with_threshold(self, threshold: float) -> "DetectorConfig":
        return replace(self, threshold=threshold)

    def resolve_threshold(self, model=None) -> float:
        if self.threshold is not None:
            return self.threshold
        mae = getattr(model, "test_mae", None)
        if mae is None:
            raise ValueError("no threshold given and the model carries no test MAE")
        return float(mae) + THRESHOLD_MARGIN

    def minutes_since_onset(self, ordinal: int) -> float:
        # the reference accounting counts from two samples after onset
        return max(0.0, (ordinal - self.onset_index - 2) * self.sampling_interval_min)


def leak_index(a: float) -> float:
    if a < 0:
        raise ValueError(f"exceedance argument must be >= 0, got {a}")
    return math.exp(-1.0 / (1.0 + a * a))


def estimate_leak_size(observed: float, predicted: float) -> float:
    """Flow deviation as a percentage of the measured flow."""
    if observed == 0:
        raise UndefinedLeakSizeError("leak size undefined for zero measured flow")
    return abs(observed - predicted) * 100.0 / observed


def localize(dev_inlet: float, dev_outlet: float) -> float:
    """Fractional leak position from the inlet and outlet flow deviations."""
    if dev_inlet < 0 or dev_outlet < 0:
        raise ValueError(f"deviations must be non-negative, got {dev_inlet}, {dev_outlet}")
    total = dev_inlet + dev_outlet
    if total == 0:
        raise LocalizationUndefinedError("both deviations are zero")
    return dev_outlet / total


@dataclass(frozen=True)
class AlarmEvent:
    ordinal: int
    alarm_ordinal: int
    minutes: float
    leak_percent: float
    leak_index: float
    inlet_pressure: float
    outlet_pressure: float
    location: float | None = None

    def __post_init__(self):
        if self.leak_percent < 0 or self.minutes < 0:
            raise ValueError("leak size and minutes-to-detect must be non-negative")

    def to_text(self) -> str:
        loc = "unavailable" if self.location is None else f"{self.location:.4f}"
        return "\n".join([
            "LEAK",
            f"ordinal            {self.ordinal}",
            f"alarm ordinal      {self.alarm_ordinal}",
            f"leak index         {self.leak_index:.6f}",
            f"percentage leak    {self.leak_percent:.2f}",
            f"inlet pressure     {self.inlet_pressure:.2f}",
            f"outlet pressure    {self.outlet_pressure:.2f}",
            f"minutes to detect  {self.minutes:g}",
            f"location           {loc}",
        ])


@dataclass
class DetectorState:
    window: int
    flags: deque = field(default_factory=deque)
    in_window: int = 0
    index: float = float("nan")
    counter: int = 0
    best_index: float = -math.inf
    best_ordinal: int = -1
    best_sample: tuple = ()
    ordinal: int = 0
    skipped: int = 0
    alarm: AlarmEvent | None = None

    @classmethod
    def fresh(cls, config: DetectorConfig) -> "DetectorState":
        return cls(window=config.window, flags=deque(maxlen=config.window))

    def copy(self) -> "DetectorState":
        return copy.deepcopy(self)

    def update(self, flag: bool) -> int:
        """Push a flag and return ``a`` computed from the flags before it."""
        a = self.in_window + 1
        if len(self.flags) == self.window:
            self.in_window -= self.flags[0]
        self.flags.append(int(flag))
        self.in_window += int(flag)
        return a


def step(state: DetectorState, observed: float, predicted: float, config: DetectorConfig,
         threshold: float | None = None, inlet_pressure: float = float("nan"),
         outlet_pressure: float = float("nan")) -> tuple[DetectorState, AlarmEvent | None]:
    """Advance the detector by one sample; the input state is not modified.

    Returns the new state and the alarm raised by this sample, if any.
    """
    thr = config.threshold if threshold is None else threshold
    if thr is None:
        raise ValueError("step needs an explicit threshold")
    new = state.copy()
    t = new.ordinal
    new.ordinal += 1
    residual = observed - predicted
    if math.isnan(residual):
        new.skipped += 1
        return new, None
    flag = abs(residual) > thr
    a = new.update(flag)
    new.index = leak_index(a)
    if config.flag_only and not flag:
        return new, None
    new.counter = new.counter + 1 if new.index > config.index_trip else 0
    if new.alarm is not None:
        return new, None
    if new.index > new.best_index:
        new.best_index = new.index
        new.best_ordinal = t
        new.best_sample = (observed, predicted, inlet_pressure, outlet_pressure)
    if new.counter > config.persistence:
        obs, pred, p_in, p_out = new.best_sample
        new.alarm = AlarmEvent(new.best_ordinal, t, config.minutes_since_onset(new.best_ordinal),
                               estimate_leak_size(obs, pred), new.best_index, p_in, p_out)
        return new, new.alarm
    return new, None


@dataclass
class DetectionResult:
    log: pd.DataFrame
    alarm: AlarmEvent | None
    threshold: float
    config: DetectorConfig
    skipped: int

    @property
    def detected(self) -> bool:
        return self.alarm is not None

    def log_lines(self) -> list[str]:
        lines = ["ordinal,residual,flag,index,counter"]
        for row in self.log.itertuples(index=False):
            lines.append(f"{row.ordinal},{row.residual:.6f},{row.flag},{row.index:.6f},"
                         f"{row.counter}")
        return lines

    def summary(self) -> str:
        return self.alarm.to_text() if self.alarm else "NO LEAK"


def _deviation(observed: np.ndarray, predicted: np.ndarray, lo: int, hi: int) -> float:
    return abs(float(np.mean(observed[lo:hi] - predicted[lo:hi])))


def run_detection(stream: pd.DataFrame, model, config: DetectorConfig | None = None,
                  inlet_model=None) -> DetectionResult:
    """Scan a whole stream.

    With an inlet-flow observer and an inlet flow column, the alarm also
    carries a location estimate, and the leak size comes from the combined
    inlet and outlet flow deviations (mean signed residuals over the
    persistence stretch ending at the alarm).
    """
    config = config or DetectorConfig()
    n = len(stream)
    if n < config.window:
        raise InsufficientStreamError(f"stream has {n} samples, window needs {config.window}")
    threshold = config.resolve_threshold(model)
    target = getattr(model, "target", dataio.FLOWRATE)
    observed = stream[target].to_numpy(float)
    predicted = np.asarray(model.predict_frame(stream), dtype=float)
    residual = observed - predicted
    flags, a_log, index_log, counter_log, alarm_pos, best_pos = _accel.backend.scan_detector(
        np.abs(residual), float(threshold), int(config.window), float(config.index_trip),
        int(config.persistence), bool(config.flag_only))
    log = pd.DataFrame({
        "ordinal": np.arange(n), "observed": observed, "predicted": predicted,
        "residual": residual, "flag": np.asarray(flags), "a": np.asarray(a_log),
        "index": np.asarray(index_log), "counter": np.asarray(counter_log),
    })
    skipped = int((np.asarray(flags) < 0).sum())
    alarm = None
    if alarm_pos >= 0:
        p_in = stream[dataio.INLET_PRESSURE].to_numpy(float)
        p_out = stream[dataio.OUTLET_PRESSURE].to_numpy(float)
        size = estimate_leak_size(observed[best_pos], predicted[best_pos])
        location = None
        if inlet_model is not None and dataio.INLET_FLOWRATE in stream.columns:
            lo, hi = max(0, alarm_pos - config.persistence), alarm_pos + 1
            obs_in = stream[dataio.INLET_FLOWRATE].to_numpy(float)
            pred_in = np.asarray(inlet_model.predict_frame(stream), dtype=float)
            dev_out = _deviation(observed, predicted, lo, hi)
            dev_in = _deviation(obs_in, pred_in, lo, hi)
            try:
                location = localize(dev_in, dev_out)
            except LocalizationUndefinedError:
                location = None
            size = (dev_in + dev_out) * 100.0 / float(np.mean(observed[lo:hi]))
        alarm = AlarmEvent(int(best_pos), int(alarm_pos),
                           config.minutes_since_onset(int(best_pos)), size,
                           float(index_log[best_pos]), float(p_in[best_pos]),
                           float(p_out[best_pos]), location)
    return DetectionResult(log, alarm, float(threshold), config, skipped)
