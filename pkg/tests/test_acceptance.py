"""Acceptance run: one test per criterion, each reporting a pass/fail line.

The lines are collected and repeated in the terminal summary under
"acceptance criteria".
"""

import io
import math
import time

import numpy as np
import pytest

from gasleak import _accel, bench, dataio, detect, simulate
from gasleak import gasprops as gp
from gasleak import models as M
from gasleak.models import mlp as mlp_mod
from gasleak.models.svr import rbf_kernel
from test_kernels import dense_dual_oracle
from test_simulate import two_segment_factor

# Table 4.2 test-split errors per family
REFERENCE_ERRORS = {
    "gradient_boosting": (0.097, 0.053), "random_forest": (0.106, 0.038),
    "decision_tree": (0.138, 0.052), "mlp": (0.072, 0.034), "svr": (0.083, 0.048),
}
TREE_FAMILIES = ("decision_tree", "random_forest")
TABLE_MEAN = dict(pressure=1317.60, temp_f=90.71, sg=0.63)


def compiled_or_python():
    return [_accel.get(name) for name in ("python", "cython")
            if name == "python" or _accel.compiled_available()]


@pytest.fixture(scope="module")
def noiseless_sweeps(observers):
    """Default grid on noiseless streams for every family, with localization."""
    grid = bench.SweepGrid(seed=0)
    t0 = time.perf_counter()
    frags = {f: bench.run_sweep(observers.outlet[f], grid, inlet_model=observers.inlet[f], name=f)
             for f in M.FAMILIES}
    return frags, time.perf_counter() - t0


def test_criterion_01_correlation_fidelity(verdict):
    t0 = time.perf_counter()
    props = gp.properties_at(TABLE_MEAN["pressure"], TABLE_MEAN["temp_f"], TABLE_MEAN["sg"])
    z, mu = props["z"], props["viscosity"]
    seconds = time.perf_counter() - t0
    ok = 0.70 <= z <= 0.74 and 0.015 <= mu <= 0.025 and seconds < 1.0
    verdict(1, "correlation fidelity", ok,
            f"z={z:.4f} (want 0.70-0.74), viscosity={mu:.5f} cp (want 0.015-0.025)", seconds)


def test_criterion_02_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    svr_gap = 0.0
    for backend in compiled_or_python():
        for n in (8, 15, 22, 30):
            X = rng.uniform(size=(n, 2))
            y = np.sin(4 * X[:, 0]) + 0.5 * X[:, 1]
            K = rbf_kernel(X, X, 1.5)
            coef, bias, _, _ = backend.smo_svr(K, y, 10.0, 0.05, 1e-9, 1_000_000)
            ref_coef, ref_bias = dense_dual_oracle(K, y, 10.0, 0.05)
            Kz = rbf_kernel(rng.uniform(size=(50, 2)), X, 1.5)
            svr_gap = max(svr_gap, float(np.max(np.abs(Kz @ np.asarray(coef) + bias
                                                       - Kz @ ref_coef - ref_bias))))

    layers = [4, 3, 1]
    theta = rng.normal(size=4 * 3 + 3 + 3 + 1)
    X, y = rng.normal(size=(30, 4)), rng.normal(size=30)
    _, grad = mlp_mod.loss_and_grad(theta, layers, X, y, 0.1)
    num = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = 1e-5
        num[i] = (mlp_mod.loss_and_grad(theta + e, layers, X, y, 0.1)[0]
                  - mlp_mod.loss_and_grad(theta - e, layers, X, y, 0.1)[0]) / 2e-5
    keep = np.abs(num) >= 1e-8
    grad_rel = float(np.max(np.abs(grad[keep] - num[keep]) / np.abs(num[keep])))

    mismatches = 0
    r = np.abs(rng.normal(size=100_000)) * rng.choice([0.3, 3.0], 100_000, p=[0.8, 0.2])
    for backend in compiled_or_python():
        for window in (1, 7, 30):
            flags, a_log, *_ = backend.scan_detector(r, 1.0, window, 0.99, 3, False)
            f = np.asarray(flags, dtype=np.int64)
            csum = np.concatenate([[0], np.cumsum(f)])
            k = np.arange(f.size)
            brute = csum[k] - csum[np.maximum(0, k - window)] + 1
            mismatches += int(np.sum(np.asarray(a_log) != brute))
    seconds = time.perf_counter() - t0
    ok = svr_gap < 1e-4 and grad_rel < 1e-4 and mismatches == 0 and seconds < 120
    verdict(2, "oracle equivalence", ok,
            f"SVR vs QP max gap {svr_gap:.2e}, MLP gradient rel err {grad_rel:.2e}, "
            f"window recount mismatches {mismatches} over 1e5 steps", seconds)


def test_criterion_03_regressor_quality(observers, verdict):
    parts, ok = [], observers.total_seconds < 600
    for family in M.FAMILIES:
        s = observers.outlet[family].metadata["scores"]["test"]
        ref_rmse, ref_mae = REFERENCE_ERRORS[family]
        # same order of magnitude: within a factor of ten of the reference figure
        same_order = 0.1 <= s["rmse"] / ref_rmse <= 10 and 0.1 <= s["mae"] / ref_mae <= 10
        ok &= s["r2"] >= 0.99 and same_order
        parts.append(f"{family} R2={s['r2']:.5f} RMSE={s['rmse']:.4f} MAE={s['mae']:.4f}")
    verdict(3, "regressor quality", ok, "; ".join(parts), observers.total_seconds)


def test_criterion_04_reliability(observers, verdict):
    t0 = time.perf_counter()
    counts = {f: sum(bench.false_alarm_runs(observers.outlet[f], n_streams=20, seed=1000,
                                            duration_samples=5000))
              for f in M.FAMILIES}
    seconds = time.perf_counter() - t0
    ok = all(c == 0 for c in counts.values()) and seconds < 120
    verdict(4, "reliability", ok,
            "false alarms on 20 clean streams: "
            + ", ".join(f"{f}={c}" for f, c in counts.items()), seconds)


def test_criterion_05_sensitivity(noiseless_sweeps, verdict):
    frags, sweep_seconds = noiseless_sweeps
    t0 = time.perf_counter()

    def minutes(family, size):
        cell = next(c for c in frags[family].at_size(size) if c.location == 0.5)
        return cell.minutes if cell.detected else None

    ok, parts = True, []
    for family in M.FAMILIES:
        m1, m10 = minutes(family, 0.01), minutes(family, 0.1)
        ok &= m1 is not None and m1 <= 120 and m10 is not None and m10 <= 40
        parts.append(f"{family} 1%={m1} 10%={m10}")
    for family in TREE_FAMILIES:
        m01 = minutes(family, 0.001)
        ok &= m01 is not None and m01 <= 240
        parts.append(f"{family} 0.1%={m01}")
    seconds = sweep_seconds + time.perf_counter() - t0
    ok &= seconds < 300
    verdict(5, "sensitivity", ok, "minutes at location 0.5: " + "; ".join(parts), seconds)


def test_criterion_06_delay_lower_bound(verdict):
    t0 = time.perf_counter()
    cfg = detect.DetectorConfig()
    rng = np.random.default_rng(6)
    earliest = math.inf
    for backend in compiled_or_python():
        for trial in range(400):
            onset = int(rng.integers(0, 50))
            r = np.zeros(onset + 80)
            r[onset:] = rng.uniform(0, 5, 80) * (rng.random(80) < rng.uniform(0.3, 1.0))
            if trial % 4 == 0:
                r[onset:] = 5.0  # saturated leak signature, the fastest possible case
            *_, alarm_pos, _ = backend.scan_detector(r, 1.0, cfg.window, cfg.index_trip,
                                                     cfg.persistence, cfg.flag_only)
            if alarm_pos >= 0:
                earliest = min(earliest, alarm_pos - onset)
    seconds = time.perf_counter() - t0
    ok = earliest == 12 and seconds < 1.0
    verdict(6, "detection-delay lower bound", ok,
            f"earliest alarm at onset + {earliest} samples (bound 12)", seconds)


def test_criterion_07_leak_model_consistency(verdict):
    t0 = time.perf_counter()
    worst = max(abs(simulate.leak_factor_exact(q, l) - two_segment_factor(q, l))
                for q in np.linspace(0.0, 0.5, 50) for l in np.linspace(0.01, 0.99, 50))
    spec = simulate.PipelineSpec()
    frame = simulate.synth_stream(spec, 40, simulate.OperatingProfile.constant(),
                                  simulate.NoiseModel.none(), seed=0)
    stream = simulate.inject_leak(frame, spec, simulate.LeakScenario(0.0, 0.5))
    p_out = float(stream[dataio.OUTLET_PRESSURE].iloc[-1])
    seconds = time.perf_counter() - t0
    ok = worst <= 1e-6 and abs(p_out - 1269.96) < 1.0 and seconds < 1.0
    verdict(7, "leak-model consistency", ok,
            f"max factor gap {worst:.1e} on 50x50 grid; outlet pressure {p_out:.2f} psia "
            f"vs 1269.96", seconds)


def test_criterion_08_localization(noiseless_sweeps, verdict):
    frags, sweep_seconds = noiseless_sweeps
    t0 = time.perf_counter()
    ok, parts = detect.localize(0.37, 0.37) == 0.5, []
    for family, frag in frags.items():
        err = bench.localization_error(frag)
        for size in (0.05, 0.1):
            ok &= err[size] is not None and err[size] <= 25.0
        parts.append(f"{family} 5%={err[0.05]:.1f} 10%={err[0.1]:.1f}"
                     if None not in (err[0.05], err[0.1]) else f"{family} n/a")
    seconds = sweep_seconds + time.perf_counter() - t0
    ok &= seconds < 300
    verdict(8, "localization", ok, "mean error %: " + "; ".join(parts), seconds)


def test_criterion_09_monotonicity(observers, noiseless_sweeps, verdict):
    frags, _ = noiseless_sweeps
    t0 = time.perf_counter()
    idx = [detect.leak_index(a) for a in range(0, 1001)]
    index_ok = all(x < y for x, y in zip(idx, idx[1:]))
    time_ok, parts = True, []
    for family, frag in frags.items():
        times = [frag.censored_mean(s) for s in sorted(frag.grid.sizes)]
        time_ok &= all(a >= b for a, b in zip(times, times[1:]))
        parts.append(f"{family} " + "/".join(f"{t:.0f}" for t in times))
    stream = simulate.synth_stream(duration_samples=3000, seed=9)
    flags_ok = True
    for family in M.FAMILIES:
        r = np.abs(stream[dataio.FLOWRATE].to_numpy()
                   - observers.outlet[family].predict_frame(stream))
        counts = [int((r > t).sum()) for t in np.linspace(0.001, 0.1, 40)]
        flags_ok &= all(a >= b for a, b in zip(counts, counts[1:]))
    seconds = time.perf_counter() - t0
    ok = index_ok and time_ok and flags_ok and seconds < 60
    verdict(9, "monotonicity", ok,
            f"leak index {'increasing' if index_ok else 'NOT increasing'}; "
            f"flag counts {'anti-monotone' if flags_ok else 'NOT anti-monotone'}; "
            "censored minutes by size " + ", ".join(parts), seconds)


def test_criterion_10_reproducibility(observers, training_stream, noiseless_sweeps, verdict):
    frags, _ = noiseless_sweeps
    t0 = time.perf_counter()
    models_ok = True
    for family, first in observers.inlet.items():
        fixed = {k: [v] for k, v in observers.outlet[family].params.items()
                 if k in M.QUICK_GRIDS[family]}
        second = M.train_observer(training_stream, family, grid=fixed,
                                  target=dataio.INLET_FLOWRATE, k=None)
        models_ok &= M.model_to_bytes(second) == M.model_to_bytes(first)

    def stream_bytes():
        buf = io.StringIO()
        dataio.write_telemetry(simulate.synth_stream(duration_samples=21000, seed=1), buf)
        return buf.getvalue()

    streams_ok = stream_bytes() == stream_bytes()
    grid = frags["decision_tree"].grid
    again = {f: bench.run_sweep(observers.outlet[f], grid, inlet_model=observers.inlet[f], name=f)
             for f in M.FAMILIES}
    ranks_a, ranks_b = bench.sarr_rank(list(frags.values())), bench.sarr_rank(list(again.values()))
    reports_ok = (bench.render_text(list(frags.values()), ranks_a)
                  == bench.render_text(list(again.values()), ranks_b)
                  and bench.render_kv(list(frags.values()), ranks_a)
                  == bench.render_kv(list(again.values()), ranks_b)
                  and bench.render_cells_csv(list(frags.values()))
                  == bench.render_cells_csv(list(again.values())))
    seconds = time.perf_counter() - t0
    ok = models_ok and streams_ok and reports_ok and seconds < 600
    verdict(10, "reproducibility", ok,
            f"models {'identical' if models_ok else 'DIFFER'}, streams "
            f"{'identical' if streams_ok else 'DIFFER'}, reports "
            f"{'identical' if reports_ok else 'DIFFER'}", seconds)
