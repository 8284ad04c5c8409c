"""Reset protocols, sweeps, scans, and the population estimator."""

import math

import numpy as np
import pytest

from qarsim import (
    BathConfig,
    BudgetError,
    ConfigurationError,
    DeviceParams,
    DriveSpec,
    ExperimentSpec,
    NoResetError,
    TraceResult,
    approach_time,
    make_space,
    rabi_population_estimate,
    reset_time,
    run_avoided_crossing_scan,
    run_drive_rate_sweep,
    run_reset_time_sweep,
    run_reset_trace,
    run_residual_init_trace,
    steady_state_population_sweep,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def params():
    return DeviceParams.default()


@pytest.fixture(scope="module")
def hot_trace(params):
    spec = ExperimentSpec(
        kind="reset_trace",
        params=params,
        baths=BathConfig(n_hot=21.424),
        initial_p1=0.95,
        times=tuple(np.linspace(0.0, 5e-6, 2001)),
    )
    return run_reset_trace(spec)


def test_spec_validation_rejects_unknown_fields_and_kinds(params):
    with pytest.raises(ConfigurationError):
        ExperimentSpec(kind="ramsey", params=params)
    with pytest.raises(ConfigurationError):
        ExperimentSpec(kind="reset_trace", params=params, times=(0.0, 1e-6), model="monte_carlo")
    with pytest.raises(ConfigurationError):
        ExperimentSpec(kind="reset_trace", params=params, times=(0.0, 1e-6), initial_p1=1.5)
    with pytest.raises(ConfigurationError):
        ExperimentSpec(kind="reset_trace", params=params)  # missing times
    with pytest.raises(ConfigurationError):
        ExperimentSpec(kind="reset_time_sweep", params=params)  # missing n_hot grid


def test_hot_reset_trace_hits_frozen_checkpoints(params, hot_trace):
    # [DERIVED] projected initial state and the decayed population at 1.6 us
    assert hot_trace.p1[0] == pytest.approx(0.9496578, abs=2e-6)
    k = int(np.argmin(np.abs(hot_trace.times - 1.6e-6)))
    assert hot_trace.times[k] == pytest.approx(1.6e-6, abs=1e-12)
    assert hot_trace.p1[k] == pytest.approx(1.265405e-3, rel=1e-4)
    assert reset_time(hot_trace) == pytest.approx(1.06172e-6, rel=1e-3)


def test_trace_populations_are_normalized(hot_trace):
    # the coherence quadrature rides along in the same dict; skip it
    total = sum(
        np.asarray(v) for k, v in hot_trace.populations.items() if k.startswith("p")
    )
    assert np.allclose(total, 1.0, atol=1e-8)


def test_rate_and_lindblad_traces_agree_at_the_hot_point(params):
    times = tuple(np.linspace(0.0, 2e-6, 101))
    base = dict(params=params, baths=BathConfig(n_hot=21.424), initial_p1=0.95, times=times)
    rate = run_reset_trace(ExperimentSpec(kind="reset_trace", model="rate", **base))
    lind = run_reset_trace(ExperimentSpec(kind="reset_trace", model="lindblad", **base))
    assert np.max(np.abs(rate.p1 - lind.p1)) < 1e-2


def test_reset_time_interpolates_between_samples():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    p1 = np.array([0.5, 0.3, 0.005, 0.001])
    trace = TraceResult(times=times, p1=p1, populations={}, metadata={})
    t = reset_time(trace, threshold=0.01)
    # crossing sits between samples 1 and 2
    assert 1.0 < t < 2.0
    assert t == pytest.approx(1.0 + (0.3 - 0.01) / (0.3 - 0.005))


def test_reset_time_raises_when_already_below_threshold(hot_trace):
    with pytest.raises(NoResetError) as err:
        reset_time(hot_trace, threshold=1.0)
    assert err.value.final_p1 == pytest.approx(float(hot_trace.p1[-1]))


def test_reset_time_raises_when_threshold_is_never_reached(params):
    spec = ExperimentSpec(
        kind="reset_trace",
        params=params,
        baths=BathConfig(n_hot=21.424),
        times=tuple(np.linspace(0.0, 1e-7, 50)),
    )
    with pytest.raises(NoResetError):
        reset_time(run_reset_trace(spec))


def test_looser_thresholds_are_reached_sooner(hot_trace):
    assert reset_time(hot_trace, threshold=0.02) < reset_time(hot_trace, threshold=0.01)


def test_approach_time_tracks_the_settling_band():
    times = np.linspace(0.0, 1.0, 101)
    p1 = 0.5 * np.exp(-10.0 * times)
    trace = TraceResult(times=times, p1=p1, populations={}, metadata={})
    t90 = approach_time(trace, 0.0, fraction=0.1)
    assert t90 == pytest.approx(math.log(10.0) / 10.0, rel=1e-3)
    with pytest.raises(NoResetError):
        approach_time(trace, 0.0, fraction=1e-9)


def test_drive_sweep_orders_traces_by_rabi_rate(params):
    rates = (0.0, TWO_PI * 0.2e6, TWO_PI * 0.5e6, TWO_PI * 1e6)
    spec = ExperimentSpec(
        kind="drive_rate_sweep",
        params=params,
        model="lindblad",
        drive=DriveSpec(params.omega1, 0.0, 2e-6),
        rabi_rates=rates,
        initial_p1=1.0,
        times=tuple(np.linspace(0.0, 2e-6, 201)),
    )
    traces = run_drive_rate_sweep(spec)
    assert len(traces) == 4
    at_1us = []
    for trace in traces:
        k = int(np.argmin(np.abs(trace.times - 1e-6)))
        at_1us.append(float(trace.p1[k]))
    # [DERIVED] frozen depletion levels after 1 us of driving
    expected = (0.9422131, 0.8764509, 0.5949603, 0.1320026)
    for got, want in zip(at_1us, expected):
        assert got == pytest.approx(want, rel=1e-4)
    assert all(b < a for a, b in zip(at_1us, at_1us[1:]))


def test_scan_budget_guard(params):
    spec = ExperimentSpec(
        kind="avoided_crossing_scan",
        params=params,
        model="lindblad",
        drive_detunings=tuple(TWO_PI * np.linspace(-6e6, 6e6, 200)),
        omega2_offsets=tuple(TWO_PI * np.linspace(-12e6, 12e6, 200)),
        max_grid_points=1000,
    )
    with pytest.raises(BudgetError):
        run_avoided_crossing_scan(spec)


def test_scan_is_symmetric_under_qutrit_offset_flip(params):
    offsets = (-TWO_PI * 10e6, 0.0, TWO_PI * 10e6)
    spec = ExperimentSpec(
        kind="avoided_crossing_scan",
        params=params,
        model="lindblad",
        drive_detunings=(0.0,),
        omega2_offsets=offsets,
        initial_p1=1.0,
    )
    scan = run_avoided_crossing_scan(spec)
    assert scan.p1.shape == (1, 3)
    left, center, right = scan.p1[0]
    assert left == pytest.approx(right, rel=1e-9)
    # [DERIVED] frozen values of the resonant protocol
    assert center == pytest.approx(0.7589489, rel=1e-4)
    assert left == pytest.approx(0.7489969, rel=1e-4)


def test_reset_time_sweep_marks_unreachable_points_with_nan(params):
    spec = ExperimentSpec(
        kind="reset_time_sweep",
        params=params,
        n_hot_values=(0.05, 21.424),
        times=tuple(np.linspace(0.0, 20e-6, 2001)),
    )
    result = run_reset_time_sweep(spec)
    assert math.isnan(result.reset_times[0])  # steady state sits above threshold
    assert result.reset_times[1] == pytest.approx(1.06172e-6, rel=2e-3)
    assert result.metadata["argmin_n_hot"] == pytest.approx(21.424)
    assert result.metadata["min_reset_time_s"] == pytest.approx(result.reset_times[1])


def test_steady_state_sweep_reports_both_definitions(params):
    spec = ExperimentSpec(
        kind="steady_state_sweep",
        params=params,
        n_hot_values=(0.1, 1.0, 10.0, 21.424),
        n_cold_values=(0.0,),
    )
    sweep = steady_state_population_sweep(spec)
    assert sweep.p_kernel.shape == (1, 4)
    # pumping harder always helps over this range
    kernel = sweep.p_kernel[0]
    assert all(b < a for a, b in zip(kernel, kernel[1:]))
    assert kernel[-1] == pytest.approx(4.304910e-4, rel=1e-3)
    # the operational (finite hold) definition tracks the kernel one
    assert np.max(np.abs(sweep.p_operational - sweep.p_kernel)) < 1e-4


def test_residual_init_trace_settles_into_the_pumped_floor(params):
    spec = ExperimentSpec(
        kind="residual_init_trace",
        params=params,
        baths=BathConfig(n_hot=21.424),
        initial_p1=0.028,
        times=tuple(np.linspace(0.0, 10e-6, 1001)),
    )
    trace = run_residual_init_trace(spec)
    assert trace.p1[0] == pytest.approx(0.028, abs=1e-3)
    p_ss = float(trace.p1[-1])
    assert p_ss < 1e-3
    t90 = approach_time(trace, p_ss, fraction=0.1)
    assert 0.3e-6 < t90 < 0.8e-6


def test_rabi_population_estimate_is_exact_without_double_occupation():
    est = rabi_population_estimate(0.7, 0.3, 0.0)
    assert est.p1_hat == pytest.approx(0.3, abs=1e-15)
    # double occupation biases the estimate upward
    biased = rabi_population_estimate(0.6, 0.3, 0.1)
    assert biased.p1_hat == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert biased.p1_hat > 0.3


def test_rabi_population_estimate_validation():
    with pytest.raises(ConfigurationError):
        rabi_population_estimate(-0.1, 0.6, 0.5)
    with pytest.raises(ConfigurationError):
        rabi_population_estimate(0.5, 0.4, 0.2)  # sums to 1.1
    with pytest.raises(ConfigurationError):
        rabi_population_estimate(0.0, 0.0, 1.0)
