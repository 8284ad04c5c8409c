"""Parameter recovery from simulated traces."""

import math
import warnings

import numpy as np
import pytest

from qarsim import (
    BathConfig,
    ConfigurationError,
    DeviceParams,
    DriveSpec,
    ExperimentSpec,
    FitError,
    FitProblem,
    FreeParameter,
    fit_trace,
    load_trace_csv,
    profile_loss,
    run_reset_trace,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="module")
def params():
    return DeviceParams.default()


def hot_trace_data(params, n_hot=21.424, n_points=81, t_stop=4e-6):
    times = tuple(np.linspace(0.0, t_stop, n_points))
    spec = ExperimentSpec(
        kind="reset_trace",
        params=params,
        baths=BathConfig(n_hot=n_hot),
        initial_p1=0.95,
        times=times,
    )
    trace = run_reset_trace(spec)
    return spec, times, tuple(float(v) for v in trace.p1)


def test_free_parameter_validation():
    FreeParameter("n_hot", 10.0, 0.1, 100.0)
    with pytest.raises(ConfigurationError):
        FreeParameter("detuning", 0.0, -1.0, 1.0)  # not a known name
    with pytest.raises(ConfigurationError):
        FreeParameter("n_hot", 10.0, 20.0, 5.0)  # inverted bounds
    with pytest.raises(ConfigurationError):
        FreeParameter("n_hot", 200.0, 0.1, 100.0)  # guess outside the box
    with pytest.raises(ConfigurationError):
        FreeParameter("n_hot", 0.5, -1.0, 100.0, log_scale=True)
    # positive lower bound switches log scaling on automatically
    assert FreeParameter("n_hot", 10.0, 0.1, 100.0).log_scale is True
    assert FreeParameter("initial_p1", 0.5, 0.0, 1.0).log_scale is False


def test_fit_problem_validation(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    free = (FreeParameter("n_hot", 10.0, 0.1, 100.0),)
    FitProblem(spec, free, times, values)
    with pytest.raises(ConfigurationError):
        FitProblem(spec, free, times, values[:-1])
    with pytest.raises(ConfigurationError):
        FitProblem(spec, free, times, values, sigmas=(0.0,) * len(values))
    with pytest.raises(ConfigurationError):
        FitProblem(spec, free + free, times, values)  # duplicate name
    with pytest.raises(ConfigurationError):
        FitProblem(spec, free, times[:1], values[:1])  # too few points
    with pytest.raises(FitError):
        FitProblem(spec, free, times, (0.5,) * len(times))  # zero variance


def test_zero_free_parameters_converges_at_the_initial_loss(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    problem = FitProblem(spec, (), times, values)
    result = fit_trace(problem)
    assert result.converged
    assert result.loss == pytest.approx(result.initial_loss)
    assert result.loss < 1e-18
    assert result.params == {}


def test_noiseless_exchange_rate_recovery(params):
    spec, times, values = hot_trace_data(params)
    true_value = params.three_body_rate
    free = (FreeParameter("three_body_rate", 2.0 * true_value, 0.05 * true_value,
                          20.0 * true_value),)
    problem = FitProblem(spec, free, times, values)
    result = fit_trace(problem)
    assert result.converged
    recovered = result.params["three_body_rate"]
    assert abs(recovered - true_value) / true_value < 0.01
    assert result.loss <= result.initial_loss
    assert result.loss < 1e-12


def test_noiseless_hot_occupation_recovery_from_doubled_guess(params):
    spec, times, values = hot_trace_data(params, n_hot=5.0)
    free = (FreeParameter("n_hot", 10.0, 0.05, 200.0),)
    result = fit_trace(FitProblem(spec, free, times, values))
    assert result.converged
    assert result.params["n_hot"] == pytest.approx(5.0, rel=0.01)


def test_hot_occupation_recovery_under_measurement_noise(params):
    spec, times, clean = hot_trace_data(params, n_hot=5.0)
    rng = np.random.default_rng(0)
    y = np.asarray(clean) * (1.0 + 0.01 * rng.standard_normal(len(clean)))
    sigmas = tuple(0.01 * abs(v) + 1e-6 for v in clean)
    free = (FreeParameter("n_hot", 10.0, 0.05, 200.0),)
    problem = FitProblem(spec, free, times, tuple(y), sigmas=sigmas)
    result = fit_trace(problem)
    assert result.converged
    assert result.params["n_hot"] == pytest.approx(5.0, rel=0.05)
    # uncertainty should be small but nonzero under real noise
    assert 0.0 < result.uncertainties["n_hot"] < 0.5


def test_driven_trace_recovers_the_exchange_rate(params):
    # slow protocol: one lindblad solve per loss evaluation
    times = tuple(np.linspace(0.0, 1.5e-6, 31))
    spec = ExperimentSpec(
        kind="drive_rate_sweep",
        params=params,
        model="lindblad",
        drive=DriveSpec(params.omega1, TWO_PI * 1e6, 1.5e-6),
        rabi_rates=(TWO_PI * 1e6,),
        initial_p1=1.0,
        times=times,
    )
    from qarsim import run_drive_rate_sweep

    truth = run_drive_rate_sweep(spec)[0]
    free = (FreeParameter("three_body_rate", TWO_PI * 2e6, TWO_PI * 0.3e6, TWO_PI * 30e6),)
    problem = FitProblem(spec, free, times, tuple(float(v) for v in truth.p1))
    result = fit_trace(problem)
    assert result.converged
    assert result.params["three_body_rate"] / TWO_PI == pytest.approx(3.2e6, rel=0.01)


def test_fit_problem_rejects_unsorted_times(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    free = (FreeParameter("n_hot", 10.0, 0.1, 100.0),)
    perm = np.random.default_rng(3).permutation(len(times))
    with pytest.raises(ConfigurationError):
        FitProblem(spec, free, tuple(times[i] for i in perm), tuple(values[i] for i in perm))


def test_sigma_weights_rescale_the_loss(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    free = (FreeParameter("n_hot", 10.0, 0.1, 100.0),)
    plain = FitProblem(spec, free, times, values)
    weighted = FitProblem(spec, free, times, values, sigmas=(0.5,) * len(values))
    assert np.allclose(weighted.weights(), 4.0)
    assert np.allclose(plain.weights(), 1.0)


def test_profile_is_locally_convex_around_the_minimum(params):
    spec, times, values = hot_trace_data(params, n_hot=5.0, n_points=41, t_stop=3e-6)
    free = (FreeParameter("n_hot", 5.0, 0.05, 200.0),)
    problem = FitProblem(spec, free, times, values)
    pairs = profile_loss(problem, "n_hot", (4.0, 5.0, 6.0))
    assert [v for v, _ in pairs] == [4.0, 5.0, 6.0]
    losses = [l for _, l in pairs]
    assert losses[1] < losses[0]
    assert losses[1] < losses[2]


def test_flat_profile_warns_about_unidentifiable_parameters(params):
    # with the cold coupling off, the cold occupation cannot matter
    dead_cold = params.replace(gamma2=0.0)
    times = tuple(np.linspace(0.0, 2e-6, 21))
    spec = ExperimentSpec(
        kind="reset_trace",
        params=dead_cold,
        baths=BathConfig(n_hot=21.424),
        model="lindblad",
        initial_p1=0.95,
        times=times,
    )
    trace_values = tuple(float(v) for v in run_reset_trace(spec).p1)
    free = (FreeParameter("n_cold", 0.5, 0.01, 5.0),)
    problem = FitProblem(spec, free, times, trace_values)
    with pytest.warns(UserWarning, match="unidentifiable"):
        profile_loss(problem, "n_cold", (0.1, 0.5, 2.0))


def test_profile_rejects_unknown_or_out_of_bounds_values(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    free = (FreeParameter("n_hot", 10.0, 0.1, 100.0),)
    problem = FitProblem(spec, free, times, values)
    with pytest.raises(ConfigurationError):
        profile_loss(problem, "gamma1", (1.0, 2.0))
    with pytest.raises(ConfigurationError):
        profile_loss(problem, "n_hot", (1000.0,))


def test_fit_result_serializes_to_plain_types(params):
    spec, times, values = hot_trace_data(params, n_points=21, t_stop=2e-6)
    free = (FreeParameter("n_hot", 20.0, 0.1, 100.0),)
    result = fit_trace(FitProblem(spec, free, times, values), max_iterations=200)
    payload = result.to_dict()
    assert set(payload) >= {"params", "uncertainties", "loss", "converged", "message"}
    assert isinstance(payload["params"]["n_hot"], float)
    assert isinstance(payload["converged"], bool)


def test_load_trace_csv_round_trip(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("time_s,value,sigma\n0.0,0.95,0.01\n1e-6,0.5,0.01\n2e-6,0.1,0.02\n")
    times, values, sigmas = load_trace_csv(path)
    assert np.allclose(times, (0.0, 1e-6, 2e-6))
    assert np.allclose(values, (0.95, 0.5, 0.1))
    assert np.allclose(sigmas, (0.01, 0.01, 0.02))
    bare = tmp_path / "bare.csv"
    bare.write_text("0.0,0.95\n1e-6,0.5\n")
    times2, values2, sigmas2 = load_trace_csv(bare)
    assert sigmas2 is None
    assert np.allclose(values2, (0.95, 0.5))


def test_load_trace_csv_rejects_malformed_files(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("0.0,0.95\n1e-6,0.5,0.01\n")
    with pytest.raises(FitError):
        load_trace_csv(ragged)
    wordy = tmp_path / "wordy.csv"
    wordy.write_text("time_s,value\n0.0,hello\n")
    with pytest.raises(FitError):
        load_trace_csv(wordy)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(FitError):
        load_trace_csv(empty)
