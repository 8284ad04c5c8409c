"""Bundled device protocols and their summary numbers."""

import math

import numpy as np
import pytest

from qarsim import ConfigurationError, PRESET_NAMES, list_presets, run_preset


def column(result, artifact_name, col):
    for artifact in result.artifacts:
        if artifact.name == artifact_name:
            return artifact.column(col)
    raise AssertionError(f"no artifact named {artifact_name}")


def test_registry_lists_every_preset_with_a_description():
    listing = dict(list_presets())
    assert set(listing) == set(PRESET_NAMES)
    assert set(PRESET_NAMES) == {
        "fig2b",
        "fig2c",
        "fig3b",
        "fig4a",
        "fig4b_hot",
        "fig4b_cold",
        "figS3",
        "figS4",
        "cop_table",
    }
    for name, description in listing.items():
        assert description.strip(), name
        assert "\n" not in description


def test_unknown_preset_name_raises():
    with pytest.raises(ConfigurationError):
        run_preset("fig9z")


def test_fig3b_reset_traces():
    result = run_preset("fig3b")
    by_n = result.info["by_n_hot"]
    assert set(by_n) == {"0.16", "1.04", "21.424"}
    # stronger pumping always leaves less residual population
    finals = [by_n[k]["p1_final"] for k in ("0.16", "1.04", "21.424")]
    assert finals[0] > finals[1] > finals[2]
    assert by_n["21.424"]["reset_time_s"] == pytest.approx(1.06172e-6, rel=1e-3)
    # the weakly pumped traces do not cross the threshold inside the window
    assert by_n["0.16"]["reset_time_s"] is None
    n_col = column(result, "reset_traces", "n_hot")
    assert sorted(set(n_col)) == [0.16, 1.04, 21.424]


def test_fig2c_depletion_deepens_with_drive_amplitude():
    result = run_preset("fig2c")
    levels = result.info["p1_at_1us_by_rabi_hz"]
    keys = sorted(levels, key=float)
    values = [levels[k] for k in keys]
    assert [float(k) for k in keys] == [0.0, 200e3, 500e3, 1e6]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(0.9422131, rel=1e-4)
    assert values[-1] == pytest.approx(0.1320026, rel=1e-4)


def test_fig4a_minimum_reset_time():
    result = run_preset("fig4a")
    assert 0.5e-6 < result.info["min_reset_time_s"] < 2.0e-6
    assert result.info["min_reset_time_s"] == pytest.approx(9.6403e-7, rel=1e-3)
    assert result.info["argmin_n_hot"] == pytest.approx(43.581, rel=1e-3)
    values = np.array(column(result, "reset_times", "reset_time_s"), dtype=float)
    n_hot = np.array(column(result, "reset_times", "n_hot"), dtype=float)
    # too little pumping never reaches the threshold
    assert math.isnan(values[0])
    finite = np.isfinite(values)
    assert np.nanmin(values) == pytest.approx(result.info["min_reset_time_s"])
    assert n_hot[np.nanargmin(values)] == pytest.approx(result.info["argmin_n_hot"])
    assert finite.sum() >= 20


def test_fig4b_hot_sweep_curves():
    result = run_preset("fig4b_hot")
    p = np.array(column(result, "steady_state_vs_hot", "p_kernel"), dtype=float)
    n_cold = np.array(column(result, "steady_state_vs_hot", "n_cold"), dtype=float)
    n_hot = np.array(column(result, "steady_state_vs_hot", "n_hot"), dtype=float)
    clean = p[n_cold == 0.0]
    hot_axis = n_hot[n_cold == 0.0]
    order = np.argsort(hot_axis)
    clean = clean[order]
    hot_axis = hot_axis[order]
    # improvement with pumping up to an optimum, then slight overheating
    k = int(np.argmin(clean))
    assert 0 < k < len(clean) - 1
    assert 20.0 < hot_axis[k] < 70.0
    assert all(b < a for a, b in zip(clean[: k + 1], clean[1 : k + 1]))
    assert all(b > a for a, b in zip(clean[k:], clean[k + 1 :]))
    assert clean[k] < 5e-4
    # a populated cold bath always hurts
    warm = p[n_cold > 0.0][np.argsort(n_hot[n_cold > 0.0])]
    assert np.all(warm > clean)


def test_fig4b_cold_sweep_curves():
    result = run_preset("fig4b_cold")
    p = np.array(column(result, "steady_state_vs_cold", "p_kernel"), dtype=float)
    n_hot = np.array(column(result, "steady_state_vs_cold", "n_hot"), dtype=float)
    n_cold = np.array(column(result, "steady_state_vs_cold", "n_cold"), dtype=float)
    for hot_value in np.unique(n_hot):
        mask = n_hot == hot_value
        curve = p[mask][np.argsort(n_cold[mask])]
        assert all(b > a for a, b in zip(curve, curve[1:]))


def test_figS3_saturation_with_cold_bath_occupation():
    result = run_preset("figS3")
    p = np.array(column(result, "saturation_vs_cold", "p_kernel"), dtype=float)
    n_cold = np.array(column(result, "saturation_vs_cold", "n_cold"), dtype=float)
    order = np.argsort(n_cold)
    curve = p[order]
    # steep rise at small occupations, then a plateau
    assert all(b > a for a, b in zip(curve[:7], curve[1:7]))
    peak = float(np.max(curve))
    assert peak == pytest.approx(0.28233, rel=1e-3)
    assert curve[-1] > 0.95 * peak
    assert curve[0] < 1e-3


def test_figS4_residual_initial_states():
    result = run_preset("figS4")
    traces = result.info["traces"]
    assert len(traces) == 6
    hot = [t for t in traces if t["n_hot"] == 21.424]
    assert len(hot) == 2
    for t in hot:
        assert 0.3e-6 < t["t_approach_90_s"] < 0.8e-6
        assert t["p_ss"] == pytest.approx(4.3049e-4, rel=1e-3)
        assert t["t_within_10pct_of_pss_s"] > t["t_approach_90_s"]
    weak = [t for t in traces if t["n_hot"] == 0.16]
    # the weak pump cannot settle inside the window
    assert all(t["t_approach_90_s"] is None for t in weak)


def test_cop_table_performance_numbers():
    result = run_preset("cop_table")
    artifact = result.artifacts[0]
    rows = {(model, quantity): value for model, quantity, value, _unit in artifact.rows}
    for model in ("lindblad", "rate"):
        cop_value = rows[(model, "cop")]
        carnot_value = rows[(model, "carnot_cop")]
        assert cop_value == pytest.approx(0.699268, rel=1e-4)
        assert cop_value < carnot_value
        assert rows[(model, "first_law_residual")] < 1e-8
        assert rows[(model, "q_dot_cold")] < 0 < rows[(model, "q_dot_hot")]
        # target cooled below both bath temperatures
        assert 0.020 < rows[(model, "t_target_k")] < 0.045
    # both routes deliver the same machine to within a tenth of a percent
    assert rows[("rate", "p_ss")] == pytest.approx(rows[("lindblad", "p_ss")], rel=1e-3)


def test_model_override_is_rejected_where_it_cannot_apply():
    with pytest.raises(ConfigurationError):
        run_preset("fig2b", model="rate")
