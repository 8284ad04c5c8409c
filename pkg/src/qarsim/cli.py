"""Batch front door: validated JSON configs in, CSV/JSON/SVG artifacts out.

Config schema "qarsim-run/1" (strict; unknown keys are rejected):

    {
      "schema": "qarsim-run/1",
      "device": {"omega2_hz": ..., "gamma1_hz": ..., ...},       # optional overrides
      "preset": "fig3b",                # exactly one of preset / experiment
      "experiment": {"kind": "reset_trace", ...},
      "output": {"directory": "out", "formats": ["csv", "json"], "seed": 0}
    }

Frequencies are given in Hz and converted to rad/s internally; times are in
seconds. Exit codes: 0 success, 2 unreadable config, 3 validation error,
4 simulation error, 5 fit non-convergence.
"""

from __future__ import annotations

import json
import os
import platform
import sys
import time
from typing import Optional

import click
import numpy as np
import scipy

from .errors import (
    BudgetError,
    ConfigurationError,
    DegenerateSteadyStateError,
    DimensionError,
    FitError,
    IntegrationError,
    NoResetError,
    StaleStateError,
    StateInvariantError,
    ThermodynamicsError,
)
from .experiments import ExperimentSpec
from .model import DeviceParams, DriveSpec
from .output import render_svg, write_csv, write_json
from .presets import PRESET_NAMES, device_info, list_presets, run_experiment, run_preset
from .thermo import BathConfig

SCHEMA_ID = "qarsim-run/1"
TWO_PI = 2.0 * np.pi

_SIMULATION_ERRORS = (
    IntegrationError,
    StateInvariantError,
    StaleStateError,
    DegenerateSteadyStateError,
    BudgetError,
    NoResetError,
    ThermodynamicsError,
)

_TOP_KEYS = {"schema", "device", "preset", "experiment", "output"}
_DEVICE_HZ_FIELDS = {
    "omega1_hz": "omega1",
    "omega2_hz": "omega2",
    "omega3_hz": "omega3",
    "alpha1_hz": "alpha1",
    "alpha2_hz": "alpha2",
    "alpha3_hz": "alpha3",
    "gamma1_hz": "gamma1",
    "gamma2_hz": "gamma2",
    "three_body_rate_hz": "three_body_rate",
}
_DEVICE_PLAIN_FIELDS = {
    "t_relax_s": "t_relax",
    "n_res1": "n_res1",
    "n_res2": "n_res2",
    "n_res3": "n_res3",
}
_DEVICE_KEYS = set(_DEVICE_HZ_FIELDS) | set(_DEVICE_PLAIN_FIELDS)
_EXPERIMENT_KEYS = {
    "kind", "model", "variant", "dims", "baths", "drive", "initial_p1",
    "times_s", "n_hot_values", "n_cold_values", "rabi_rates_hz",
    "drive_detunings_hz", "omega2_offsets_hz", "threshold",
    "max_grid_points", "integrator", "rtol", "detuning_convention",
}
_BATH_KEYS = {"n_hot", "n_cold"}
_DRIVE_KEYS = {"omega_drive_hz", "rabi_rate_hz", "duration_s"}
_TIMES_KEYS = {"start_s", "stop_s", "num"}
_OUTPUT_KEYS = {"directory", "formats", "seed"}
_FORMATS = ("csv", "json", "svg")


def _require_mapping(obj, allowed: set, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{path} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {unknown}")
    return obj


def _device_from_config(section) -> DeviceParams:
    base = DeviceParams.default()
    if section is None:
        return base
    _require_mapping(section, _DEVICE_KEYS, "device")
    updates = {}
    for key, dest in _DEVICE_HZ_FIELDS.items():
        if key in section:
            updates[dest] = TWO_PI * float(section[key])
    for key, dest in _DEVICE_PLAIN_FIELDS.items():
        if key in section:
            updates[dest] = float(section[key])
    return base.replace(**updates)


def _times_from_config(value) -> tuple[float, ...]:
    if isinstance(value, dict):
        _require_mapping(value, _TIMES_KEYS, "experiment.times_s")
        missing = _TIMES_KEYS - set(value)
        if missing:
            raise ConfigurationError(f"experiment.times_s: missing keys {sorted(missing)}")
        num = int(value["num"])
        if num < 1:
            raise ConfigurationError("experiment.times_s.num must be >= 1")
        return tuple(np.linspace(float(value["start_s"]), float(value["stop_s"]), num))
    if isinstance(value, list):
        return tuple(float(v) for v in value)
    raise ConfigurationError("experiment.times_s must be a list or a linspace object")


def _spec_from_config(section, params: DeviceParams,
                      model: Optional[str], variant: Optional[str]) -> ExperimentSpec:
    _require_mapping(section, _EXPERIMENT_KEYS, "experiment")
    if "kind" not in section:
        raise ConfigurationError("experiment.kind is required")
    kwargs = {"kind": section["kind"], "params": params}
    if "baths" in section:
        baths = _require_mapping(section["baths"], _BATH_KEYS, "experiment.baths")
        kwargs["baths"] = BathConfig(**{k: float(v) for k, v in baths.items()})
    if "drive" in section:
        drive = _require_mapping(section["drive"], _DRIVE_KEYS, "experiment.drive")
        missing = _DRIVE_KEYS - set(drive)
        if missing:
            raise ConfigurationError(f"experiment.drive: missing keys {sorted(missing)}")
        kwargs["drive"] = DriveSpec(
            omega_drive=TWO_PI * float(drive["omega_drive_hz"]),
            rabi_rate=TWO_PI * float(drive["rabi_rate_hz"]),
            duration=float(drive["duration_s"]),
        )
    if "times_s" in section:
        kwargs["times"] = _times_from_config(section["times_s"])
    for key in ("initial_p1", "threshold", "rtol"):
        if key in section:
            kwargs[key] = float(section[key])
    if "max_grid_points" in section:
        kwargs["max_grid_points"] = int(section["max_grid_points"])
    if "dims" in section:
        kwargs["dims"] = tuple(int(d) for d in section["dims"])
    for key in ("integrator", "detuning_convention"):
        if key in section:
            kwargs[key] = str(section[key])
    for cfg_key, field_name, scale in (
        ("n_hot_values", "n_hot_values", 1.0),
        ("n_cold_values", "n_cold_values", 1.0),
        ("rabi_rates_hz", "rabi_rates", TWO_PI),
        ("drive_detunings_hz", "drive_detunings", TWO_PI),
        ("omega2_offsets_hz", "omega2_offsets", TWO_PI),
    ):
        if cfg_key in section:
            values = section[cfg_key]
            if not isinstance(values, list):
                raise ConfigurationError(f"experiment.{cfg_key} must be a list")
            kwargs[field_name] = tuple(scale * float(v) for v in values)
    kwargs["model"] = model or section.get("model", "rate")
    kwargs["variant"] = variant or section.get("variant", "derived_decoherence")
    return ExperimentSpec(**kwargs)


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("qarsim")
    except Exception:
        return "unknown"


@click.group()
def main():
    """Simulator and analysis toolkit for a three-qudit reset refrigerator."""


@main.command(name="list-presets")
def list_presets_command():
    """Print available preset names with one-line descriptions."""
    for name, description in list_presets().items():
        click.echo(f"{name}: {description}")


@main.command()
@click.argument("config", type=click.Path())
@click.option("--out", default=None, help="Output directory (default: config, then "
                                          "QARSIM_OUT, then ./qarsim-out).")
@click.option("--jobs", type=int, default=None, help="Sweep parallelism (default: CPUs).")
@click.option("--format", "formats_flag", default=None,
              help="Comma-separated subset of csv,json,svg.")
@click.option("--model", type=click.Choice(["lindblad", "rate"]), default=None)
@click.option("--variant", type=click.Choice(["derived_decoherence", "as_printed"]),
              default=None)
@click.option("--seed", type=int, default=None, help="Seed recorded for fit restarts.")
def run(config, out, jobs, formats_flag, model, variant, seed):
    """Execute the run described by CONFIG and write its artifacts."""
    started = time.perf_counter()
    try:
        with open(config, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        _fail(2, f"cannot read config {config!r}: {exc}")

    preset_name = None
    spec = None
    try:
        _require_mapping(raw, _TOP_KEYS, "config")
        if raw.get("schema") != SCHEMA_ID:
            raise ConfigurationError(
                f"schema must be {SCHEMA_ID!r}, got {raw.get('schema')!r}"
            )
        has_preset = "preset" in raw
        has_experiment = "experiment" in raw
        if has_preset == has_experiment:
            raise ConfigurationError(
                "config must contain exactly one of 'preset' or 'experiment'"
            )
        params = _device_from_config(raw.get("device"))
        output_section = raw.get("output") or {}
        _require_mapping(output_section, _OUTPUT_KEYS, "output")
        if has_preset:
            preset_name = raw["preset"]
            if preset_name not in PRESET_NAMES:
                raise ConfigurationError(
                    f"unknown preset {preset_name!r}; available: {', '.join(PRESET_NAMES)}"
                )
        else:
            spec = _spec_from_config(raw["experiment"], params, model, variant)

        formats = _FORMATS[:2]
        if output_section.get("formats") is not None:
            formats = tuple(output_section["formats"])
        if formats_flag is not None:
            formats = tuple(f.strip() for f in formats_flag.split(",") if f.strip())
        bad = [f for f in formats if f not in _FORMATS]
        if bad or not formats:
            raise ConfigurationError(
                f"formats must be a non-empty subset of {list(_FORMATS)}, got {list(formats)}"
            )
        resolved_seed = seed if seed is not None else int(output_section.get("seed", 0))
        outdir = (out or output_section.get("directory")
                  or os.environ.get("QARSIM_OUT") or "qarsim-out")
    except (ConfigurationError, DimensionError, ValueError, TypeError) as exc:
        _fail(3, str(exc))

    try:
        if preset_name is not None:
            result = run_preset(preset_name, params=params, model=model,
                                variant=variant or "derived_decoherence", jobs=jobs)
        else:
            result = run_experiment(spec, jobs=jobs)
    except (ConfigurationError, DimensionError) as exc:
        _fail(3, str(exc))
    except _SIMULATION_ERRORS as exc:
        _fail(4, f"simulation failed ({type(exc).__name__}): {exc}")
    except FitError as exc:
        _fail(5, f"fit failed: {exc}")

    written = []
    file_map = {}
    try:
        for artifact in result.artifacts:
            files = []
            if "csv" in formats:
                path = os.path.join(outdir, f"{result.name}_{artifact.name}.csv")
                write_csv(path, artifact)
                files.append(os.path.basename(path))
            if "svg" in formats and artifact.plot is not None:
                path = os.path.join(outdir, f"{result.name}_{artifact.name}.svg")
                render_svg(path, artifact)
                files.append(os.path.basename(path))
            written.extend(files)
            file_map[artifact.name] = files
        if "json" in formats:
            summary = {
                "schema": SCHEMA_ID,
                "name": result.name,
                "preset": preset_name,
                "seed": resolved_seed,
                "model": model,
                "variant": variant or "derived_decoherence",
                "device": device_info(params),
                "info": result.info,
                "artifacts": file_map,
                "versions": {
                    "python": platform.python_version(),
                    "numpy": np.__version__,
                    "scipy": scipy.__version__,
                    "qarsim": _package_version(),
                },
                "wall_time_s": time.perf_counter() - started,
            }
            path = os.path.join(outdir, f"{result.name}.json")
            write_json(path, summary)
            written.append(os.path.basename(path))
    except OSError as exc:
        _fail(2, f"cannot write output: {exc}")

    click.echo(f"wrote {len(written)} file(s) to {outdir}")


if __name__ == "__main__":
    main()
