"""Named experiment protocols: reset traces, scans, sweeps, and metrics.

Each runner resolves an ExperimentSpec into model calls. Reset-style runs
prepare the target with a given excited population (instantaneous pulse,
population only), machine qudits in thermal states at their residual
occupations, then evolve under the chosen model. Driven protocols start
from the ground state, use zero-temperature channels, and evolve under the
driven Hamiltonian.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    BudgetError,
    NoResetError,
    StateInvariantError,
    ThermodynamicsError,
)
from .hilbert import QuditSpace, basis_index, make_space
from .lindblad import (
    DensityMatrix,
    DissipationChannel,
    build_liouvillian,
    evolve,
    steady_state,
)
from .model import (
    DeviceParams,
    DriveSpec,
    build_driven_hamiltonian,
    corotating_effective_hamiltonian,
    resonance_frequency,
)
from .rate_model import (
    BASIS_LABELS,
    RateState,
    VARIANTS,
    build_rate_matrix,
    propagate,
    rate_steady_state,
    thermal_rates,
)
from .thermo import BathConfig, temperature_from_occupation

__all__ = [
    "KINDS",
    "MODELS",
    "ExperimentSpec",
    "TraceResult",
    "ScanResult",
    "SweepResult",
    "ResetTimeSweepResult",
    "RabiEstimate",
    "run_reset_trace",
    "run_residual_init_trace",
    "run_avoided_crossing_scan",
    "run_drive_rate_sweep",
    "run_reset_time_sweep",
    "steady_state_population_sweep",
    "reset_time",
    "approach_time",
    "rabi_population_estimate",
    "MEASUREMENT_NOISE_FLOOR",
]

KINDS = (
    "avoided_crossing_scan",
    "drive_rate_sweep",
    "reset_trace",
    "reset_time_sweep",
    "steady_state_sweep",
    "cold_bath_sweep",
    "residual_init_trace",
)
MODELS = ("rate", "lindblad")

# Reported measurement uncertainty of the population readout; recorded in
# trace metadata so plots can show the noise floor. Simulations are noiseless.
MEASUREMENT_NOISE_FLOOR = 5e-4

OPERATIONAL_HOLD_S = 100e-6

_TRACE_KINDS = ("reset_trace", "residual_init_trace", "drive_rate_sweep")
_GRID_REQUIREMENTS = {
    "drive_rate_sweep": ("rabi_rates",),
    "avoided_crossing_scan": ("drive_detunings", "omega2_offsets"),
    "reset_time_sweep": ("n_hot_values",),
    "steady_state_sweep": ("n_hot_values",),
    "cold_bath_sweep": ("n_cold_values",),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    kind: str
    params: DeviceParams
    baths: BathConfig = field(default_factory=BathConfig)
    drive: Optional[DriveSpec] = None
    initial_p1: float = 0.95
    times: Optional[tuple[float, ...]] = None
    model: str = "rate"
    variant: str = "derived_decoherence"
    dims: tuple[int, ...] = (2, 3, 2)
    n_hot_values: Optional[tuple[float, ...]] = None
    n_cold_values: Optional[tuple[float, ...]] = None
    rabi_rates: Optional[tuple[float, ...]] = None
    drive_detunings: Optional[tuple[float, ...]] = None
    omega2_offsets: Optional[tuple[float, ...]] = None
    threshold: float = 0.01
    max_grid_points: int = 20000
    integrator: str = "expm"
    rtol: float = 1e-8
    detuning_convention: str = "physical"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if self.model not in MODELS:
            raise ConfigurationError(f"unknown model {self.model!r}")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown rate variant {self.variant!r}")
        if not 0.0 <= self.initial_p1 <= 1.0:
            raise ConfigurationError(f"initial_p1 must be in [0, 1], got {self.initial_p1}")
        for name in ("times", "n_hot_values", "n_cold_values", "rabi_rates",
                     "drive_detunings", "omega2_offsets", "dims"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) if name != "dims" else int(v)
                                                     for v in value))
        if self.kind in _TRACE_KINDS:
            if self.times is None or len(self.times) == 0:
                raise ConfigurationError(f"kind {self.kind!r} needs a non-empty times grid")
        for grid_name in _GRID_REQUIREMENTS.get(self.kind, ()):
            grid = getattr(self, grid_name)
            if grid is None or len(grid) == 0:
                raise ConfigurationError(f"kind {self.kind!r} needs a non-empty {grid_name}")
        if self.kind == "avoided_crossing_scan" and self.drive is None:
            # Default protocol drive: resonant, 200 kHz, 2 us.
            object.__setattr__(
                self,
                "drive",
                DriveSpec(self.params.omega1, 2 * np.pi * 200e3, 2e-6),
            )

    def space(self) -> QuditSpace:
        return make_space(self.dims)


@dataclass(frozen=True)
class TraceResult:
    """p1(t) of the target plus retained-basis populations and metadata."""

    times: np.ndarray
    p1: np.ndarray
    populations: dict[str, np.ndarray]
    metadata: dict

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float))
        if self.p1.shape != self.times.shape:
            raise ConfigurationError("times and p1 must have matching shapes")
        if np.any(self.p1 < -1e-9) or np.any(self.p1 > 1 + 1e-9):
            raise StateInvariantError("trace population left [0, 1]")


@dataclass(frozen=True)
class ScanResult:
    """2-D map of final populations over (drive detuning, omega2 offset)."""

    drive_detunings: np.ndarray
    omega2_offsets: np.ndarray
    p1: np.ndarray
    metadata: dict


@dataclass(frozen=True)
class SweepResult:
    """Steady-state curves: one row of P_SS values per curve label."""

    x_name: str
    x_values: np.ndarray
    curve_name: str
    curve_values: np.ndarray
    p_operational: np.ndarray
    p_kernel: np.ndarray
    metadata: dict


@dataclass(frozen=True)
class ResetTimeSweepResult:
    n_hot_values: np.ndarray
    reset_times: np.ndarray
    metadata: dict


@dataclass(frozen=True)
class RabiEstimate:
    """Population estimate from the two Rabi amplitudes."""

    r: float
    s: float

    @property
    def p1_hat(self) -> float:
        return self.s / (self.r + self.s)


def _jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        return os.cpu_count() or 1
    if jobs < 1:
        raise ConfigurationError("jobs must be >= 1")
    return jobs


def _parallel_map(fn: Callable, items: Sequence, jobs: Optional[int]) -> list:
    n = _jobs(jobs)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _thermal_probs(dim: int, occupation: float) -> np.ndarray:
    if occupation <= 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    ratio = occupation / (occupation + 1.0)
    p = ratio ** np.arange(dim)
    return p / p.sum()


def _initial_rate_state(params: DeviceParams, initial_p1: float) -> RateState:
    """Thermal-machine product projected onto the retained basis."""
    t1 = _thermal_probs(2, params.n_res1)
    t2 = _thermal_probs(3, params.n_res2)
    ground, excited = 1.0 - initial_p1, initial_p1
    raw = np.array([
        t1[0] * t2[0] * ground,
        t1[1] * t2[0] * ground,
        t1[0] * t2[1] * ground,
        t1[0] * t2[0] * excited,
        t1[0] * t2[2] * ground,
        t1[1] * t2[0] * excited,
    ])
    raw /= raw.sum()
    return RateState.from_vector(np.append(raw, 0.0))


def _initial_density_matrix(space: QuditSpace, params: DeviceParams,
                            initial_p1: float, thermal_machine: bool) -> DensityMatrix:
    occ1 = params.n_res1 if thermal_machine else 0.0
    occ2 = params.n_res2 if thermal_machine else 0.0
    t1 = _thermal_probs(space.dims[0], occ1)
    t2 = _thermal_probs(space.dims[1], occ2)
    t3 = np.zeros(space.dims[2])
    t3[0] = 1.0 - initial_p1
    t3[1] = initial_p1
    mat = np.diag(np.kron(np.kron(t1, t2), t3).astype(complex))
    return DensityMatrix(space, mat)


def _channels(spec: ExperimentSpec, n_hot: float, n_cold: float,
              zero_temperature: bool = False) -> list[DissipationChannel]:
    p = spec.params
    if zero_temperature:
        totals = (0.0, 0.0, 0.0)
    else:
        totals = (n_hot + p.n_res1, n_cold + p.n_res2, p.n_res3)
    return [
        DissipationChannel(1, p.gamma1, totals[0]),
        DissipationChannel(2, p.gamma2, totals[1]),
        DissipationChannel(3, p.gamma3, totals[2]),
    ]


def _population_indices(space: QuditSpace) -> dict[str, int]:
    return {"p" + "".join(map(str, label)): basis_index(space, label)
            for label in BASIS_LABELS}


def _target_excited_indices(space: QuditSpace) -> list[int]:
    idx = []
    for label in [l.occupations for l in space.labels()]:
        if label[2] == 1:
            idx.append(basis_index(space, label))
    return idx


def _bath_metadata(spec: ExperimentSpec, n_hot: float, n_cold: float) -> dict:
    p = spec.params
    totals = {"n1_total": n_hot + p.n_res1, "n2_total": n_cold + p.n_res2,
              "n3_total": p.n_res3}
    meta = {
        "kind": spec.kind,
        "model": spec.model,
        "variant": spec.variant,
        "dims": list(spec.dims),
        "initial_p1": spec.initial_p1,
        "n_hot": n_hot,
        "n_cold": n_cold,
        "noise_floor": MEASUREMENT_NOISE_FLOOR,
        **totals,
    }
    for key, freq, n in (("t_hot_k", p.omega1, totals["n1_total"]),
                         ("t_cold_k", p.omega2, totals["n2_total"]),
                         ("t_target_k", p.omega3, totals["n3_total"])):
        try:
            meta[key] = temperature_from_occupation(freq / (2 * np.pi), n)
        except ThermodynamicsError:
            meta[key] = None
    return meta


def _trace_rate(spec: ExperimentSpec, n_hot: float, n_cold: float,
                initial_p1: float) -> TraceResult:
    rates = thermal_rates(spec.params, n_hot, n_cold)
    R = build_rate_matrix(rates, spec.params.three_body_rate, spec.variant)
    x0 = _initial_rate_state(spec.params, initial_p1)
    states = propagate(R, x0, spec.times)
    stacked = np.array([s.vector for s in states])
    populations = {"p" + "".join(map(str, label)): stacked[:, k]
                   for k, label in enumerate(BASIS_LABELS)}
    populations["rho_coh"] = stacked[:, 6]
    p1 = stacked[:, 3] + stacked[:, 5]
    meta = _bath_metadata(spec, n_hot, n_cold)
    meta["initial_p1"] = initial_p1
    return TraceResult(np.asarray(spec.times), p1, populations, meta)


def _trace_lindblad(spec: ExperimentSpec, n_hot: float, n_cold: float,
                    initial_p1: float) -> TraceResult:
    space = spec.space()
    h = corotating_effective_hamiltonian(space, spec.params)
    liouv = build_liouvillian(h, _channels(spec, n_hot, n_cold))
    rho0 = _initial_density_matrix(space, spec.params, initial_p1, thermal_machine=True)
    traj = evolve(rho0, liouv, spec.times, rtol=spec.rtol, method=spec.integrator)
    pop_idx = _population_indices(space)
    excited = _target_excited_indices(space)
    diag = np.array([np.real(np.diag(rho.matrix)) for rho in traj])
    populations = {name: diag[:, k] for name, k in pop_idx.items()}
    p1 = diag[:, excited].sum(axis=1)
    meta = _bath_metadata(spec, n_hot, n_cold)
    meta["initial_p1"] = initial_p1
    return TraceResult(np.asarray(spec.times), p1, populations, meta)


def _run_trace(spec: ExperimentSpec, n_hot: float, n_cold: float,
               initial_p1: float) -> TraceResult:
    if spec.model == "rate":
        return _trace_rate(spec, n_hot, n_cold, initial_p1)
    return _trace_lindblad(spec, n_hot, n_cold, initial_p1)


def run_reset_trace(spec: ExperimentSpec) -> TraceResult:
    """Reset protocol: prepare the target excited, run the refrigerator."""
    if spec.kind != "reset_trace":
        raise ConfigurationError(f"expected kind 'reset_trace', got {spec.kind!r}")
    return _run_trace(spec, spec.baths.n_hot, spec.baths.n_cold, spec.initial_p1)


def run_residual_init_trace(spec: ExperimentSpec) -> TraceResult:
    """Reset run starting from a residual (nearly relaxed) target."""
    if spec.kind != "residual_init_trace":
        raise ConfigurationError(f"expected kind 'residual_init_trace', got {spec.kind!r}")
    return _run_trace(spec, spec.baths.n_hot, spec.baths.n_cold, spec.initial_p1)


def run_drive_rate_sweep(spec: ExperimentSpec, jobs: Optional[int] = None) -> list[TraceResult]:
    """One driven trace per Rabi rate; ground-state machine, cold channels."""
    if spec.kind != "drive_rate_sweep":
        raise ConfigurationError(f"expected kind 'drive_rate_sweep', got {spec.kind!r}")
    space = spec.space()
    base_drive = spec.drive or DriveSpec(spec.params.omega1, 0.0, spec.times[-1])
    channels = _channels(spec, 0.0, 0.0, zero_temperature=True)
    pop_idx = _population_indices(space)
    excited = _target_excited_indices(space)
    rho0 = _initial_density_matrix(space, spec.params, spec.initial_p1,
                                   thermal_machine=False)

    def one(rabi_rate: float) -> TraceResult:
        drive = replace(base_drive, rabi_rate=rabi_rate)
        h = build_driven_hamiltonian(space, spec.params, drive,
                                     convention=spec.detuning_convention)
        liouv = build_liouvillian(h, channels)
        traj = evolve(rho0, liouv, spec.times, rtol=spec.rtol, method=spec.integrator)
        diag = np.array([np.real(np.diag(rho.matrix)) for rho in traj])
        populations = {name: diag[:, k] for name, k in pop_idx.items()}
        p1 = diag[:, excited].sum(axis=1)
        meta = _bath_metadata(spec, 0.0, 0.0)
        meta.update(model="lindblad", rabi_rate=rabi_rate,
                    rabi_rate_hz=rabi_rate / (2 * np.pi), zero_temperature=True)
        return TraceResult(np.asarray(spec.times), p1, populations, meta)

    return _parallel_map(one, list(spec.rabi_rates), jobs)


def run_avoided_crossing_scan(spec: ExperimentSpec, jobs: Optional[int] = None) -> ScanResult:
    """Final target population over (drive detuning, omega2 offset).

    Offsets are relative to the resonance frequency; the machine starts in
    the ground state with the target excited, channels at zero temperature.
    """
    if spec.kind != "avoided_crossing_scan":
        raise ConfigurationError(f"expected kind 'avoided_crossing_scan', got {spec.kind!r}")
    n_points = len(spec.drive_detunings) * len(spec.omega2_offsets)
    if n_points > spec.max_grid_points:
        raise BudgetError(
            f"scan grid has {n_points} points, budget is {spec.max_grid_points}"
        )
    space = spec.space()
    drive = spec.drive
    omega2_res = resonance_frequency(spec.params)
    channels = _channels(spec, 0.0, 0.0, zero_temperature=True)
    excited = _target_excited_indices(space)
    rho0 = _initial_density_matrix(space, spec.params, spec.initial_p1,
                                   thermal_machine=False)
    grid = [(dd, dw) for dd in spec.drive_detunings for dw in spec.omega2_offsets]

    def one(point: tuple[float, float]) -> float:
        delta_drive, omega2_offset = point
        point_params = spec.params.replace(omega2=omega2_res + omega2_offset)
        point_drive = replace(drive, omega_drive=spec.params.omega1 + delta_drive)
        h = build_driven_hamiltonian(space, point_params, point_drive,
                                     convention=spec.detuning_convention)
        liouv = build_liouvillian(h, channels)
        final = evolve(rho0, liouv, [drive.duration], method="expm")[-1]
        return float(np.real(np.diag(final.matrix))[excited].sum())

    values = _parallel_map(one, grid, jobs)
    p1 = np.array(values).reshape(len(spec.drive_detunings), len(spec.omega2_offsets))
    meta = _bath_metadata(spec, 0.0, 0.0)
    meta.update(model="lindblad", zero_temperature=True,
                rabi_rate_hz=drive.rabi_rate / (2 * np.pi),
                duration_s=drive.duration)
    return ScanResult(np.asarray(spec.drive_detunings), np.asarray(spec.omega2_offsets),
                      p1, meta)


def reset_time(trace: TraceResult, threshold: float = 0.01) -> float:
    """First downward crossing of the threshold, by linear interpolation."""
    p = trace.p1
    t = trace.times
    if p[0] <= threshold:
        raise NoResetError(
            f"population starts at {p[0]:.4g}, never above threshold {threshold}",
            final_p1=float(p[-1]),
        )
    below = np.nonzero(p <= threshold)[0]
    if below.size == 0:
        raise NoResetError(
            f"population never reached threshold {threshold}; final value {p[-1]:.4g}",
            final_p1=float(p[-1]),
        )
    k = int(below[0])
    frac = (p[k - 1] - threshold) / (p[k - 1] - p[k])
    return float(t[k - 1] + frac * (t[k] - t[k - 1]))


def approach_time(trace: TraceResult, target: float, fraction: float = 0.1) -> float:
    """First time the remaining excursion |p1 - target| shrinks to the given
    fraction of the initial excursion."""
    p = trace.p1
    t = trace.times
    band = fraction * abs(float(p[0]) - target)
    dist = np.abs(p - target)
    inside = np.nonzero(dist <= band)[0]
    if inside.size == 0:
        raise NoResetError(
            f"trace never settled within {fraction:.0%} of {target:.4g}",
            final_p1=float(p[-1]),
        )
    k = int(inside[0])
    if k == 0:
        return float(t[0])
    frac = (dist[k - 1] - band) / (dist[k - 1] - dist[k])
    return float(t[k - 1] + frac * (t[k] - t[k - 1]))


def run_reset_time_sweep(spec: ExperimentSpec, jobs: Optional[int] = None) -> ResetTimeSweepResult:
    """Reset time per hot-bath occupation; NaN where the threshold is missed."""
    if spec.kind != "reset_time_sweep":
        raise ConfigurationError(f"expected kind 'reset_time_sweep', got {spec.kind!r}")
    times = spec.times if spec.times is not None else tuple(np.linspace(0.0, 20e-6, 4001))
    base = replace(spec, kind="reset_trace", times=times)

    def one(n_hot: float) -> float:
        trace = _run_trace(base, n_hot, spec.baths.n_cold, spec.initial_p1)
        try:
            return reset_time(trace, spec.threshold)
        except NoResetError:
            return float("nan")

    values = np.array(_parallel_map(one, list(spec.n_hot_values), jobs))
    meta = _bath_metadata(spec, 0.0, spec.baths.n_cold)
    meta["threshold"] = spec.threshold
    finite = np.isfinite(values)
    if finite.any():
        k = int(np.nanargmin(values))
        meta["min_reset_time_s"] = float(values[k])
        meta["argmin_n_hot"] = float(spec.n_hot_values[k])
    return ResetTimeSweepResult(np.asarray(spec.n_hot_values), values, meta)


def steady_state_population_sweep(spec: ExperimentSpec, jobs: Optional[int] = None) -> SweepResult:
    """P_SS curves vs n_hot (steady_state_sweep) or n_cold (cold_bath_sweep).

    Reports both the operational definition (p1 after a 100 us hold from the
    prepared state) and the generator-kernel steady state.
    """
    if spec.kind == "steady_state_sweep":
        x_name, curve_name = "n_hot", "n_cold"
        x_values = spec.n_hot_values
        curve_values = spec.n_cold_values or (spec.baths.n_cold,)
    elif spec.kind == "cold_bath_sweep":
        x_name, curve_name = "n_cold", "n_hot"
        x_values = spec.n_cold_values
        curve_values = spec.n_hot_values or (spec.baths.n_hot,)
    else:
        raise ConfigurationError(
            f"expected a steady-state sweep kind, got {spec.kind!r}"
        )

    points = [(cv, xv) for cv in curve_values for xv in x_values]

    def one(point: tuple[float, float]) -> tuple[float, float]:
        curve_value, x_value = point
        n_hot = x_value if x_name == "n_hot" else curve_value
        n_cold = x_value if x_name == "n_cold" else curve_value
        if spec.model == "rate":
            rates = thermal_rates(spec.params, n_hot, n_cold)
            R = build_rate_matrix(rates, spec.params.three_body_rate, spec.variant)
            x0 = _initial_rate_state(spec.params, spec.initial_p1)
            operational = propagate(R, x0, [OPERATIONAL_HOLD_S])[-1].p1
            kernel = rate_steady_state(R).p1
        else:
            space = spec.space()
            h = corotating_effective_hamiltonian(space, spec.params)
            liouv = build_liouvillian(h, _channels(spec, n_hot, n_cold))
            rho0 = _initial_density_matrix(space, spec.params, spec.initial_p1,
                                           thermal_machine=True)
            excited = _target_excited_indices(space)
            final = evolve(rho0, liouv, [OPERATIONAL_HOLD_S], method="expm")[-1]
            operational = float(np.real(np.diag(final.matrix))[excited].sum())
            kernel = float(np.real(np.diag(steady_state(liouv).matrix))[excited].sum())
        return operational, kernel

    results = _parallel_map(one, points, jobs)
    n_curves, n_x = len(curve_values), len(x_values)
    operational = np.array([r[0] for r in results]).reshape(n_curves, n_x)
    kernel = np.array([r[1] for r in results]).reshape(n_curves, n_x)
    meta = _bath_metadata(spec, spec.baths.n_hot, spec.baths.n_cold)
    meta["hold_s"] = OPERATIONAL_HOLD_S
    return SweepResult(x_name, np.asarray(x_values), curve_name,
                       np.asarray(curve_values), operational, kernel, meta)


def rabi_population_estimate(p0: float, p1: float, p2: float) -> RabiEstimate:
    """Analytic two-amplitude estimator of the |1> population.

    The 1-2 Rabi amplitude without a prior pi pulse is s = p1; with a prior
    0-1 pi pulse it is r = p0. The estimate s/(r+s) is exact when p2 = 0.
    """
    if min(p0, p1, p2) < 0:
        raise ConfigurationError("populations must be non-negative")
    if abs(p0 + p1 + p2 - 1.0) > 1e-9:
        raise ConfigurationError(f"populations sum to {p0 + p1 + p2!r}, not 1")
    if p0 + p1 == 0:
        raise ConfigurationError("both Rabi amplitudes vanish; estimator undefined")
    return RabiEstimate(r=p0, s=p1)
