"""Least-squares parameter estimation against simulated reset traces.

A FitProblem pairs an ExperimentSpec template with measured (time, value)
data and a list of free parameters. Each loss evaluation rebuilds the spec
with candidate values and compares the simulated target population to the
data. Positive-bounded parameters are optimized in log space.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigurationError, FitError
from .experiments import ExperimentSpec, _run_trace, run_drive_rate_sweep
from .thermo import BathConfig

__all__ = [
    "PARAMETER_NAMES",
    "FreeParameter",
    "FitProblem",
    "FitResult",
    "fit_trace",
    "profile_loss",
    "load_trace_csv",
]

# Fields a fit may vary, and where each one lands in the spec.
_DEVICE_FIELDS = ("three_body_rate", "gamma1", "gamma2", "t_relax", "n_res3")
_BATH_FIELDS = ("n_hot", "n_cold")
_SPEC_FIELDS = ("initial_p1",)
_DRIVE_FIELDS = ("rabi_rate",)
_SCALE_FIELDS = ("amplitude",)
PARAMETER_NAMES = _DEVICE_FIELDS + _BATH_FIELDS + _SPEC_FIELDS + _DRIVE_FIELDS + _SCALE_FIELDS

_REL_LOSS_TOL = 1e-10
_REL_STEP_TOL = 1e-8


@dataclass(frozen=True)
class FreeParameter:
    """One fit parameter with bounds; log_scale=None picks log for lower>0."""

    name: str
    guess: float
    lower: float
    upper: float
    log_scale: Optional[bool] = None

    def __post_init__(self):
        if self.name not in PARAMETER_NAMES:
            raise ConfigurationError(
                f"unknown fit parameter {self.name!r}; known: {', '.join(PARAMETER_NAMES)}"
            )
        if not self.lower < self.upper:
            raise ConfigurationError(f"{self.name}: lower bound must be below upper")
        if not self.lower <= self.guess <= self.upper:
            raise ConfigurationError(
                f"{self.name}: guess {self.guess} outside [{self.lower}, {self.upper}]"
            )
        if self.log_scale is None:
            object.__setattr__(self, "log_scale", self.lower > 0)
        if self.log_scale and self.lower <= 0:
            raise ConfigurationError(f"{self.name}: log scale needs a positive lower bound")

    def transform(self, value: float) -> float:
        return float(np.log(value)) if self.log_scale else float(value)

    def untransform(self, z: float) -> float:
        value = float(np.exp(z)) if self.log_scale else float(z)
        return min(max(value, self.lower), self.upper)


@dataclass(frozen=True)
class FitProblem:
    spec: ExperimentSpec
    free: tuple[FreeParameter, ...]
    times: tuple[float, ...]
    values: tuple[float, ...]
    sigmas: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.sigmas is not None:
            object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if len(self.times) != len(self.values):
            raise ConfigurationError("times and values must have equal length")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ConfigurationError("times must be sorted ascending")
        if self.sigmas is not None:
            if len(self.sigmas) != len(self.values):
                raise ConfigurationError("sigmas must match values in length")
            if min(self.sigmas) <= 0:
                raise ConfigurationError("sigmas must be positive")
        names = [p.name for p in self.free]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate free parameter names")
        if self.free and len(self.times) < 2 * len(self.free):
            raise ConfigurationError(
                f"{len(self.times)} data points cannot constrain {len(self.free)} parameters"
            )
        if len(self.values) >= 2 and float(np.ptp(self.values)) == 0.0:
            raise FitError("data has zero variance; nothing to fit")

    def weights(self) -> np.ndarray:
        if self.sigmas is None:
            return np.ones(len(self.values))
        return 1.0 / np.asarray(self.sigmas) ** 2

    def resolve(self, candidate: dict[str, float]) -> tuple[ExperimentSpec, float]:
        """Apply candidate values onto the spec; returns (spec, amplitude)."""
        spec = self.spec
        device = {k: v for k, v in candidate.items() if k in _DEVICE_FIELDS}
        if device:
            spec = replace(spec, params=spec.params.replace(**device))
        bath_updates = {k: v for k, v in candidate.items() if k in _BATH_FIELDS}
        if bath_updates:
            baths = BathConfig(
                n_hot=bath_updates.get("n_hot", spec.baths.n_hot),
                n_cold=bath_updates.get("n_cold", spec.baths.n_cold),
            )
            spec = replace(spec, baths=baths)
        if "initial_p1" in candidate:
            spec = replace(spec, initial_p1=candidate["initial_p1"])
        if "rabi_rate" in candidate:
            if spec.drive is None:
                raise ConfigurationError("rabi_rate is free but the spec has no drive")
            spec = replace(spec, drive=replace(spec.drive, rabi_rate=candidate["rabi_rate"]))
        return spec, candidate.get("amplitude", 1.0)

    def predict(self, candidate: dict[str, float]) -> np.ndarray:
        spec, amplitude = self.resolve(candidate)
        spec = replace(spec, times=self.times)
        if spec.kind in ("reset_trace", "residual_init_trace"):
            trace = _run_trace(spec, spec.baths.n_hot, spec.baths.n_cold,
                               spec.initial_p1)
        elif spec.kind == "drive_rate_sweep":
            single = replace(spec, rabi_rates=(spec.drive.rabi_rate,))
            trace = run_drive_rate_sweep(single, jobs=1)[0]
        else:
            raise ConfigurationError(
                f"forward model for kind {spec.kind!r} is not a fittable trace"
            )
        return amplitude * trace.p1

    def loss(self, candidate: dict[str, float]) -> float:
        residual = self.predict(candidate) - np.asarray(self.values)
        return float(np.sum(self.weights() * residual**2))


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    uncertainties: dict[str, float]
    loss: float
    initial_loss: float
    converged: bool
    n_iterations: int
    n_evaluations: int
    message: str

    def to_dict(self) -> dict:
        """JSON-ready view of the result."""
        return {
            "params": dict(self.params),
            "uncertainties": dict(self.uncertainties),
            "loss": self.loss,
            "initial_loss": self.initial_loss,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "n_evaluations": self.n_evaluations,
            "message": self.message,
        }


def _candidate(problem: FitProblem, z: np.ndarray) -> dict[str, float]:
    return {p.name: p.untransform(zi) for p, zi in zip(problem.free, z)}


def _penalized_loss(problem: FitProblem, z: np.ndarray, scale: float) -> float:
    # Quadratic penalty for leaving the transformed bounding box keeps the
    # simplex away from hard walls without discontinuities.
    penalty = 0.0
    for p, zi in zip(problem.free, z):
        lo, hi = p.transform(p.lower), p.transform(p.upper)
        if zi < lo:
            penalty += (lo - zi) ** 2
        elif zi > hi:
            penalty += (zi - hi) ** 2
    return problem.loss(_candidate(problem, z)) + penalty * scale


def _jacobian(problem: FitProblem, z: np.ndarray) -> np.ndarray:
    base = problem.predict(_candidate(problem, z))
    jac = np.empty((len(base), len(z)))
    for j in range(len(z)):
        step = 1e-6 * max(1.0, abs(z[j]))
        plus = np.array(z)
        plus[j] += step
        jac[:, j] = (problem.predict(_candidate(problem, plus)) - base) / step
    return jac


def _uncertainties(problem: FitProblem, z: np.ndarray, loss: float) -> dict[str, float]:
    if not problem.free:
        return {}
    jac = _jacobian(problem, z)
    w = problem.weights()
    normal = jac.T @ (w[:, None] * jac)
    dof = max(len(problem.values) - len(z), 1)
    scale = 1.0 if problem.sigmas is not None else loss / dof
    cov = np.linalg.pinv(normal) * scale
    out = {}
    for k, p in enumerate(problem.free):
        sigma_z = float(np.sqrt(max(cov[k, k], 0.0)))
        value = p.untransform(z[k])
        out[p.name] = sigma_z * value if p.log_scale else sigma_z
    return out


def _gauss_newton_polish(problem: FitProblem, z: np.ndarray, loss: float,
                         scale: float) -> tuple[np.ndarray, float, int]:
    evals = 0
    for _ in range(8):
        jac = _jacobian(problem, z)
        evals += len(z) + 1
        residual = problem.predict(_candidate(problem, z)) - np.asarray(problem.values)
        evals += 1
        w = problem.weights()
        step = np.linalg.pinv(jac.T @ (w[:, None] * jac)) @ (jac.T @ (w * residual))
        trial = z - step
        trial_loss = _penalized_loss(problem, trial, scale)
        evals += 1
        if trial_loss >= loss:
            break
        improvement = (loss - trial_loss) / max(loss, 1e-300)
        z, loss = trial, trial_loss
        if improvement < _REL_LOSS_TOL or float(np.max(np.abs(step))) < _REL_STEP_TOL:
            break
    return z, loss, evals


def fit_trace(problem: FitProblem, n_restarts: int = 0, seed: int = 0,
              polish: bool = True, max_iterations: int = 2000) -> FitResult:
    """Nelder-Mead in transformed space, optional restarts and GN polish."""
    fixed = {p.name: p.guess for p in problem.free}
    initial_loss = problem.loss(fixed)
    if not problem.free:
        return FitResult(params={}, uncertainties={}, loss=initial_loss,
                         initial_loss=initial_loss, converged=True,
                         n_iterations=0, n_evaluations=1,
                         message="no free parameters; loss evaluated at the template")

    z0 = np.array([p.transform(p.guess) for p in problem.free])
    penalty_scale = 1.0 + initial_loss
    rng = np.random.default_rng(seed)
    starts = [z0]
    for _ in range(n_restarts):
        starts.append(z0 + rng.normal(scale=0.3, size=z0.shape))

    best = None
    total_evals, total_iters = 0, 0
    for start in starts:
        result = minimize(
            lambda z: _penalized_loss(problem, z, penalty_scale),
            start,
            method="Nelder-Mead",
            options={
                "fatol": _REL_LOSS_TOL * max(initial_loss, 1e-30),
                "xatol": _REL_STEP_TOL * max(1.0, float(np.max(np.abs(z0)))),
                "maxiter": max_iterations,
                "maxfev": 4 * max_iterations,
            },
        )
        total_evals += int(result.nfev)
        total_iters += int(result.nit)
        if best is None or result.fun < best.fun:
            best = result

    z, loss, converged = np.array(best.x), float(best.fun), bool(best.success)
    if polish:
        z, loss, polish_evals = _gauss_newton_polish(problem, z, loss, penalty_scale)
        total_evals += polish_evals
    params = _candidate(problem, z)
    loss = problem.loss(params)
    uncertainties = _uncertainties(problem, z, loss)
    message = best.message if isinstance(best.message, str) else str(best.message)
    return FitResult(params=params, uncertainties=uncertainties, loss=loss,
                     initial_loss=initial_loss, converged=converged,
                     n_iterations=total_iters, n_evaluations=total_evals,
                     message=message)


def profile_loss(problem: FitProblem, parameter: str, grid: Sequence[float],
                 warn_flat: bool = True,
                 max_iterations: int = 400) -> list[tuple[float, float]]:
    """(value, loss) pairs along a grid, re-optimizing the other parameters."""
    names = [p.name for p in problem.free]
    if parameter not in names:
        raise ConfigurationError(f"{parameter!r} is not a free parameter of this problem")
    if parameter == "amplitude":
        raise ConfigurationError("amplitude cannot be profiled; fit it directly")
    others = tuple(p for p in problem.free if p.name != parameter)
    target = next(p for p in problem.free if p.name == parameter)

    losses = np.empty(len(grid))
    for k, value in enumerate(grid):
        if not target.lower <= value <= target.upper:
            raise ConfigurationError(
                f"profile grid value {value} outside bounds of {parameter!r}"
            )
        pinned_spec, _ = problem.resolve({parameter: float(value)})
        sub = FitProblem(spec=pinned_spec, free=others, times=problem.times,
                         values=problem.values, sigmas=problem.sigmas)
        losses[k] = fit_trace(sub, polish=False, max_iterations=max_iterations).loss
    if warn_flat:
        span = float(np.max(losses) - np.min(losses))
        if span <= 1e-12 * (1.0 + float(np.min(losses))):
            warnings.warn(
                f"loss profile for {parameter!r} is flat; parameter looks unidentifiable",
                stacklevel=2,
            )
    return [(float(v), float(l)) for v, l in zip(grid, losses)]


def load_trace_csv(path) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """Read (time_s, value[, sigma]) rows; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row or all(not cell.strip() for cell in row):
                continue
            rows.append([cell.strip() for cell in row])
    if not rows:
        raise FitError(f"{path}: no data rows")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise FitError(f"{path}: header only, no data rows")
    width = len(rows[0])
    if width not in (2, 3) or any(len(r) != width for r in rows):
        raise FitError(f"{path}: expected uniform rows of 2 or 3 columns")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise FitError(f"{path}: non-numeric cell ({exc})") from exc
    times, values = data[:, 0], data[:, 1]
    sigmas = data[:, 2] if width == 3 else None
    return times, values, sigmas
