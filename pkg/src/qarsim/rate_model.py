"""Reduced 7-component population/coherence model of the reset dynamics.

State ordering: (p000, p100, p010, p001, p020, p101, rho_coh). The first six
entries are populations of the retained basis; rho_coh is one real
quadrature of the |101>-|020> coherence (Im <101|rho|020>), signed so that
d p020/dt gains +2A rho_coh.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    ConfigurationError,
    DegenerateSteadyStateError,
    StaleStateError,
    StateInvariantError,
    ThermodynamicsError,
)
from .model import DeviceParams

__all__ = [
    "BASIS_LABELS",
    "VARIANTS",
    "RateSet",
    "RateState",
    "thermal_rates",
    "build_rate_matrix",
    "propagate",
    "rate_steady_state",
    "steady_state_population",
    "rate_model_heat_currents",
]

BASIS_LABELS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 2, 0), (1, 0, 1))
VARIANTS = ("derived_decoherence", "as_printed")

POPULATION_TOL = 1e-9


@dataclass(frozen=True)
class RateSet:
    """Thermal raising/lowering rates per qudit (rad/s)."""

    gamma1_up: float
    gamma1_down: float
    gamma2_up: float
    gamma2_down: float
    gamma3_up: float
    gamma3_down: float

    def __post_init__(self):
        for i in (1, 2, 3):
            up = getattr(self, f"gamma{i}_up")
            down = getattr(self, f"gamma{i}_down")
            if up < 0:
                raise ConfigurationError(f"gamma{i}_up must be non-negative")
            if not down > up:
                raise ConfigurationError(
                    f"gamma{i}_down must exceed gamma{i}_up (finite-temperature bath)"
                )


@dataclass(frozen=True)
class RateState:
    """Populations of the retained basis plus one coherence quadrature."""

    p000: float
    p100: float
    p010: float
    p001: float
    p020: float
    p101: float
    rho_coh: float = 0.0

    def __post_init__(self):
        pops = self.populations
        if any(p < -POPULATION_TOL or p > 1 + POPULATION_TOL for p in pops):
            raise StateInvariantError(f"population outside [0, 1]: {pops}")
        total = sum(pops)
        if abs(total - 1.0) > POPULATION_TOL:
            raise StateInvariantError(f"populations sum to {total!r}, not 1")
        if abs(self.rho_coh) > 0.5 + 1e-12:
            raise StateInvariantError(f"|rho_coh| = {abs(self.rho_coh)} exceeds 1/2")

    @property
    def populations(self) -> tuple[float, ...]:
        return (self.p000, self.p100, self.p010, self.p001, self.p020, self.p101)

    @property
    def vector(self) -> np.ndarray:
        return np.array([*self.populations, self.rho_coh], dtype=float)

    @property
    def p1(self) -> float:
        """Target-qubit excited population: p001 + p101."""
        return self.p001 + self.p101

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "RateState":
        x = np.asarray(x, dtype=float)
        if x.shape != (7,):
            raise ConfigurationError(f"rate state vector must have 7 entries, got {x.shape}")
        return cls(*x)


def thermal_rates(params: DeviceParams, n1: float, n2: float) -> RateSet:
    """Rates from synthesized occupations n1, n2 plus the residual floors.

    The target qudit sees only its residual floor; its bath is never
    synthesized.
    """
    if n1 < 0 or n2 < 0:
        raise ConfigurationError("synthesized occupations must be non-negative")
    n1_tot = n1 + params.n_res1
    n2_tot = n2 + params.n_res2
    return RateSet(
        gamma1_up=params.gamma1 * n1_tot,
        gamma1_down=params.gamma1 * (n1_tot + 1.0),
        gamma2_up=params.gamma2 * n2_tot,
        gamma2_down=params.gamma2 * (n2_tot + 1.0),
        gamma3_up=params.gamma3 * params.n_res3,
        gamma3_down=params.gamma3 * (params.n_res3 + 1.0),
    )


def build_rate_matrix(
    rates: RateSet,
    three_body_rate: float,
    variant: str = "derived_decoherence",
) -> np.ndarray:
    """7x7 generator of the reduced model.

    Both variants share the population block, whose (1,1) entry is
    -(gamma1_up + gamma2_up + gamma3_up) so every column conserves
    probability. They differ only in the coherence decay entry (7,7):
    "as_printed" uses +Gamma_C = (-2 G2d + 2 G2u + G1d + G1u + G3d + G3u)/4,
    which can pump the coherence; "derived_decoherence" uses minus half the
    total out-rate of the two coherent levels, the value implied by the full
    master equation.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown rate-matrix variant {variant!r}")
    g1u, g1d = rates.gamma1_up, rates.gamma1_down
    g2u, g2d = rates.gamma2_up, rates.gamma2_down
    g3u, g3d = rates.gamma3_up, rates.gamma3_down
    a = three_body_rate

    R = np.zeros((7, 7))
    R[0, 0] = -(g1u + g2u + g3u)
    R[0, 1] = g1d
    R[0, 2] = g2d
    R[0, 3] = g3d
    R[1, 0] = g1u
    R[1, 1] = -(g1d + g3u)
    R[1, 5] = g3d
    R[2, 0] = g2u
    R[2, 2] = -(g2d + 2.0 * g2u)
    R[2, 4] = 2.0 * g2d
    R[3, 0] = g3u
    R[3, 3] = -(g3d + g1u)
    R[3, 5] = g1d
    R[4, 2] = 2.0 * g2u
    R[4, 4] = -2.0 * g2d
    R[4, 6] = 2.0 * a
    R[5, 1] = g3u
    R[5, 3] = g1u
    R[5, 5] = -(g1d + g3d)
    R[5, 6] = -2.0 * a
    R[6, 4] = -a
    R[6, 5] = a
    if variant == "as_printed":
        R[6, 6] = (-2.0 * g2d + 2.0 * g2u + g1d + g1u + g3d + g3u) / 4.0
    else:
        R[6, 6] = -(g1d + g1u + g3d + g3u + 2.0 * g2d + 2.0 * g2u) / 2.0
    return R


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ConfigurationError("times must be a non-empty 1-D sequence")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise ConfigurationError("times must be sorted ascending and start at >= 0")
    return t


def propagate(R: np.ndarray, x0: RateState, times: Sequence[float]) -> list[RateState]:
    """x(t) = exp(R t) x0 at each output time (x0 is the state at t = 0)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (7, 7):
        raise ConfigurationError(f"rate matrix must be 7x7, got {R.shape}")
    t = _check_times(times)
    out = []
    x = x0.vector
    prev = 0.0
    cache: dict[float, np.ndarray] = {}
    for tk in t:
        dt = tk - prev
        if dt > 0:
            step = cache.get(dt)
            if step is None:
                step = expm(R * dt)
                cache[dt] = step
            x = step @ x
        prev = tk
        out.append(RateState.from_vector(x))
    return out


def rate_steady_state(R: np.ndarray, *, degeneracy_tol: float = 1e-10) -> RateState:
    """Kernel vector of R, normalized to unit population sum."""
    R = np.asarray(R, dtype=float)
    if R.shape != (7, 7):
        raise ConfigurationError(f"rate matrix must be 7x7, got {R.shape}")
    scale = np.linalg.norm(R, 2)
    if scale == 0:
        raise DegenerateSteadyStateError("zero rate matrix has no unique steady state")
    eigvals, eigvecs = np.linalg.eig(R)
    order = np.argsort(np.abs(eigvals))
    if np.abs(eigvals[order[1]]) / scale < degeneracy_tol:
        raise DegenerateSteadyStateError(
            f"rate matrix kernel is degenerate: |lambda_2|/|R| = "
            f"{np.abs(eigvals[order[1]]) / scale:.3e}"
        )
    x = np.real(eigvecs[:, order[0]])
    total = x[:6].sum()
    if abs(total) < 1e-14:
        raise DegenerateSteadyStateError("kernel vector carries no population")
    return RateState.from_vector(x / total)


def steady_state_population(R: np.ndarray, x0: RateState, t_final: float = 100e-6) -> float:
    """Operational steady-state population: p1 after a long fixed hold."""
    return propagate(R, x0, [t_final])[-1].p1


def rate_model_heat_currents(
    params: DeviceParams,
    rates: RateSet,
    state: RateState,
    *,
    variant: str = "derived_decoherence",
    staleness_tol: float = 1e-8,
    resonance_tol: float = 1e-9,
):
    """Bath heat currents from the steady-state population fluxes.

    Each transition carries its level-spacing energy, read off the diagonal
    of the effective Hamiltonian (so Kerr shifts are included, e.g. the
    qutrit's upper rung at omega2 + alpha2). The coherent pair exchange
    moves no energy only when |101> and |020> are degenerate, so this
    accounting is restricted to the exchange-resonant operating point.
    """
    from .hilbert import basis_index, make_space
    from .model import build_effective_hamiltonian
    from .thermo import CopResult

    space = make_space((2, 3, 2))
    energy = np.real(np.diag(build_effective_hamiltonian(space, params).matrix))
    e = {label: energy[basis_index(space, label)] for label in BASIS_LABELS}

    mismatch = abs(e[(1, 0, 1)] - e[(0, 2, 0)])
    scale = max(abs(e[(1, 0, 1)]), abs(e[(0, 2, 0)]), 1e-300)
    if params.three_body_rate != 0 and mismatch > resonance_tol * scale:
        raise ThermodynamicsError(
            "energy bookkeeping needs the exchange-resonant point; "
            f"|101>-|020> splitting is {mismatch:.3e} rad/s"
        )

    R = build_rate_matrix(rates, params.three_body_rate, variant)
    x = state.vector
    drift_norm = np.linalg.norm(R @ x)
    residual = drift_norm / (np.linalg.norm(R, 2) * np.linalg.norm(x))
    if residual > staleness_tol:
        raise StaleStateError(
            f"state is not steady: relative rate-matrix residual {residual:.3e}"
        )

    p = dict(zip(BASIS_LABELS, state.populations))
    q_dot_1 = (
        (e[(1, 0, 0)] - e[(0, 0, 0)])
        * (rates.gamma1_up * p[(0, 0, 0)] - rates.gamma1_down * p[(1, 0, 0)])
        + (e[(1, 0, 1)] - e[(0, 0, 1)])
        * (rates.gamma1_up * p[(0, 0, 1)] - rates.gamma1_down * p[(1, 0, 1)])
    )
    q_dot_2 = (
        (e[(0, 1, 0)] - e[(0, 0, 0)])
        * (rates.gamma2_up * p[(0, 0, 0)] - rates.gamma2_down * p[(0, 1, 0)])
        + (e[(0, 2, 0)] - e[(0, 1, 0)])
        * 2.0 * (rates.gamma2_up * p[(0, 1, 0)] - rates.gamma2_down * p[(0, 2, 0)])
    )
    q_dot_3 = (
        (e[(0, 0, 1)] - e[(0, 0, 0)])
        * (rates.gamma3_up * p[(0, 0, 0)] - rates.gamma3_down * p[(0, 0, 1)])
        + (e[(1, 0, 1)] - e[(1, 0, 0)])
        * (rates.gamma3_up * p[(1, 0, 0)] - rates.gamma3_down * p[(1, 0, 1)])
    )
    # The current sum equals the energy drift plus the (resonantly zero)
    # exchange term; floor the first-law check at the matching noise level.
    energy_span = max(abs(v) for v in e.values())
    gross = sum(
        g * pv * de
        for g, pv, de in (
            (rates.gamma1_up + rates.gamma1_down, 1.0, abs(e[(1, 0, 0)] - e[(0, 0, 0)])),
            (2 * (rates.gamma2_up + rates.gamma2_down), 1.0, abs(e[(0, 2, 0)] - e[(0, 1, 0)])),
            (rates.gamma3_up + rates.gamma3_down, 1.0, abs(e[(0, 0, 1)] - e[(0, 0, 0)])),
        )
    )
    atol = energy_span * drift_norm + 64 * np.finfo(float).eps * gross
    return CopResult(
        q_dot_1=q_dot_1,
        q_dot_2=q_dot_2,
        q_dot_3=q_dot_3,
        quanta_rate_1=q_dot_1 / params.omega1,
        quanta_rate_2=q_dot_2 / params.omega2,
        quanta_rate_3=q_dot_3 / params.omega3,
        first_law_atol=atol,
    )
