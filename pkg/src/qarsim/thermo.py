"""Bath thermometry and steady-state thermodynamics.

Frequencies are plain Hz in the conversion helpers (they face config files
and axes labels); Hamiltonians and rates stay in rad/s. hbar = 1 internally,
so a heat current Tr(H L_i rho) carries units rad/s per second; the quanta
form divides by the mode frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, StaleStateError, StateInvariantError, ThermodynamicsError
from .hilbert import Operator
from .lindblad import DensityMatrix, DissipationChannel, apply_channel, build_liouvillian

if TYPE_CHECKING:  # pragma: no cover
    from .model import DeviceParams

__all__ = [
    "PLANCK_H",
    "BOLTZMANN_K",
    "BathConfig",
    "CopResult",
    "occupation_from_temperature",
    "temperature_from_occupation",
    "effective_temperature",
    "heat_currents",
    "cop",
    "carnot_cop",
]

# Exact SI defining constants.
PLANCK_H = 6.62607015e-34
BOLTZMANN_K = 1.380649e-23

FIRST_LAW_RTOL = 1e-8


@dataclass(frozen=True)
class BathConfig:
    """Synthesized bath occupations (on top of the residual floors)."""

    n_hot: float = 0.0
    n_cold: float = 0.0

    def __post_init__(self):
        if self.n_hot < 0 or self.n_cold < 0:
            raise ConfigurationError("bath occupations must be non-negative")


@dataclass(frozen=True)
class CopResult:
    """Steady-state heat currents and performance numbers.

    q_dot_i are in hbar = 1 power units; quanta_rate_i in quanta per second
    (filled when mode frequencies are known). cop and carnot are attached by
    the callers that know the operating temperatures.
    """

    q_dot_1: float
    q_dot_2: float
    q_dot_3: float
    quanta_rate_1: Optional[float] = None
    quanta_rate_2: Optional[float] = None
    quanta_rate_3: Optional[float] = None
    cop: Optional[float] = None
    carnot: Optional[float] = None
    # Numerical floor below which the current sum is indistinguishable from
    # zero (set by the producer from its state residual); near equilibrium
    # all currents are noise and a purely relative test would misfire.
    first_law_atol: float = 0.0

    def __post_init__(self):
        total = self.q_dot_1 + self.q_dot_2 + self.q_dot_3
        scale = max(abs(self.q_dot_1), abs(self.q_dot_2), abs(self.q_dot_3))
        if scale > 0 and abs(total) > max(FIRST_LAW_RTOL * scale, self.first_law_atol):
            raise StateInvariantError(
                f"first law violated: current sum {total:.3e} vs scale {scale:.3e}"
            )

    @property
    def first_law_residual(self) -> float:
        scale = max(abs(self.q_dot_1), abs(self.q_dot_2), abs(self.q_dot_3), 1e-300)
        return abs(self.q_dot_1 + self.q_dot_2 + self.q_dot_3) / scale

    def with_performance(self, cop_value: float, carnot_value: float) -> "CopResult":
        return replace(self, cop=cop_value, carnot=carnot_value)


def occupation_from_temperature(frequency_hz: float, temperature_k: float) -> float:
    """Bose-Einstein occupation of a mode at the given temperature."""
    if frequency_hz <= 0:
        raise ThermodynamicsError("frequency must be positive")
    if temperature_k <= 0:
        raise ThermodynamicsError("temperature must be positive")
    x = PLANCK_H * frequency_hz / (BOLTZMANN_K * temperature_k)
    return 1.0 / math.expm1(x)


def temperature_from_occupation(frequency_hz: float, occupation: float) -> float:
    """Inverse Bose-Einstein: temperature that yields a mean occupation."""
    if frequency_hz <= 0:
        raise ThermodynamicsError("frequency must be positive")
    if occupation <= 0:
        raise ThermodynamicsError("occupation must be positive")
    return (PLANCK_H * frequency_hz / BOLTZMANN_K) / math.log1p(1.0 / occupation)


def effective_temperature(frequency_hz: float, excited_population: float) -> float:
    """Two-level Boltzmann temperature of an excited-state population."""
    if frequency_hz <= 0:
        raise ThermodynamicsError("frequency must be positive")
    p = excited_population
    if not 0.0 < p < 0.5:
        raise ThermodynamicsError(
            f"population {p} outside (0, 0.5); inversion has no positive temperature"
        )
    return (PLANCK_H * frequency_hz / BOLTZMANN_K) / math.log((1.0 - p) / p)


def carnot_cop(t_target_k: float, t_cold_k: float, t_hot_k: float) -> float:
    """Carnot bound for an absorption refrigerator: T_T(T_H-T_C)/(T_H(T_C-T_T))."""
    if not t_hot_k > t_cold_k > t_target_k > 0:
        raise ThermodynamicsError(
            f"need T_hot > T_cold > T_target > 0, got {t_hot_k}, {t_cold_k}, {t_target_k}"
        )
    return t_target_k * (t_hot_k - t_cold_k) / (t_hot_k * (t_cold_k - t_target_k))


def heat_currents(
    H: Operator,
    channels: Sequence[DissipationChannel],
    rho_ss: DensityMatrix,
    params: Optional["DeviceParams"] = None,
    *,
    staleness_tol: float = 1e-8,
) -> CopResult:
    """Per-bath steady-state heat currents Q_i = Tr(H L_i(rho)).

    rho_ss must be stationary under the full generator built from H and the
    channels; a non-steady state raises rather than returning garbage.
    """
    if len(channels) != 3 or sorted(c.qudit for c in channels) != [1, 2, 3]:
        raise ConfigurationError("need exactly one channel per qudit 1, 2, 3")
    if rho_ss.space != H.space:
        raise ConfigurationError("state and Hamiltonian live on different spaces")

    liouv = build_liouvillian(H, channels)
    vec = rho_ss.matrix.reshape(-1, order="F")
    generator_norm = np.linalg.norm(liouv.matrix @ vec)
    residual = generator_norm / (np.linalg.norm(liouv.matrix, 2) * np.linalg.norm(vec))
    if residual > staleness_tol:
        raise StaleStateError(
            f"state is not steady: relative generator residual {residual:.3e}"
        )

    outputs = {c.qudit: apply_channel(H.space, c, rho_ss.matrix) for c in channels}
    currents = {i: float(np.trace(H.matrix @ out).real) for i, out in outputs.items()}
    # Tr(H [H, rho]) vanishes identically, so the current sum equals
    # Tr(H L(rho)); bound it by |H|_F |L(rho)|_F plus trace round-off.
    h_norm = np.linalg.norm(H.matrix)
    round_off = sum(np.linalg.norm(out) for out in outputs.values())
    atol = h_norm * (generator_norm + 64 * np.finfo(float).eps * round_off)
    quanta = (None, None, None)
    if params is not None:
        quanta = tuple(currents[i + 1] / params.omegas[i] for i in range(3))
    return CopResult(
        q_dot_1=currents[1],
        q_dot_2=currents[2],
        q_dot_3=currents[3],
        quanta_rate_1=quanta[0],
        quanta_rate_2=quanta[1],
        quanta_rate_3=quanta[2],
        first_law_atol=atol,
    )


def cop(currents: CopResult) -> float:
    """Coefficient of performance: target-bath current over hot-bath current."""
    if currents.q_dot_1 == 0:
        raise ThermodynamicsError("hot-bath current is zero; COP undefined")
    return currents.q_dot_3 / currents.q_dot_1
