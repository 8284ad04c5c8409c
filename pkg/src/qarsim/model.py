"""Device parameterization and Hamiltonian construction.

Angular frequencies (rad/s) everywhere in this layer; the CLI converts from
Hz at the config boundary. The default parameter set is the measured device:
a 5.327 GHz qubit and a 3.725 GHz target qubit bridged by a flux-tunable
qutrit, with a 3.2 MHz pair-exchange ("three-body") coupling between |101>
and |020|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DimensionError
from .hilbert import (
    Operator,
    QuditSpace,
    annihilation,
    basis_index,
    number_operator,
)
from .thermo import occupation_from_temperature

__all__ = [
    "DeviceParams",
    "DriveSpec",
    "resonance_frequency",
    "build_bare_hamiltonian",
    "build_effective_hamiltonian",
    "build_driven_hamiltonian",
    "corotating_effective_hamiltonian",
    "BASE_TEMPERATURE_K",
    "RESIDUAL_TARGET_P0",
]

TWO_PI = 2.0 * math.pi

# Cryostat base temperature and the target qubit's residual excited
# population, which together fix the default residual occupations.
BASE_TEMPERATURE_K = 0.045
RESIDUAL_TARGET_P0 = 0.028


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of the three-qudit refrigerator.

    Qudit 1 couples to the hot waveguide, qudit 2 (the qutrit) to the cold
    waveguide, qudit 3 is the reset target. ``three_body_rate`` is the
    coherent |101>-|020> exchange rate. ``g12``/``g23`` are bare two-body
    couplings used only for bare-Hamiltonian cross-checks; the measured
    device has no published values, so they default to None.
    """

    omega1: float
    omega2: float
    omega3: float
    alpha1: float
    alpha2: float
    alpha3: float
    gamma1: float
    gamma2: float
    t_relax: float
    three_body_rate: float
    n_res1: float
    n_res2: float
    n_res3: float
    g12: Optional[float] = None
    g23: Optional[float] = None
    cross_kerr: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("omega1", "omega2", "omega3"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("gamma1", "gamma2", "three_body_rate"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.t_relax <= 0:
            raise ConfigurationError("t_relax must be positive")
        for name in ("n_res1", "n_res2", "n_res3"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.cross_kerr is not None:
            kerr = np.asarray(self.cross_kerr, dtype=float)
            if kerr.shape != (3, 3):
                raise ConfigurationError(f"cross_kerr must be 3x3, got {kerr.shape}")
            kerr = kerr.copy()
            kerr.setflags(write=False)
            object.__setattr__(self, "cross_kerr", kerr)

    @property
    def gamma3(self) -> float:
        """Target relaxation rate, fixed by the measured relaxation time."""
        return 1.0 / self.t_relax

    @property
    def alphas(self) -> tuple[float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3)

    @property
    def omegas(self) -> tuple[float, float, float]:
        return (self.omega1, self.omega2, self.omega3)

    def resolved_kerr(self) -> np.ndarray:
        """Kerr matrix with the default filled in: diag = anharmonicities."""
        if self.cross_kerr is not None:
            return np.asarray(self.cross_kerr, dtype=float)
        return np.diag(self.alphas)

    def replace(self, **updates) -> "DeviceParams":
        return replace(self, **updates)

    @classmethod
    def default(cls) -> "DeviceParams":
        """Measured device values; the qutrit parked at its resonant frequency."""
        omega1 = TWO_PI * 5.327e9
        omega3 = TWO_PI * 3.725e9
        alpha2 = TWO_PI * -205.1e6
        omega2 = (omega1 + omega3 - alpha2) / 2.0
        return cls(
            omega1=omega1,
            omega2=omega2,
            omega3=omega3,
            alpha1=TWO_PI * -213.4e6,
            alpha2=alpha2,
            alpha3=TWO_PI * -237.8e6,
            gamma1=TWO_PI * 70e3,
            gamma2=TWO_PI * 7.2e6,
            t_relax=16.8e-6,
            three_body_rate=TWO_PI * 3.2e6,
            n_res1=occupation_from_temperature(omega1 / TWO_PI, BASE_TEMPERATURE_K),
            n_res2=occupation_from_temperature(omega2 / TWO_PI, BASE_TEMPERATURE_K),
            n_res3=RESIDUAL_TARGET_P0 / (1.0 - 2.0 * RESIDUAL_TARGET_P0),
        )


@dataclass(frozen=True)
class DriveSpec:
    """A flat coherent drive on qudit 1: frequency, rate, and duration."""

    omega_drive: float
    rabi_rate: float
    duration: float

    def __post_init__(self):
        if self.rabi_rate < 0:
            raise ConfigurationError("rabi_rate must be non-negative")
        if self.duration < 0:
            raise ConfigurationError("duration must be non-negative")


def resonance_frequency(params: DeviceParams) -> float:
    """Qutrit frequency at which |101> and |020> are degenerate.

    From equating the diagonal energies omega1 + omega3 = 2*omega2 + alpha2.
    """
    return (params.omega1 + params.omega3 - params.alpha2) / 2.0


def _require_three_qudits(space: QuditSpace) -> None:
    if space.n_qudits != 3:
        raise ConfigurationError(f"device model needs 3 qudits, space has {space.n_qudits}")


def _number_ops(space: QuditSpace) -> list[np.ndarray]:
    return [number_operator(space, i + 1).matrix for i in range(3)]


def _kerr_terms(space: QuditSpace, kerr: np.ndarray) -> np.ndarray:
    """Normal-ordered self-Kerr plus n_i n_j cross-Kerr."""
    d = space.total_dim
    ops = [annihilation(space, i + 1).matrix for i in range(3)]
    nums = [op.conj().T @ op for op in ops]
    out = np.zeros((d, d), dtype=complex)
    for i in range(3):
        a = ops[i]
        out += 0.5 * kerr[i, i] * (a.conj().T @ a.conj().T @ a @ a)
        for j in range(3):
            if i != j:
                out += 0.5 * kerr[i, j] * (nums[i] @ nums[j])
    return out


def _exchange_term(space: QuditSpace, rate: float) -> np.ndarray:
    """rate * (|101><020| + |020><101|), the three-body coupling."""
    d = space.total_dim
    out = np.zeros((d, d), dtype=complex)
    if rate == 0.0:
        return out
    try:
        i_exc = basis_index(space, (1, 0, 1))
        i_pair = basis_index(space, (0, 2, 0))
    except DimensionError as exc:
        raise ConfigurationError(
            "truncation too small for the |101>-|020> exchange term"
        ) from exc
    out[i_exc, i_pair] = rate
    out[i_pair, i_exc] = rate
    return out


def build_bare_hamiltonian(space: QuditSpace, params: DeviceParams) -> Operator:
    """Uncoupled qudits plus nearest-neighbour hopping g12, g23.

    Diagnostic only; g12 and g23 have no measured values and must be set
    explicitly.
    """
    _require_three_qudits(space)
    if params.g12 is None or params.g23 is None:
        raise ConfigurationError("bare Hamiltonian needs explicit g12 and g23")
    nums = _number_ops(space)
    mat = sum(w * n for w, n in zip(params.omegas, nums))
    mat = mat + _kerr_terms(space, np.diag(params.alphas))
    ops = [annihilation(space, i + 1).matrix for i in range(3)]
    mat += params.g12 * (ops[0].conj().T @ ops[1] + ops[1].conj().T @ ops[0])
    mat += params.g23 * (ops[1].conj().T @ ops[2] + ops[2].conj().T @ ops[1])
    return Operator(space, mat)


def build_effective_hamiltonian(space: QuditSpace, params: DeviceParams) -> Operator:
    """Dressed-mode Hamiltonian: numbers, Kerr, and the pair-exchange term."""
    _require_three_qudits(space)
    nums = _number_ops(space)
    mat = sum(w * n for w, n in zip(params.omegas, nums))
    mat = mat + _kerr_terms(space, params.resolved_kerr())
    mat += _exchange_term(space, params.three_body_rate)
    return Operator(space, mat)


def build_driven_hamiltonian(
    space: QuditSpace,
    params: DeviceParams,
    drive: DriveSpec,
    convention: str = "physical",
) -> Operator:
    """Effective Hamiltonian in the frame that rotates at the drive frequency.

    The drive (rabi_rate/2)(a1 + a1+) acts on qudit 1. ``convention``
    selects the detuning sign: "physical" uses delta_i = omega_i - omega_d,
    under which Omega = 0 and omega_d = omega_1 reduce to the rotating-frame
    effective Hamiltonian and the |101>-|020> channel stays resonant;
    "as_printed" uses delta_i = omega_d - omega_i, which with an unflipped
    Kerr term displaces the pair crossing by 2*alpha2 and closes the channel.
    """
    _require_three_qudits(space)
    if convention not in ("physical", "as_printed"):
        raise ConfigurationError(f"unknown detuning convention {convention!r}")
    sign = 1.0 if convention == "physical" else -1.0
    nums = _number_ops(space)
    mat = sum(sign * (w - drive.omega_drive) * n for w, n in zip(params.omegas, nums))
    mat = mat + _kerr_terms(space, params.resolved_kerr())
    mat += _exchange_term(space, params.three_body_rate)
    a1 = annihilation(space, 1).matrix
    mat += 0.5 * drive.rabi_rate * (a1 + a1.conj().T)
    return Operator(space, mat)


def corotating_effective_hamiltonian(space: QuditSpace, params: DeviceParams) -> Operator:
    """Effective Hamiltonian minus a frame term, for fast integration.

    Subtracts nu . n with nu = (omega1, (omega1+omega3)/2, omega3). The frame
    generator commutes with every thermal dissipator (jump operators pick up
    a pure phase) and with the exchange term (nu1 + nu3 = 2*nu2), so
    populations and the |101>-|020> coherence evolve exactly as in the lab
    frame while the diagonal drops from GHz to MHz scale.
    """
    _require_three_qudits(space)
    nu = (params.omega1, 0.5 * (params.omega1 + params.omega3), params.omega3)
    nums = _number_ops(space)
    h_eff = build_effective_hamiltonian(space, params).matrix
    frame = sum(v * n for v, n in zip(nu, nums))
    return Operator(space, h_eff - frame)
