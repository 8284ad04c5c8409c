"""Open-system dynamics: dissipators, Liouvillians, evolution, steady states.

Superoperators are dense matrices acting on column-stacked density matrices
(vec in Fortran order, so vec(A X B) = (B^T kron A) vec(X)). All generators
here are time independent, which permits a matrix-exponential stepping
backend next to the adaptive integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    ConfigurationError,
    DegenerateSteadyStateError,
    DimensionError,
    IntegrationError,
    StateInvariantError,
)
from .hilbert import Operator, QuditSpace, annihilation, basis_index

__all__ = [
    "DensityMatrix",
    "DissipationChannel",
    "Liouvillian",
    "dissipator",
    "build_liouvillian",
    "apply_channel",
    "evolve",
    "steady_state",
    "thermal_state",
    "basis_state",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class DensityMatrix:
    """A physical state; construction enforces the state invariants."""

    space: QuditSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if mat.shape != (d, d):
            raise DimensionError(f"state shape {mat.shape} does not match space dim {d}")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise StateInvariantError(f"state not Hermitian: max asymmetry {herm:.3e}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateInvariantError(f"state trace {tr!r} deviates from 1 beyond {TRACE_TOL}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)).min())
        if min_eig < POSITIVITY_TOL:
            raise StateInvariantError(f"state has eigenvalue {min_eig:.3e} below {POSITIVITY_TOL}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def population(self, label) -> float:
        """Diagonal element of a product-basis state."""
        idx = basis_index(self.space, label)
        return float(self.matrix[idx, idx].real)

    def expectation(self, op: Operator) -> complex:
        return complex(np.trace(op.matrix @ self.matrix))


@dataclass(frozen=True)
class DissipationChannel:
    """A thermal waveguide coupled to one qudit.

    qudit is 1-based; rate is the base coupling (rad/s); n_total is the full
    occupation seen by the qudit (synthesized plus residual).
    """

    qudit: int
    rate: float
    n_total: float

    def __post_init__(self):
        if self.qudit < 1:
            raise ConfigurationError(f"qudit index must be >= 1, got {self.qudit}")
        if self.rate < 0:
            raise ConfigurationError("channel rate must be non-negative")
        if self.n_total < 0:
            raise ConfigurationError("channel occupation must be non-negative")


@dataclass(frozen=True)
class Liouvillian:
    """Dense superoperator over a space."""

    space: QuditSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d2 = self.space.total_dim ** 2
        if mat.shape != (d2, d2):
            raise DimensionError(f"superoperator shape {mat.shape}, expected {(d2, d2)}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.space.total_dim
        return (self.matrix @ rho.reshape(-1, order="F")).reshape(d, d, order="F")


def dissipator(A: Operator, B: Operator) -> Operator:
    """D[A] applied to B: A B A+ - (A+A B + B A+A)/2."""
    if A.space != B.space:
        raise DimensionError("dissipator operands live on different spaces")
    a, b = A.matrix, B.matrix
    ada = a.conj().T @ a
    return Operator(A.space, a @ b @ a.conj().T - 0.5 * (ada @ b + b @ ada))


def _dissipator_super(jump: np.ndarray) -> np.ndarray:
    d = jump.shape[0]
    eye = np.eye(d, dtype=complex)
    jdj = jump.conj().T @ jump
    return (
        np.kron(jump.conj(), jump)
        - 0.5 * np.kron(eye, jdj)
        - 0.5 * np.kron(jdj.T, eye)
    )


def _channel_jumps(space: QuditSpace, channel: DissipationChannel):
    """(rate, jump operator) pairs of a thermal channel, zero rates dropped."""
    a = annihilation(space, channel.qudit).matrix
    pairs = []
    down = channel.rate * (channel.n_total + 1.0)
    up = channel.rate * channel.n_total
    if down > 0:
        pairs.append((down, a))
    if up > 0:
        pairs.append((up, a.conj().T))
    return pairs


def apply_channel(space: QuditSpace, channel: DissipationChannel, rho: np.ndarray) -> np.ndarray:
    """Action of one thermal channel on a state, in matrix form."""
    out = np.zeros_like(rho, dtype=complex)
    for rate, jump in _channel_jumps(space, channel):
        jdj = jump.conj().T @ jump
        out += rate * (jump @ rho @ jump.conj().T - 0.5 * (jdj @ rho + rho @ jdj))
    return out


def build_liouvillian(H: Operator, channels: Sequence[DissipationChannel]) -> Liouvillian:
    """Generator rho -> -i[H, rho] + sum_i rate_i {(n+1) D[a_i] + n D[a_i+]}.

    With every occupation zero this is the plain zero-temperature form.
    """
    space = H.space
    d = space.total_dim
    eye = np.eye(d, dtype=complex)
    h = H.matrix
    L = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for channel in channels:
        if channel.qudit > space.n_qudits:
            raise DimensionError(
                f"channel on qudit {channel.qudit} but space has {space.n_qudits}"
            )
        for rate, jump in _channel_jumps(space, channel):
            L += rate * _dissipator_super(jump)
    return Liouvillian(space, L)


def _check_times(times: Sequence[float]) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ConfigurationError("times must be a non-empty 1-D sequence")
    if t[0] < 0:
        raise ConfigurationError("times must start at or after 0")
    if np.any(np.diff(t) < 0):
        raise ConfigurationError("times must be sorted ascending")
    return t


def evolve(
    rho0: DensityMatrix,
    liouvillian: Liouvillian,
    times: Sequence[float],
    *,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    method: str = "adaptive",
) -> list[DensityMatrix]:
    """Propagate rho0 (the state at t = 0) to each requested time.

    method "adaptive" integrates with an explicit Runge-Kutta scheme under
    step-size control; "expm" applies cached matrix exponentials per step,
    exact for this time-independent generator. Output states are validated,
    so trace/Hermiticity/positivity drift beyond tolerance aborts the run.
    """
    t = _check_times(times)
    if rho0.space != liouvillian.space:
        raise DimensionError("state and Liouvillian live on different spaces")
    d = rho0.space.total_dim
    v0 = rho0.matrix.reshape(-1, order="F")

    if method == "expm":
        vs = []
        v = v0
        prev_t = 0.0
        cache: dict[float, np.ndarray] = {}
        for tk in t:
            dt = tk - prev_t
            if dt > 0:
                step = cache.get(dt)
                if step is None:
                    step = expm(liouvillian.matrix * dt)
                    cache[dt] = step
                v = step @ v
            prev_t = tk
            vs.append(v)
    elif method == "adaptive":
        if t[-1] == 0.0:
            vs = [v0 for _ in t]
        else:
            lmat = liouvillian.matrix
            sol = solve_ivp(
                lambda _t, y: lmat @ y,
                (0.0, float(t[-1])),
                v0,
                t_eval=t,
                method="DOP853",
                rtol=rtol,
                atol=atol,
            )
            if not sol.success:
                t_last = float(sol.t[-1]) if sol.t.size else 0.0
                raise IntegrationError(f"integrator stalled: {sol.message}", t_last)
            vs = [sol.y[:, k] for k in range(sol.y.shape[1])]
    else:
        raise ConfigurationError(f"unknown evolve method {method!r}")

    return [DensityMatrix(rho0.space, v.reshape(d, d, order="F")) for v in vs]


def steady_state(liouvillian: Liouvillian, *, degeneracy_tol: float = 1e-8) -> DensityMatrix:
    """Null vector of the generator, trace-normalized and Hermitized.

    Raises if the kernel is not one-dimensional within tolerance.
    """
    lmat = liouvillian.matrix
    _u, s, vh = np.linalg.svd(lmat)
    if s[0] == 0:
        raise DegenerateSteadyStateError("zero generator has no unique steady state")
    if s[-2] / s[0] < degeneracy_tol:
        raise DegenerateSteadyStateError(
            f"steady state not unique: second singular value ratio {s[-2] / s[0]:.3e}"
        )
    d = liouvillian.space.total_dim
    rho = vh[-1].conj().reshape(d, d, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-14:
        raise DegenerateSteadyStateError("null vector is traceless, not a state")
    rho = rho / tr
    residual = np.linalg.norm(lmat @ rho.reshape(-1, order="F")) / (s[0] * np.linalg.norm(rho))
    if residual > 1e-10:
        raise DegenerateSteadyStateError(f"steady-state residual {residual:.3e} too large")
    return DensityMatrix(liouvillian.space, rho)


def thermal_state(space: QuditSpace, occupations: Iterable[float]) -> DensityMatrix:
    """Product of single-qudit Gibbs states at the given mean occupations."""
    occs = list(occupations)
    if len(occs) != space.n_qudits:
        raise DimensionError("one occupation per qudit required")
    mat = np.array([[1.0 + 0j]])
    for d, n in zip(space.dims, occs):
        if n < 0:
            raise ConfigurationError("occupation must be non-negative")
        if n == 0:
            p = np.zeros(d)
            p[0] = 1.0
        else:
            ratio = n / (n + 1.0)
            p = ratio ** np.arange(d)
            p /= p.sum()
        mat = np.kron(mat, np.diag(p.astype(complex)))
    return DensityMatrix(space, mat)


def basis_state(space: QuditSpace, label) -> DensityMatrix:
    idx = basis_index(space, label)
    mat = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    mat[idx, idx] = 1.0
    return DensityMatrix(space, mat)
