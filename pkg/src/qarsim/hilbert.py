"""Truncated multi-qudit operator algebra.

Spaces are tensor products of small qudits, operators are dense complex
matrices. Qudit indices in the public API are 1-based (qudit 1 is the
leftmost tensor factor and the slowest-varying index in the product basis).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

__all__ = [
    "QuditSpace",
    "BasisLabel",
    "Operator",
    "make_space",
    "annihilation",
    "creation",
    "number_operator",
    "identity",
    "basis_projector",
    "basis_index",
]


@dataclass(frozen=True)
class QuditSpace:
    """An ordered tensor product of qudits with fixed truncation dims."""

    dims: tuple[int, ...]

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def n_qudits(self) -> int:
        return len(self.dims)

    def labels(self) -> list["BasisLabel"]:
        """All product-basis labels in index order."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1).T
        return [BasisLabel(tuple(int(q) for q in row)) for row in grids]


@dataclass(frozen=True)
class BasisLabel:
    """Occupation numbers of a product-basis state, e.g. (1, 0, 1) for |101>."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        if any(int(q) != q or q < 0 for q in self.occupations):
            raise DimensionError(f"occupations must be non-negative integers, got {self.occupations}")
        object.__setattr__(self, "occupations", tuple(int(q) for q in self.occupations))

    def __str__(self) -> str:
        return "|" + "".join(str(q) for q in self.occupations) + ">"


@dataclass(frozen=True)
class Operator:
    """A dense operator tied to its QuditSpace."""

    space: QuditSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.space.total_dim
        if mat.shape != (d, d):
            raise DimensionError(f"matrix shape {mat.shape} does not match space dim {d}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(np.linalg.norm(self.matrix), 1.0)
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= rtol * scale

    def _check_space(self, other: "Operator") -> None:
        if other.space != self.space:
            raise DimensionError("operators act on different spaces")

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)


def make_space(dims: Sequence[int]) -> QuditSpace:
    """Build a QuditSpace from per-qudit truncation dimensions (each >= 2)."""
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise DimensionError("need at least one qudit")
    if any(d < 2 for d in dims):
        raise DimensionError(f"every dimension must be >= 2, got {dims}")
    return QuditSpace(dims)


def _check_qudit_index(space: QuditSpace, i: int) -> int:
    if not 1 <= i <= space.n_qudits:
        raise DimensionError(f"qudit index {i} out of range 1..{space.n_qudits}")
    return i - 1


def _embed(space: QuditSpace, local: np.ndarray, site: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for j, d in enumerate(space.dims):
        out = np.kron(out, local if j == site else np.eye(d, dtype=complex))
    return out


def annihilation(space: QuditSpace, i: int) -> Operator:
    """Lowering operator of qudit i (1-based), sqrt(n) on the superdiagonal."""
    site = _check_qudit_index(space, i)
    d = space.dims[site]
    local = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    return Operator(space, _embed(space, local, site))


def creation(space: QuditSpace, i: int) -> Operator:
    return annihilation(space, i).dagger()


def number_operator(space: QuditSpace, i: int) -> Operator:
    a = annihilation(space, i)
    return a.dagger() @ a


def identity(space: QuditSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim, dtype=complex))


def basis_index(space: QuditSpace, label: BasisLabel | Iterable[int]) -> int:
    """Flat index of a product-basis label (qudit 1 slowest)."""
    occ = label.occupations if isinstance(label, BasisLabel) else tuple(int(q) for q in label)
    if len(occ) != space.n_qudits:
        raise DimensionError(f"label {occ} has wrong length for dims {space.dims}")
    idx = 0
    for q, d in zip(occ, space.dims):
        if not 0 <= q < d:
            raise DimensionError(f"occupation {q} exceeds truncation {d - 1}")
        idx = idx * d + q
    return idx


def basis_projector(space: QuditSpace, label: BasisLabel | Iterable[int]) -> Operator:
    """Rank-1 projector |label><label|."""
    idx = basis_index(space, label)
    mat = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    mat[idx, idx] = 1.0
    return Operator(space, mat)
