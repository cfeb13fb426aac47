"""Complex state vectors, unitary operators and the real-embedding helpers.

States are plain 1-d ``complex128`` numpy arrays.  Qubit ``i`` of an
``m``-qubit register is bit ``m - 1 - i`` of the basis index, so qubit 0 is
the most significant one and ``|a> (x) |b>`` has index ``a * dim(b) + b``.

Two operator representations are supported:

* :class:`PermutationOp` maps basis state ``i`` to ``phase[i] * |perm[i]>``
  and is applied in O(dim) with fancy indexing.
* :class:`DenseOp` wraps an explicit complex matrix.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

TOL = 1e-9


class DimensionError(ValueError):
    """Raised when operand sizes do not agree."""


class UnitaryOp:
    dim: int

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_identity(self) -> bool:
        return False


class PermutationOp(UnitaryOp):
    """Basis permutation with optional per-entry phases."""

    __slots__ = ("dim", "perm", "phase", "_identity")

    def __init__(self, perm: Sequence[int], phase: Sequence[complex] | None = None):
        perm = np.asarray(perm, dtype=np.int64)
        if perm.ndim != 1 or perm.size == 0:
            raise ValueError("permutation must be a non-empty 1-d index map")
        dim = perm.size
        seen = np.zeros(dim, dtype=bool)
        if perm.min() < 0 or perm.max() >= dim:
            raise ValueError("permutation entries out of range")
        seen[perm] = True
        if not seen.all():
            raise ValueError("permutation map is not a bijection")
        if phase is not None:
            phase = np.asarray(phase, dtype=np.complex128)
            if phase.shape != (dim,):
                raise DimensionError("phase vector must match permutation length")
            if not np.allclose(np.abs(phase), 1.0, atol=TOL, rtol=0):
                raise ValueError("phases must have unit modulus")
            if np.all(phase == 1):
                phase = None
        self.dim = dim
        self.perm = perm
        self.phase = phase
        self._identity = phase is None and bool(np.all(perm == np.arange(dim)))

    @classmethod
    def identity(cls, dim: int) -> "PermutationOp":
        return cls(np.arange(dim))

    @property
    def is_identity(self) -> bool:
        return self._identity

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.dim,):
            raise DimensionError(f"operator of dim {self.dim} applied to vector of shape {v.shape}")
        if self._identity:
            return v.copy()
        out = np.empty_like(v)
        out[self.perm] = v if self.phase is None else v * self.phase
        return out

    def compose(self, first: "PermutationOp") -> "PermutationOp":
        """Return ``self @ first`` (``first`` is applied first)."""
        if first.dim != self.dim:
            raise DimensionError("cannot compose operators of different dimension")
        perm = self.perm[first.perm]
        if self.phase is None and first.phase is None:
            return PermutationOp(perm)
        ph_first = np.ones(self.dim, complex) if first.phase is None else first.phase
        ph_self = np.ones(self.dim, complex) if self.phase is None else self.phase
        return PermutationOp(perm, ph_first * ph_self[first.perm])

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=np.complex128)
        m[self.perm, np.arange(self.dim)] = 1 if self.phase is None else self.phase
        return m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PermutationOp) or other.dim != self.dim:
            return NotImplemented
        if not np.array_equal(self.perm, other.perm):
            return False
        a = np.ones(self.dim, complex) if self.phase is None else self.phase
        b = np.ones(self.dim, complex) if other.phase is None else other.phase
        return bool(np.array_equal(a, b))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"PermutationOp(dim={self.dim}, identity={self._identity})"


class DenseOp(UnitaryOp):
    __slots__ = ("dim", "matrix")

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("dense operator must be a square matrix")
        self.dim = matrix.shape[0]
        self.matrix = matrix

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.dim,):
            raise DimensionError(f"operator of dim {self.dim} applied to vector of shape {v.shape}")
        return self.matrix @ v

    def to_dense(self) -> np.ndarray:
        return self.matrix.copy()

    def __repr__(self) -> str:
        return f"DenseOp(dim={self.dim})"


def apply(op: UnitaryOp, v: np.ndarray) -> np.ndarray:
    return op.apply(np.asarray(v, dtype=np.complex128))


def is_unitary(op: UnitaryOp, tol: float = TOL) -> bool:
    if isinstance(op, PermutationOp):
        # bijectivity and unit phases are checked at construction
        return True
    m = op.to_dense()
    return bool(np.allclose(m @ m.conj().T, np.eye(op.dim), atol=tol, rtol=0))


def random_unitary(dim: int, rng: np.random.Generator) -> DenseOp:
    """Haar-ish unitary from the QR decomposition of a complex Gaussian matrix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return DenseOp(q * (d / np.abs(d)))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def basis_state(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def num_qubits(dim: int) -> int:
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def qubit_mask(dim: int, i: int) -> np.ndarray:
    """Boolean mask of basis states whose qubit ``i`` is 1."""
    m = num_qubits(dim)
    if not 0 <= i < m:
        raise IndexError(f"qubit {i} out of range for {m} qubits")
    return ((np.arange(dim) >> (m - 1 - i)) & 1).astype(bool)


def measure_qubit(v: np.ndarray, i: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Return ``(pr1, proj0, proj1)``; projections are left unnormalised."""
    v = np.asarray(v, dtype=np.complex128)
    ones = qubit_mask(v.size, i)
    proj1 = np.where(ones, v, 0)
    proj0 = np.where(ones, 0, v)
    pr1 = float(np.sum(np.abs(proj1) ** 2))
    return pr1, proj0, proj1


def sqr_map(z: Sequence[complex]) -> np.ndarray:
    """Squared magnitudes on the message coordinates, plain magnitudes on the last two."""
    z = np.asarray(z, dtype=np.complex128)
    size = z.size - 2
    if size < 1 or size & (size - 1):
        raise DimensionError(f"length {z.size} is not 2^l + 2")
    s = np.abs(z)
    s[:size] = z[:size].real ** 2 + z[:size].imag ** 2
    return s


def embed_real(m) -> np.ndarray:
    """Replace every complex entry ``a + bi`` by the block ``[[a, b], [-b, a]]``."""
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    rows, cols = m.shape
    out = np.empty((2 * rows, 2 * cols))
    out[0::2, 0::2] = m.real
    out[0::2, 1::2] = m.imag
    out[1::2, 0::2] = -m.imag
    out[1::2, 1::2] = m.real
    return out


def delta_close(a, b, delta: float) -> bool:
    """Entrywise ``|p - p'| < delta`` with every entry inside ``[-1, 1]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    in_range = np.all(np.abs(a) <= 1) and np.all(np.abs(b) <= 1)
    return bool(in_range and np.all(np.abs(a - b) < delta))


def sample_delta_close(shape, delta: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw a pair of ``delta``-close arrays with entries in ``[-1, 1]``."""
    a = rng.uniform(-1, 1, size=shape)
    b = np.clip(a + rng.uniform(-delta, delta, size=shape), -1, 1)
    # uniform(-delta, delta) is half-open; force strictness for the boundary draw
    b = np.where(np.abs(a - b) < delta, b, a)
    return a, b


def log2_ceil(x: int) -> int:
    if x < 1:
        raise ValueError("log2_ceil needs a positive integer")
    return (x - 1).bit_length()


def norm_sq(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def is_power_of_two(x: int) -> bool:
    return x >= 1 and not x & (x - 1)


__all__ = [
    "TOL",
    "DimensionError",
    "UnitaryOp",
    "PermutationOp",
    "DenseOp",
    "apply",
    "is_unitary",
    "random_unitary",
    "random_state",
    "basis_state",
    "num_qubits",
    "qubit_mask",
    "measure_qubit",
    "sqr_map",
    "embed_real",
    "delta_close",
    "sample_delta_close",
    "log2_ceil",
    "norm_sq",
    "is_power_of_two",
]
