"""Memoryless two-party protocols and their matrix-sequence representation.

A protocol with ``t`` messages runs ``t + 1`` rounds.  Alice acts on odd
rounds and Bob on even ones; round ``j < t + 1`` sends message ``j`` and
the last round (Bob's, since ``t`` is odd) reads the answer off the final
message.  A round's behaviour is a function of the round number and the
acting player's input half only, so no state survives between rounds other
than the message itself.

Matrices use the row-vector convention: ``p' = p @ M``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .linalg import (
    DenseOp,
    PermutationOp,
    UnitaryOp,
    basis_state,
    embed_real,
    measure_qubit,
    num_qubits,
    qubit_mask,
    sqr_map,
)
from .qobdd import HybridProgram, decide_probability
from .subfunctions import CutPartition

Bits = tuple[int, ...]


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    """Apply ``op``, then (optionally) measure ``qubit``: outcome 1 accepts and stops."""

    op: UnitaryOp
    qubit: int | None = None


@dataclass(frozen=True)
class Behavior:
    pieces: tuple[Piece, ...]

    @property
    def measures(self) -> bool:
        return any(p.qubit is not None for p in self.pieces)

    def linear_map(self, dim: int) -> np.ndarray:
        """Column-convention matrix of the round with every measurement projected onto 0."""
        out = np.eye(dim, dtype=np.complex128)
        for piece in self.pieces:
            out = piece.op.to_dense() @ out
            if piece.qubit is not None:
                out[qubit_mask(dim, piece.qubit)] = 0
        return out


BehaviorSource = Callable[[int, Bits], Behavior]


@dataclass
class RoundTrace:
    incoming: np.ndarray
    outgoing: np.ndarray
    pr: float


@dataclass
class ProtocolRun:
    rounds: list[RoundTrace]
    accepted_mass: float
    final_mass: float

    @property
    def probability(self) -> float:
        return self.accepted_mass + self.final_mass


@dataclass
class MemorylessProtocol:
    partition: CutPartition
    t: int
    l: int
    source: BehaviorSource
    accept: frozenset[int]
    initial: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.t < 1 or self.t % 2 == 0:
            raise ProtocolError("the round structure needs an odd message count t = 2k - 1")
        if any(not 0 <= a < self.dim for a in self.accept):
            raise ProtocolError("accept index outside the message space")

    @property
    def dim(self) -> int:
        return 1 << self.l

    @property
    def k(self) -> int:
        return (self.t + 1) // 2

    @property
    def rounds(self) -> int:
        return self.t + 1

    @staticmethod
    def player(round_no: int) -> str:
        return "A" if round_no % 2 else "B"

    def behavior(self, round_no: int, half: Sequence[int]) -> Behavior:
        if not 1 <= round_no <= self.rounds:
            raise ProtocolError(f"round {round_no} outside 1..{self.rounds}")
        key = (round_no, tuple(int(b) for b in half))
        expected = self.partition.u if round_no % 2 else self.partition.n - self.partition.u
        if len(key[1]) != expected:
            raise ProtocolError(f"round {round_no} needs {expected} input bits")
        if key not in self._cache:
            self._cache[key] = self.source(*key)
        return self._cache[key]

    def run(self, sigma: Sequence[int], gamma: Sequence[int]) -> ProtocolRun:
        v = basis_state(self.dim, self.initial)
        acc = 0.0
        trace = []
        for j in range(1, self.rounds + 1):
            incoming = v
            pr = 0.0
            for piece in self.behavior(j, sigma if j % 2 else gamma).pieces:
                v = piece.op.apply(v)
                if piece.qubit is not None:
                    pr1, v, _ = measure_qubit(v, piece.qubit)
                    pr += pr1
            acc += pr
            trace.append(RoundTrace(incoming, v, pr))
        mask = np.zeros(self.dim, dtype=bool)
        mask[list(self.accept)] = True
        final = float(np.sum(np.abs(v[mask]) ** 2))
        return ProtocolRun(trace, acc, final)

    def probability(self, sigma: Sequence[int], gamma: Sequence[int]) -> float:
        return self.run(sigma, gamma).probability

    def probability_on(self, x: Sequence[int]) -> float:
        return self.probability(*self.partition.split(x))

    def tabulate(self, max_bits: int = 12) -> dict:
        """Serializable per-round behaviour tables; nothing else is stored."""
        u, n = self.partition.u, self.partition.n
        if max(u, n - u) > max_bits:
            raise ProtocolError("input halves too large to tabulate")
        tables = []
        for j in range(1, self.rounds + 1):
            size = u if j % 2 else n - u
            table = {}
            for half in itertools.product((0, 1), repeat=size):
                b = self.behavior(j, half)
                table["".join(map(str, half))] = [
                    {"op": _op_summary(piece.op), "measure": piece.qubit} for piece in b.pieces]
            tables.append({"round": j, "player": self.player(j), "behaviors": table})
        return {"theta": list(self.partition.theta), "u": u, "t": self.t, "l": self.l,
                "initial": self.initial, "accept": sorted(self.accept), "rounds": tables}


def _op_summary(op: UnitaryOp):
    if isinstance(op, PermutationOp):
        out = {"perm": op.perm.tolist()}
        if op.phase is not None:
            out["phase"] = [[z.real, z.imag] for z in op.phase.tolist()]
        return out
    return {"dense": [[[z.real, z.imag] for z in row] for row in op.to_dense().tolist()]}


def _compose(a: UnitaryOp | None, b: UnitaryOp) -> UnitaryOp:
    """``b`` after ``a``."""
    if a is None:
        return b
    if isinstance(a, PermutationOp) and isinstance(b, PermutationOp):
        return b.compose(a)
    return DenseOp(b.to_dense() @ a.to_dense())


def from_qobdd(p: HybridProgram, u: int) -> MemorylessProtocol:
    """Protocol with ``t = 2k - 1`` messages of ``log2 w`` qubits that emulates ``p``.

    Alice owns the first ``u`` variables of ``p.order``; in round ``2i - 1``
    she applies layer ``i``'s prefix and Bob applies its suffix in round ``2i``.
    """
    if p.c != 1:
        raise ProtocolError("emulation needs a purely quantum program (c = 1)")
    partition = CutPartition(p.order, u)
    l = num_qubits(p.w)
    measure_at = dict(p.measure)

    def source(round_no: int, half: Bits) -> Behavior:
        layer = (round_no - 1) // 2
        start = layer * p.n + (0 if round_no % 2 else u)
        stop = layer * p.n + (u if round_no % 2 else p.n)
        pieces = []
        op = None
        for idx in range(start, stop):
            bit = half[idx - start]
            step_op = p.steps[idx][bit].ops[0]
            if not step_op.is_identity:
                op = _compose(op, step_op)
            q = measure_at.get(idx)
            if q is not None:
                pieces.append(Piece(op or PermutationOp.identity(p.w), q))
                op = None
        if op is not None or not pieces:
            pieces.append(Piece(op or PermutationOp.identity(p.w)))
        return Behavior(tuple(pieces))

    accept = frozenset(p.accept)
    return MemorylessProtocol(partition, 2 * p.k - 1, l, source, accept, initial=p.initial_quantum)


# --------------------------------------------------------------------------
# matrix sequences

@dataclass
class MatrixSequence:
    p0: np.ndarray
    ms: list[np.ndarray]
    q: np.ndarray
    sides: tuple[str, ...]

    @property
    def size(self) -> int:
        return self.p0.shape[-1]

    def sigma_matrices(self) -> list[np.ndarray]:
        return [m for m, s in zip(self.ms, self.sides) if s == "A"]

    def gamma_matrices(self) -> list[np.ndarray]:
        return [m for m, s in zip(self.ms, self.sides) if s == "B"]


def _round_matrix(lin: np.ndarray, pr: float) -> np.ndarray:
    dim = lin.shape[0]
    m = np.zeros((dim + 2, dim + 2), dtype=np.complex128)
    m[:dim, :dim] = lin.T
    m[dim, dim] = 1.0
    m[dim, dim + 1] = pr
    m[dim + 1, dim + 1] = 1.0
    return m


def matrix_sequence(r: MemorylessProtocol, sigma: Sequence[int], gamma: Sequence[int]) -> MatrixSequence:
    """``p0(sigma)``, then ``M1(gamma), M1(sigma), ..., Mk(gamma)``, then ``q``.

    The ``pr`` entries are the accepted masses of the actual run on
    ``(sigma, gamma)``, so the product form is exact with measurements too.
    """
    trace = r.run(sigma, gamma).rounds
    dim = r.dim
    first = trace[0]
    p0 = np.concatenate([first.outgoing, [1.0, first.pr]]).astype(np.complex128)
    ms, sides = [], []
    for j in range(2, r.rounds + 1):
        half = sigma if j % 2 else gamma
        lin = r.behavior(j, half).linear_map(dim)
        ms.append(_round_matrix(lin, trace[j - 1].pr))
        sides.append(r.player(j))
    q = np.zeros(dim + 2)
    q[list(r.accept)] = 1.0
    q[dim + 1] = 1.0
    return MatrixSequence(p0, ms, q, tuple(sides))


def product_probability(seq: MatrixSequence) -> float:
    z = seq.p0
    for m in seq.ms:
        if m.shape != (z.size, z.size):
            raise ProtocolError(f"matrix of shape {m.shape} after a vector of length {z.size}")
        z = z @ m
    if seq.q.shape != (z.size,):
        raise ProtocolError("q length does not match the sequence")
    return float(sqr_map(z) @ seq.q)


@dataclass
class RealSequence:
    p0: np.ndarray
    ms: list[np.ndarray]
    q: np.ndarray
    sides: tuple[str, ...]


def real_embedded_sequence(seq: MatrixSequence) -> RealSequence:
    size = 2 * seq.size
    q = np.zeros((size, 2))
    q[0:size - 4:2, 0] = seq.q[:-2]
    q[1:size - 4:2, 0] = seq.q[:-2]
    q[size - 2:, 0] = 1.0
    return RealSequence(embed_real(seq.p0[None, :]), [embed_real(m) for m in seq.ms], q, seq.sides)


def real_sqr(z: np.ndarray) -> np.ndarray:
    """Squares on the message coordinates of each row, magnitudes on the last four."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    s = np.abs(z)
    s[:, :-4] = z[:, :-4] ** 2
    return s


def real_product_probability(seq: RealSequence) -> float:
    z = seq.p0
    for m in seq.ms:
        z = z @ m
    return float((real_sqr(z) @ seq.q)[0, 0])


# --------------------------------------------------------------------------
# delta-bucket experiment

def lemma3_delta(eps: float, k: int, l: int) -> float:
    return eps * 2.0 ** (-3 * k) * (2 ** l + 2) ** (-2 * k)


def lemma2_bound(delta: float, k: int, l: int) -> float:
    return 2.0 ** (3 * k - 1) * (2 ** l + 2) ** (2 * k) * delta


@dataclass
class BucketRow:
    sigma: str
    bucket: int
    gamma: str
    p_direct: float
    p_product: float
    gap: float
    bound: float


@dataclass
class BucketReport:
    delta: float
    eps: float
    bound: float
    sigmas: int
    buckets: int
    entries: int
    log2_ceiling: float
    pairs_checked: int
    gammas_per_pair: int
    gap_violations: int
    decision_conflicts: int
    max_gap: float
    rows: list[BucketRow]

    @property
    def ok(self) -> bool:
        return self.gap_violations == 0 and self.decision_conflicts == 0


def _bits(x: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in x)


def sigma_signature(r: MemorylessProtocol, sigma: Sequence[int], reference_gamma: Sequence[int]
                    ) -> np.ndarray:
    """All real-embedded entries of ``p0(sigma)`` and every ``M(sigma)``."""
    seq = real_embedded_sequence(matrix_sequence(r, sigma, reference_gamma))
    parts = [seq.p0.ravel()] + [m.ravel() for m, s in zip(seq.ms, seq.sides) if s == "A"]
    return np.concatenate(parts)


def delta_bucket_experiment(r: MemorylessProtocol, delta: float, eps: float,
                            sigmas: Iterable[Sequence[int]], gammas: Sequence[Sequence[int]],
                            max_pairs: int | None = None) -> BucketReport:
    """Group ``sigma`` by ``floor(entry / delta)`` and check same-bucket pairs on every ``gamma``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    sigmas = [tuple(s) for s in sigmas]
    gammas = [tuple(g) for g in gammas]
    if not sigmas or not gammas:
        raise ValueError("need at least one sigma and one gamma")
    ref = gammas[0]
    # with measurements the pr entries of M(sigma) would depend on gamma too
    if any(r.behavior(j, s).measures for s in sigmas for j in range(1, r.rounds + 1, 2)) or any(
            r.behavior(j, g).measures for g in gammas for j in range(2, r.rounds + 1, 2)):
        raise ProtocolError("bucketing needs a measurement-free protocol")

    buckets: dict[tuple[int, ...], list[Bits]] = {}
    entries = 0
    for s in sigmas:
        sig = sigma_signature(r, s, ref)
        entries = sig.size
        if np.any(np.abs(sig) > 1 + 1e-12):
            raise ProtocolError("embedded entry outside [-1, 1]")
        key = tuple(np.floor(sig / delta).astype(np.int64).tolist())
        buckets.setdefault(key, []).append(s)

    bound = lemma2_bound(delta, r.k, r.l)
    rows: list[BucketRow] = []
    pairs = 0
    violations = conflicts = 0
    max_gap = 0.0
    for bucket_id, members in enumerate(buckets.values()):
        for s1, s2 in itertools.combinations(members, 2):
            if max_pairs is not None and pairs >= max_pairs:
                break
            pairs += 1
            for g in gammas:
                p1 = r.probability(s1, g)
                p2 = r.probability(s2, g)
                gap = abs(p1 - p2)
                max_gap = max(max_gap, gap)
                if not gap < bound:
                    violations += 1
                for a, b in ((p1, p2), (p2, p1)):
                    strong = decide_probability(a, eps)
                    if strong is not None and decide_probability(b, eps / 2) != strong:
                        conflicts += 1
                product = product_probability(matrix_sequence(r, s1, g))
                rows.append(BucketRow(f"{_bits(s1)}|{_bits(s2)}", bucket_id, _bits(g), p1, product,
                                      gap, bound))
    log2_ceiling = entries * math.log2(math.ceil(2 / delta) + 1)
    return BucketReport(delta, eps, bound, len(sigmas), len(buckets), entries, log2_ceiling, pairs,
                        len(gammas), violations, conflicts, max_gap, rows)


def all_halves(size: int) -> list[Bits]:
    return list(itertools.product((0, 1), repeat=size))


__all__ = [
    "ProtocolError", "Piece", "Behavior", "MemorylessProtocol", "ProtocolRun", "RoundTrace",
    "from_qobdd", "MatrixSequence", "matrix_sequence", "product_probability", "RealSequence",
    "real_embedded_sequence", "real_sqr", "real_product_probability", "lemma2_bound",
    "lemma3_delta", "BucketReport", "BucketRow", "delta_bucket_experiment", "sigma_signature",
    "all_halves",
]
