"""Gate-level builders for the exact pointer-jumping programs.

Every gate is a controlled NOT written as an index permutation, so the
programs run on the permutation fast path and accept with probability
exactly 0 or 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functions import BlockEncoding, XrpjLayout
from .linalg import PermutationOp, is_power_of_two, log2_ceil
from .qobdd import HybridProgram, Transition, xor_reorder_transform

MAX_QUANTUM_WIDTH = 1 << 20


class BuildError(ValueError):
    pass


def controlled_not(num_qubits: int, target: int, control: tuple[int, int, int] | None = None,
                   ) -> PermutationOp:
    """NOT on ``target``, optionally conditioned on ``register(start, size) == value``."""
    dim = 1 << num_qubits
    idx = np.arange(dim, dtype=np.int64)
    flip = np.int64(1) << (num_qubits - 1 - target)
    if control is None:
        return PermutationOp(idx ^ flip)
    start, size, value = control
    reg = (idx >> (num_qubits - start - size)) & ((1 << size) - 1)
    return PermutationOp(np.where(reg == value, idx ^ flip, idx))


def register_value(index: int, num_qubits: int, start: int, size: int) -> int:
    return (index >> (num_qubits - start - size)) & ((1 << size) - 1)


def _require_power_of_two(d: int) -> int:
    if d < 2 or not is_power_of_two(d):
        raise BuildError(f"d must be a power of two >= 2, got d={d}")
    return log2_ceil(d)


@dataclass(frozen=True)
class MxpjBuildParams:
    d: int
    k: int

    @property
    def t(self) -> int:
        return _require_power_of_two(self.d)


def build_mxpj_program(params: MxpjBuildParams) -> HybridProgram:
    """Width-d^2 exact program for the XOR pointer-jumping function.

    Registers ``phi`` (qubits 0..t-1) and ``psi`` (qubits t..2t-1).  Layer r
    XORs the A-block pointed to by ``psi`` into ``phi`` and then the B-block
    pointed to by ``phi`` into ``psi``; layer 1 stores ``a_{1,1}`` directly.
    """
    d, k = params.d, params.k
    t = params.t
    if k < 1:
        raise BuildError("k must be at least 1")
    nq = 2 * t
    w = 1 << nq
    enc = BlockEncoding(d, k)
    ident = Transition.identity(w)
    layer_steps: list[list] = []
    for r in range(k):
        steps = [(ident, ident)] * enc.n
        for j in range(d):
            for m in range(t):
                if r == 0:
                    op = controlled_not(nq, m) if j == 0 else None
                else:
                    op = controlled_not(nq, m, control=(t, t, j))
                if op is not None:
                    steps[enc.block_offset("A", r, j) + m] = (ident, Transition.of(op))
                op = controlled_not(nq, t + m, control=(0, t, j))
                steps[enc.block_offset("B", r, j) + m] = (ident, Transition.of(op))
        layer_steps.append(steps)
    accept = frozenset(i for i in range(w) if bin(register_value(i, nq, t, t)).count("1") % 2)
    return HybridProgram(enc.n, w, k, tuple(range(1, enc.n + 1)),
                         [s for layer in layer_steps for s in layer], accept,
                         meta={"builder": "mxpj", "params": {"d": d, "k": k}})


@dataclass(frozen=True)
class PjBuildParams:
    d: int
    k: int
    bit_order: str = "msb"

    @property
    def t(self) -> int:
        return _require_power_of_two(self.d)

    @property
    def num_qubits(self) -> int:
        return 2 * self.k * (self.t + 1) + 1


def pj_initial_state(params: PjBuildParams) -> int:
    """Basis index with the side qubit of every odd group set."""
    g = params.t + 1
    nq = params.num_qubits
    index = 0
    for group in range(1, 2 * params.k, 2):
        index |= 1 << (nq - 1 - (group * g + params.t))
    return index


def build_pj_program(params: PjBuildParams) -> HybridProgram:
    """Commutative exact program with ``2k`` layers over ``2k + 1`` qubit groups.

    Group ``r`` holds vertex ``f^(r)(0)`` as (local index, side qubit).  Layer
    ``r < 2k`` copies the block pointed to by group ``r-1`` into group ``r``;
    layer ``2k`` XORs every bit of the block pointed to by group ``2k-1`` into
    the final single qubit.  Accepts iff that qubit is 1, i.e. it computes the
    parity of ``f^(2k)(0)``.
    """
    d, k = params.d, params.k
    t = params.t
    if k < 1:
        raise BuildError("k must be at least 1")
    nq = params.num_qubits
    if nq > 20:
        raise BuildError(f"quantum width 2^{nq} exceeds the 2^20 guard")
    w = 1 << nq
    g = t + 1
    enc = BlockEncoding(d, 1, bit_order=params.bit_order)
    ident = Transition.identity(w)

    def local_qubit(m: int) -> int:
        return m if params.bit_order == "msb" else t - 1 - m

    def vertex_value(i: int) -> int:
        return ((i % d) << 1) | (i // d)

    steps = []
    for r in range(1, 2 * k + 1):
        control_group = r - 1
        side = 0 if r % 2 else 1
        for i in range(2 * d):
            active = (i // d) == side
            control = (control_group * g, g, vertex_value(i))
            for m in range(t):
                if not active:
                    steps.append((ident, ident))
                    continue
                target = r * g + local_qubit(m) if r < 2 * k else nq - 1
                steps.append((ident, Transition.of(controlled_not(nq, target, control))))
    accept = frozenset(i for i in range(w) if i & 1)
    return HybridProgram(enc.n, w, 2 * k, tuple(range(1, enc.n + 1)), steps, accept,
                         initial_quantum=pj_initial_state(params),
                         meta={"builder": "pj", "params": {"d": d, "k": k, "bit_order": params.bit_order}})


def build_xrpj_program(d: int, k: int) -> HybridProgram:
    """xor-reordered PJ program; computes the XRPJ function with ``2k - 1`` jumps."""
    base = build_pj_program(PjBuildParams(d, k, bit_order="lsb"))
    layout = XrpjLayout(d)
    p = xor_reorder_transform(base, layout)
    p.meta = {"builder": "xrpj", "params": {"d": d, "k": k}}
    return p


BUILDERS = {
    "mxpj": lambda d, k: build_mxpj_program(MxpjBuildParams(d, k)),
    "pj": lambda d, k: build_pj_program(PjBuildParams(d, k)),
    "xrpj": build_xrpj_program,
}
