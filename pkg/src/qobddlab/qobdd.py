"""k-layer quantum OBDDs with an optional deterministic classical register.

A program reads ``k * n`` input bits: layer ``L`` reads variable
``order[j]`` at step ``L * n + j``.  Each step holds one :class:`Transition`
per bit value.  A transition applies a unitary chosen by the current
classical state and then moves the classical state through its map.  The
joint basis index of classical state ``s`` and quantum state ``q`` is
``s * w + q``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .linalg import (
    TOL,
    DenseOp,
    PermutationOp,
    UnitaryOp,
    basis_state,
    is_unitary,
    measure_qubit,
    norm_sq,
    num_qubits,
    random_unitary,
)

Bits = tuple[int, ...]


class ProgramError(ValueError):
    """Malformed program data."""


class TransformInapplicable(ValueError):
    pass


class NormalizationError(AssertionError):
    pass


@dataclass(frozen=True)
class Transition:
    """``ops`` holds one unitary shared by all classical states, or one per state."""

    ops: tuple[UnitaryOp, ...]
    classical: tuple[int, ...] | None = None

    def op_for(self, s: int) -> UnitaryOp:
        return self.ops[0] if len(self.ops) == 1 else self.ops[s]

    @property
    def is_identity(self) -> bool:
        return self.classical is None and all(op.is_identity for op in self.ops)

    @classmethod
    def identity(cls, w: int) -> "Transition":
        return cls((PermutationOp.identity(w),))

    @classmethod
    def of(cls, op: UnitaryOp) -> "Transition":
        return cls((op,))


Step = tuple[Transition, Transition]


@dataclass
class StateRecord:
    classical_state: int
    quantum: np.ndarray
    accepted_mass: float = 0.0

    def mass_defect(self) -> float:
        return abs(self.accepted_mass + norm_sq(self.quantum) - 1.0)


@dataclass
class HybridProgram:
    n: int
    w: int
    k: int
    order: tuple[int, ...]
    steps: list[Step]
    accept: frozenset[int]
    c: int = 1
    measure: tuple[tuple[int, int], ...] = ()
    initial_quantum: int = 0
    initial_classical: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.order = tuple(int(v) for v in self.order)
        self.accept = frozenset(int(a) for a in self.accept)
        self.measure = tuple((int(s), int(q)) for s, q in self.measure)
        self.validate()
        self._measure_at = dict(self.measure)
        mask = np.zeros(self.c * self.w, dtype=bool)
        mask[list(self.accept)] = True
        self._accept_mask = mask.reshape(self.c, self.w)

    @property
    def width(self) -> int:
        return self.c * self.w

    def validate(self) -> None:
        if self.n < 1 or self.k < 1 or self.w < 1 or self.c < 1:
            raise ProgramError("n, k, w and c must be positive")
        if sorted(self.order) != list(range(1, self.n + 1)):
            raise ProgramError("order must be a permutation of 1..n")
        if len(self.steps) != self.k * self.n:
            raise ProgramError(f"expected {self.k * self.n} steps, got {len(self.steps)}")
        for idx, step in enumerate(self.steps):
            if len(step) != 2:
                raise ProgramError(f"step {idx} must hold two transitions")
            for tr in step:
                if len(tr.ops) not in (1, self.c):
                    raise ProgramError(f"step {idx}: need 1 or {self.c} unitaries")
                for op in tr.ops:
                    if op.dim != self.w:
                        raise ProgramError(f"step {idx}: unitary of dim {op.dim}, expected {self.w}")
                    if not is_unitary(op):
                        raise ProgramError(f"step {idx}: operator is not unitary")
                if tr.classical is not None:
                    if len(tr.classical) != self.c or any(not 0 <= s < self.c for s in tr.classical):
                        raise ProgramError(f"step {idx}: bad classical map")
        if any(not 0 <= a < self.width for a in self.accept):
            raise ProgramError("accept index out of range")
        last = -1
        for s, q in self.measure:
            if s <= last:
                raise ProgramError("measure events must be strictly increasing in step index")
            if not 0 <= s < len(self.steps):
                raise ProgramError("measure event step out of range")
            if not 0 <= q < num_qubits(self.w):
                raise ProgramError("measure event qubit out of range")
            last = s
        if not 0 <= self.initial_quantum < self.w or not 0 <= self.initial_classical < self.c:
            raise ProgramError("initial state out of range")

    def variable_at(self, step: int) -> int:
        return self.order[step % self.n]

    def initial_record(self) -> StateRecord:
        return StateRecord(self.initial_classical, basis_state(self.w, self.initial_quantum))


def run(p: HybridProgram, x: Sequence[int], audit: bool = False,
        on_step: Callable[[int, StateRecord], None] | None = None) -> StateRecord:
    """Simulate ``p`` on ``x``; measuring 1 accepts and stops, 0 continues unnormalised."""
    if len(x) != p.n:
        raise ValueError(f"input has {len(x)} bits, program expects {p.n}")
    rec = p.initial_record()
    psi, s, acc = rec.quantum, rec.classical_state, 0.0
    order, n = p.order, p.n
    for idx, step in enumerate(p.steps):
        tr = step[x[order[idx % n] - 1]]
        op = tr.op_for(s)
        if not op.is_identity:
            psi = op.apply(psi)
        if tr.classical is not None:
            s = tr.classical[s]
        q = p._measure_at.get(idx)
        if q is not None:
            pr1, psi, _ = measure_qubit(psi, q)
            acc += pr1
        if audit or on_step is not None:
            rec = StateRecord(s, psi, acc)
            if audit and rec.mass_defect() > TOL:
                raise NormalizationError(f"step {idx}: mass defect {rec.mass_defect():.3e}")
            if on_step is not None:
                on_step(idx, rec)
    return StateRecord(s, psi, acc)


def final_accept_mass(p: HybridProgram, rec: StateRecord) -> float:
    mask = p._accept_mask[rec.classical_state]
    amps = rec.quantum[mask]
    return float(np.sum(amps.real ** 2 + amps.imag ** 2))


def accept_probability(p: HybridProgram, x: Sequence[int], audit: bool = False) -> float:
    rec = run(p, x, audit=audit)
    return rec.accepted_mass + final_accept_mass(p, rec)


UNDECIDED = None


def decide_probability(prob: float, eps: float) -> int | None:
    if prob >= 0.5 + eps:
        return 1
    if prob <= 0.5 - eps:
        return 0
    return UNDECIDED


def decide(p: HybridProgram, x: Sequence[int], eps: float) -> int | None:
    """1 / 0 at margin ``eps``, ``None`` when the probability sits inside the gap."""
    return decide_probability(accept_probability(p, x), eps)


def all_inputs(n: int) -> Iterable[Bits]:
    return itertools.product((0, 1), repeat=n)


def reorder(p: HybridProgram, new_order: Sequence[int]) -> HybridProgram:
    """Relocate each variable's transition pair so the layers read ``new_order``."""
    new_order = tuple(new_order)
    if sorted(new_order) != list(range(1, p.n + 1)):
        raise ProgramError("new order must be a permutation of 1..n")
    pos = {v: j for j, v in enumerate(p.order)}
    steps = []
    for layer in range(p.k):
        base = layer * p.n
        steps.extend(p.steps[base + pos[v]] for v in new_order)
    return HybridProgram(p.n, p.w, p.k, new_order, steps, p.accept, c=p.c, measure=p.measure,
                         initial_quantum=p.initial_quantum, initial_classical=p.initial_classical,
                         meta=dict(p.meta))


def is_commutative(p: HybridProgram, trials: int = 8, rng: np.random.Generator | None = None,
                   exhaustive_orders: bool | None = None, max_exhaustive_n: int = 12,
                   random_inputs: int = 1000) -> bool:
    rng = np.random.default_rng(0) if rng is None else rng
    if exhaustive_orders is None:
        exhaustive_orders = p.n <= 6
    if p.n <= max_exhaustive_n:
        inputs = list(all_inputs(p.n))
    else:
        inputs = [tuple(int(b) for b in rng.integers(0, 2, p.n)) for _ in range(random_inputs)]
    reference = [accept_probability(p, x) for x in inputs]

    if exhaustive_orders:
        orders = list(itertools.permutations(p.order))
    else:
        orders = [tuple(int(v) for v in rng.permutation(p.order)) for _ in range(trials)]
        if p.n <= 8:
            for j in range(p.n - 1):
                o = list(p.order)
                o[j], o[j + 1] = o[j + 1], o[j]
                orders.append(tuple(o))
    for order in orders:
        q = reorder(p, order)
        for x, ref in zip(inputs, reference):
            if abs(accept_probability(q, x) - ref) > TOL:
                return False
    return True


def random_program(n: int, w: int, k: int, rng: np.random.Generator,
                   measure_rate: float = 0.0, order: Sequence[int] | None = None) -> HybridProgram:
    """Dense random program; each step measures a random qubit with probability ``measure_rate``."""
    order = tuple(range(1, n + 1)) if order is None else tuple(order)
    steps = [(Transition.of(random_unitary(w, rng)), Transition.of(random_unitary(w, rng)))
             for _ in range(k * n)]
    m = num_qubits(w)
    measure = tuple((s, int(rng.integers(m))) for s in range(k * n)
                    if m > 0 and rng.random() < measure_rate)
    accept = frozenset(int(i) for i in np.flatnonzero(rng.random(w) < 0.5))
    return HybridProgram(n, w, k, order, steps, accept, measure=measure,
                         meta={"builder": "random", "params": {"n": n, "w": w, "k": k}})


# --------------------------------------------------------------------------
# xor-reordering

def _layer_ops_commute(ops: list[PermutationOp]) -> bool:
    for a, b in itertools.combinations(ops, 2):
        if a.compose(b) != b.compose(a):
            return False
    return True


def xor_reorder_transform(p: HybridProgram, layout) -> HybridProgram:
    """Program over ``layout.n`` bits computing ``p`` on the XOR-collected virtual input.

    Blocks are read in natural order.  Address bits are written into a
    classical register (the first address bit of a block overwrites it); a
    value bit of 1 applies ``p``'s bit-1 unitary of the addressed variable.
    """
    q = p.n
    if layout.b != q:
        raise TransformInapplicable(f"layout has {layout.b} blocks, program has {q} variables")
    if p.c != 1:
        raise TransformInapplicable("source program must be purely quantum (c = 1)")
    if p.measure:
        raise TransformInapplicable("source program must not measure mid-run")
    for idx, (t0, t1) in enumerate(p.steps):
        if not t0.is_identity:
            raise TransformInapplicable(f"step {idx}: bit-0 transition is not the identity")
        op = t1.ops[0]
        if not isinstance(op, PermutationOp):
            raise TransformInapplicable(f"step {idx}: bit-1 unitary must be a permutation operator")
        if op.compose(op) != PermutationOp.identity(p.w):
            raise TransformInapplicable(f"step {idx}: bit-1 unitary is not an involution")
    pos = {v: j for j, v in enumerate(p.order)}
    layer_ops = []
    for layer in range(p.k):
        ops = [p.steps[layer * q + pos[a]][1].ops[0] for a in range(1, q + 1)]
        if not _layer_ops_commute([o for o in ops if not o.is_identity]):
            raise TransformInapplicable(f"layer {layer}: bit-1 unitaries do not commute")
        layer_ops.append(ops)

    abits = layout.address_bits
    c = 1 << abits
    ident = PermutationOp.identity(p.w)
    id_tr = Transition((ident,))
    steps: list[Step] = []
    for layer in range(p.k):
        value_ops = tuple(layer_ops[layer][a - 1] if 1 <= a <= q else ident for a in range(c))
        value_step = (id_tr, Transition(value_ops))
        for _block in range(layout.b):
            for m in range(abits):
                weight = 1 << (abits - 1 - m)
                if m == 0:
                    cm0 = tuple(0 for _ in range(c))
                    cm1 = tuple(weight for _ in range(c))
                else:
                    cm0 = None
                    cm1 = tuple(s | weight for s in range(c))
                steps.append((Transition((ident,), cm0), Transition((ident,), cm1)))
            steps.append(value_step)
    accept = frozenset(s * p.w + a for s in range(c) for a in p.accept)
    meta = {"builder": "xor_reorder", "params": {"source": p.meta, "b": layout.b}}
    return HybridProgram(layout.n, p.w, p.k, tuple(range(1, layout.n + 1)), steps, accept, c=c,
                         initial_quantum=p.initial_quantum, meta=meta)


# --------------------------------------------------------------------------
# deterministic OBDDs

@dataclass
class DeterministicObdd:
    """Single-layer OBDD; ``tr[level][node] = (next on 0, next on 1)``, start node 0."""

    width: int
    order: tuple[int, ...]
    tr: list[list[tuple[int, int]]]
    accepting: frozenset[int]
    level_widths: list[int] | None = None

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(1, n + 1)):
            raise ProgramError("order must be a permutation of 1..n")
        if len(self.tr) != n:
            raise ProgramError("need one transition table per level")
        for level in self.tr:
            if len(level) != self.width:
                raise ProgramError("transition tables must cover every node")
            for nxt in level:
                if any(not 0 <= v < self.width for v in nxt):
                    raise ProgramError("transition target out of range")

    @property
    def n(self) -> int:
        return len(self.order)

    def evaluate(self, x: Sequence[int]) -> int:
        node = 0
        for level, var in enumerate(self.order):
            node = self.tr[level][node][x[var - 1]]
        return int(node in self.accepting)

    def to_hybrid(self) -> HybridProgram:
        one = PermutationOp.identity(1)
        steps = [tuple(Transition((one,), tuple(nxt[b] for nxt in level)) for b in (0, 1))
                 for level in self.tr]
        return HybridProgram(self.n, 1, 1, self.order, steps, self.accepting, c=self.width,
                             meta={"builder": "deterministic_obdd"})

    @classmethod
    def from_function(cls, f: Callable[[Bits], int], n: int,
                      order: Sequence[int] | None = None) -> "DeterministicObdd":
        """Quotient OBDD: level-u nodes are the distinct subfunctions after fixing u variables."""
        order = tuple(range(1, n + 1)) if order is None else tuple(order)
        table = {}
        for x in all_inputs(n):
            table[tuple(x[v - 1] for v in order)] = int(f(x))

        def signature(prefix):
            rest = n - len(prefix)
            return tuple(table[prefix + tail] for tail in itertools.product((0, 1), repeat=rest))

        reps = [[()]]
        tr = []
        for _u in range(n):
            index: dict = {}
            nxt_rep: list = []
            level_tr = []
            for prefix in reps[-1]:
                pair = []
                for b in (0, 1):
                    sig = signature(prefix + (b,))
                    if sig not in index:
                        index[sig] = len(nxt_rep)
                        nxt_rep.append(prefix + (b,))
                    pair.append(index[sig])
                level_tr.append(tuple(pair))
            tr.append(level_tr)
            reps.append(nxt_rep)
        width = max(len(r) for r in reps)
        padded = [lvl + [(0, 0)] * (width - len(lvl)) for lvl in tr]
        accepting = frozenset(i for i, prefix in enumerate(reps[-1]) if table[prefix] == 1)
        return cls(width, order, padded, accepting, level_widths=[len(r) for r in reps])


# --------------------------------------------------------------------------
# serialization

def _op_to_json(op: UnitaryOp) -> dict:
    if isinstance(op, PermutationOp):
        if op.is_identity:
            return {"identity": op.dim}
        out = {"perm": op.perm.tolist()}
        if op.phase is not None:
            out["phase"] = [[float(z.real), float(z.imag)] for z in op.phase]
        return out
    m = op.to_dense().ravel()
    return {"dense": [[float(z.real), float(z.imag)] for z in m], "dim": op.dim}


def _op_from_json(data: dict) -> UnitaryOp:
    if "identity" in data:
        return PermutationOp.identity(int(data["identity"]))
    if "perm" in data:
        phase = None
        if "phase" in data:
            phase = np.array([complex(re, im) for re, im in data["phase"]])
        return PermutationOp(data["perm"], phase)
    if "dense" in data:
        dim = int(data["dim"])
        flat = np.array([complex(re, im) for re, im in data["dense"]])
        return DenseOp(flat.reshape(dim, dim))
    raise ProgramError(f"unknown unitary encoding with keys {sorted(data)}")


def program_to_dict(p: HybridProgram) -> dict:
    cache: dict[int, dict] = {}

    def enc(op):
        key = id(op)
        if key not in cache:
            cache[key] = _op_to_json(op)
        return cache[key]

    steps = [[None if t0.classical is None else list(t0.classical),
              None if t1.classical is None else list(t1.classical),
              [enc(o) for o in t0.ops], [enc(o) for o in t1.ops]] for t0, t1 in p.steps]
    return {
        "n": p.n, "w": p.w, "c": p.c, "k": p.k,
        "order": list(p.order),
        "initial": [p.initial_classical, p.initial_quantum],
        "steps": steps,
        "accept": sorted(p.accept),
        "measure": [list(m) for m in p.measure],
        "meta": p.meta,
    }


def program_from_dict(data: dict) -> HybridProgram:
    try:
        steps = []
        for cm0, cm1, u0, u1 in data["steps"]:
            steps.append((Transition(tuple(_op_from_json(o) for o in u0),
                                     None if cm0 is None else tuple(cm0)),
                          Transition(tuple(_op_from_json(o) for o in u1),
                                     None if cm1 is None else tuple(cm1))))
        init_c, init_q = data.get("initial", [0, 0])
        return HybridProgram(int(data["n"]), int(data["w"]), int(data["k"]), tuple(data["order"]),
                             steps, frozenset(data["accept"]), c=int(data["c"]),
                             measure=tuple(tuple(m) for m in data.get("measure", [])),
                             initial_quantum=int(init_q), initial_classical=int(init_c),
                             meta=dict(data.get("meta", {})))
    except (KeyError, TypeError) as exc:
        raise ProgramError(f"malformed program document: {exc}") from exc


def save_program(p: HybridProgram, path: str | Path) -> None:
    Path(path).write_text(json.dumps(program_to_dict(p), separators=(",", ":")) + "\n")


def load_program(path: str | Path) -> HybridProgram:
    return program_from_dict(json.loads(Path(path).read_text()))


__all__ = [
    "ProgramError", "TransformInapplicable", "NormalizationError",
    "Transition", "StateRecord", "HybridProgram", "DeterministicObdd",
    "run", "accept_probability", "final_accept_mass", "decide", "decide_probability",
    "all_inputs", "random_program", "reorder", "is_commutative", "xor_reorder_transform",
    "program_to_dict", "program_from_dict", "save_program", "load_program",
]
