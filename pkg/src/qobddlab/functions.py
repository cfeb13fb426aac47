"""Classical oracles for the pointer-jumping family.

Vertices are local indices ``0 .. d-1``; which side (``V_A`` or ``V_B``) a
vertex lives on is implied by the parity of the step that reached it.
Inputs are tuples of 0/1 ints, variable ``x_1`` first.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .linalg import log2_ceil

Bits = tuple[int, ...]


class DomainError(ValueError):
    """A table entry or intermediate value escaped ``{0, ..., d-1}``."""


class UnsupportedParameters(ValueError):
    pass


def parity(value: int) -> int:
    return bin(value).count("1") & 1


def _check_table(table: Sequence[int], d: int, name: str) -> tuple[int, ...]:
    table = tuple(int(x) for x in table)
    if len(table) != d:
        raise ValueError(f"{name} must have {d} entries, got {len(table)}")
    return table


@dataclass(frozen=True)
class PointerPair:
    d: int
    fA: tuple[int, ...]
    fB: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "fA", _check_table(self.fA, self.d, "fA"))
        object.__setattr__(self, "fB", _check_table(self.fB, self.d, "fB"))
        if any(not 0 <= x < self.d for x in self.fA + self.fB):
            raise DomainError("pointer tables must map into {0, ..., d-1}")


@dataclass(frozen=True)
class LayeredPointerInput:
    d: int
    k: int
    layersA: tuple[tuple[int, ...], ...]
    layersB: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.layersA) != self.k or len(self.layersB) != self.k:
            raise ValueError(f"expected {self.k} A-layers and {self.k} B-layers")
        width = 1 << max(log2_ceil(self.d), 0)
        la = tuple(_check_table(t, self.d, "A-layer") for t in self.layersA)
        lb = tuple(_check_table(t, self.d, "B-layer") for t in self.layersB)
        # entries may exceed d-1 (they are t-bit blocks); lookups are checked at use
        if any(not 0 <= x < max(width, self.d) for t in la + lb for x in t):
            raise ValueError("table entry does not fit in a block")
        object.__setattr__(self, "layersA", la)
        object.__setattr__(self, "layersB", lb)

    @classmethod
    def zeros(cls, d: int, k: int) -> "LayeredPointerInput":
        z = tuple((0,) * d for _ in range(k))
        return cls(d, k, z, z)


def pj_eval(p: PointerPair, steps: int, v0: int = 0) -> int:
    if not 0 <= v0 < p.d:
        raise ValueError("start vertex out of range")
    v = v0
    for j in range(steps):
        v = (p.fA if j % 2 == 0 else p.fB)[v]
    return v


def matrixpj_eval(inp: LayeredPointerInput, steps: int | None = None) -> int:
    """Plain composition of the per-step tables, no XOR feedback."""
    steps = 2 * inp.k if steps is None else steps
    v = 0
    for j in range(1, steps + 1):
        table = inp.layersA if j % 2 else inp.layersB
        v = table[(j + 1) // 2 - 1][v]
    return v


def mxpj_trace(inp: LayeredPointerInput, steps: int | None = None, strict: bool = True) -> list[int]:
    """Values ``f^(0), ..., f^(steps)`` of the XOR pointer-jumping recurrence."""
    steps = 2 * inp.k if steps is None else steps
    if not 0 <= steps <= 2 * inp.k:
        raise ValueError(f"steps must lie in [0, {2 * inp.k}]")
    trace = [0]
    prev = 0  # f^(-1)
    for j in range(1, steps + 1):
        cur = trace[-1]
        if cur >= inp.d:
            if strict:
                raise DomainError(f"step {j}: lookup index {cur} >= d={inp.d}")
            cur %= inp.d
        table = inp.layersA if j % 2 else inp.layersB
        nxt = table[(j + 1) // 2 - 1][cur] ^ prev
        prev = trace[-1]
        trace.append(nxt)
    return trace


def mxpj_eval(inp: LayeredPointerInput, steps: int | None = None, strict: bool = True) -> int:
    return mxpj_trace(inp, steps, strict)[-1]


def mxpj_bool(inp: LayeredPointerInput, strict: bool = True) -> int:
    return parity(mxpj_eval(inp, strict=strict))


@dataclass(frozen=True)
class BlockEncoding:
    """Bit layout ``a_{1,1} .. a_{k,d}`` then ``b_{1,1} .. b_{k,d}``, t bits per block.

    ``bit_order="msb"`` puts the most significant bit of a block first.
    """

    d: int
    k: int = 1
    bit_order: str = "msb"
    strict: bool = True

    def __post_init__(self):
        if self.d < 2 or self.k < 1:
            raise UnsupportedParameters("need d >= 2 and k >= 1")
        if self.bit_order not in ("msb", "lsb"):
            raise ValueError("bit_order must be 'msb' or 'lsb'")

    @property
    def t(self) -> int:
        return log2_ceil(self.d)

    @property
    def n(self) -> int:
        return 2 * self.k * self.d * self.t

    def block_offset(self, side: str, layer: int, block: int) -> int:
        """Bit offset of block ``block`` (0-based) of ``layer`` (0-based) on side 'A' or 'B'."""
        base = 0 if side == "A" else self.k * self.d * self.t
        return base + (layer * self.d + block) * self.t

    def _block_bits(self, value: int) -> list[int]:
        bits = [(value >> (self.t - 1 - m)) & 1 for m in range(self.t)]
        return bits if self.bit_order == "msb" else bits[::-1]

    def _block_value(self, bits: Sequence[int]) -> int:
        if self.bit_order == "lsb":
            bits = bits[::-1]
        value = 0
        for b in bits:
            value = (value << 1) | b
        return value

    def encode(self, inp: LayeredPointerInput) -> Bits:
        if (inp.d, inp.k) != (self.d, self.k):
            raise ValueError("input shape does not match the encoding")
        out: list[int] = []
        for table in inp.layersA + inp.layersB:
            for value in table:
                out.extend(self._block_bits(value))
        return tuple(out)

    def decode(self, bits: Sequence[int]) -> LayeredPointerInput:
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(bits)}")
        values = [self._block_value(bits[i:i + self.t]) for i in range(0, self.n, self.t)]
        tables = [tuple(values[i:i + self.d]) for i in range(0, len(values), self.d)]
        return LayeredPointerInput(self.d, self.k, tuple(tables[: self.k]), tuple(tables[self.k:]))

    def encode_pair(self, p: PointerPair) -> Bits:
        return self.encode(LayeredPointerInput(p.d, 1, (p.fA,), (p.fB,)))

    def decode_pair(self, bits: Sequence[int]) -> PointerPair:
        if self.k != 1:
            raise ValueError("pointer pairs use a single-layer encoding")
        inp = self.decode(bits)
        tables = inp.layersA[0] + inp.layersB[0]
        if any(x >= self.d for x in tables):
            if self.strict:
                raise DomainError("decoded pointer entry >= d")
            return PointerPair(self.d, [x % self.d for x in inp.layersA[0]],
                               [x % self.d for x in inp.layersB[0]])
        return PointerPair(self.d, inp.layersA[0], inp.layersB[0])


def pj_bool(bits: Sequence[int], layout: BlockEncoding, steps: int) -> int:
    """Parity of the local index of ``f^(steps)(0)``."""
    return parity(pj_eval(layout.decode_pair(bits), steps))


def mxpj_bool_bits(bits: Sequence[int], layout: BlockEncoding) -> int:
    return mxpj_bool(layout.decode(bits), strict=layout.strict)


# --------------------------------------------------------------------------
# XOR-reordered pointer jumping

@dataclass(frozen=True)
class XrpjLayout:
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise UnsupportedParameters("XRPJ needs d >= 2")

    @classmethod
    def from_n(cls, n: int) -> "XrpjLayout":
        for d in range(2, n + 1):
            layout = cls(d)
            if layout.n == n:
                return layout
            if layout.n > n:
                break
        raise UnsupportedParameters(f"no XRPJ layout has input length {n}")

    @property
    def w(self) -> int:
        """Bits per vertex in the virtual pointer input."""
        return log2_ceil(self.d)

    @property
    def b(self) -> int:
        return 2 * self.d * self.w

    @property
    def address_bits(self) -> int:
        return log2_ceil(self.b)

    @property
    def block_size(self) -> int:
        return self.address_bits + 1

    @property
    def n(self) -> int:
        return self.b * self.block_size

    def adr(self, bits: Sequence[int], i: int) -> int:
        start = i * self.block_size
        value = 0
        for bit in bits[start:start + self.address_bits]:
            value = (value << 1) | bit
        return value

    def val(self, bits: Sequence[int], i: int) -> int:
        return bits[(i + 1) * self.block_size - 1]

    def virtual_input(self, bits: Sequence[int]) -> Bits:
        """``y_a`` (a = 1..b) is the XOR of value bits of blocks with address ``a``."""
        if len(bits) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(bits)}")
        y = [0] * self.b
        for i in range(self.b):
            a = self.adr(bits, i)
            if 1 <= a <= self.b:
                y[a - 1] ^= self.val(bits, i)
        return tuple(y)


def xrpj_eval(bits: Sequence[int], layout: XrpjLayout, steps: int, strict: bool = True) -> int:
    bits = tuple(int(x) for x in bits)
    y = layout.virtual_input(bits)
    d, w = layout.d, layout.w

    def bv(v: int) -> int:
        # v is a 0-based vertex; its window is addresses v*w+1 .. (v+1)*w
        return sum(y[v * w + u] << u for u in range(w))

    v = 0
    for j in range(steps):
        nxt = bv(v)
        if nxt >= d:
            if strict:
                raise DomainError(f"BV value {nxt} >= d={d}")
            nxt %= d
        v = nxt + d if j % 2 == 0 else nxt
    return parity(bv(v))


# --------------------------------------------------------------------------
# The Sigma set and distinguishing inputs

def _free_span(d: int) -> int:
    return d // 3 - 1


def sigma_size(d: int, k: int) -> int:
    return d ** (_free_span(d) * (k - 3))


def _check_sigma_params(d: int, k: int) -> int:
    m = _free_span(d)
    if k < 4 or m < 1 or 2 + 3 * m > d - 1:
        raise UnsupportedParameters(
            f"sigma set is empty or unsatisfiable for d={d}, k={k} (need d >= 6, k >= 4)")
    return m


def sigma_generate(d: int, k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Yield the A-part layer tables of every member of the Sigma set.

    Free blocks are ``3 .. 2+m`` of layers ``1 .. k-3`` (``m = floor(d/3 - 1)``);
    blocks ``u+m`` and ``u+2m`` hold ``Val(u) ^ 1`` and ``Val(u) ^ 2``; all other
    blocks are zero.
    """
    m = _check_sigma_params(d, k)
    free_layers = range(1, k - 2)
    positions = [(t, u) for t in free_layers for u in range(3, 3 + m)]
    for choice in itertools.product(range(d), repeat=len(positions)):
        layers = [[0] * d for _ in range(k)]
        for (t, u), value in zip(positions, choice):
            layers[t][u] = value
            layers[t][u + m] = value ^ 1
            layers[t][u + 2 * m] = value ^ 2
        yield tuple(tuple(row) for row in layers)


def in_sigma(sigma: Sequence[Sequence[int]], d: int, k: int) -> bool:
    """Membership test written directly from conditions 1-4."""
    m = _free_span(d)
    if len(sigma) != k or any(len(row) != d for row in sigma):
        return False
    if any(sigma[t][u] != 0 for t in range(k) for u in (0, 1, 2)):
        return False
    if any(x != 0 for x in sigma[0]) or any(x != 0 for x in sigma[k - 2]) \
            or any(x != 0 for x in sigma[k - 1]):
        return False
    for t in range(1, k - 2):
        for u in range(3, 3 + m):
            if sigma[t][u] ^ sigma[t][u + m] != 1 or sigma[t][u] ^ sigma[t][u + 2 * m] != 2:
                return False
    return True


def first_difference(sigma, sigma_prime) -> tuple[int, int]:
    for t, (row, row2) in enumerate(zip(sigma, sigma_prime)):
        for u, (a, b) in enumerate(zip(row, row2)):
            if a != b:
                return t, u
    raise ValueError("sigma and sigma' are equal; no distinguishing input exists")


def distinguishing_gamma(sigma, sigma_prime, d: int, k: int,
                         variant: str = "corrected") -> tuple[tuple[int, ...], ...]:
    """B-part tables ``gamma`` separating ``(sigma, gamma)`` from ``(sigma', gamma)``.

    ``variant="literal"`` applies the seven textbook conditions verbatim. They
    reproduce the trace up to ``f^(2r+2)`` but step ``2r+3`` reads layer
    ``r+1`` of sigma, so the outputs need not differ.  ``"corrected"`` (the
    default) routes both traces through blocks 1 and 2, which are zero in
    every sigma layer, and separates them in the last B-layer.
    """
    r, z = first_difference(sigma, sigma_prime)
    s, s2 = sigma[r][z], sigma_prime[r][z]
    m = _free_span(d)
    gamma = [[0] * d for _ in range(k)]
    # conditions 1 and 2: f stays 0 until step 2r, then f^(2r) = z
    gamma[r - 1][0] = z
    if variant == "literal":
        gamma[r][s] = z ^ (z + m)
        gamma[r][s2] = z ^ (z + 2 * m)
        if r + 1 < k:
            gamma[r + 1][1] = 1 ^ (z + m)
            gamma[r + 1][2] = 2 ^ (z + 2 * m)
        gamma[k - 1][1] = 1
        gamma[k - 1][2] = 0
    elif variant == "corrected":
        if r < 1 or r > k - 3:
            raise ValueError("first difference must sit in a free layer")
        # f^(2r+2) = 1 versus 2; every later A-step reads block 1 or 2 (always 0)
        gamma[r][s] = z ^ 1
        gamma[r][s2] = z ^ 2
        # pairs stay (s, 1) / (s', 2) through zero B-entries; split in the last layer
        gamma[k - 1][s] = 0
        gamma[k - 1][s2] = 1
    else:
        raise ValueError(f"unknown variant {variant!r}")
    width = 1 << log2_ceil(d)
    if any(x >= width for row in gamma for x in row):
        raise DomainError("gamma entry does not fit in a block")
    return tuple(tuple(row) for row in gamma)


def mxpj_subfunction_log2_lower(d: int, k: int) -> float:
    """log2 of ``d ** (floor(d/3 - 1) * (k - 3))``."""
    return _free_span(d) * (k - 3) * math.log2(d)
