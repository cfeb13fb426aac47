"""Subfunction counting and the width/communication bound formulas.

Truth tables are boolean numpy arrays of length ``2**n`` indexed with
``x_1`` as the most significant bit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

Oracle = Callable[[tuple[int, ...]], int]
FunctionLike = Union[Oracle, np.ndarray]

DEFAULT_MAX_N = 26


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, limit: int):
        super().__init__(f"needs {required} oracle evaluations, budget is {limit}")
        self.required = required
        self.limit = limit


@dataclass(frozen=True)
class CutPartition:
    """``X_A`` is the first ``u`` variables of ``theta``; ``X_B`` the rest."""

    theta: tuple[int, ...]
    u: int

    def __post_init__(self):
        theta = tuple(int(v) for v in self.theta)
        object.__setattr__(self, "theta", theta)
        if sorted(theta) != list(range(1, len(theta) + 1)):
            raise ValueError("theta must be a permutation of 1..n")
        if not 0 < self.u < len(theta):
            raise ValueError(f"cut u={self.u} must satisfy 0 < u < n={len(theta)}")

    @classmethod
    def natural(cls, n: int, u: int) -> "CutPartition":
        return cls(tuple(range(1, n + 1)), u)

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def xa(self) -> tuple[int, ...]:
        return self.theta[: self.u]

    @property
    def xb(self) -> tuple[int, ...]:
        return self.theta[self.u:]

    def split(self, x: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(x[v - 1] for v in self.xa), tuple(x[v - 1] for v in self.xb)

    def join(self, sigma: Sequence[int], gamma: Sequence[int]) -> tuple[int, ...]:
        x = [0] * self.n
        for v, b in zip(self.xa, sigma):
            x[v - 1] = b
        for v, b in zip(self.xb, gamma):
            x[v - 1] = b
        return tuple(x)


def truth_table(f: FunctionLike, n: int, max_n: int = DEFAULT_MAX_N) -> np.ndarray:
    if isinstance(f, np.ndarray):
        table = np.asarray(f, dtype=bool).ravel()
        if table.size != 1 << n:
            raise ValueError(f"truth table has {table.size} entries, expected 2^{n}")
        return table
    if n > max_n:
        raise BudgetExceeded(1 << n, 1 << max_n)
    return np.fromiter((bool(f(x)) for x in itertools.product((0, 1), repeat=n)),
                       dtype=bool, count=1 << n)


def _rows(table: np.ndarray, n: int, partition: CutPartition) -> np.ndarray:
    axes = [v - 1 for v in partition.theta]
    cube = table.reshape((2,) * n).transpose(axes)
    return cube.reshape(1 << partition.u, 1 << (n - partition.u))


def count_subfunctions(f: FunctionLike, partition: CutPartition,
                       max_n: int = DEFAULT_MAX_N) -> int:
    """Number of distinct restrictions of ``f`` over all assignments to ``X_A``."""
    n = partition.n
    table = truth_table(f, n, max_n)
    rows = np.packbits(_rows(table, n, partition), axis=1)
    # bytes keys hash to 64 bits and fall back to full comparison on collision
    return len({r.tobytes() for r in rows})


def count_over_order(f: FunctionLike, theta: Sequence[int],
                     max_n: int = DEFAULT_MAX_N) -> int:
    """Maximum subfunction count over the cuts ``1 < u < n`` of ``theta``."""
    theta = tuple(theta)
    n = len(theta)
    if n < 3:
        raise ValueError("cuts 1 < u < n need n >= 3")
    table = truth_table(f, n, max_n)
    return max(count_subfunctions(table, CutPartition(theta, u)) for u in range(2, n))


@dataclass(frozen=True)
class OrderCount:
    value: int
    exact: bool
    orders_checked: int
    best_order: tuple[int, ...] = field(default=())


def count_min(f: FunctionLike, n: int, max_exact_n: int = 6, samples: int = 200,
              rng: np.random.Generator | None = None,
              max_n: int = DEFAULT_MAX_N) -> OrderCount:
    """Minimum over orders of the per-order maximum; sampled beyond ``max_exact_n``."""
    table = truth_table(f, n, max_n)
    if n <= max_exact_n:
        orders: Iterable[tuple[int, ...]] = itertools.permutations(range(1, n + 1))
        exact = True
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        orders = [tuple(int(v) + 1 for v in rng.permutation(n)) for _ in range(samples)]
        exact = False
    best, best_order, checked = None, (), 0
    for theta in orders:
        checked += 1
        value = count_over_order(table, theta)
        if best is None or value < best:
            best, best_order = value, theta
    return OrderCount(best, exact, checked, best_order)


# --------------------------------------------------------------------------
# bound formulas (all return log2 of the bound)

FORMS = ("theorem", "proof", "qobdd")


@dataclass(frozen=True)
class BoundQuery:
    form: str
    t: int | None = None
    l: int | None = None
    k: int | None = None
    w: int | None = None


def theorem_exponent(t: int, l: int) -> float:
    if t < 1 or t % 2 == 0:
        raise ValueError("theorem form needs an odd round count t = 2k - 1")
    return (1.5 * t + 0.5 + (t - 1) * math.log2(2 ** l + 2)) * (0.5 * t - 0.5) * (2 ** (l + 1) + 4) ** 2


def proof_exponent(k: int, l: int) -> float:
    return (3 * k + 1 + 2 * k * math.log2(2 ** l + 2)) * k * (2 ** (l + 1) + 4) ** 2


def qobdd_exponent(k: int, w: int) -> float:
    return (3 * k + 1 + 2 * k * math.log2(w + 2)) * k * (2 * w + 4) ** 2


def log2_bound(q: BoundQuery) -> float:
    if q.form == "theorem":
        _require(q, "t", "l")
        return theorem_exponent(q.t, q.l)
    if q.form == "proof":
        _require(q, "k", "l")
        return proof_exponent(q.k, q.l)
    if q.form == "qobdd":
        _require(q, "k", "w")
        return qobdd_exponent(q.k, q.w)
    raise ValueError(f"unknown bound form {q.form!r}; choose from {FORMS}")


def _require(q: BoundQuery, *names: str) -> None:
    for name in names:
        value = getattr(q, name)
        if value is None or value < (0 if name == "l" else 1):
            raise ValueError(f"form {q.form!r} needs a valid {name}")


def implied_width(log_n: float, k: int) -> int:
    """Least ``w >= 1`` whose k-layer width exponent reaches ``log_n``."""
    if qobdd_exponent(k, 1) >= log_n:
        return 1
    hi = 2
    while qobdd_exponent(k, hi) < log_n:
        hi *= 2
    lo = hi // 2  # exponent(lo) < log_n <= exponent(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if qobdd_exponent(k, mid) >= log_n:
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# width-set conditions

def rate_exponent(d: float, v: float, k: float, r: float, C: float = 1.0, C1: float = 1.0) -> float:
    """``k * (C1 sqrt(d) log d - C v^2 k log v / r^2)``; positive means the rate exceeds 1."""
    return k * (C1 * math.sqrt(d) * math.log2(d) - C * v * v * k * math.log2(v) / r ** 2)


def separation_margin(w: float, v: float, k: float, r: float, C: float = 1.0, C1: float = 1.0) -> float:
    return C1 * math.sqrt(w) * math.log2(w) - C * v * v * k * math.log2(v) / r ** 2


@dataclass
class GkrReport:
    widths: tuple[int, ...]
    closure_ok: bool
    closure_missing: list[tuple[int, int]]
    growth_ratios: dict[int, float]
    margins: dict[tuple[int, int], float]

    @property
    def margin_ok(self) -> bool:
        return all(m > 0 for m in self.margins.values())

    @property
    def failing_pairs(self) -> list[tuple[int, int]]:
        return [pair for pair, m in self.margins.items() if m <= 0]


def gkr_check(widths: Iterable[int], k: int, r: float, n: int,
              C: float = 1.0, C1: float = 1.0) -> GkrReport:
    """Closure, growth ratio ``k^2 w^2 log w / n`` and pairwise margins for a width set."""
    W = tuple(sorted(set(int(w) for w in widths)))
    if not W:
        raise ValueError("width set is empty")
    missing = []
    for w in W:
        root = math.isqrt(w)
        for needed in (root, root * root):
            if needed not in W:
                missing.append((w, needed))
    ratios = {w: k * k * w * w * math.log2(w) / n for w in W}
    margins = {(w, v): separation_margin(w, v, k, r, C, C1) for w in W for v in W}
    return GkrReport(W, not missing, missing, ratios, margins)


__all__ = [
    "BudgetExceeded", "CutPartition", "truth_table", "count_subfunctions", "count_over_order",
    "count_min", "OrderCount", "BoundQuery", "log2_bound", "theorem_exponent", "proof_exponent",
    "qobdd_exponent", "implied_width", "rate_exponent", "separation_margin", "GkrReport", "gkr_check",
]
