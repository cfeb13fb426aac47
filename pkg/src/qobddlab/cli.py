"""Command-line experiments.

Exit codes: 0 success, 1 verification mismatch, 2 invalid parameters,
3 budget exceeded.  CSV reports start with a ``# config:`` comment line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import functions as fn
from .constructions import BUILDERS, BuildError
from .linalg import TOL
from .qobdd import (
    NormalizationError,
    ProgramError,
    TransformInapplicable,
    accept_probability,
    all_inputs,
    decide_probability,
    load_program,
    save_program,
)
from .protocol import (
    ProtocolError,
    all_halves,
    delta_bucket_experiment,
    from_qobdd,
    lemma3_delta,
    matrix_sequence,
    product_probability,
    real_embedded_sequence,
    real_product_probability,
)
from .subfunctions import (
    BoundQuery,
    BudgetExceeded,
    CutPartition,
    count_min,
    count_over_order,
    count_subfunctions,
    gkr_check,
    implied_width,
    log2_bound,
    qobdd_exponent,
    rate_exponent,
)

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
MAX_EXHAUSTIVE_BITS = 20

Bits = tuple[int, ...]


# --------------------------------------------------------------------------
# input helpers

def hex_to_bits(text: str, n: int) -> Bits:
    """``x_1`` is the most significant bit; shorter strings are left-padded with zeros."""
    text = text.lower().removeprefix("0x")
    value = int(text, 16) if text else 0
    if value >> n:
        raise ValueError(f"hex input {text!r} does not fit in {n} bits")
    return tuple((value >> (n - 1 - i)) & 1 for i in range(n))


def bits_to_hex(bits: Sequence[int]) -> str:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return format(value, f"0{max(1, (len(bits) + 3) // 4)}x")


def parse_bits(text: str, n: int) -> Bits:
    if text.startswith("0b"):
        bits = tuple(int(c) for c in text[2:])
        if len(bits) != n:
            raise ValueError(f"expected {n} bits, got {len(bits)}")
        return bits
    return hex_to_bits(text, n)


def sample_inputs(n: int, count: int, rng: np.random.Generator) -> list[Bits]:
    return [tuple(int(b) for b in row) for row in rng.integers(0, 2, size=(count, n))]


class Report:
    """CSV rows written to ``--out`` (or stdout) after a config echo line."""

    def __init__(self, config: dict, header: Sequence[str]):
        self.buffer = io.StringIO()
        self.buffer.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        self.writer = csv.writer(self.buffer, lineterminator="\n")
        self.writer.writerow(header)

    def row(self, *values) -> None:
        self.writer.writerow([_fmt(v) for v in values])

    def emit(self, out: str | None) -> None:
        if out:
            Path(out).write_text(self.buffer.getvalue())
        else:
            sys.stdout.write(self.buffer.getvalue())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def info(msg: str) -> None:
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# oracles

def oracle_for(meta: dict, name: str | None = None) -> tuple[str, Callable[[Bits], int]]:
    builder = name or meta.get("builder")
    params = meta.get("params", {})
    d, k = params.get("d"), params.get("k")
    if builder in ("mxpj", "pj", "xrpj") and (d is None or k is None):
        raise ValueError(f"oracle {builder!r} needs d and k in the program meta")
    if builder == "mxpj":
        enc = fn.BlockEncoding(d, k)
        return builder, lambda x: fn.mxpj_bool_bits(x, enc)
    if builder == "pj":
        enc = fn.BlockEncoding(d, 1, bit_order=params.get("bit_order", "msb"))
        return builder, lambda x: fn.pj_bool(x, enc, 2 * k)
    if builder == "xrpj":
        layout = fn.XrpjLayout(d)
        return builder, lambda x: fn.xrpj_eval(x, layout, 2 * k - 1)
    raise ValueError(f"no oracle known for builder {builder!r}; pass --oracle mxpj|pj|xrpj")


# --------------------------------------------------------------------------
# commands

def cmd_construct(args) -> int:
    try:
        p = BUILDERS[args.kind](args.d, args.k)
    except BuildError as exc:
        raise BuildError(f"{exc} (kind={args.kind}, d={args.d}, k={args.k})") from exc
    if args.out:
        save_program(p, args.out)
    print(f"kind={args.kind} width={p.width} w={p.w} c={p.c} n={p.n} k={p.k}"
          + (f" out={args.out}" if args.out else ""))
    return EXIT_OK


def _inputs_for(args, n: int) -> list[Bits]:
    if args.mode == "exhaustive":
        if n > MAX_EXHAUSTIVE_BITS:
            raise BudgetExceeded(1 << n, 1 << MAX_EXHAUSTIVE_BITS)
        return list(all_inputs(n))
    return sample_inputs(n, args.samples, np.random.default_rng(args.seed))


def cmd_verify(args) -> int:
    p = load_program(args.program)
    name, oracle = oracle_for(p.meta, args.oracle)
    report = Report(_config(args), ["input", "p", "oracle", "match"])
    matches = total = 0
    for x in _inputs_for(args, p.n):
        prob = accept_probability(p, x, audit=args.audit)
        expected = oracle(x)
        ok = abs(prob - expected) <= args.tol
        if args.exact:
            ok = ok and prob in (0.0, 1.0)
        matches += ok
        total += 1
        report.row(bits_to_hex(x), prob, expected, int(ok))
    report.emit(args.out)
    info(f"oracle={name} {matches}/{total} match")
    return EXIT_OK if matches == total else EXIT_MISMATCH


def cmd_simulate(args) -> int:
    p = load_program(args.program)
    x = parse_bits(args.input, p.n)
    prob = accept_probability(p, x, audit=True)
    decision = decide_probability(prob, args.epsilon)
    label = "undecided" if decision is None else str(decision)
    print(f"input={bits_to_hex(x)} p_accept={prob!r} decision={label}")
    return EXIT_OK


NAMED = {
    "const0": lambda n: (lambda x: 0),
    "const1": lambda n: (lambda x: 1),
    "and": lambda n: (lambda x: int(all(x))),
    "or": lambda n: (lambda x: int(any(x))),
    "xor": lambda n: (lambda x: sum(x) % 2),
}


def named_function(name: str, n: int | None, d: int | None, k: int | None
                   ) -> tuple[Callable[[Bits], int], int]:
    """``and3``, ``xor4``, ``const0`` (with ``--n``), or ``mxpj``/``pj``/``xrpj`` with d, k."""
    if name in ("mxpj", "pj", "xrpj"):
        if d is None or k is None:
            raise ValueError(f"function {name} needs --d and --k")
        _, oracle = oracle_for({"builder": name, "params": {"d": d, "k": k}})
        size = {"mxpj": fn.BlockEncoding(d, k).n, "pj": fn.BlockEncoding(d, 1).n,
                "xrpj": fn.XrpjLayout(d).n}[name]
        return oracle, size
    if name in NAMED:
        base, digits = name, ""
    else:
        base = name.rstrip("0123456789")
        digits = name[len(base):]
    if base not in NAMED:
        raise ValueError(f"unknown function {name!r}")
    size = int(digits) if digits else n
    if size is None:
        raise ValueError(f"function {name} needs a size (suffix or --n)")
    return NAMED[base](size), size


def cmd_subfunctions(args) -> int:
    f, n = named_function(args.fn, args.n, args.d, args.k)
    order = tuple(range(1, n + 1)) if args.order is None else tuple(int(v) for v in args.order.split(","))
    if args.min:
        res = count_min(f, n, samples=args.samples, rng=np.random.default_rng(args.seed))
        value, cut, order_label = res.value, "max", ("all" if res.exact else f"sampled:{res.orders_checked}")
    elif args.cut is None:
        value, cut, order_label = count_over_order(f, order), "max", ",".join(map(str, order))
    else:
        value = count_subfunctions(f, CutPartition(order, args.cut))
        cut, order_label = args.cut, ",".join(map(str, order))
    log_n = math.log2(value)
    width = implied_width(log_n, args.layers)
    report = Report(_config(args), ["function", "n", "order", "cut", "N_pi", "log2N", "bound_form",
                                    "exponent", "implied_width"])
    report.row(args.fn, n, order_label, cut, value, log_n, "qobdd", qobdd_exponent(args.layers, width), width)
    report.emit(args.out)
    info(f"N={value} log2N={log_n!r} implied_width={width}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    q = BoundQuery(args.form, t=args.t, l=args.l, k=args.k, w=args.w)
    exponent = log2_bound(q)
    raw = 2.0 ** exponent if exponent < 1024 else math.inf
    report = Report(_config(args), ["bound_form", "t", "l", "k", "w", "exponent", "bound", "implied_width"])
    width = implied_width(args.log_n, args.k or 1) if args.log_n is not None else ""
    report.row(args.form, _blank(args.t), _blank(args.l), _blank(args.k), _blank(args.w), exponent,
               raw, width)
    report.emit(args.out)
    info(f"exponent={exponent!r}")
    return EXIT_OK


def _blank(v):
    return "" if v is None else v


def cmd_hierarchy(args) -> int:
    widths = [int(w) for w in args.widths.split(",")]
    rep = gkr_check(widths, args.k, args.r, args.n, C=args.C, C1=args.C1)
    report = Report(_config(args), ["check", "w", "v", "value", "holds"])
    report.row("closure", "", "", ";".join(f"{w}->{m}" for w, m in rep.closure_missing) or "complete",
               int(rep.closure_ok))
    for w, ratio in rep.growth_ratios.items():
        report.row("growth_ratio", w, "", ratio, "")
    for (w, v), margin in rep.margins.items():
        report.row("margin", w, v, margin, int(margin > 0))
    if args.d is not None:
        v = args.v if args.v is not None else args.d
        rate = rate_exponent(args.d, v, args.k, args.r, C=args.C, C1=args.C1)
        report.row("rate_exponent", args.d, v, rate, int(rate > 0))
    report.emit(args.out)
    info(f"closure={'ok' if rep.closure_ok else 'missing'} failing_pairs={len(rep.failing_pairs)}")
    return EXIT_OK


def cmd_protocol(args) -> int:
    p = load_program(args.program)
    r = from_qobdd(p, args.cut)
    if args.action == "emulate":
        doc = json.dumps(r.tabulate(), sort_keys=True)
        if args.out:
            Path(args.out).write_text(doc + "\n")
        else:
            print(doc)
        info(f"t={r.t} l={r.l} u={args.cut}")
        return EXIT_OK

    header = ["sigma", "bucket", "gamma", "p_direct", "p_product", "gap", "bound"]
    report = Report(_config(args), header)
    if args.action == "check-lemma1":
        worst = 0.0
        for x in _inputs_for(args, p.n):
            sigma, gamma = r.partition.split(x)
            direct = accept_probability(p, x)
            seq = matrix_sequence(r, sigma, gamma)
            product = product_probability(seq)
            embedded = real_product_probability(real_embedded_sequence(seq))
            gap = max(abs(direct - product), abs(direct - embedded))
            worst = max(worst, gap)
            report.row(bits_to_hex(sigma), "", bits_to_hex(gamma), direct, product, gap, args.tol)
        report.emit(args.out)
        info(f"max_gap={worst!r}")
        return EXIT_OK if worst <= args.tol else EXIT_MISMATCH

    # buckets
    u, rest = args.cut, p.n - args.cut
    if max(u, rest) > MAX_EXHAUSTIVE_BITS:
        raise BudgetExceeded(1 << max(u, rest), 1 << MAX_EXHAUSTIVE_BITS)
    delta = args.delta if args.delta is not None else lemma3_delta(args.epsilon, r.k, r.l)
    gammas = all_halves(rest)
    if args.gammas is not None and args.gammas < len(gammas):
        rng = np.random.default_rng(args.seed)
        picks = sorted(rng.choice(len(gammas), size=args.gammas, replace=False).tolist())
        gammas = [gammas[i] for i in picks]
    rep = delta_bucket_experiment(r, delta, args.epsilon, all_halves(u), gammas)
    for row in rep.rows:
        report.row(row.sigma, row.bucket, row.gamma, row.p_direct, row.p_product, row.gap, row.bound)
    report.emit(args.out)
    info(f"delta={delta!r} buckets={rep.buckets} pairs={rep.pairs_checked} "
         f"gammas={rep.gammas_per_pair} gap_violations={rep.gap_violations} "
         f"conflicts={rep.decision_conflicts} log2_ceiling={rep.log2_ceiling:.1f}")
    return EXIT_OK if rep.ok else EXIT_MISMATCH


# --------------------------------------------------------------------------
# parser

def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["exhaustive", "random"], default="exhaustive")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=TOL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qobddlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build mxpj, pj or xrpj programs")
    p.add_argument("kind", choices=sorted(BUILDERS))
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="compare a program file against its classical oracle")
    p.add_argument("program")
    p.add_argument("--oracle", choices=["mxpj", "pj", "xrpj"])
    _add_sampling(p)
    p.add_argument("--exact", action="store_true", help="also require probabilities exactly 0 or 1")
    p.add_argument("--audit", action="store_true", help="check normalization after every step")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="accept probability of one input")
    p.add_argument("program")
    p.add_argument("--input", required=True, help="hex (x1 most significant) or 0b-prefixed bits")
    p.add_argument("--epsilon", type=float, default=0.25)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("subfunctions", help="count subfunctions of a named function")
    p.add_argument("--fn", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--cut", type=int)
    p.add_argument("--order", help="comma-separated permutation of 1..n")
    p.add_argument("--min", action="store_true", help="minimise over variable orders")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--layers", type=int, default=1, help="layer count for the implied width")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_subfunctions)

    p = sub.add_parser("bounds", help="log2 of the counting bounds")
    p.add_argument("--form", choices=["theorem", "proof", "qobdd"], required=True)
    p.add_argument("--t", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--w", type=int)
    p.add_argument("--log-n", type=float, dest="log_n")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("protocol", help="memoryless-protocol emulation experiments")
    p.add_argument("action", choices=["emulate", "check-lemma1", "buckets"])
    p.add_argument("program")
    p.add_argument("--cut", type=int, required=True)
    _add_sampling(p)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--delta", type=float)
    p.add_argument("--gammas", type=int, help="sample this many gamma halves")
    p.add_argument("--out")
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("hierarchy-check", help="width-set conditions at concrete parameters")
    p.add_argument("--widths", required=True, help="comma-separated widths")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=1.0)
    p.add_argument("--d", type=float, help="also report the rate exponent at this d")
    p.add_argument("--v", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hierarchy)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        info(f"budget exceeded: {exc}")
        return EXIT_BUDGET
    except NormalizationError as exc:
        info(f"normalization audit failed: {exc}")
        return EXIT_MISMATCH
    except (BuildError, ProgramError, TransformInapplicable, ProtocolError, fn.DomainError,
            fn.UnsupportedParameters, ValueError, OSError) as exc:
        info(f"error: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
