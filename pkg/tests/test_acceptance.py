"""One test per acceptance criterion; each prints a PASS/FAIL line.

The heavy runs live in cached helpers so the normalization audit
(criterion 10) inspects exactly the runs of criteria 1-4.
"""
import functools
import itertools
import math
import time

import numpy as np

from qobddlab.cli import main
from qobddlab.constructions import MxpjBuildParams, PjBuildParams, build_mxpj_program, build_pj_program
from qobddlab.functions import (
    BlockEncoding,
    LayeredPointerInput,
    XrpjLayout,
    distinguishing_gamma,
    mxpj_bool,
    mxpj_bool_bits,
    pj_bool,
    sigma_generate,
    xrpj_eval,
)
from qobddlab.linalg import TOL
from qobddlab.protocol import (
    all_halves,
    delta_bucket_experiment,
    from_qobdd,
    lemma3_delta,
    matrix_sequence,
    product_probability,
    real_embedded_sequence,
    real_product_probability,
)
from qobddlab.qobdd import all_inputs, final_accept_mass, is_commutative, load_program, random_program, run
from qobddlab.subfunctions import (
    BoundQuery,
    CutPartition,
    count_min,
    count_subfunctions,
    implied_width,
    log2_bound,
)
from reference import closeness_violations


class Audit:
    """Accept probabilities with the worst mass defect seen over every step."""

    def __init__(self):
        self.runs = 0
        self.worst = 0.0

    def probability(self, p, x):
        def check(_, rec):
            self.worst = max(self.worst, rec.mass_defect())

        rec = run(p, x, on_step=check)
        self.runs += 1
        return rec.accepted_mass + final_accept_mass(p, rec)


def _bits(rng, n, count):
    return [tuple(int(b) for b in row) for row in rng.integers(0, 2, size=(count, n))]


def _construct_and_verify(tmp, kind, d, k, *verify_args):
    path = tmp / f"{kind}_{d}_{k}.json"
    start = time.perf_counter()
    built = main(["construct", kind, "--d", str(d), "--k", str(k), "--out", str(path)])
    verified = main(["verify", str(path), "--out", str(tmp / f"{kind}_{d}_{k}.csv"), *verify_args])
    return load_program(path), built == 0 and verified == 0, time.perf_counter() - start


@functools.cache
def criterion1(tmp):
    p, cli_ok, seconds = _construct_and_verify(tmp, "mxpj", 2, 2, "--exact")
    audit = Audit()
    enc = BlockEncoding(2, 2)
    exact = all(audit.probability(p, x) == mxpj_bool_bits(x, enc) for x in all_inputs(8))
    p4, cli4_ok, _ = _construct_and_verify(tmp, "mxpj", 4, 2, "--mode", "random", "--samples", "10000",
                                           "--tol", "1e-9")
    enc4 = BlockEncoding(4, 2)
    rng = np.random.default_rng(2024)
    close = all(abs(audit.probability(p4, x) - mxpj_bool_bits(x, enc4)) <= 1e-9
                for x in _bits(rng, 32, 10_000))
    return dict(width=p.width, width4=p4.width, cli=cli_ok and cli4_ok, exact=exact, close=close,
                seconds=seconds, audit=audit)


@functools.cache
def criterion2(tmp):
    p, cli_ok, seconds = _construct_and_verify(tmp, "pj", 2, 1, "--exact")
    start = time.perf_counter()
    audit = Audit()
    enc = BlockEncoding(2)
    exact = all(audit.probability(p, x) == pj_bool(x, enc, 2) for x in all_inputs(4))
    commutative = is_commutative(p, exhaustive_orders=True)
    return dict(width=p.width, cli=cli_ok, exact=exact, commutative=commutative,
                seconds=seconds + time.perf_counter() - start, audit=audit)


@functools.cache
def criterion3(tmp):
    p, cli_ok, seconds = _construct_and_verify(tmp, "xrpj", 2, 1, "--exact")
    audit = Audit()
    layout = XrpjLayout(2)
    exact = all(audit.probability(p, x) == xrpj_eval(x, layout, 1) for x in all_inputs(12))
    return dict(width=p.width, cli=cli_ok, exact=exact, seconds=seconds, audit=audit)


@functools.cache
def criterion4():
    audit = Audit()
    p = build_mxpj_program(MxpjBuildParams(2, 2))
    r = from_qobdd(p, 4)
    gap_a = 0.0
    for x in all_inputs(8):
        seq = matrix_sequence(r, *r.partition.split(x))
        direct = audit.probability(p, x)
        gap_a = max(gap_a, abs(product_probability(seq) - direct),
                    abs(real_product_probability(real_embedded_sequence(seq)) - direct))
    rng = np.random.default_rng(4)
    gap_b = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        q = random_program(n, 1 << int(rng.integers(0, 3)), int(rng.integers(1, 4)), rng, measure_rate=0.2)
        rq = from_qobdd(q, int(rng.integers(1, n)))
        for x in _bits(rng, n, 20):
            seq = matrix_sequence(rq, *rq.partition.split(x))
            direct = audit.probability(q, x)
            gap_b = max(gap_b, abs(product_probability(seq) - direct),
                        abs(real_product_probability(real_embedded_sequence(seq)) - direct))
    return dict(gap_a=gap_a, gap_b=gap_b, audit=audit)


def test_criterion_01_mxpj_construction(acceptance, tmp_path_factory):
    res = criterion1(tmp_path_factory.getbasetemp())
    ok = (res["width"] == 4 and res["width4"] == 16 and res["cli"] and res["exact"] and res["close"]
          and res["seconds"] < 5)
    acceptance(1, ok, f"width {res['width']}, 256/256 exact, d=4 width {res['width4']} 10^4 random "
                      f"within 1e-9={res['close']}, {res['seconds']:.2f}s")


def test_criterion_02_pj_construction(acceptance, tmp_path_factory):
    res = criterion2(tmp_path_factory.getbasetemp())
    ok = res["width"] == 32 and res["cli"] and res["exact"] and res["commutative"] and res["seconds"] < 5
    acceptance(2, ok, f"width {res['width']}, 16/16 exact={res['exact']}, "
                      f"commutative over all 24 orders={res['commutative']}, {res['seconds']:.2f}s")


def test_criterion_03_xrpj_pipeline(acceptance, tmp_path_factory):
    res = criterion3(tmp_path_factory.getbasetemp())
    ok = res["width"] == 128 and res["cli"] and res["exact"] and res["seconds"] < 60
    acceptance(3, ok, f"width {res['width']}, 4096/4096 exact={res['exact']}, {res['seconds']:.2f}s")


def test_criterion_04_lemma1(acceptance):
    res = criterion4()
    ok = res["gap_a"] <= 1e-9 and res["gap_b"] <= 1e-9
    acceptance(4, ok, f"max gap {res['gap_a']:.1e} on 256 inputs, {res['gap_b']:.1e} on 100x20 random")


def test_criterion_05_closeness(acceptance):
    rng = np.random.default_rng(5)
    total = 0
    for prop in range(1, 7):
        for delta in (1e-4, 0.01, 0.2):
            total += closeness_violations(prop, 10_000, delta, rng)
    acceptance(5, total == 0, f"{total} violations over 6 properties x 3 deltas x 10^4 samples")


def test_criterion_06_buckets(acceptance):
    p = build_mxpj_program(MxpjBuildParams(2, 3))
    r = from_qobdd(p, 5)
    eps = 0.25
    delta = lemma3_delta(eps, r.k, r.l)
    rep = delta_bucket_experiment(r, delta, eps, all_halves(5), all_halves(7))
    ok = rep.ok and rep.pairs_checked > 0 and rep.gammas_per_pair >= 100
    acceptance(6, ok, f"delta={delta:.3e}, {rep.buckets} buckets for {rep.sigmas} sigma, "
                      f"{rep.pairs_checked} pairs x {rep.gammas_per_pair} gamma, "
                      f"{rep.gap_violations} gap violations, {rep.decision_conflicts} conflicts")


def test_criterion_07_sigma_set(acceptance):
    start = time.perf_counter()
    sigma = list(sigma_generate(9, 4))
    pairs = list(itertools.combinations(sigma, 2))
    separated = sum(
        mxpj_bool(LayeredPointerInput(9, 4, a, g := distinguishing_gamma(a, b, 9, 4)))
        != mxpj_bool(LayeredPointerInput(9, 4, b, g))
        for a, b in pairs)
    seconds = time.perf_counter() - start
    ok = len(sigma) == 81 and len(pairs) >= 200 and separated == len(pairs) and seconds < 60
    acceptance(7, ok, f"{len(sigma)} members, {separated}/{len(pairs)} pairs separated, {seconds:.2f}s")


def test_criterion_08_bounds(acceptance):
    values = (log2_bound(BoundQuery("theorem", t=3, l=1)), log2_bound(BoundQuery("proof", k=2, l=1)),
              log2_bound(BoundQuery("qobdd", k=1, w=2)), implied_width(512, 1))
    acceptance(8, values == (576, 1920, 512, 2), f"values {values}")


def test_criterion_09_subfunctions(acceptance):
    start = time.perf_counter()
    and3 = count_min(lambda x: x[0] & x[1] & x[2], 3)
    xor4 = count_subfunctions(lambda x: sum(x) % 2, CutPartition.natural(4, 2))
    const = count_min(lambda x: 0, 4)
    seconds = time.perf_counter() - start
    ok = and3.value == 2 and and3.exact and xor4 == 2 and const.value == 1 and seconds < 1
    acceptance(9, ok, f"N(and3)={and3.value}, N_pi(xor4)={xor4}, N(const)={const.value}, {seconds:.3f}s")


def test_criterion_10_normalization(acceptance, tmp_path_factory):
    base = tmp_path_factory.getbasetemp()
    audits = [criterion1(base)["audit"], criterion2(base)["audit"], criterion3(base)["audit"],
              criterion4()["audit"]]
    runs = sum(a.runs for a in audits)
    worst = max(a.worst for a in audits)
    acceptance(10, worst <= TOL and runs > 0, f"{runs} runs, worst defect {worst:.1e}")


def test_criteria_share_one_tolerance():
    assert math.isclose(TOL, 1e-9)
