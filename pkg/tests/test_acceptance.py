"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line and asserts."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from seclist.channels import bsc, random_channel
from seclist.codes import concatenate, grouped_trivial_code, ml_code, repetition_codewords
from seclist.errors import DegenerateEpsilon
from seclist.info import (capacity, context, g_avg, lemma10_margin, superadditivity_check,
                          zeta1)
from seclist.protocols import bc_security, collusion_strategy, commit, make_hash, run_auction
from seclist.random_coding import build_secure_code, sample_code
from seclist.region import kappa, meta_converse_gap
from seclist.security import (crosscheck_intuitive, delta_B_exact, delta_C_exact, delta_D_exact,
                              eps_A_exact, evaluate)


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def record(num, ok, detail, elapsed, limit):
    timed = elapsed < limit
    line = (f"criterion {num:2d}: {'PASS' if ok and timed else 'FAIL'}  "
            f"[{elapsed:.2f}s / {limit:g}s] {detail}")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok and timed


def grouped_base():
    W = bsc(0.05)
    base = ml_code(repetition_codewords(2, 6), W)
    return W, base, grouped_trivial_code(base, W, 4)


def toy_codes():
    """Ten seeded codes with M = 4 over BSC(0.1), n = 2..6."""
    W = bsc(0.1)
    out = []
    for s in range(10):
        rng = np.random.default_rng(1000 + s)
        n = 2 + s % 5
        out.append(sample_code(context(W), n, 2.0 / n, seed=rng, R3=float(rng.uniform(0.0, 0.3)),
                               R2=1.0 / n))
    return W, out


def concat_pair():
    W = bsc(0.1)
    ctx = context(W)
    a = sample_code(ctx, 4, 0.5, seed=0, R3=0.0, R2=0.25)
    b = sample_code(ctx, 4, 0.5, seed=1, R3=0.0, R2=0.25)
    return W, a, b, concatenate(a, b, W)


def test_criterion_01_grouped_trivial_code():
    t0 = time.perf_counter()
    W, base, g = grouped_base()
    base_eps = eps_A_exact(base, W)[1]
    success = 1.0 - base_eps.mean()
    dB = delta_B_exact(g, W)
    dC, _ = delta_C_exact(g, W)
    ok_B = abs(dB - success / 4) <= 1e-9
    ok_C = dC >= 1.0 - base_eps.max()
    ok = record(1, ok_B and ok_C,
                f"delta_B={dB:.12f} vs {success / 4:.12f}; delta_C={dC:.6f} >= {1 - base_eps.max():.6f}",
                time.perf_counter() - t0, 1)
    assert ok


def test_criterion_02_capacity_and_kappa():
    t0 = time.perf_counter()
    W = bsc(0.1)
    C, _ = capacity(W)
    Cf = 1 - h2(0.1)
    grid = np.linspace(0.0, 1.0, 22)[1:-1]
    errs = [abs(kappa(W, r) - max(r - Cf, 0.0)) for r in grid]
    k1 = kappa(W, 1.0)
    ok = abs(C - Cf) <= 1e-6 and max(errs) <= 1e-6 and abs(k1 - h2(0.1)) <= 1e-4
    ok = record(2, ok, f"C={C:.9f} (closed form {Cf:.9f}); max kappa err={max(errs):.2e}; "
                f"kappa(1)={k1:.6f} vs h(0.1)={h2(0.1):.6f}", time.perf_counter() - t0, 5)
    assert ok


def test_criterion_03_operational_equivalence():
    t0 = time.perf_counter()
    W = bsc(0.1)
    code = sample_code(context(W), 4, 0.75, seed=3, R3=0.15, R2=0.25)
    cc = crosscheck_intuitive(code, W, 100_000, seed=42)
    detail = "; ".join(f"{k}: exact={v['exact']:.5f} mc={v['estimate']:.5f} "
                       f"|d|/sigma={abs(v['estimate'] - v['exact']) / max(v['sigma'], 1e-300):.2f}"
                       for k, v in cc.condition.items())
    ok = record(3, cc.ok, detail, time.perf_counter() - t0, 30)
    assert ok


def test_criterion_04_hiding_bound():
    t0 = time.perf_counter()
    W, codes = toy_codes()
    slacks = []
    for s, code in enumerate(codes):
        sec = bc_security(code, make_hash(2, s), W)
        slacks.append(sec.slack)
    ok = record(4, min(slacks) >= 0, f"min slack={min(slacks):.6f} over {len(slacks)} codes",
                time.perf_counter() - t0, 60)
    assert ok


def test_criterion_05_meta_converse():
    t0 = time.perf_counter()
    cases = []
    W05, _, g = grouped_base()
    cases.append(("grouped", g, W05))
    W = bsc(0.1)
    base3 = ml_code(np.array([[0] * 8, [1] * 5 + [0] * 3, [0] * 3 + [1] * 5]), W)
    cases.append(("grouped33", grouped_trivial_code(base3, W, 16, M=33), W))
    for s in range(3):
        sub, _ = build_secure_code(context(W), 8, 0.7, 0.5, seed=s, attempts=1,
                                   evaluate_security=False)
        cases.append((f"built{s}", sub, W))
    _, toys = toy_codes()
    cases += [(f"toy{i}", c, W) for i, c in enumerate(toys)]
    _, a, b, c = concat_pair()
    cases += [("concat_a", a, W), ("concat_b", b, W), ("concat", c, W)]
    worst, bad, skipped = np.inf, [], []
    for name, code, ch in cases:
        try:
            mc = meta_converse_gap(code, ch)
        except DegenerateEpsilon:
            skipped.append(name)
            continue
        worst = min(worst, mc.slack)
        if not mc.holds:
            bad.append(name)
    ok = record(5, not bad, f"{len(cases) - len(skipped)} codes, min slack={worst:.4f}, "
                f"violations={bad}, degenerate={skipped}", time.perf_counter() - t0, 60)
    assert ok


def test_criterion_06_superadditivity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    chans = [random_channel(rng, 2, 3), random_channel(rng, 3, 2)]
    worst_I, worst_H = -np.inf, -np.inf
    for i in range(100):
        W = chans[i % 2]
        joint = rng.dirichlet(np.full(W.input_size**3, 0.5))
        r = superadditivity_check(joint, W)
        worst_I = max(worst_I, r.I_joint - r.I_sum)
        worst_H = max(worst_H, r.H_joint - r.H_sum)
    ok = record(6, worst_I <= 1e-9 and worst_H <= 1e-9,
                f"max I excess={worst_I:.3e}, max H excess={worst_H:.3e}",
                time.perf_counter() - t0, 10)
    assert ok


def test_criterion_07_zeta_and_margin():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    s_grid = np.geomspace(1e-3, 50, 200)
    g_grid = np.linspace(0.01, 5.0, 100)
    min_z1, max_margin, worst_step, worst_conv = np.inf, -np.inf, np.inf, np.inf
    nonpos, nonpos_full_support = 0, 0
    for i in range(50):
        W = random_channel(rng, 2 + i % 2, 2 + i % 3)
        _, P = capacity(W)
        ctx = context(W, P)
        z1 = zeta1(ctx)
        min_z1 = min(min_z1, z1)
        if z1 <= 0:
            nonpos += 1
            nonpos_full_support += bool(np.all(P > 1e-9))
        m = np.array([lemma10_margin(ctx, s) for s in s_grid])
        max_margin = max(max_margin, m.max())
        worst_step = min(worst_step, np.diff(m).min())
        g = np.array([g_avg(ctx, s) for s in g_grid])
        worst_conv = min(worst_conv, np.diff(g, 2).min())
    ok = min_z1 > 0 and max_margin < 0 and worst_step >= -1e-12 and worst_conv >= -1e-9
    ok = record(7, ok, f"min zeta1={min_z1:.4g} (zeta1<=0 on {nonpos}/50 channels, "
                f"{nonpos_full_support} of them with full-support prior), max margin={max_margin:.3e}, "
                f"min step={worst_step:.2e}, min 2nd diff={worst_conv:.2e}",
                time.perf_counter() - t0, 60)
    assert ok


def test_criterion_08_direct_pipeline_trend():
    t0 = time.perf_counter()
    W = bsc(0.1)
    ctx = context(W)
    med = {}
    eta_ok = True
    viol = {}
    dD8 = []
    for n in (8, 12, 16):
        vals = []
        viol[n] = 0
        for s in range(20):
            sub, rep = build_secure_code(ctx, n, 0.7, 0.5, seed=s, attempts=1,
                                         evaluate_security=(n == 8))
            vals.append(rep.kept_avg_eps_A)
            viol[n] += rep.kept_violations
            eta_ok &= rep.kept_eta_A_zero and rep.kept_eta_C_zero
            if n == 8:
                dD8.append(rep.security.delta_D)
                M8, L8 = sub.M, sub.L
        med[n] = float(np.median(vals))
    mono = med[8] >= med[12] >= med[16]
    base3 = ml_code(np.array([[0] * 8, [1] * 5 + [0] * 3, [0] * 3 + [1] * 5]), W)
    g = grouped_trivial_code(base3, W, L8, M=M8)
    dG = delta_D_exact(g, W).value
    d_ok = max(dD8) < dG
    detail = (f"median eps_A n=8/12/16: {med[8]:.4f}/{med[12]:.4f}/{med[16]:.4f} "
              f"(non-increasing: {mono}); kept eta violations {viol} (all zero: {eta_ok}); "
              f"delta_D n=8 max={max(dD8):.4f} < grouped({M8},{L8})={dG:.4f}: {d_ok}")
    ok = record(8, mono and eta_ok and d_ok, detail, time.perf_counter() - t0, 600)
    assert ok


def test_criterion_09_concatenation():
    t0 = time.perf_counter()
    W, a, b, c = concat_pair()
    ra, rb, rc = evaluate(a, W), evaluate(b, W), evaluate(c, W)
    ok_A = rc.eps_A <= ra.eps_A + rb.eps_A + 1e-12
    ok_B = rc.delta_B <= min(ra.delta_B, rb.delta_B) + 1e-12
    ok_D = rc.delta_D <= min(ra.delta_D, rb.delta_D) + 1e-12
    detail = (f"eps_A {rc.eps_A:.4f} <= {ra.eps_A:.4f}+{rb.eps_A:.4f}: {ok_A}; "
              f"delta_B {rc.delta_B:.4f} <= min({ra.delta_B:.4f},{rb.delta_B:.4f}): {ok_B}; "
              f"delta_D {rc.delta_D:.4f} <= min({ra.delta_D:.4f},{rb.delta_D:.4f}): {ok_D} "
              f"(<= max: {rc.delta_D <= max(ra.delta_D, rb.delta_D) + 1e-12})")
    ok = record(9, ok_A and ok_B and ok_D, detail, time.perf_counter() - t0, 60)
    assert ok


def test_criterion_10_protocols():
    t0 = time.perf_counter()
    runs = 10_000
    W = bsc(0.1)
    code = sample_code(context(W), 6, 2.0 / 6, seed=10, R3=0.1, R2=1.0 / 6)
    eps, _ = eps_A_exact(code, W)
    sigma = math.sqrt(eps * (1 - eps) / runs)
    h = make_hash(2, 10)
    rng = np.random.default_rng(100)
    bits = rng.integers(0, 2, runs)
    acc = np.mean([commit(int(b), code, h, W, rng=rng).accept for b in bits])
    ok_commit = acc >= 1 - eps - 3 * sigma
    rng = np.random.default_rng(101)
    bids = {1: 10.0, 2: 5.0, 3: 7.0, 4: 1.0}
    fail = np.mean([not run_auction(W, code, bids, rng=rng).verified for _ in range(runs)])
    ok_auction = fail <= eps + 3 * sigma
    Wg, _, g = grouped_base()
    strat = collusion_strategy(g, Wg)
    rng = np.random.default_rng(102)
    cheat_bids = {strat.cheater: 9.0, strat.colluder: 1.0}
    coll = np.mean([run_auction(Wg, g, cheat_bids, cheat_strategy=strat, rng=rng)
                    .cheat["colluder_listed"] for _ in range(runs)])
    ok_coll = coll >= 0.9
    detail = (f"eps_A={eps:.4f}, sigma={sigma:.4f}; accept={acc:.4f}; auction fail={fail:.4f}; "
              f"collusion={coll:.4f}")
    ok = record(10, ok_commit and ok_auction and ok_coll, detail, time.perf_counter() - t0, 300)
    assert ok
