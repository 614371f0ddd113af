import math

import numpy as np
import pytest

from seclist.channels import bsc, make_channel, noiseless
from seclist.errors import HypothesisViolated, ValidationError
from seclist.info import context
from seclist.random_coding import (build_secure_code, code_sizes, eta_A_all, eta_C_all,
                                   eta_C_from_scores, expurgate, expurgation_size, lemma8_bound,
                                   sample_code, schedule, select)
from seclist.security import eps_A_exact, evaluate, union_bound


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@pytest.fixture(scope="module")
def ctx():
    return context(bsc(0.1))


def test_schedule_bsc(ctx):
    s = schedule(ctx, 0.7, 0.5)
    I = 1 - h2(0.1)
    d = 0.8 * math.log2(9)  # D(Bern(0.1) || Bern(0.9))
    assert s.I == pytest.approx(I, abs=1e-12)
    assert s.eps0 == pytest.approx(0.3, abs=1e-12)
    assert s.eps1 == pytest.approx((I - 0.2) / 2, abs=1e-12)
    assert s.R3 == pytest.approx(I - (I - 0.2) / 2, abs=1e-12)
    assert s.eps3 == pytest.approx((0.7 - I) / 3, abs=1e-12)
    assert s.zeta1 == pytest.approx(d, abs=1e-9)
    assert s.zeta2 == pytest.approx(d, abs=1e-9)
    assert s.eps2 == pytest.approx(3 * s.eps1, abs=1e-9)


@pytest.mark.parametrize("R1,R2,clause", [
    (0.5, 0.6, "R2<R1"),
    (0.7, 0.1, "eps1"),
    (0.5, 0.4, "eps3"),
    (1.0, 0.9, "eps0"),
])
def test_schedule_clauses(ctx, R1, R2, clause):
    with pytest.raises(HypothesisViolated) as e:
        schedule(ctx, R1, R2)
    assert e.value.clause == clause


def test_noiseless_has_no_admissible_rates():
    c = context(noiseless(2))
    for R1 in (0.5, 0.99, 1.0):
        with pytest.raises(HypothesisViolated):
            schedule(c, R1, R1 - 0.3)


def test_code_sizes():
    assert code_sizes(8, 0.7, 0.5) == (49, 16)
    assert code_sizes(4, 0.5, 0.25) == (4, 2)


def test_sample_code_point_mass_and_seed():
    c = context(bsc(0.1), P=np.array([1.0, 0.0]))
    code = sample_code(c, 5, 0.6, seed=1, R3=0.1, R2=0.2)
    assert not code.codewords.any()
    a = sample_code(context(bsc(0.1)), 6, 0.5, seed=9, R3=0.2, R2=0.3)
    b = sample_code(context(bsc(0.1)), 6, 0.5, seed=9, R3=0.2, R2=0.3)
    np.testing.assert_array_equal(a.codewords, b.codewords)
    with pytest.raises(ValidationError):
        sample_code(context(bsc(0.1)), 1, 0.5, seed=0)


def test_sample_code_frequencies():
    P = np.array([0.3, 0.7])
    code = sample_code(context(bsc(0.1), P), 12, 1.0, seed=4, R3=0.1, R2=0.5)
    N = code.codewords.size
    f = code.codewords.mean()
    assert abs(f - 0.7) <= 4 * math.sqrt(0.21 / N)


def test_eta_C_single_and_duplicates(ctx):
    assert eta_C_from_scores(np.array([[3.0]]), 4, 0.1, 0.2).tolist() == [0]
    s = schedule(ctx, 0.7, 0.5)
    code = sample_code(ctx, 4, 0.7, seed=0, sched=s)
    cw = code.codewords.copy()
    cw[1] = cw[0]
    from seclist.codes import ListCode
    dup = ListCode(n=4, M=code.M, L=code.L, codewords=cw, decoder=code.decoder)
    hC = eta_C_all(dup, ctx, s.eps2, s.R3)
    assert hC[0] == 1 and hC[1] == 1


def test_eta_A_symmetric_channel_is_zero(ctx):
    s = schedule(ctx, 0.7, 0.5)
    code = sample_code(ctx, 8, 0.7, seed=2, sched=s)
    assert not eta_A_all(code, ctx, s.eps3).any()


def test_eta_A_concentrates():
    c = context(make_channel([[0.9, 0.1], [0.3, 0.7]]))
    frac = []
    for n in (8, 32, 128):
        code = sample_code(c, n, 6.0 / n, seed=n, R3=0.0, R2=3.0 / n)
        frac.append(eta_A_all(code, c, 0.05).mean())
    assert frac[0] >= frac[1] >= frac[2]
    assert frac[2] < 0.1


def test_select_examples():
    keep, eps4 = select([0.0, 1.0, 0.5])
    assert keep.tolist() == [0, 2] and eps4 == pytest.approx(1.5)
    keep, _ = select([1.0, 1.0, 1.0, 0.0])
    assert keep.tolist() == [0, 1, 3]
    assert [expurgation_size(M) for M in (2, 3, 4, 49)] == [2, 2, 3, 33]


def test_expurgate_markov(ctx):
    s = schedule(ctx, 0.7, 0.5)
    code = sample_code(ctx, 8, 0.7, seed=3, sched=s)
    sub, eps4, det = expurgate(code, ctx, s)
    assert sub.M == 33 and sub.L == min(code.L, 32)
    assert det.scores[det.kept].max() <= eps4 + 1e-12
    eps, per = eps_A_exact(code, ctx.W)
    np.testing.assert_allclose(det.eps_A, per, atol=1e-12)


def test_lemma8_bound_examples():
    b = lemma8_bound(100, 0.2, 1.0, 1.0, 0.5)
    assert b.value == pytest.approx(0.5) and not b.vacuous
    assert b.threshold_n == pytest.approx(25.0)
    assert lemma8_bound(10, 0.2, 1.0, 1.0, 0.5).vacuous
    assert lemma8_bound(10, 0.2, 1.0, 1.0, 0.0).value == 0.0
    assert lemma8_bound(400, 0.2, 1.0, 1.0, 0.5).value < b.value


def test_build_secure_code_n8(ctx):
    sub, rep = build_secure_code(ctx, 8, 0.7, 0.5, seed=1, attempts=2)
    assert (rep.M, rep.L) == (49, 16)
    assert rep.expurgated_M == sub.M == 33
    assert rep.eps_method == "exact"
    assert rep.lemma8_vacuous  # n is far below the threshold at this rate pair
    assert rep.security is not None
    assert rep.bu2["bound"] >= rep.security.delta_B - 1e-12
    assert rep.realized_rates[0] == pytest.approx(math.log2(49) / 8)


def test_build_deterministic():
    a = build_secure_code(bsc(0.1), 6, 0.7, 0.5, seed=7, attempts=3)[1].to_json()
    b = build_secure_code(bsc(0.1), 6, 0.7, 0.5, seed=7, attempts=3)[1].to_json()
    assert a == b


def test_union_bound_dominates_random_codes(ctx):
    for n, seed in ((4, 0), (5, 1), (6, 2)):
        code = sample_code(ctx, n, 0.7, seed=seed, R3=0.3, R2=0.5)
        _, per = eps_A_exact(code, ctx.W)
        assert union_bound(code, ctx.W) >= per.mean() - 1e-12
        r = evaluate(code, ctx.W)
        assert 0.0 <= r.delta_D <= 1.0
