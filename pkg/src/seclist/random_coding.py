"""Random-coding construction: i.i.d. sampling, diagnostics, expurgation and bounds.

Pipeline for a target rate pair (R1, R2) and prior P:

1. derive the parameter schedule (eps0..eps3, R3) and check the hypothesis
   0 < R1 - R2 < I(P,W) < R1 < H(P) with zeta1(P) > 0;
2. draw M = ceil(2^{n R1}) codewords i.i.d. from P^n, attach the threshold
   list decoder with rate R3 and list cap L = ceil(2^{n R2});
3. score each message by eps_{A,m} + eta_A(m) + eta_C(m) and keep the
   ceil(2M/3) best (Markov selection); eps4 = 3 * mean score;
4. repeat up to ``attempts`` times and keep the attempt with the smallest eps4.

Attempt ``i`` draws from ``SeedSequence(seed).spawn(attempts)[i]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import Channel, enumeration_budget, iter_word_chunks, product_dist_log
from .codes import (ListCode, ThresholdDecoder, codeword_log_likelihoods, decode_batch,
                    iter_tables, subcode)
from .errors import BudgetExceeded, HypothesisViolated, ValidationError
from .info import (F_matrix, InfoContext, context, entropy, mutual_information, v_max, zeta1,
                   zeta2)
from .security import SecurityReport, evaluate, sample_message_outputs

MC_TRIALS = 10_000


@dataclass(frozen=True)
class ParameterSchedule:
    R1: float
    R2: float
    I: float
    H: float
    eps0: float
    eps1: float
    eps2: float
    eps3: float
    R3: float
    zeta1: float
    zeta2: float

    def to_json(self) -> dict:
        return asdict(self)


def schedule(ctx: InfoContext, R1: float, R2: float) -> ParameterSchedule:
    """Parameter schedule; raises HypothesisViolated naming the first failed clause."""
    I = mutual_information(ctx)
    H = entropy(ctx.P)
    if not R1 - R2 > 0:
        raise HypothesisViolated("R2<R1", f"R1-R2={R1 - R2:.6g}")
    if not R1 - R2 < I:
        raise HypothesisViolated("eps1", f"R1-R2={R1 - R2:.6g} >= I(P,W)={I:.6g}")
    if not I < R1:
        raise HypothesisViolated("eps3", f"R1={R1:.6g} <= I(P,W)={I:.6g}")
    if not R1 < H:
        raise HypothesisViolated("eps0", f"R1={R1:.6g} >= H(P)={H:.6g}")
    z1, z2 = zeta1(ctx), zeta2(ctx)
    if not z1 > 0:
        raise HypothesisViolated("zeta1", f"zeta1(P)={z1:.6g}")
    eps1 = (I - R1 + R2) / 2
    return ParameterSchedule(R1=R1, R2=R2, I=I, H=H, eps0=H - R1, eps1=eps1,
                             eps2=(1 + 2 * z2 / z1) * eps1,
                             eps3=min(eps1, (R1 - I) / 3), R3=I - eps1, zeta1=z1, zeta2=z2)


def code_sizes(n: int, R1: float, R2: float) -> tuple[int, int]:
    # small float slack so exact powers of two do not round up
    M = math.ceil(2 ** (n * R1) - 1e-9)
    L = math.ceil(2 ** (n * R2) - 1e-9)
    return M, L


def sample_code(ctx: InfoContext, n: int, R1: float, seed=None, R3: float | None = None,
                R2: float | None = None, sched: ParameterSchedule | None = None) -> ListCode:
    """Draw M = ceil(2^{nR1}) codewords i.i.d. from P^n with the threshold decoder attached.

    R3 and the list cap come from ``sched`` if given, else from ``R3``/``R2``
    (or the schedule derived from (R1, R2)).
    """
    if sched is None and (R3 is None or R2 is None):
        if R2 is None:
            raise ValidationError("sample_code needs R2 or a schedule")
        sched = schedule(ctx, R1, R2)
    if sched is not None:
        R2, R3 = sched.R2, sched.R3
    M, L = code_sizes(n, R1, R2)
    if M < 2:
        raise ValidationError(f"M = {M} < 2; increase n or R1")
    L = max(1, min(L, M - 1))
    rng = np.random.default_rng(seed)
    cw = rng.choice(ctx.W.input_size, size=(M, n), p=ctx.P)
    return ListCode(n=n, M=M, L=L, codewords=cw, decoder=ThresholdDecoder(ctx.P, R3),
                    input_size=ctx.W.input_size, output_size=ctx.W.output_size)


def pair_scores(ctx: InfoContext, codewords) -> np.ndarray:
    """``[m, j] = F^n(phi(m), phi(j) | P)``."""
    cw = np.asarray(codewords, dtype=np.int64)
    Fm = F_matrix(ctx)
    out = np.zeros((cw.shape[0], cw.shape[0]))
    with np.errstate(invalid="ignore"):
        for i in range(cw.shape[1]):
            out += Fm[cw[:, i][:, None], cw[:, i][None, :]]
    return out


def eta_A(code: ListCode, ctx: InfoContext, m: int, eps: float) -> int:
    """0 iff F^n(phi(m), phi(m)) < n (I(P,W) + eps)."""
    return int(eta_A_all(code, ctx, eps)[m])


def eta_C(code: ListCode, ctx: InfoContext, m: int, eps2: float, R3: float) -> int:
    """0 iff F^n(phi(m), phi(j)) < n (R3 - eps2) for every j != m."""
    return int(eta_C_all(code, ctx, eps2, R3)[m])


def eta_A_all(code: ListCode, ctx: InfoContext, eps: float, scores=None) -> np.ndarray:
    S = pair_scores(ctx, code.codewords) if scores is None else scores
    return (~(np.diag(S) < code.n * (mutual_information(ctx) + eps))).astype(int)


def eta_C_all(code: ListCode, ctx: InfoContext, eps2: float, R3: float,
              scores=None) -> np.ndarray:
    S = pair_scores(ctx, code.codewords) if scores is None else scores
    return eta_C_from_scores(S, code.n, eps2, R3)


def eta_C_from_scores(S, n: int, eps2: float, R3: float) -> np.ndarray:
    """Row m is 1 when some j != m has F^n(phi(m), phi(j)) >= n (R3 - eps2)."""
    T = np.array(S, dtype=float)
    np.fill_diagonal(T, -np.inf)
    return (~np.all(T < n * (R3 - eps2), axis=1)).astype(int)


def eps_A_per_message(code: ListCode, W: Channel, budget: int | None = None,
                      trials: int = MC_TRIALS, seed=None) -> tuple[np.ndarray, str]:
    """Exact eps_{A,m} when |Y|^n fits the budget, else the upper 95% Monte-Carlo bound."""
    budget = enumeration_budget() if budget is None else budget
    if W.output_size**code.n <= budget:
        hit = np.zeros(code.M)
        for _, p, mem in iter_tables(code, W, budget):
            hit += np.sum(p * mem, axis=1)
        return np.clip(1.0 - hit, 0.0, 1.0), "exact"
    kids = np.random.SeedSequence(seed).spawn(code.M)
    out = np.empty(code.M)
    for m in range(code.M):
        ys = sample_message_outputs(code, W, m, np.random.default_rng(kids[m]), trials)
        miss = 1.0 - decode_batch(code, W, ys)[:, m].mean()
        out[m] = min(1.0, miss + 1.96 * math.sqrt(max(miss * (1 - miss), 0.0) / trials))
    return out, "monte_carlo_upper95"


@dataclass
class Expurgation:
    kept: np.ndarray
    eps4: float
    scores: np.ndarray
    eps_A: np.ndarray
    eta_A: np.ndarray
    eta_C: np.ndarray


def expurgation_size(M: int) -> int:
    return math.ceil(2 * M / 3)


def select(scores) -> tuple[np.ndarray, float]:
    """Keep the ceil(2M/3) smallest scores (lower index first on ties); eps4 = 3 * mean."""
    s = np.asarray(scores, dtype=float)
    keep = np.sort(np.argsort(s, kind="stable")[: expurgation_size(s.shape[0])])
    return keep, float(3.0 * s.mean())


def expurgate(code: ListCode, ctx: InfoContext, sched: ParameterSchedule,
              budget: int | None = None, seed=None, eps_A=None):
    """Return ``(subcode, eps4, details)``; details is an :class:`Expurgation`."""
    if eps_A is None:
        eps_A, _ = eps_A_per_message(code, ctx.W, budget, seed=seed)
    S = pair_scores(ctx, code.codewords)
    hA = eta_A_all(code, ctx, sched.eps3, S)
    hC = eta_C_all(code, ctx, sched.eps2, sched.R3, S)
    scores = eps_A + hA + hC
    keep, eps4 = select(scores)
    return subcode(code, keep), eps4, Expurgation(keep, eps4, scores, eps_A, hA, hC)


@dataclass
class Lemma8Bound:
    value: float
    vacuous: bool
    threshold_n: float


def lemma8_bound(n: int, sched_or_eps1, zeta1_: float, zeta2_: float, V: float) -> Lemma8Bound:
    """V / (n (eps1 - zeta2 sqrt(2V) / (zeta1 sqrt(n)))^2); vacuous when the inner term <= 0."""
    eps1 = getattr(sched_or_eps1, "eps1", sched_or_eps1)
    if V == 0:
        return Lemma8Bound(0.0, False, 0.0)
    inner = eps1 - zeta2_ * math.sqrt(2 * V) / (zeta1_ * math.sqrt(n))
    thr = 2 * V * zeta2_**2 / (zeta1_**2 * eps1**2)
    if inner <= 0:
        return Lemma8Bound(float("inf"), True, thr)
    return Lemma8Bound(V / (n * inner**2), False, thr)


def lemma8_premises(code: ListCode, ctx: InfoContext, sched: ParameterSchedule) -> np.ndarray:
    """Per message: cross scores below n(R3 - eps2) and self score below n(I + eps1)."""
    S = pair_scores(ctx, code.codewords)
    self_ok = np.diag(S) < code.n * (sched.I + sched.eps1)
    T = S.copy()
    np.fill_diagonal(T, -np.inf)
    cross_ok = np.all(T < code.n * (sched.R3 - sched.eps2), axis=1)
    return self_ok & cross_ok


def bu2_bound(code: ListCode, ctx: InfoContext, sched: ParameterSchedule, M_full: int,
              budget: int | None = None) -> dict:
    """Upper bound on delta_B of the kept code and the Chebyshev bound on each tail term."""
    W = ctx.W
    budget = enumeration_budget() if budget is None else budget
    if W.output_size**code.n > budget:
        raise BudgetExceeded("|Y|^n", W.output_size**code.n, budget)
    gamma = code.n * (sched.I + 2 * sched.eps3)
    tail = np.zeros(code.M)
    ref = ctx.P @ W.rows
    for _, ys in iter_word_chunks(W.output_size, code.n):
        ll = codeword_log_likelihoods(code, W, ys)
        with np.errstate(invalid="ignore"):
            ratio = ll - product_dist_log(ref, ys)[None, :]
        tail += np.sum(np.where(ratio >= gamma, np.exp2(ll), 0.0), axis=1)
    first = float(2.0 / M_full * tail.sum())
    second = float(2 * 2**gamma / M_full)
    V = v_max(ctx, strict=False)
    cheb = float(V / (code.n * sched.eps1**2)) if np.isfinite(V) else float("inf")
    return {"bound": first + second, "tail_term": first, "count_term": second,
            "max_tail": float(tail.max()), "chebyshev_tail": cheb}


@dataclass
class ConstructionReport:
    n: int
    R1: float
    R2: float
    M: int
    L: int
    attempts: int
    best_attempt: int
    avg_eps_A: float
    avg_eta_A: float
    avg_eta_C: float
    eps4: float
    expurgated_M: int
    kept_avg_eps_A: float
    kept_max_eps_A: float
    kept_eta_A_zero: bool
    kept_eta_C_zero: bool
    kept_violations: int
    lemma8_bound: float
    lemma8_vacuous: bool
    lemma8_premises: list
    schedule: dict
    eps_method: str
    warning: str | None = None
    security: SecurityReport | None = None
    bu2: dict | None = None
    lemma8_holds: bool | None = None
    attempt_eps4: list = field(default_factory=list)

    @property
    def realized_rates(self) -> tuple[float, float]:
        return math.log2(self.M) / self.n, math.log2(self.L) / self.n

    def to_json(self) -> dict:
        d = asdict(self)
        d["security"] = None if self.security is None else self.security.to_json()
        d["realized_rates"] = list(self.realized_rates)
        return d


def build_secure_code(ctx: InfoContext | Channel, n: int, R1: float, R2: float, seed=None,
                      attempts: int = 16, budget: int | None = None,
                      evaluate_security: bool = True):
    """Sample, score and expurgate up to ``attempts`` codes; return ``(code, report)``."""
    if isinstance(ctx, Channel):
        ctx = context(ctx)
    sched = schedule(ctx, R1, R2)
    if attempts < 1:
        raise ValidationError("attempts must be >= 1")
    budget = enumeration_budget() if budget is None else budget
    kids = np.random.SeedSequence(seed).spawn(attempts)
    best = None
    attempt_eps4 = []
    for a, kid in enumerate(kids):
        s_code, s_eps = kid.spawn(2)
        code = sample_code(ctx, n, R1, seed=s_code, sched=sched)
        eps_vec, how = eps_A_per_message(code, ctx.W, budget, seed=s_eps)
        sub, eps4, det = expurgate(code, ctx, sched, budget, eps_A=eps_vec)
        attempt_eps4.append(eps4)
        if best is None or eps4 < best[2]:
            best = (a, code, eps4, sub, det, how)
        if eps4 == 0.0:
            break
    a, code, eps4, sub, det, how = best
    kept = det.kept
    violations = int(np.sum((det.eta_A[kept] + det.eta_C[kept]) > 0))
    kept_eps, _ = eps_A_per_message(sub, ctx.W, budget, seed=kids[a].spawn(3)[2])
    V = v_max(ctx, strict=False)
    l8 = lemma8_bound(n, sched, sched.zeta1, sched.zeta2, V)
    prem = lemma8_premises(sub, ctx, sched)
    report = ConstructionReport(
        n=n, R1=R1, R2=R2, M=code.M, L=code.L, attempts=len(attempt_eps4), best_attempt=a,
        avg_eps_A=float(det.eps_A.mean()), avg_eta_A=float(det.eta_A.mean()),
        avg_eta_C=float(det.eta_C.mean()), eps4=eps4, expurgated_M=sub.M,
        kept_avg_eps_A=float(kept_eps.mean()), kept_max_eps_A=float(kept_eps.max()),
        kept_eta_A_zero=bool(np.all(det.eta_A[kept] == 0)),
        kept_eta_C_zero=bool(np.all(det.eta_C[kept] == 0)), kept_violations=violations,
        lemma8_bound=l8.value, lemma8_vacuous=l8.vacuous,
        lemma8_premises=np.flatnonzero(prem).tolist(), schedule=sched.to_json(),
        eps_method=how, attempt_eps4=attempt_eps4)
    if violations:
        report.warning = (f"{violations} kept messages violate the score conditions "
                          f"(eps4={eps4:.3g}); best of {len(attempt_eps4)} attempts returned")
    if evaluate_security and ctx.W.output_size**n <= budget:
        rep = evaluate(sub, ctx.W, budget, seed=kids[a].spawn(4)[3])
        report.security = rep
        report.bu2 = bu2_bound(sub, ctx, sched, code.M, budget)
        if not l8.vacuous and prem.any() and rep.delta_D is not None:
            dD = np.asarray(rep.per_message["delta_D"])
            report.lemma8_holds = bool(np.all(dD[prem] <= l8.value + 1e-12))
    return sub, report
