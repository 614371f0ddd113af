"""Exact and Monte-Carlo evaluation of the four security parameters of a list code.

For a code with messages ``m``, encoder ``phi`` and list decoder ``D``:

* eps_A   = max_m Pr[m not in D(Y) | phi(m)]                 (verifiability)
* delta_B = (1/M) sum_y max_m W^n(y|phi(m))                  (best single guess)
* delta_C = max_m max_{m' != m} Pr[m' in D(Y) | phi(m)]      (honest sender)
* delta_D = max_m max_{x : Pr[m in D(Y)|x] >= 1/2} max_{m' != m} Pr[m' in D(Y) | x]

Exact mode enumerates every output word (and, for delta_D, every input
word); the enumeration budget defaults to 2^20 and is read from SLX_BUDGET.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import (Channel, apply_product, enumeration_budget, sample_outputs,
                       words_from_indices)
from .codes import ListCode, codeword_probs, decode_batch, iter_tables
from .errors import BudgetExceeded, InsufficientTrials, ValidationError

FEASIBLE = 0.5
COLUMN_CHUNK = 256


def _channel(W) -> Channel:
    # accept a bare channel or anything carrying one (e.g. InfoContext)
    return W if isinstance(W, Channel) else W.W


def code_tables(code: ListCode, W, budget: int | None = None):
    """Full ``(probs, member)`` tables of shape ``(M, |Y|^n)``."""
    W = _channel(W)
    probs, member = [], []
    for _, p, mem in iter_tables(code, W, budget):
        probs.append(p)
        member.append(mem)
    return np.concatenate(probs, axis=1), np.concatenate(member, axis=1)


@dataclass
class _Sums:
    hit: np.ndarray            # Pr[m in list | phi(m)]
    best_guess: float          # sum_y max_m W(y|phi(m))
    cross: np.ndarray | None   # [m, m'] = Pr[m' in list | phi(m)]


def _accumulate(code: ListCode, W: Channel, budget, cross: bool) -> _Sums:
    hit = np.zeros(code.M)
    best = 0.0
    A = np.zeros((code.M, code.M)) if cross else None
    for _, p, mem in iter_tables(code, W, budget):
        hit += np.sum(p * mem, axis=1)
        best += float(np.sum(p.max(axis=0)))
        if cross:
            A += p @ mem.T.astype(float)
    return _Sums(hit, best, A)


def _clip01(v):
    return np.clip(v, 0.0, 1.0)


def eps_A_exact(code: ListCode, W, budget: int | None = None):
    """``(eps_A, per-message eps_{A,m})``."""
    s = _accumulate(code, _channel(W), budget, cross=False)
    per = _clip01(1.0 - s.hit)
    return float(per.max()), per


def delta_B_exact(code: ListCode, W, budget: int | None = None) -> float:
    """Success of the best single-message decoder (pointwise argmax of the likelihood)."""
    s = _accumulate(code, _channel(W), budget, cross=False)
    return float(min(1.0, s.best_guess / code.M))


def _offdiag_max(A: np.ndarray):
    B = A.copy()
    np.fill_diagonal(B, -np.inf)
    arg = np.argmax(B, axis=1)
    return B[np.arange(B.shape[0]), arg], arg


def delta_C_exact(code: ListCode, W, budget: int | None = None):
    """``(delta_C, per-message delta_{C,m})``."""
    s = _accumulate(code, _channel(W), budget, cross=True)
    per, _ = _offdiag_max(s.cross)
    per = _clip01(per)
    return float(per.max()), per


@dataclass
class DishonestResult:
    value: float
    per_message: np.ndarray
    witnesses: np.ndarray          # input word achieving delta_{D,m}; -1 rows if infeasible
    empty_feasible: np.ndarray     # True where no x meets the 1/2 requirement
    method: str = "exact"
    lower_bound: bool = False
    best_message: int = -1
    best_target: int = -1
    best_x: np.ndarray | None = None


def _top2(K: np.ndarray, offset: int, v1, i1, v2, nf):
    """Merge a column block of K into running (max, argmax, second max, #feasible)."""
    if K.shape[1] >= 2:
        part = np.partition(K, K.shape[1] - 2, axis=1)
        b1, b2 = part[:, -1], part[:, -2]
    else:
        b1, b2 = K[:, 0], np.full(K.shape[0], -np.inf)
    bi = np.argmax(K, axis=1) + offset
    new_v2 = np.maximum(np.minimum(v1, b1), np.maximum(v2, b2))
    take = b1 > v1
    i1 = np.where(take, bi, i1)
    v1 = np.maximum(v1, b1)
    nf = nf + np.sum(K >= FEASIBLE, axis=1)
    return v1, i1, new_v2, nf


def delta_D_exact(code: ListCode, W, budget: int | None = None,
                  per_message: bool = True) -> DishonestResult:
    """Exhaustive search over all input words.

    K[x, m] = Pr[m in D(Y) | x] is obtained as W^{(x)n} @ member^T without
    forming W^n. For each x, max over feasible m of max_{m' != m} K[x, m']
    is the column maximum unless the only feasible m is the maximizer itself,
    in which case it is the second largest entry.
    """
    W = _channel(W)
    budget = enumeration_budget() if budget is None else budget
    nx_words = W.input_size**code.n
    if nx_words > budget:
        raise BudgetExceeded("|X|^n", nx_words, budget)
    _, member = code_tables(code, W, budget)
    memT = member.T
    v1 = np.full(nx_words, -np.inf)
    v2 = np.full(nx_words, -np.inf)
    i1 = np.zeros(nx_words, dtype=np.int64)
    nf = np.zeros(nx_words, dtype=np.int64)
    chunks = [(c, min(code.M, c + COLUMN_CHUNK)) for c in range(0, code.M, COLUMN_CHUNK)]
    cache = {}
    for lo, hi in chunks:
        K = apply_product(W, memT[:, lo:hi].astype(float), code.n)
        if len(chunks) == 1:
            cache[lo] = K
        v1, i1, v2, nf = _top2(K, lo, v1, i1, v2, nf)
    val = np.where(nf >= 2, v1, np.where(nf == 1, v2, -np.inf))
    best_x = int(np.argmax(val))
    best = float(val[best_x])
    per = np.zeros(code.M)
    wit = np.full((code.M, code.n), -1, dtype=np.int64)
    empty = np.zeros(code.M, dtype=bool)
    if per_message:
        for lo, hi in chunks:
            K = cache.get(lo)
            if K is None:
                K = apply_product(W, memT[:, lo:hi].astype(float), code.n)
            for j in range(hi - lo):
                m = lo + j
                feas = K[:, j] >= FEASIBLE
                if not feas.any():
                    empty[m] = True
                    continue
                cand = np.where(i1 == m, v2, v1)
                cand = np.where(feas, cand, -np.inf)
                xi = int(np.argmax(cand))
                per[m] = cand[xi]
                wit[m] = words_from_indices([xi], W.input_size, code.n)[0]
    if not np.isfinite(best):
        return DishonestResult(0.0, _clip01(per), wit, empty, best_x=None)
    # recover the (m, m') pair at the best x
    x_word = words_from_indices([best_x], W.input_size, code.n)[0]
    krow = K_row(code, W, x_word, member)
    feas = np.flatnonzero(krow >= FEASIBLE)
    target = int(i1[best_x])
    m_best = int(next((m for m in feas if m != target), feas[0]))
    if m_best == target:
        order = np.argsort(-krow, kind="stable")
        target = int(next(t for t in order if t != m_best))
    return DishonestResult(float(min(best, 1.0)), _clip01(per), wit, empty, best_message=m_best,
                           best_target=target, best_x=x_word)


def K_row(code: ListCode, W, x_block, member=None, budget: int | None = None) -> np.ndarray:
    """Exact Pr[m in D(Y) | x] for every message m."""
    W = _channel(W)
    x = np.asarray(x_block, dtype=np.int64)
    if member is None:
        _, member = code_tables(code, W, budget)
    out = np.ones(1)
    for xi in x:
        out = np.kron(out, W.rows[xi])
    return member.astype(float) @ out


def _dishonest_value(k: np.ndarray) -> tuple[float, int, int]:
    """Objective at one x: (value, m, m'); infeasible x get value - 1 to steer the climb."""
    order = np.argsort(-k, kind="stable")
    feas = k >= FEASIBLE
    nf = int(feas.sum())
    top = int(order[0])
    if nf >= 2:
        m = int(next(i for i in order if feas[i] and i != top))
        return float(k[top]), m, top
    if nf == 1:
        return float(k[order[1]]), top, int(order[1])
    # not feasible; rank by how close the best message is to 1/2
    return float(k[top]) - 1.0, top, int(order[1])


def delta_D_search(code: ListCode, W, restarts: int = 8, seed=None, trials: int = 4000,
                   budget: int | None = None, max_steps: int = 200,
                   include_codewords: bool = True) -> DishonestResult:
    """Hill climbing over single-coordinate changes; returns a lower bound on delta_D.

    Starts from every codeword (deterministic encoders) and ``restarts``
    uniformly random words. Membership probabilities are exact when |Y|^n is
    within budget, otherwise Monte-Carlo with ``trials`` samples per word.
    """
    W = _channel(W)
    rng = np.random.default_rng(seed)
    budget = enumeration_budget() if budget is None else budget
    exact = W.output_size**code.n <= budget
    member = code_tables(code, W, budget)[1] if exact else None
    cache: dict = {}

    def krow(x):
        key = x.tobytes()
        if key not in cache:
            if exact:
                cache[key] = K_row(code, W, x, member)
            else:
                sub = np.random.default_rng([int(rng.integers(2**31)), len(cache)])
                ys = sample_outputs(W, x, sub, trials)
                cache[key] = decode_batch(code, W, ys).mean(axis=0)
        return cache[key]

    starts = []
    if include_codewords and code.codewords is not None:
        starts.extend(code.codewords)
    starts.extend(rng.integers(0, W.input_size, size=(restarts, code.n)))
    best = (-np.inf, -1, -1, None)
    per = np.full(code.M, -np.inf)
    wit = np.full((code.M, code.n), -1, dtype=np.int64)
    for x0 in starts:
        x = np.array(x0, dtype=np.int64)
        cur = _dishonest_value(krow(x))
        for _ in range(max_steps):
            improved = False
            for i in range(code.n):
                for a in range(W.input_size):
                    if a == x[i]:
                        continue
                    y = x.copy()
                    y[i] = a
                    v = _dishonest_value(krow(y))
                    if v[0] > cur[0] + 1e-12:
                        x, cur, improved = y, v, True
            if not improved:
                break
        if cur[0] >= 0:
            if cur[0] > per[cur[1]]:
                per[cur[1]] = cur[0]
                wit[cur[1]] = x
            if cur[0] > best[0]:
                best = (cur[0], cur[1], cur[2], x.copy())
    empty = ~np.isfinite(per)
    per = np.where(empty, 0.0, per)
    value = 0.0 if best[3] is None else float(min(best[0], 1.0))
    return DishonestResult(value, _clip01(per), wit, empty,
                           method="exact-hill-climb" if exact else "mc-hill-climb",
                           lower_bound=True, best_message=best[1], best_target=best[2],
                           best_x=best[3])


# -- Monte-Carlo ------------------------------------------------------------------

def sample_inputs(code: ListCode, m: int, rng, size: int) -> np.ndarray:
    """Input blocks phi(m) (drawn from the encoder distribution if stochastic)."""
    if not code.is_stochastic:
        return np.repeat(code.codewords[m][None, :], size, axis=0)
    words = np.asarray(code.stochastic.words[m])
    pick = rng.choice(len(words), size=size, p=np.asarray(code.stochastic.probs[m]))
    return words[pick]


def _sample_channel(W: Channel, xs: np.ndarray, rng) -> np.ndarray:
    cdf = np.cumsum(W.rows, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(xs.shape)
    return (u[..., None] >= cdf[xs]).sum(axis=-1)


def sample_message_outputs(code: ListCode, W, m: int, rng, size: int) -> np.ndarray:
    W = _channel(W)
    xs = sample_inputs(code, m, rng, size)
    if not code.is_stochastic:
        return sample_outputs(W, xs[0], rng, size)
    return _sample_channel(W, xs, rng)


def binom_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def map_guess(code: ListCode, W, ys) -> np.ndarray:
    """Single-message MAP guess for uniform messages; ties go to the lower index."""
    W = _channel(W)
    lik = codeword_probs(code, W, ys)
    return np.argmax(lik, axis=0)


@dataclass
class CrossCheck:
    trials: int
    seed: object
    condition: dict = field(default_factory=dict)  # name -> {exact, estimate, sigma, ok}

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.condition.values())


def _entry(exact: float, est: float, trials: int) -> dict:
    sigma = binom_sigma(exact, trials)
    return {"exact": exact, "estimate": est, "sigma": sigma,
            "ok": abs(est - exact) <= 3 * sigma + 1e-12}


def crosscheck_intuitive(code: ListCode, W, trials: int, seed=None,
                         budget: int | None = None) -> CrossCheck:
    """Simulate the operational events and compare with the exact coding-theoretic values.

    (A) send the worst message m*, count how often m* misses Bob's list.
    (B) draw a uniform message, let Bob guess one message by MAP, count hits.
    (C) send m* of the worst (m, m') pair, count how often m' enters the list.
    """
    if trials <= 0:
        raise InsufficientTrials("crosscheck needs at least one trial")
    W = _channel(W)
    s = _accumulate(code, W, budget, cross=True)
    eps = 1.0 - s.hit
    dC, tgt = _offdiag_max(s.cross)
    ss = np.random.SeedSequence(seed)
    ra, rb, rc = (np.random.default_rng(c) for c in ss.spawn(3))
    out = CrossCheck(trials, seed)

    mA = int(np.argmax(eps))
    ys = sample_message_outputs(code, W, mA, ra, trials)
    miss = ~decode_batch(code, W, ys)[:, mA]
    out.condition["A"] = _entry(float(eps[mA]), float(miss.mean()), trials)

    msgs = rb.integers(0, code.M, size=trials)
    hits = 0
    for m in np.unique(msgs):
        cnt = int(np.sum(msgs == m))
        ys = sample_message_outputs(code, W, int(m), rb, cnt)
        hits += int(np.sum(map_guess(code, W, ys) == m))
    out.condition["B"] = _entry(min(1.0, s.best_guess / code.M), hits / trials, trials)

    mC = int(np.argmax(dC))
    tC = int(tgt[mC])
    ys = sample_message_outputs(code, W, mC, rc, trials)
    inn = decode_batch(code, W, ys)[:, tC]
    out.condition["C"] = _entry(float(dC[mC]), float(inn.mean()), trials)
    return out


# -- reports ----------------------------------------------------------------------

@dataclass
class SecurityReport:
    eps_A: float
    delta_B: float
    delta_C: float
    delta_D: float | None
    method: dict
    per_message: dict | None = None
    flags: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        if self.per_message is not None:
            d["per_message"] = {k: np.asarray(v).tolist() for k, v in self.per_message.items()}
        return d

    @property
    def values(self) -> tuple:
        return self.eps_A, self.delta_B, self.delta_C, self.delta_D


def evaluate(code: ListCode, W, budget: int | None = None, with_D: bool = True,
             with_C: bool = True, search_restarts: int = 8, seed=None) -> SecurityReport:
    """Exact report. delta_D is exhaustive when |X|^n fits the budget, else a search bound."""
    W = _channel(W)
    budget = enumeration_budget() if budget is None else budget
    s = _accumulate(code, W, budget, cross=with_C)
    eps = _clip01(1.0 - s.hit)
    per = {"eps_A": eps}
    dC = None
    if with_C:
        dCm, _ = _offdiag_max(s.cross)
        dCm = _clip01(dCm)
        per["delta_C"] = dCm
        dC = float(dCm.max())
    method = {"kind": "exact", "budget": budget}
    flags = {}
    dD = None
    if with_D:
        if W.input_size**code.n <= budget:
            res = delta_D_exact(code, W, budget)
            method["delta_D"] = "exhaustive"
        else:
            res = delta_D_search(code, W, restarts=search_restarts, seed=seed, budget=budget)
            method["delta_D"] = "hill-climb lower bound"
            flags["delta_D_lower_bound"] = True
        dD = res.value
        per["delta_D"] = res.per_message
        if res.empty_feasible.any():
            flags["empty_feasible_messages"] = np.flatnonzero(res.empty_feasible).tolist()
        if res.best_x is not None:
            flags["delta_D_witness"] = {"x": np.asarray(res.best_x).tolist(),
                                        "m": res.best_message, "target": res.best_target}
    return SecurityReport(float(eps.max()), float(min(1.0, s.best_guess / code.M)),
                          dC if dC is not None else float("nan"), dD, method, per, flags)


def evaluate_mc(code: ListCode, W, trials: int, seed=None, with_D: bool = True,
                restarts: int = 8) -> SecurityReport:
    """Monte-Carlo report with per-message sampling; ci95 is for the reported maximizers."""
    if trials <= 0:
        raise InsufficientTrials("Monte-Carlo evaluation needs trials > 0")
    W = _channel(W)
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(code.M + 2)
    eps = np.zeros(code.M)
    dC = np.zeros(code.M)
    for m in range(code.M):
        rng = np.random.default_rng(kids[m])
        ys = sample_message_outputs(code, W, m, rng, trials)
        mem = decode_batch(code, W, ys).mean(axis=0)
        eps[m] = 1.0 - mem[m]
        mem[m] = -np.inf
        dC[m] = mem.max() if code.M > 1 else 0.0
    rb = np.random.default_rng(kids[code.M])
    msgs = rb.integers(0, code.M, size=trials)
    hits = 0
    for m in np.unique(msgs):
        cnt = int(np.sum(msgs == m))
        ys = sample_message_outputs(code, W, int(m), rb, cnt)
        hits += int(np.sum(map_guess(code, W, ys) == m))
    dB = hits / trials
    ci = {"eps_A": 1.96 * binom_sigma(eps.max(), trials),
          "delta_B": 1.96 * binom_sigma(dB, trials),
          "delta_C": 1.96 * binom_sigma(dC.max(), trials)}
    flags = {}
    dD = None
    per = {"eps_A": eps, "delta_C": dC}
    if with_D:
        res = delta_D_search(code, W, restarts=restarts, seed=kids[-1], trials=trials, budget=0)
        dD = res.value
        per["delta_D"] = res.per_message
        flags["delta_D_lower_bound"] = True
    method = {"kind": "monte_carlo", "trials": trials, "seed": seed, "ci95": ci}
    return SecurityReport(float(eps.max()), float(dB), float(dC.max()), dD, method, per, flags)


def union_bound(code: ListCode, W, budget: int | None = None) -> float:
    """(1/M) sum_m [W(list misses m | phi(m)) + (1/L) sum_{j != m} W(j in list | phi(m))].

    Dominates the message-averaged miss probability. Evaluated exactly.
    """
    s = _accumulate(code, _channel(W), budget, cross=True)
    miss = 1.0 - s.hit
    off = s.cross.sum(axis=1) - np.diag(s.cross)
    return float(np.mean(miss + off / code.L))


def relabel(code: ListCode, perm) -> ListCode:
    """Same code with messages renumbered: new message i is old message perm[i]."""
    from .codes import ExplicitDecoder

    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(code.M)):
        raise ValidationError("perm must be a permutation of the messages")
    dec = code.decoder
    if isinstance(dec, ExplicitDecoder):
        inv = np.argsort(perm)
        dec = ExplicitDecoder(tuple(tuple(int(inv[i]) for i in lst) for lst in dec.lists))
    return ListCode(n=code.n, M=code.M, L=code.L, codewords=code.codewords[perm], decoder=dec,
                    input_size=code.input_size, output_size=code.output_size)


__all__ = ["code_tables", "eps_A_exact", "delta_B_exact", "delta_C_exact", "delta_D_exact",
           "delta_D_search", "crosscheck_intuitive", "SecurityReport", "evaluate",
           "evaluate_mc", "union_bound", "K_row", "DishonestResult"]
