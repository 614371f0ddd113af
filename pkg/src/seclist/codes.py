"""List codes, the likelihood-ratio threshold list decoder, and derived codes.

A decoder maps each output word to an ordered list of at most ``L`` message
indices. Two representations are supported:

* ``ThresholdDecoder(P, r3)``: message ``i`` is a candidate for ``y`` when
  ``log2 W^n(y|phi(i)) - log2 W_P^n(y) >= n*r3``. If more than ``L`` messages
  qualify, the ``L`` largest scores are kept (lower index wins ties).
* ``ExplicitDecoder(lists)``: one list per output word, in word-index order.

Messages are 0-based internally.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import (Channel, all_words, block_log_probs, block_output_probs,
                       check_distribution, enumeration_budget, iter_word_chunks,
                       product_dist_log, sample_outputs, words_to_indices)
from .errors import (AlphabetMismatch, BudgetExceeded, DimensionMismatch, LengthMismatch,
                     SymbolOutOfRange, ValidationError)

SCORE_DECIMALS = 9
THRESHOLD_SLACK = 1e-9
MEMBERSHIP_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class ThresholdDecoder:
    P: np.ndarray
    r3: float

    def __post_init__(self):
        object.__setattr__(self, "P", check_distribution(self.P))


@dataclass(frozen=True, eq=False)
class ExplicitDecoder:
    lists: tuple  # tuple of tuples, one per output word


@dataclass(frozen=True, eq=False)
class StochasticEncoder:
    """phi(m) is a distribution over the input words ``words[m]`` with weights ``probs[m]``."""

    words: tuple
    probs: tuple


@dataclass(frozen=True, eq=False)
class ListCode:
    n: int
    M: int
    L: int
    codewords: np.ndarray | None
    decoder: ThresholdDecoder | ExplicitDecoder
    input_size: int = 2
    output_size: int = 2
    stochastic: StochasticEncoder | None = None

    def __post_init__(self):
        if not (1 <= self.L < self.M):
            raise ValidationError(f"need 1 <= L < M, got L={self.L}, M={self.M}")
        if self.codewords is not None:
            cw = np.asarray(self.codewords, dtype=np.int64)
            if cw.shape != (self.M, self.n):
                raise DimensionMismatch(f"codewords shape {cw.shape} != ({self.M}, {self.n})")
            if np.any(cw < 0) or np.any(cw >= self.input_size):
                raise SymbolOutOfRange("codeword symbol out of range")
            cw.setflags(write=False)
            object.__setattr__(self, "codewords", cw)
        elif self.stochastic is None:
            raise ValidationError("code needs codewords or a stochastic encoder")
        if self.stochastic is not None:
            if len(self.stochastic.words) != self.M:
                raise DimensionMismatch("stochastic encoder must have one entry per message")
            for w, p in zip(self.stochastic.words, self.stochastic.probs):
                check_distribution(p, len(w))
        if isinstance(self.decoder, ExplicitDecoder):
            if len(self.decoder.lists) != self.output_size**self.n:
                raise DimensionMismatch("explicit decoder must cover every output word")
            for lst in self.decoder.lists:
                if len(lst) > self.L:
                    raise ValidationError("explicit decoder list longer than L")
        elif isinstance(self.decoder, ThresholdDecoder):
            if self.decoder.P.shape[0] != self.input_size:
                raise DimensionMismatch("threshold prior does not match input alphabet")

    @property
    def is_stochastic(self) -> bool:
        return self.stochastic is not None

    @property
    def rates(self) -> tuple[float, float]:
        return math.log2(self.M) / self.n, math.log2(self.L) / self.n

    def check_channel(self, W: Channel) -> None:
        if W.input_size != self.input_size or W.output_size != self.output_size:
            raise AlphabetMismatch(f"code alphabets ({self.input_size},{self.output_size}) "
                                   f"!= channel ({W.input_size},{W.output_size})")


def make_code(codewords, L: int, decoder, W: Channel) -> ListCode:
    cw = np.atleast_2d(np.asarray(codewords, dtype=np.int64))
    return ListCode(n=cw.shape[1], M=cw.shape[0], L=L, codewords=cw, decoder=decoder,
                    input_size=W.input_size, output_size=W.output_size)


# -- likelihood tables ----------------------------------------------------------

def codeword_log_likelihoods(code: ListCode, W: Channel, y_words) -> np.ndarray:
    """``[m, j] = log2 W^n(y_j | phi(m))``; stochastic encoders mix in linear scale."""
    if not code.is_stochastic:
        return block_log_probs(W, code.codewords, y_words)
    out = np.empty((code.M, len(y_words)))
    for m, (words, probs) in enumerate(zip(code.stochastic.words, code.stochastic.probs)):
        pr = np.asarray(probs) @ block_output_probs(W, words, y_words)
        with np.errstate(divide="ignore"):
            out[m] = np.log2(pr)
    return out


def codeword_probs(code: ListCode, W: Channel, y_words) -> np.ndarray:
    """``[m, j] = W^n(y_j | phi(m))`` (linear scale)."""
    if not code.is_stochastic:
        return block_output_probs(W, code.codewords, y_words)
    out = np.empty((code.M, len(y_words)))
    for m, (words, probs) in enumerate(zip(code.stochastic.words, code.stochastic.probs)):
        out[m] = np.asarray(probs) @ block_output_probs(W, words, y_words)
    return out


def threshold_scores(code: ListCode, W: Channel, y_words, loglik=None) -> np.ndarray:
    """Log-likelihood ratios log2 W^n(y|phi(m)) - log2 W_P^n(y), rounded for stable ties."""
    dec = code.decoder
    ll = codeword_log_likelihoods(code, W, y_words) if loglik is None else loglik
    ref = product_dist_log(dec.P @ W.rows, y_words)
    with np.errstate(invalid="ignore"):
        s = ll - ref[None, :]
    s = np.where(np.isnan(s), -np.inf, s)
    return np.round(s, SCORE_DECIMALS)


def _threshold_membership(code: ListCode, scores: np.ndarray) -> np.ndarray:
    thr = code.n * code.decoder.r3 - THRESHOLD_SLACK
    member = scores >= thr
    counts = member.sum(axis=0)
    over = np.flatnonzero(counts > code.L)
    if over.size:
        sub = np.where(member[:, over], scores[:, over], -np.inf)
        # stable argsort on -score keeps the lower index first on ties
        top = np.argsort(-sub, axis=0, kind="stable")[: code.L]
        member[:, over] = False
        member[top, over[None, :]] = True
    return member


def membership_block(code: ListCode, W: Channel, y_words, start: int | None = None,
                     loglik=None) -> np.ndarray:
    """Boolean ``[m, j]``: message m is in the decoded list of ``y_words[j]``.

    ``start`` is the word index of ``y_words[0]`` when the words are a
    contiguous enumeration slice (lets explicit decoders skip re-indexing).
    """
    y_words = np.asarray(y_words, dtype=np.int64)
    if isinstance(code.decoder, ThresholdDecoder):
        return _threshold_membership(code, threshold_scores(code, W, y_words, loglik))
    if start is not None:
        idx = np.arange(start, start + len(y_words))
    else:
        idx = words_to_indices(y_words, code.output_size)
    member = np.zeros((code.M, len(y_words)), dtype=bool)
    lists = code.decoder.lists
    for j, i in enumerate(idx):
        lst = lists[i]
        if lst:
            member[list(lst), j] = True
    return member


def iter_tables(code: ListCode, W: Channel, budget: int | None = None,
                chunk: int = MEMBERSHIP_CHUNK):
    """Yield ``(start, probs, member)`` chunks over every output word.

    ``probs[m, j] = W^n(y|phi(m))`` and ``member[m, j]`` is list membership.
    """
    code.check_channel(W)
    budget = enumeration_budget() if budget is None else budget
    total = W.output_size**code.n
    if total > budget:
        raise BudgetExceeded("|Y|^n", total, budget)
    for start, ys in iter_word_chunks(W.output_size, code.n, chunk):
        if code.is_stochastic:
            probs = codeword_probs(code, W, ys)
            with np.errstate(divide="ignore"):
                ll = np.log2(probs)
        else:
            ll = codeword_log_likelihoods(code, W, ys)
            probs = np.exp2(ll)
        yield start, probs, membership_block(code, W, ys, start, loglik=ll)


def decode(code: ListCode, W: Channel, y_block) -> list[int]:
    """Ordered list of at most L messages for one output block."""
    y = np.asarray(y_block, dtype=np.int64)
    if y.shape != (code.n,):
        raise LengthMismatch(f"output block length {y.shape} != ({code.n},)")
    if np.any(y < 0) or np.any(y >= code.output_size):
        raise SymbolOutOfRange("output symbol out of range")
    if isinstance(code.decoder, ExplicitDecoder):
        return list(code.decoder.lists[int(words_to_indices(y[None, :], code.output_size)[0])])
    scores = threshold_scores(code, W, y[None, :])[:, 0]
    member = _threshold_membership(code, scores[:, None])[:, 0]
    idx = np.flatnonzero(member)
    order = np.lexsort((idx, -scores[idx]))
    return [int(i) for i in idx[order]]


def decode_batch(code: ListCode, W: Channel, y_blocks) -> np.ndarray:
    """Membership matrix ``[t, m]`` for a batch of output blocks."""
    y = np.atleast_2d(np.asarray(y_blocks, dtype=np.int64))
    return membership_block(code, W, y).T


def membership_prob(code: ListCode, W: Channel, m: int, x_block,
                    budget: int | None = None) -> float:
    """Exact Pr[m in decode(Y)] for Y ~ W^n(.|x_block)."""
    x = np.asarray(x_block, dtype=np.int64)
    if x.shape != (code.n,):
        raise LengthMismatch("input block has wrong length")
    total = 0.0
    for start, _, member in iter_tables(code, W, budget):
        ys = all_words(W.output_size, code.n)[start: start + member.shape[1]]
        total += float(block_output_probs(W, x, ys)[0] @ member[m])
    return total


def membership_prob_mc(code: ListCode, W: Channel, m: int, x_block, trials: int,
                       seed=None) -> tuple[float, float]:
    """Monte-Carlo estimate of Pr[m in decode(Y)] and its standard error."""
    rng = np.random.default_rng(seed)
    ys = sample_outputs(W, x_block, rng, trials)
    hits = decode_batch(code, W, ys)[:, m]
    p = float(hits.mean())
    return p, math.sqrt(max(p * (1 - p), 0.0) / trials)


# -- constructions --------------------------------------------------------------

def _materialize_lists(code: ListCode, W: Channel, budget: int | None = None) -> list:
    """Explicit per-word lists for any decoder (ordered as ``decode`` would)."""
    if isinstance(code.decoder, ExplicitDecoder):
        return [tuple(l) for l in code.decoder.lists]
    lists = []
    for start, ys in iter_word_chunks(W.output_size, code.n):
        if W.output_size**code.n > (enumeration_budget() if budget is None else budget):
            raise BudgetExceeded("|Y|^n", W.output_size**code.n, budget)
        scores = threshold_scores(code, W, ys)
        member = _threshold_membership(code, scores)
        for j in range(ys.shape[0]):
            idx = np.flatnonzero(member[:, j])
            order = np.lexsort((idx, -scores[idx, j]))
            lists.append(tuple(int(i) for i in idx[order]))
    return lists


def ml_code(codewords, W: Channel, budget: int | None = None) -> ListCode:
    """Single-element (L=1) maximum-likelihood code; ties go to the lower index."""
    cw = np.atleast_2d(np.asarray(codewords, dtype=np.int64))
    n = cw.shape[1]
    budget = enumeration_budget() if budget is None else budget
    if W.output_size**n > budget:
        raise BudgetExceeded("|Y|^n", W.output_size**n, budget)
    lists = []
    for _, ys in iter_word_chunks(W.output_size, n):
        ll = np.round(block_log_probs(W, cw, ys), SCORE_DECIMALS)
        best = np.argmax(ll, axis=0)
        lists.extend((int(b),) for b in best)
    return ListCode(n=n, M=cw.shape[0], L=1, codewords=cw, decoder=ExplicitDecoder(tuple(lists)),
                    input_size=W.input_size, output_size=W.output_size)


def repetition_codewords(M: int, n: int, k: int = 2) -> np.ndarray:
    """Codeword i repeats symbol i (requires M <= k)."""
    if M > k:
        raise ValidationError("repetition code needs M <= alphabet size")
    return np.repeat(np.arange(M)[:, None], n, axis=1)


def grouped_trivial_code(base_code: ListCode, W: Channel, L: int, M: int | None = None,
                         budget: int | None = None) -> ListCode:
    """Share each base codeword among ``L`` messages; list = whole decoded group.

    Message ``k`` is sent as base codeword ``k // L``. With ``M`` given, only
    the first ``M`` messages are kept (last group may be partial).
    """
    if base_code.is_stochastic:
        raise ValidationError("grouped code needs a deterministic base code")
    Mfull = base_code.M * L
    M = Mfull if M is None else M
    if not (L < M <= Mfull):
        raise ValidationError(f"need L < M <= {Mfull}")
    base_lists = _materialize_lists(base_code, W, budget)
    lists = []
    for bl in base_lists:
        if bl:
            g = bl[0]
            lists.append(tuple(i for i in range(g * L, (g + 1) * L) if i < M))
        else:
            lists.append(())
    cw = base_code.codewords[np.arange(M) // L]
    return ListCode(n=base_code.n, M=M, L=L, codewords=cw, decoder=ExplicitDecoder(tuple(lists)),
                    input_size=base_code.input_size, output_size=base_code.output_size)


def concatenate(code_a: ListCode, code_b: ListCode, W: Channel,
                budget: int | None = None) -> ListCode:
    """Product code: message (a, b) -> a*M_b + b, list = cartesian product of lists."""
    if (code_a.input_size, code_a.output_size) != (code_b.input_size, code_b.output_size):
        raise AlphabetMismatch("component codes use different alphabets")
    if code_a.is_stochastic or code_b.is_stochastic:
        raise ValidationError("concatenation is defined for deterministic encoders")
    n = code_a.n + code_b.n
    budget = enumeration_budget() if budget is None else budget
    if W.output_size**n > budget:
        raise BudgetExceeded("|Y|^n", W.output_size**n, budget)
    la = _materialize_lists(code_a, W, budget)
    lb = _materialize_lists(code_b, W, budget)
    Mb = code_b.M
    lists = [tuple(a * Mb + b for a in A for b in B) for A in la for B in lb]
    cw = np.concatenate([np.repeat(code_a.codewords, code_b.M, axis=0),
                         np.tile(code_b.codewords, (code_a.M, 1))], axis=1)
    return ListCode(n=n, M=code_a.M * Mb, L=code_a.L * code_b.L, codewords=cw,
                    decoder=ExplicitDecoder(tuple(lists)), input_size=code_a.input_size,
                    output_size=code_a.output_size)


def subcode(code: ListCode, keep) -> ListCode:
    """Restrict a threshold-decoded code to the messages ``keep`` (renumbered in order)."""
    keep = np.asarray(sorted(int(k) for k in keep), dtype=np.int64)
    if not isinstance(code.decoder, ThresholdDecoder):
        raise ValidationError("subcode is defined for threshold decoders")
    L = min(code.L, len(keep) - 1)
    return ListCode(n=code.n, M=len(keep), L=L, codewords=code.codewords[keep],
                    decoder=code.decoder, input_size=code.input_size,
                    output_size=code.output_size)


# -- JSON -------------------------------------------------------------------------

def _rle(lists) -> list:
    runs = []
    for lst in lists:
        lst = list(lst)
        if runs and runs[-1][1] == lst:
            runs[-1][0] += 1
        else:
            runs.append([1, lst])
    return runs


def code_to_json(code: ListCode) -> dict:
    doc = {"n": code.n, "M": code.M, "L": code.L,
           "input": code.input_size, "output": code.output_size}
    if code.is_stochastic:
        doc["stochastic"] = [{"words": np.asarray(w).tolist(), "probs": list(map(float, p))}
                             for w, p in zip(code.stochastic.words, code.stochastic.probs)]
    if code.codewords is not None:
        doc["codewords"] = code.codewords.tolist()
    if isinstance(code.decoder, ThresholdDecoder):
        doc["decoder"] = {"type": "threshold", "P": code.decoder.P.tolist(),
                          "r3": float(code.decoder.r3)}
    else:
        if len(code.decoder.lists) > 2**20:
            raise BudgetExceeded("explicit decoder size", len(code.decoder.lists), 2**20)
        doc["decoder"] = {"type": "explicit", "runs": _rle(code.decoder.lists)}
    return doc


def code_from_json(doc: dict) -> ListCode:
    try:
        n, M, L = int(doc["n"]), int(doc["M"]), int(doc["L"])
        dec = doc["decoder"]
        kind = dec["type"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed code document: {exc}") from None
    P = dec.get("P")
    nx = int(doc.get("input", len(P) if P is not None else 2))
    ny = int(doc.get("output", 2))
    if kind == "threshold":
        decoder = ThresholdDecoder(np.asarray(dec["P"], float), float(dec["r3"]))
    elif kind == "explicit":
        lists = []
        for count, lst in dec["runs"]:
            lists.extend([tuple(int(i) for i in lst)] * int(count))
        decoder = ExplicitDecoder(tuple(lists))
    else:
        raise ValidationError(f"unknown decoder type {kind!r}")
    stochastic = None
    if "stochastic" in doc:
        stochastic = StochasticEncoder(
            tuple(np.asarray(e["words"], dtype=np.int64) for e in doc["stochastic"]),
            tuple(np.asarray(e["probs"], float) for e in doc["stochastic"]))
    cw = doc.get("codewords")
    return ListCode(n=n, M=M, L=L, codewords=None if cw is None else np.asarray(cw, np.int64),
                    decoder=decoder, input_size=nx, output_size=ny, stochastic=stochastic)


def dump_code(code: ListCode) -> str:
    return json.dumps(code_to_json(code), separators=(",", ":")) + "\n"


def save_code(code: ListCode, path) -> None:
    Path(path).write_text(dump_code(code))


def load_code(path) -> ListCode:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None
    return code_from_json(doc)
