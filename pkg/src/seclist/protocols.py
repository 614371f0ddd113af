"""Bit commitment and anonymous auction run over a simulated channel.

Bit commitment: messages are t-bit vectors (message index m <-> bits of m,
least significant first) and a nonzero vector ``a`` defines the linear hash
f(m) = <a, m> over GF(2). To commit to ``bit`` Alice draws m uniformly from
f^{-1}(bit) and sends phi(m); Bob keeps the decoded list. To reveal, Alice
announces (m, bit) and Bob accepts iff f(m) = bit and m is in his list.

Auction: player ``i`` (1-based) bids by sending phi(i-1); the dealer list
decodes each transmission. The highest price wins (lower ID on ties) and the
purchase is verified iff the winner's claimed ID is in the list decoded from
the winning transmission.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import (Channel, apply_product, enumeration_budget, sample_outputs,
                       words_from_indices)
from .codes import ListCode, decode
from .errors import (BudgetExceeded, DimensionMismatch, EmptyAuction, UnknownPlayer,
                     ValidationError)
from .info import block_mutual_information
from .security import FEASIBLE, K_row, code_tables, delta_D_exact, delta_D_search, sample_inputs


@dataclass(frozen=True)
class LinearHash:
    t: int
    a: int  # bit-vector as an integer, bit i = coefficient of message bit i

    def __post_init__(self):
        if self.t < 1:
            raise ValidationError("hash length t must be >= 1")
        if not (0 < self.a < 2**self.t):
            raise ValidationError("hash vector must be nonzero with t bits")

    def __call__(self, m: int) -> int:
        return bin(int(m) & self.a).count("1") & 1

    def values(self) -> np.ndarray:
        """f(m) for every m in 0..2^t - 1."""
        m = np.arange(2**self.t)
        bits = (m[:, None] >> np.arange(self.t)[None, :]) & 1
        coef = (self.a >> np.arange(self.t)) & 1
        return (bits @ coef) & 1

    def preimage(self, bit: int) -> np.ndarray:
        return np.flatnonzero(self.values() == bit)

    @property
    def bits(self) -> list[int]:
        return [(self.a >> i) & 1 for i in range(self.t)]


def make_hash(t: int, seed=None) -> LinearHash:
    """Uniformly random nonzero inner-product hash on t bits."""
    if t < 1:
        raise ValidationError("hash length t must be >= 1")
    rng = np.random.default_rng(seed)
    return LinearHash(t, int(rng.integers(1, 2**t)))


def _check_commit_code(code: ListCode, h: LinearHash):
    if code.M != 2**h.t:
        raise DimensionMismatch(f"code has M={code.M} messages, hash needs 2^t={2**h.t}")


def choose_messages(bits, h: LinearHash, rng) -> np.ndarray:
    """Uniform draw from f^{-1}(bit) for each bit."""
    bits = np.asarray(bits, dtype=np.int64)
    pre = np.stack([h.preimage(0), h.preimage(1)])
    return pre[bits, rng.integers(0, pre.shape[1], size=bits.shape[0])]


@dataclass
class CommitmentTranscript:
    bit: int
    chosen_message: int
    sent_block: list
    received_block: list
    bob_list: list
    revealed_message: int
    revealed_bit: int
    hash_ok: bool
    list_ok: bool
    accept: bool
    seed: object = None
    security: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def commit(bit: int, code: ListCode, h: LinearHash, W: Channel, seed=None,
           reveal_message: int | None = None, reveal_bit: int | None = None,
           rng: np.random.Generator | None = None) -> CommitmentTranscript:
    """One honest commit + reveal; ``reveal_*`` overrides what Alice announces."""
    if bit not in (0, 1):
        raise ValidationError("bit must be 0 or 1")
    _check_commit_code(code, h)
    W = W if isinstance(W, Channel) else W.W
    rng = np.random.default_rng(seed) if rng is None else rng
    m = int(choose_messages([bit], h, rng)[0])
    x = sample_inputs(code, m, rng, 1)[0]
    y = sample_outputs(W, x, rng, 1)[0]
    lst = decode(code, W, y)
    rm = m if reveal_message is None else int(reveal_message)
    rb = bit if reveal_bit is None else int(reveal_bit)
    hash_ok = h(rm) == rb
    list_ok = rm in lst
    return CommitmentTranscript(bit, m, x.tolist(), y.tolist(), lst, rm, rb, hash_ok, list_ok,
                                hash_ok and list_ok, seed)


def honest_accept_rate(code: ListCode, h: LinearHash, W: Channel, runs: int, seed=None) -> float:
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=runs)
    ok = sum(commit(int(b), code, h, W, rng=rng).accept for b in bits)
    return ok / runs


def renyi2_conditional(rows: np.ndarray) -> float:
    """H_2(M|Y) = -log2 sum_y sum_m P(m,y)^2 / P_Y(y), M uniform over the rows."""
    M = rows.shape[0]
    joint = rows / M
    py = joint.sum(axis=0)
    mask = py > 0
    s = float(np.sum(joint[:, mask] ** 2 / py[mask]))
    return -math.log2(s) + 0.0  # avoid -0.0


@dataclass
class BCSecurity:
    bob_info: float
    h2: float
    bound: float
    alice_cheat: float
    method: str
    cheat_witness: list | None = None

    @property
    def holds(self) -> bool:
        return self.bob_info <= self.bound + 1e-12

    @property
    def slack(self) -> float:
        return self.bound - self.bob_info

    def to_json(self) -> dict:
        d = asdict(self)
        d["holds"] = self.holds
        return d


def _cheat_value(k: np.ndarray, fv: np.ndarray) -> tuple[float, list]:
    """Best bit b: needs some m with f(m)=b and k[m] >= 1/2; gain = max k over f^{-1}(1-b)."""
    best, arg = -np.inf, None
    for b in (0, 1):
        if np.any(k[fv == b] >= FEASIBLE):
            v = float(k[fv != b].max())
            if v > best:
                best, arg = v, [b]
    return best, arg


def bc_security(code: ListCode, h: LinearHash, W, budget: int | None = None,
                restarts: int = 8, seed=None) -> BCSecurity:
    """Exact hiding quantities and the dishonest-committer success probability."""
    _check_commit_code(code, h)
    W = W if isinstance(W, Channel) else W.W
    budget = enumeration_budget() if budget is None else budget
    rows, member = code_tables(code, W, budget)
    fv = h.values()
    h2 = renyi2_conditional(rows)
    coset_rows = np.stack([rows[fv == b].mean(axis=0) for b in (0, 1)])
    info = block_mutual_information(coset_rows)
    bound = 2.0 * 2.0**(-h2)
    nx = W.input_size**code.n
    if nx <= budget:
        K = apply_product(W, member.T.astype(float), code.n)
        best, wit = -np.inf, None
        for b in (0, 1):
            feas = np.any(K[:, fv == b] >= FEASIBLE, axis=1)
            if feas.any():
                gain = np.where(feas, K[:, fv != b].max(axis=1), -np.inf)
                i = int(np.argmax(gain))
                if gain[i] > best:
                    best, wit = float(gain[i]), words_from_indices([i], W.input_size, code.n)[0].tolist()
        method = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        starts = list(code.codewords) if code.codewords is not None else []
        starts += list(rng.integers(0, W.input_size, size=(restarts, code.n)))
        best, wit = -np.inf, None
        for x0 in starts:
            x = np.array(x0)
            cur, _ = _cheat_value(K_row(code, W, x, member), fv)
            improved = True
            while improved:
                improved = False
                for i in range(code.n):
                    for a in range(W.input_size):
                        if a == x[i]:
                            continue
                        z = x.copy()
                        z[i] = a
                        v, _ = _cheat_value(K_row(code, W, z, member), fv)
                        if v > cur + 1e-12:
                            x, cur, improved = z, v, True
            if cur > best:
                best, wit = cur, x.tolist()
        method = "hill-climb lower bound"
    return BCSecurity(float(info), float(h2), float(bound),
                      float(max(best, 0.0)) if np.isfinite(best) else 0.0, method, wit)


# -- auction ----------------------------------------------------------------------

@dataclass(frozen=True)
class CheatStrategy:
    """Player ``cheater`` sends ``x_block`` instead of its codeword, hoping ``colluder``
    lands in the dealer's list for that transmission."""

    cheater: int
    colluder: int
    x_block: tuple


def collusion_strategy(code: ListCode, W: Channel, budget: int | None = None,
                       seed=None) -> CheatStrategy:
    """Strategy from the dishonest-sender witness (exhaustive if affordable, else search)."""
    budget = enumeration_budget() if budget is None else budget
    try:
        res = delta_D_exact(code, W, budget, per_message=False)
    except BudgetExceeded:
        res = delta_D_search(code, W, seed=seed, budget=budget)
    if res.best_x is None:
        raise ValidationError("no input block keeps any message decodable; no strategy")
    return CheatStrategy(res.best_message + 1, res.best_target + 1,
                         tuple(int(v) for v in res.best_x))


@dataclass
class AuctionTranscript:
    players: list
    bids: dict
    lists: dict
    winner: int
    winning_price: float
    verified: bool
    seed: object = None
    cheat: dict | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["bids"] = {str(k): v for k, v in self.bids.items()}
        d["lists"] = {str(k): v for k, v in self.lists.items()}
        return d


def run_auction(W, code: ListCode, bids: dict, seed=None,
                cheat_strategy: CheatStrategy | None = None,
                rng: np.random.Generator | None = None) -> AuctionTranscript:
    W = W if isinstance(W, Channel) else W.W
    if not bids:
        raise EmptyAuction("no bids")
    for pid in bids:
        if not (1 <= int(pid) <= code.M):
            raise UnknownPlayer(f"player {pid} is not in 1..{code.M}")
    if cheat_strategy is not None and cheat_strategy.cheater not in bids:
        raise UnknownPlayer(f"cheater {cheat_strategy.cheater} did not bid")
    rng = np.random.default_rng(seed) if rng is None else rng
    lists = {}
    for pid in sorted(bids):
        if cheat_strategy is not None and pid == cheat_strategy.cheater:
            x = np.asarray(cheat_strategy.x_block, dtype=np.int64)
        else:
            x = sample_inputs(code, pid - 1, rng, 1)[0]
        y = sample_outputs(W, x, rng, 1)[0]
        lists[pid] = [i + 1 for i in decode(code, W, y)]
    # highest price, lower ID on ties
    winner = min(bids, key=lambda p: (-bids[p], p))
    # the dealer looks only at the winner's claim and the winning transmission's list
    verified = winner in lists[winner]
    cheat = None
    if cheat_strategy is not None:
        c = cheat_strategy
        cheat = {"cheater": c.cheater, "colluder": c.colluder, "x_block": list(c.x_block),
                 "colluder_listed": c.colluder in lists[c.cheater],
                 "cheater_listed": c.cheater in lists[c.cheater]}
    return AuctionTranscript(sorted(int(p) for p in bids), {int(k): float(v) for k, v in bids.items()},
                             lists, int(winner), float(bids[winner]), bool(verified), seed, cheat)


def write_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json() if hasattr(r, "to_json") else r) + "\n")
