"""Finite discrete memoryless channels and their n-fold extensions.

Symbols are dense integer indices ``0..k-1``. Block words of length ``n`` are
indexed in lexicographic (``itertools.product``) order, most significant
coordinate first, so word index ``i`` over an alphabet of size ``k`` is the
base-``k`` expansion of ``i``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateRows,
    LengthMismatch,
    NegativeEntry,
    RowSumInvalid,
    SymbolOutOfRange,
    ValidationError,
)

SUM_TOL = 1e-9
DISTINCT_TOL = 1e-12
DEFAULT_BUDGET = 2**20


def enumeration_budget() -> int:
    """Budget for exhaustive enumeration; ``SLX_BUDGET`` overrides the default 2^20."""
    raw = os.environ.get("SLX_BUDGET")
    if raw:
        return int(float(raw))
    return DEFAULT_BUDGET


@dataclass(frozen=True, eq=False)
class Channel:
    rows: np.ndarray
    name: str = ""
    log_rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        with np.errstate(divide="ignore"):
            lr = np.log2(rows)
        lr.setflags(write=False)
        object.__setattr__(self, "log_rows", lr)

    @property
    def input_size(self) -> int:
        return self.rows.shape[0]

    @property
    def output_size(self) -> int:
        return self.rows.shape[1]

    def __repr__(self):
        return f"Channel({self.name or 'W'}, {self.input_size}x{self.output_size})"


def make_channel(rows, name: str = "", require_distinct: bool = True) -> Channel:
    """Validate and normalize a stochastic matrix.

    Pairwise-distinct rows are required unless ``require_distinct=False``,
    which exists only for degenerate reference channels such as BSC(0.5).
    """
    try:
        arr = np.asarray(rows, dtype=float)
    except ValueError:
        raise DimensionMismatch("channel rows must be a rectangular numeric matrix") from None
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionMismatch("channel rows must be a non-empty rectangular matrix")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("channel entries must be finite")
    if np.any(arr < 0):
        raise NegativeEntry("channel has a negative entry")
    sums = arr.sum(axis=1)
    bad = np.abs(sums - 1.0) > SUM_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RowSumInvalid(f"row {i} sums to {sums[i]!r}")
    arr = arr / sums[:, None]
    k = arr.shape[0]
    for a in range(k if require_distinct else 0):
        for b in range(a + 1, k):
            if np.max(np.abs(arr[a] - arr[b])) <= DISTINCT_TOL:
                raise DuplicateRows(f"rows {a} and {b} coincide")
    return Channel(arr, name)


def bsc(p: float, require_distinct: bool = True) -> Channel:
    return make_channel([[1 - p, p], [p, 1 - p]], name=f"BSC({p:g})",
                        require_distinct=require_distinct)


def z_channel(p: float) -> Channel:
    """Z-channel: input 0 is noiseless, input 1 flips to 0 with probability ``p``."""
    return make_channel([[1.0, 0.0], [p, 1 - p]], name=f"Z({p:g})")


def noiseless(k: int) -> Channel:
    return make_channel(np.eye(k), name=f"noiseless({k})")


def random_channel(rng: np.random.Generator, nx: int, ny: int, alpha: float = 1.0) -> Channel:
    """Dirichlet rows; retries until rows are distinct (almost surely the first draw)."""
    while True:
        rows = rng.dirichlet(np.full(ny, alpha), size=nx)
        try:
            return make_channel(rows, name=f"rand{nx}x{ny}")
        except DuplicateRows:
            continue


def load_channel(path) -> Channel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid channel JSON: {exc}") from None
    try:
        rows = doc["rows"]
    except (KeyError, TypeError):
        raise ValidationError("channel file needs a 'rows' field") from None
    W = make_channel(rows, name=str(doc.get("name", "")))
    if "input" in doc and int(doc["input"]) != W.input_size:
        raise DimensionMismatch(f"declared input size {doc['input']} != {W.input_size}")
    if "output" in doc and int(doc["output"]) != W.output_size:
        raise DimensionMismatch(f"declared output size {doc['output']} != {W.output_size}")
    return W


def channel_to_json(W: Channel) -> dict:
    return {"name": W.name, "input": W.input_size, "output": W.output_size,
            "rows": W.rows.tolist()}


def save_channel(W: Channel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_json(W)) + "\n")


def check_distribution(P, size: int | None = None) -> np.ndarray:
    p = np.asarray(P, dtype=float)
    if p.ndim != 1:
        raise DimensionMismatch("distribution must be a vector")
    if size is not None and p.shape[0] != size:
        raise DimensionMismatch(f"distribution has {p.shape[0]} entries, expected {size}")
    if np.any(p < 0):
        raise NegativeEntry("distribution has a negative entry")
    s = p.sum()
    if abs(s - 1.0) > SUM_TOL:
        raise RowSumInvalid(f"distribution sums to {s!r}")
    return p / s


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def output_dist(W: Channel, P) -> np.ndarray:
    """W_P(y) = sum_x P(x) W(y|x)."""
    p = check_distribution(P, W.input_size)
    return p @ W.rows


def _check_block(block, k: int, n: int | None = None) -> np.ndarray:
    b = np.asarray(block, dtype=np.int64)
    if b.ndim != 1:
        raise DimensionMismatch("block must be a 1-d word")
    if n is not None and b.shape[0] != n:
        raise LengthMismatch(f"block length {b.shape[0]} != {n}")
    if np.any(b < 0) or np.any(b >= k):
        raise SymbolOutOfRange(f"symbol outside 0..{k - 1}")
    return b


def product_prob(W: Channel, x_block, y_block) -> float:
    """prod_i W(y_i|x_i)."""
    x = _check_block(x_block, W.input_size)
    y = _check_block(y_block, W.output_size)
    if x.shape != y.shape:
        raise LengthMismatch("input and output blocks differ in length")
    return float(np.prod(W.rows[x, y]))


def product_log_prob(W: Channel, x_block, y_block) -> float:
    x = _check_block(x_block, W.input_size)
    y = _check_block(y_block, W.output_size)
    if x.shape != y.shape:
        raise LengthMismatch("input and output blocks differ in length")
    return float(np.sum(W.log_rows[x, y]))


# -- word enumeration -------------------------------------------------------

def word_count(k: int, n: int) -> int:
    return k**n


def words_from_indices(idx, k: int, n: int) -> np.ndarray:
    """Rows of symbols for the given word indices (shape ``(len(idx), n)``)."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty((idx.shape[0], n), dtype=np.int64)
    rem = idx.copy()
    for i in range(n - 1, -1, -1):
        out[:, i] = rem % k
        rem //= k
    return out


def word_index(word, k: int) -> int:
    i = 0
    for s in np.asarray(word, dtype=np.int64):
        i = i * k + int(s)
    return i


def words_to_indices(words, k: int) -> np.ndarray:
    w = np.asarray(words, dtype=np.int64)
    idx = np.zeros(w.shape[0], dtype=np.int64)
    for i in range(w.shape[1]):
        idx = idx * k + w[:, i]
    return idx


def all_words(k: int, n: int) -> np.ndarray:
    return words_from_indices(np.arange(k**n), k, n)


def iter_word_chunks(k: int, n: int, chunk: int = 1 << 15):
    """Yield ``(start, words)`` covering all k^n words in index order."""
    total = k**n
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        yield start, words_from_indices(np.arange(start, stop), k, n)


LOG_FLOOR = -1e250  # finite stand-in for log 0 so 0 * log 0 stays 0 in a matmul


def block_output_probs(W: Channel, x_blocks, y_words) -> np.ndarray:
    """Matrix ``[b, j] = W^n(y_words[j] | x_blocks[b])`` (linear scale)."""
    return np.exp2(block_log_probs(W, x_blocks, y_words))


def block_log_probs(W: Channel, x_blocks, y_words) -> np.ndarray:
    """Matrix of log2 W^n(y|x); -inf where the probability is zero.

    Computed as one-hot(x) @ stacked log-rows so large codebooks hit BLAS.
    """
    x = np.atleast_2d(np.asarray(x_blocks, dtype=np.int64))
    y = np.atleast_2d(np.asarray(y_words, dtype=np.int64))
    k = W.input_size
    n = x.shape[1]
    if y.shape[1] != n:
        raise LengthMismatch("input and output words differ in length")
    onehot = np.zeros((x.shape[0], n * k))
    onehot[np.arange(x.shape[0])[:, None], np.arange(n)[None, :] * k + x] = 1.0
    lw = np.where(np.isfinite(W.log_rows), W.log_rows, LOG_FLOOR)
    stacked = np.transpose(lw[:, y], (2, 0, 1)).reshape(n * k, y.shape[0])
    out = onehot @ stacked
    out[out < LOG_FLOOR / 2] = -np.inf
    return out


def product_dist_log(q, y_words) -> np.ndarray:
    """log2 of the i.i.d. product distribution q^n at each word."""
    with np.errstate(divide="ignore"):
        lq = np.log2(np.asarray(q, dtype=float))
    y = np.asarray(y_words, dtype=np.int64)
    return lq[y].sum(axis=1)


def apply_product(W: Channel, B: np.ndarray, n: int) -> np.ndarray:
    """Compute ``W^{(x)n} @ B`` for ``B`` of shape ``(|Y|^n, k)`` without forming W^n.

    Returns shape ``(|X|^n, k)``; row ``i`` is ``sum_y W^n(y|x_i) B[y]``.
    """
    ny, nx = W.output_size, W.input_size
    k = B.shape[1]
    if B.shape[0] != ny**n:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {ny**n}")
    T = np.asarray(B, dtype=float).reshape((ny,) * n + (k,))
    for axis in range(n):
        T = np.tensordot(W.rows, T, axes=([1], [axis]))
        T = np.moveaxis(T, 0, axis)
    return T.reshape(nx**n, k)


def sample_outputs(W: Channel, x_block, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` output blocks Y^n ~ W^n(.|x_block)."""
    x = _check_block(x_block, W.input_size)
    cdf = np.cumsum(W.rows, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((size, x.shape[0]))
    out = np.empty((size, x.shape[0]), dtype=np.int64)
    for i, xi in enumerate(x):
        out[:, i] = np.searchsorted(cdf[xi], u[:, i], side="right")
    return out


@dataclass(frozen=True)
class ProductChannelView:
    """Lazy view of W^n; entries are products computed on demand."""

    base: Channel
    n: int

    def prob(self, x_block, y_block) -> float:
        _check_block(x_block, self.base.input_size, self.n)
        return product_prob(self.base, x_block, y_block)

    def log_prob(self, x_block, y_block) -> float:
        _check_block(x_block, self.base.input_size, self.n)
        return product_log_prob(self.base, x_block, y_block)

    def output_dist(self, x_block) -> np.ndarray:
        """Full W^n(.|x) over all |Y|^n words (enumeration)."""
        x = _check_block(x_block, self.base.input_size, self.n)
        out = np.ones(1)
        for xi in x:
            out = np.kron(out, self.base.rows[xi])
        return out

    def sample(self, x_block, rng, size: int) -> np.ndarray:
        _check_block(x_block, self.base.input_size, self.n)
        return sample_outputs(self.base, x_block, rng, size)

    def apply(self, B: np.ndarray) -> np.ndarray:
        return apply_product(self.base, B, self.n)
