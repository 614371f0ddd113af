"""Single-letter and block information quantities (all in bits)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .channels import Channel, check_distribution
from .errors import DimensionMismatch, InfiniteVariance, LengthMismatch, NonConvergence

LN2 = np.log(2.0)


def entropy(P) -> float:
    p = np.asarray(P, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


def kl(p, q) -> float:
    """D(p||q) in bits; +inf if p is not absolutely continuous w.r.t. q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return float(np.sum(p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))))


@dataclass(frozen=True, eq=False)
class InfoContext:
    W: Channel
    P: np.ndarray
    WP: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = check_distribution(self.P, self.W.input_size)
        p.setflags(write=False)
        object.__setattr__(self, "P", p)
        wp = p @ self.W.rows
        wp.setflags(write=False)
        object.__setattr__(self, "WP", wp)


def context(W: Channel, P=None) -> InfoContext:
    if P is None:
        P = np.full(W.input_size, 1.0 / W.input_size)
    return InfoContext(W, P)


def mutual_information(ctx: InfoContext) -> float:
    """I(P,W) = sum_x P(x) D(W_x || W_P)."""
    W, P = ctx.W, ctx.P
    return float(sum(P[x] * kl(W.rows[x], ctx.WP) for x in range(W.input_size) if P[x] > 0))


def conditional_entropy_xy(ctx: InfoContext) -> float:
    """H(X|Y) under P and W."""
    return entropy(ctx.P) - mutual_information(ctx)


def _divergences(W: Channel, q) -> np.ndarray:
    return np.array([kl(W.rows[x], q) for x in range(W.input_size)])


def capacity(W: Channel, tol: float = 1e-12, max_iter: int = 100_000):
    """Blahut-Arimoto alternating maximization.

    Stops when the gap between the upper bound ``max_x D(W_x||W_P)`` and
    ``I(P,W)`` drops below ``tol`` or the relative change of ``I`` is below
    1e-12 with the gap already under ``1e-9``. Returns ``(C, P_star)``.
    """
    k = W.input_size
    p = np.full(k, 1.0 / k)
    prev = -1.0
    for _ in range(max_iter):
        q = p @ W.rows
        d = _divergences(W, q)
        lower = float(p @ d)
        upper = float(np.max(d))
        if upper - lower <= tol:
            return lower, p
        if prev > 0 and abs(lower - prev) <= 1e-12 * lower and upper - lower <= 1e-9:
            return lower, p
        prev = lower
        w = p * np.exp2(d - upper)
        p = w / w.sum()
    raise NonConvergence(f"Blahut-Arimoto did not reach tol={tol} in {max_iter} iterations "
                         f"(gap {upper - lower:.3e})")


def F(ctx: InfoContext, x: int, x_prime: int) -> float:
    """F(x,x'|P) = E_x[log W_x'(Y) - log W_P(Y)] = D(W_x||W_P) - D(W_x||W_x')."""
    W = ctx.W
    wx = W.rows[x]
    mask = wx > 0
    if np.any(W.rows[x_prime][mask] <= 0):
        return float("-inf")
    if np.any(ctx.WP[mask] <= 0):
        return float("inf")
    return float(np.sum(wx[mask] * (np.log2(W.rows[x_prime][mask]) - np.log2(ctx.WP[mask]))))


def F_matrix(ctx: InfoContext) -> np.ndarray:
    k = ctx.W.input_size
    return np.array([[F(ctx, a, b) for b in range(k)] for a in range(k)])


def F_block(ctx: InfoContext, x_block, xprime_block) -> float:
    x = np.asarray(x_block, dtype=np.int64)
    xp = np.asarray(xprime_block, dtype=np.int64)
    if x.shape != xp.shape:
        raise LengthMismatch("blocks differ in length")
    return float(F_matrix(ctx)[x, xp].sum())


def _diff(a: float, b: float) -> float:
    # inf - inf arises only when both sides are undefined for the pair; skip it
    if np.isinf(a) and np.isinf(b) and np.sign(a) == np.sign(b):
        return float("nan")
    return a - b


def zeta1(ctx: InfoContext) -> float:
    """min_{x != x'} F(x,x|P) - F(x',x|P)."""
    Fm = F_matrix(ctx)
    k = Fm.shape[0]
    if k < 2:
        raise DimensionMismatch("zeta1 needs at least two input symbols")
    vals = [_diff(Fm[x, x], Fm[xp, x]) for x in range(k) for xp in range(k) if xp != x]
    return float(np.nanmin(vals))


def zeta2(ctx: InfoContext) -> float:
    """max_{x != x'} max_{x''} F(x,x''|P) - F(x',x''|P)."""
    Fm = F_matrix(ctx)
    k = Fm.shape[0]
    if k < 2:
        raise DimensionMismatch("zeta2 needs at least two input symbols")
    vals = [_diff(Fm[x, xpp], Fm[xp, xpp])
            for x in range(k) for xp in range(k) if xp != x for xpp in range(k)]
    return float(np.nanmax(vals))


def v_pair(ctx: InfoContext, x: int, x_prime: int) -> float:
    """Var under W_x of log W_x'(Y) - log W_P(Y); +inf when unbounded on the support."""
    W = ctx.W
    wx = W.rows[x]
    mask = wx > 0
    if np.any(W.rows[x_prime][mask] <= 0) or np.any(ctx.WP[mask] <= 0):
        return float("inf")
    z = np.log2(W.rows[x_prime][mask]) - np.log2(ctx.WP[mask])
    w = wx[mask]
    mean = float(w @ z)
    return float(max(0.0, w @ (z - mean) ** 2))


def v_max(ctx: InfoContext, strict: bool = True) -> float:
    k = ctx.W.input_size
    v = max(v_pair(ctx, a, b) for a in range(k) for b in range(k))
    if strict and np.isinf(v):
        raise InfiniteVariance("log-likelihood ratio is unbounded for some (x, x') pair")
    return v


def g_value(ctx: InfoContext, s: float, x: int) -> float:
    """G(s,x|P) = log2 sum_x' P(x') 2^{s F(x,x'|P)}, via log-sum-exp."""
    if s <= 0:
        raise ValueError("s must be positive")
    Fm = F_matrix(ctx)
    P = ctx.P
    mask = (P > 0) & np.isfinite(Fm[x])
    if not np.any(mask):
        return float("-inf")
    return float(logsumexp(s * Fm[x, mask] * LN2, b=P[mask]) / LN2)


def g_avg(ctx: InfoContext, s: float) -> float:
    return float(sum(ctx.P[x] * g_value(ctx, s, x)
                     for x in range(ctx.W.input_size) if ctx.P[x] > 0))


def g_block(ctx: InfoContext, s: float, x_block) -> float:
    return float(sum(g_value(ctx, s, int(x)) for x in np.asarray(x_block)))


@dataclass
class GCurve:
    s_grid: np.ndarray
    values: np.ndarray


def g_curve(ctx: InfoContext, s_grid) -> GCurve:
    s = np.asarray(s_grid, dtype=float)
    return GCurve(s, np.array([g_avg(ctx, si) for si in s]))


def lemma10_margin(ctx: InfoContext, s: float) -> float:
    """s*I(P,W) - G(s|P) - H(P); negative for every s > 0 when rows are distinct.

    Evaluated as -sum_x P(x) log2(1 + sum_{x' != x} P(x')/P(x) 2^{-s D(W_x||W_x')}),
    which is the same quantity without the cancellation that the direct
    difference suffers at large s.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    W, P = ctx.W, ctx.P
    k = W.input_size
    total = 0.0
    for x in range(k):
        if P[x] <= 0:
            continue
        r = 0.0
        for xp in range(k):
            if xp != x and P[xp] > 0:
                r += P[xp] / P[x] * 2.0 ** (-s * kl(W.rows[x], W.rows[xp]))
        total += P[x] * np.log1p(r) / LN2
    return float(-total)


# -- block quantities ---------------------------------------------------------

def block_mutual_information(rows: np.ndarray, weights=None) -> float:
    """I(X;Y) for input distribution ``weights`` over the rows of an output table.

    ``rows[i]`` is the output distribution for input ``i`` (e.g. W^n(.|phi(m))).
    """
    rows = np.asarray(rows, dtype=float)
    w = np.full(rows.shape[0], 1.0 / rows.shape[0]) if weights is None else np.asarray(weights)
    q = w @ rows
    total = 0.0
    for i in range(rows.shape[0]):
        if w[i] > 0:
            total += w[i] * kl(rows[i], q)
    return float(total)


@dataclass
class SuperadditivityReport:
    I_joint: float
    I_sum: float
    H_joint: float
    H_sum: float

    @property
    def holds(self) -> bool:
        return self.I_joint <= self.I_sum + 1e-9 and self.H_joint <= self.H_sum + 1e-9


def superadditivity_check(joint, W: Channel) -> SuperadditivityReport:
    """Both sides of I(X^n;Y^n) <= sum_j I(X_j;Y_j) and H(X^n) <= sum_j H(X_j).

    ``joint`` is an array of shape ``(|X|,)*n`` (or flat of length |X|^n).
    """
    k = W.input_size
    joint = np.asarray(joint, dtype=float)
    n = int(round(np.log(joint.size) / np.log(k)))
    if k**n != joint.size:
        raise DimensionMismatch("joint size is not a power of |X|")
    joint = joint.reshape((k,) * n)
    check_distribution(joint.ravel())
    # Y^n given X^n: exact output table of the product channel
    words = list(itertools.product(range(k), repeat=n))
    px = np.array([joint[w] for w in words])
    rows = np.ones((len(words), 1))
    for i in range(n):
        sym = np.array([w[i] for w in words])
        rows = (rows[:, :, None] * W.rows[sym][:, None, :]).reshape(len(words), -1)
    I_joint = block_mutual_information(rows, px)
    I_sum = 0.0
    H_sum = 0.0
    for j in range(n):
        axes = tuple(a for a in range(n) if a != j)
        pj = joint.sum(axis=axes)
        I_sum += mutual_information(InfoContext(W, pj))
        H_sum += entropy(pj)
    return SuperadditivityReport(I_joint, I_sum, entropy(px), H_sum)
