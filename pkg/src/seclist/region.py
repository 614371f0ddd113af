"""Capacity region of secure list decoding: H0, P_max, kappa, P0 and the special-case regions.

The lower list-rate boundary is

    kappa(R1) = [R1 - C]_+                      for R1 <= H0
    kappa(R1) = [R1 - Psi(R1)]_+,  Psi(R1) = max{ I(P,W) : H(P) >= R1 }   otherwise,

followed by a lower convex envelope across the R1 grid (time-sharing over an
auxiliary variable U). Psi is evaluated through the Lagrangian family
``P_lam = argmax I(P,W) + lam*H(P)``: the maximizer's entropy increases with
``lam``, so Psi(R1) = I(P_lam) at the ``lam`` where H(P_lam) = R1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize

from .channels import Channel, check_distribution
from .errors import DegenerateEpsilon, NonConvergence, RateOutOfRange
from .info import (InfoContext, binary_entropy, capacity, entropy, mutual_information,
                   v_max, zeta1)

SUPPORT_TOL = 1e-7
LAM_LOG_RANGE = (-12.0, 12.0)


def _neg_entropies(W: Channel) -> np.ndarray:
    r = W.rows
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, r * np.log2(r), 0.0).sum(axis=1)


def _divergence_vector(W: Channel, nh: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.log2(q)
        cross = np.where(W.rows > 0, W.rows * lq[None, :], 0.0).sum(axis=1)
    return nh - cross


def tilted_prior(W: Channel, lam: float, p0=None, tol: float = 1e-13,
                 max_iter: int = 200_000) -> np.ndarray:
    """argmax_P I(P,W) + lam*H(P) by alternating maximization (lam > 0).

    Update ``P <- (P * 2^{D(W_x||W_P)})^{1/(1+lam)}`` normalized; the
    Frank-Wolfe gap of the concave objective, relative to ``1 + lam``, is the
    stopping criterion.
    """
    k = W.input_size
    nh = _neg_entropies(W)
    p = np.full(k, 1.0 / k) if p0 is None else np.clip(np.asarray(p0, float), 1e-300, None)
    p = p / p.sum()
    for _ in range(max_iter):
        q = p @ W.rows
        d = _divergence_vector(W, nh, q)
        lp = np.log2(p)
        g = d - lam * lp
        gap = float(np.max(g) - p @ g)
        if gap <= tol * (1.0 + lam):
            return p
        lw = (lp + d) / (1.0 + lam)
        lw -= lw.max()
        p = np.exp2(lw)
        p /= p.sum()
    raise NonConvergence(f"tilted Blahut-Arimoto (lam={lam:g}) did not converge")


def h0_and_pmax(W: Channel, tol: float = 1e-9):
    """Largest input entropy among capacity-achieving priors, and its maximizer.

    Capacity-achieving priors share the output law q* and live on inputs with
    D(W_x||q*) = C, so they form the polytope {p >= 0 on S : p W_S = q*}.
    Entropy is maximized over that polytope.
    """
    C, p_star = capacity(W)
    q_star = p_star @ W.rows
    nh = _neg_entropies(W)
    d = _divergence_vector(W, nh, q_star)
    S = np.flatnonzero(d >= C - SUPPORT_TOL)
    WS = W.rows[S]
    base, *_ = np.linalg.lstsq(WS.T, q_star, rcond=None)
    base = np.clip(base, 0.0, None)
    base = base / base.sum()
    N = null_space(WS.T)
    if N.shape[1] == 0:
        pS = base
    else:
        def neg_h(z):
            p = np.clip(base + N @ z, 1e-300, None)
            return float(np.sum(p * np.log2(p)))

        def grad(z):
            p = np.clip(base + N @ z, 1e-300, None)
            return N.T @ (np.log2(p) + 1.0 / np.log(2))

        cons = [{"type": "ineq", "fun": lambda z: base + N @ z, "jac": lambda z: N}]
        res = minimize(neg_h, np.zeros(N.shape[1]), jac=grad, constraints=cons,
                       method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000})
        pS = np.clip(base + N @ res.x, 0.0, None)
        pS = pS / pS.sum()
        if entropy(pS) < entropy(base):
            pS = base
    P = np.zeros(W.input_size)
    P[S] = pS
    if mutual_information(InfoContext(W, P)) < C - max(tol, 1e-8):
        # polytope solve drifted; the BA fixed point is always capacity-achieving
        P = p_star
    return entropy(P), P


class RegionSolver:
    """Caches C, H0, P_max for one channel and evaluates Psi / kappa pointwise."""

    def __init__(self, W: Channel, tol: float = 1e-9):
        self.W = W
        self.tol = tol
        self.logX = math.log2(W.input_size)
        self.C, self.P_cap = capacity(W)
        self.H0, self.P_max = h0_and_pmax(W, tol)
        self._warm = None

    def _prior_for(self, lam: float) -> np.ndarray:
        p = tilted_prior(self.W, lam, self._warm)
        self._warm = p
        return p

    def psi_prior(self, R1: float) -> np.ndarray:
        """Prior attaining Psi(R1) = max{I(P,W): H(P) >= R1}."""
        if R1 <= self.H0:
            return self.P_max
        if R1 >= self.logX - 1e-12:
            return np.full(self.W.input_size, 1.0 / self.W.input_size)
        lo, hi = LAM_LOG_RANGE
        f_hi = entropy(self._prior_for(10.0**hi)) - R1
        if f_hi < 0:
            return np.full(self.W.input_size, 1.0 / self.W.input_size)
        f_lo = entropy(self._prior_for(10.0**lo)) - R1
        if f_lo >= 0:
            return self._prior_for(10.0**lo)
        u = brentq(lambda t: entropy(self._prior_for(10.0**t)) - R1, lo, hi,
                   xtol=1e-13, rtol=1e-14, maxiter=200)
        return self._prior_for(10.0**u)

    def psi(self, R1: float) -> float:
        if R1 <= self.H0:
            return self.C
        return mutual_information(InfoContext(self.W, self.psi_prior(R1)))

    def kappa(self, R1: float) -> float:
        if R1 < -1e-12 or R1 > self.logX + 1e-12:
            raise RateOutOfRange(f"R1={R1} outside [0, {self.logX}]")
        if R1 <= self.H0:
            return max(R1 - self.C, 0.0)
        return max(R1 - self.psi(R1), 0.0)


def kappa(W: Channel, R1: float, tol: float = 1e-9) -> float:
    return RegionSolver(W, tol).kappa(R1)


def lower_convex_envelope(x, y) -> np.ndarray:
    """Greatest convex minorant of the points (x_i, y_i), evaluated at x (x sorted)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    hull = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.interp(x, x[hull], y[hull])


@dataclass
class RateRegion:
    logX: float
    C: float
    H0: float
    P_max: np.ndarray
    r1: np.ndarray
    kappa: np.ndarray
    kappa_pointwise: np.ndarray
    psi: np.ndarray
    p0_samples: list = field(default_factory=list)

    @property
    def grid_step(self) -> float:
        return self.logX / len(self.r1)

    def kappa_at(self, R1: float) -> float:
        if R1 <= self.H0:
            return max(R1 - self.C, 0.0)
        return float(np.interp(R1, self.r1, self.kappa))

    def rows(self):
        for r, k in zip(self.r1, self.kappa):
            yield {"r1": float(r), "kappa": float(k),
                   "c_line_r2_lower": max(float(r) - self.C, 0.0), "r2_upper": float(r)}

    def to_json(self) -> dict:
        return {"logX": self.logX, "C": self.C, "H0": self.H0, "P_max": self.P_max.tolist(),
                "grid": len(self.r1)}


def r1_grid(logX: float, grid: int) -> np.ndarray:
    """Cell midpoints of a uniform grid over (0, logX)."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    h = logX / grid
    return (np.arange(grid) + 0.5) * h


def compute_region(W: Channel, grid: int = 512, tol: float = 1e-9) -> RateRegion:
    solver = RegionSolver(W, tol)
    r1 = r1_grid(solver.logX, grid)
    psi = np.empty(grid)
    samples = [solver.P_max, np.full(W.input_size, 1.0 / W.input_size)]
    for i, r in enumerate(r1):
        if r <= solver.H0:
            psi[i] = solver.C
        else:
            p = solver.psi_prior(r)
            psi[i] = mutual_information(InfoContext(W, p))
            samples.append(p)
    pointwise = np.maximum(r1 - psi, 0.0)
    # envelope over the full curve including the anchor at H0 and the endpoints
    xs = np.concatenate([[0.0], r1, [solver.logX]])
    ys = np.concatenate([[0.0 - solver.C], r1 - psi, [solver.logX - solver.psi(solver.logX)]])
    order = np.argsort(xs, kind="stable")
    env = lower_convex_envelope(xs[order], ys[order])[np.argsort(order)][1:-1]
    kap = np.maximum(np.minimum(env, r1 - psi), 0.0)
    return RateRegion(solver.logX, solver.C, solver.H0, solver.P_max, r1, kap, pointwise,
                      psi, samples)


def write_region_csv(region: RateRegion, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["r1", "kappa", "c_line_r2_lower", "r2_upper"],
                           lineterminator="\n")
        w.writeheader()
        for row in region.rows():
            w.writerow({k: f"{v:.12g}" for k, v in row.items()})


@dataclass
class RatePoint:
    R1: float
    R2: float

    def __post_init__(self):
        if self.R1 < 0 or self.R2 < 0:
            raise RateOutOfRange("rates must be nonnegative")


@dataclass
class Membership:
    status: str  # "inside" | "boundary" | "outside"
    margin: float
    kappa: float

    @property
    def inside(self) -> bool:
        return self.status == "inside"


def region_contains(region: RateRegion, pt: RatePoint) -> Membership:
    """Membership in {0 < R1 < logX, kappa(R1) < R2 < R1}.

    The strict bounds on R1 and R2 < R1 are exact; only kappa carries grid
    error, so a point within one grid cell of kappa is reported as boundary.
    """
    R1, R2 = pt.R1, pt.R2
    exact_margin = min(R1, region.logX - R1, R1 - R2)
    if exact_margin <= 0:
        k = region.kappa_at(min(max(R1, 0.0), region.logX))
        return Membership("outside", exact_margin, k)
    k = region.kappa_at(R1)
    d = R2 - k
    margin = min(exact_margin, d)
    band = region.grid_step
    if d > band:
        return Membership("inside", margin, k)
    if d >= -band:
        return Membership("boundary", margin, k)
    return Membership("outside", margin, k)


def p0_membership(W: Channel, P, tol: float = 1e-6, solver: RegionSolver | None = None) -> bool:
    """P in P0  iff  kappa(H(P)) = H(X|Y)_P (within tol)."""
    P = check_distribution(P, W.input_size)
    solver = solver or RegionSolver(W)
    ctx = InfoContext(W, P)
    h = entropy(P)
    return abs(solver.kappa(min(h, solver.logX)) - (h - mutual_information(ctx))) <= tol


@dataclass
class CorollaryRegion:
    which: str
    region: RateRegion
    applies: bool
    flags: dict


def corollary_region(W: Channel, which: str, grid: int = 512, tol: float = 1e-7) -> CorollaryRegion:
    """Region and applicability for the three special cases.

    cor46: region below H0 (needs V(W) finite).
    cor56: uniform prior capacity-achieving -> region fixed by log|X| and C.
    cor66: zeta1 > 0 on sampled members of P0 -> region is the full kappa curve.
    """
    if which not in ("cor46", "cor56", "cor66"):
        raise ValueError(f"unknown corollary {which!r}")
    region = compute_region(W, grid)
    k = W.input_size
    uni = np.full(k, 1.0 / k)
    v_finite = bool(np.isfinite(v_max(InfoContext(W, region.P_max), strict=False)))
    uniform_optimal = mutual_information(InfoContext(W, uni)) >= region.C - tol
    z_pos = True
    if k >= 2:
        for P in region.p0_samples:
            if not zeta1(InfoContext(W, P)) > 0:
                z_pos = False
                break
    flags = {"v_finite": v_finite, "uniform_optimal": bool(uniform_optimal),
             "zeta1_positive_on_P0": bool(z_pos), "H0": region.H0, "C": region.C,
             "logX": region.logX}
    if which == "cor46":
        applies = v_finite
        mask = region.r1 <= region.H0
        region = RateRegion(region.logX, region.C, region.H0, region.P_max, region.r1[mask],
                            region.kappa[mask], region.kappa_pointwise[mask], region.psi[mask],
                            region.p0_samples)
    elif which == "cor56":
        applies = v_finite and uniform_optimal
    else:
        applies = v_finite and z_pos
    return CorollaryRegion(which, region, bool(applies), flags)


@dataclass
class MetaConverse:
    lhs: float
    rhs: float
    eps_P: float
    eps_Q: float
    mutual_info: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-12

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def meta_converse_gap(code, W: Channel, budget: int | None = None) -> MetaConverse:
    """Both sides of log(M/L) <= (I(X^n;Y^n) + h(1-eps'_A)) / (1-eps'_A).

    eps'_A is the message-averaged miss probability (= eps_P of the test
    {(m,y): m in list(y)}); eps_Q is that test's acceptance under the
    product of marginals, which never exceeds L/M.
    """
    from .security import code_tables

    rows, member = code_tables(code, W, budget)
    return meta_converse_from_tables(rows, member, code.L)


def meta_converse_from_tables(rows, member, L: int) -> MetaConverse:
    """Meta-converse sides from likelihood rows ``[m, y]`` and list membership ``[m, y]``."""
    from .info import block_mutual_information

    rows = np.asarray(rows, dtype=float)
    member = np.asarray(member, dtype=bool)
    M = rows.shape[0]
    eps_m = 1.0 - np.sum(rows * member, axis=1)
    eps_P = float(np.mean(eps_m))
    if eps_P >= 1 - 1e-12:
        raise DegenerateEpsilon(f"average miss probability {eps_P} is too close to 1")
    q = rows.mean(axis=0)
    eps_Q = float(q @ member.sum(axis=0)) / M
    I = block_mutual_information(rows)
    lhs = math.log2(M / L)
    rhs = (I + binary_entropy(1 - eps_P)) / (1 - eps_P)
    return MetaConverse(lhs, rhs, eps_P, eps_Q, I)
