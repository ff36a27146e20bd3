"""Selfish-mining pool analysis.

The pool is contracted to one super node; its communication capability
``gamma`` is the share of honest power that ends up on the pool's block when
it answers an honest block with its own.  On a graph this is a betweenness
centrality weighted by mining power.  Revenue then follows from the classic
withholding state machine (states 0, 0', 1, 2, ...).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import GraphError, NetworkGraph, contract_pool
from .metrics import threshold_crossing
from .propagation import MiningProfile

STRATEGIES = ("descending_degree", "ascending_index", "random")
DEFAULT_ALPHA_GRID = (0.02, 0.05, 0.10, 0.20, 0.30, 0.40, 0.45)

# leads above this are lumped into one tail state (geometric within the tail)
CHAIN_TRUNCATION = 64


@dataclass(frozen=True)
class SelfishConfig:
    members: frozenset[int]
    alpha: float
    strategy: str = "descending_degree"

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.members:
            raise ValueError("pool needs at least one member")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


@dataclass
class SelfishPoint:
    alpha: float
    gamma_sm: float
    revenue_share: float
    rmg: float
    members: int


@dataclass
class SelfishCurve:
    points: list[SelfishPoint]
    prth: float | None
    at50: float | None
    fit_coeffs: list[float]
    prth_method: str = "absent"
    at50_method: str = "absent"
    prth_grid: float | None = None
    at50_grid: float | None = None
    strategy: str = "descending_degree"
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "points": [vars(p) for p in self.points],
            "prth": self.prth,
            "prth_method": self.prth_method,
            "prth_grid": self.prth_grid,
            "at50": self.at50,
            "at50_method": self.at50_method,
            "at50_grid": self.at50_grid,
            "fit_coeffs": self.fit_coeffs,
        }


def weighted_betweenness(g: NetworkGraph, mp: MiningProfile, v: int) -> float:
    """Mining-power weighted betweenness of ``v`` over ordered honest pairs.

    Pair ``(i, j)`` weighs ``pi_i/H * pi_j/(H - pi_i)`` with ``H`` the honest
    power (everything but ``v``).  That weight factors into a source term and
    a target term, so Brandes' dependency accumulation applies with ``pi_j``
    as the target weight.
    """
    # the pair weight is scale free; scaling to max 1 makes uniform rates exact integers
    top = float(mp.rates.max())
    if top == 0:
        return 0.0
    rates = mp.rates / top
    target_w = rates.copy()
    target_w[v] = 0.0
    honest = math.fsum(target_w)
    adj = g.adjacency
    n = g.n
    acc = []
    for s in range(n):
        if s == v or rates[s] == 0 or honest - rates[s] <= 0:
            continue
        # BFS with shortest-path counts
        sigma = [0.0] * n
        dist = [-1] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma[s] = 1.0
        dist[s] = 0
        order = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            du = dist[u] + 1
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = du
                    queue.append(w)
                if dist[w] == du:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (target_w[w] + delta[w]) / sigma[w]
            for u in preds[w]:
                delta[u] += sigma[u] * coeff
        # delta[v] sums sigma_sj(v)/sigma_sj * pi_j over targets j != s, v
        acc.append(rates[s] * delta[v] / (honest - rates[s]))
    return float(min(max(math.fsum(acc) / honest, 0.0), 1.0))


def gamma_sm(g: NetworkGraph, sc: SelfishConfig, mp: MiningProfile) -> float:
    cg, con = contract_pool(g, sc.members)
    if not cg.is_connected():
        raise GraphError("contracted graph is disconnected")
    return weighted_betweenness(cg, contract_rates(mp, con), con.pool)


def contract_rates(mp: MiningProfile, con) -> MiningProfile:
    return MiningProfile(np.array([mp.rates[list(olds)].sum() for olds in con.new_to_old]))


def _chain_matrix(alpha: float, gamma: float, lead_cap: int):
    """Transition matrix and per-state expected (pool, honest) rewards.

    State order: 0, 0', 1, 2, ..., lead_cap, tail (> lead_cap).
    """
    beta = 1.0 - alpha
    ratio = alpha / beta
    size = lead_cap + 3
    idx_zero, idx_prime = 0, 1

    def lead(k: int) -> int:  # lead k >= 1 lives at index k + 1
        return k + 1

    tail = size - 1
    P = np.zeros((size, size))
    pool_r = np.zeros(size)
    honest_r = np.zeros(size)

    P[idx_zero, lead(1)] = alpha
    P[idx_zero, idx_zero] = beta
    honest_r[idx_zero] = beta

    # race: pool extends its block (2 for pool), honest extends pool's (1 each),
    # honest extends its own (2 for honest)
    P[idx_prime, idx_zero] = 1.0
    pool_r[idx_prime] = 2 * alpha + gamma * beta
    honest_r[idx_prime] = gamma * beta + 2 * (1 - gamma) * beta

    P[lead(1), lead(2)] = alpha
    P[lead(1), idx_prime] = beta

    P[lead(2), lead(3)] = alpha
    P[lead(2), idx_zero] = beta
    pool_r[lead(2)] = 2 * beta

    for k in range(3, lead_cap + 1):
        P[lead(k), lead(k + 1) if k < lead_cap else tail] = alpha
        P[lead(k), lead(k - 1)] = beta
        pool_r[lead(k)] = beta

    # tail conditional law is geometric with ratio alpha/beta, so an honest
    # block leaves it with probability beta * (1 - ratio)
    P[tail, lead(lead_cap)] = beta * (1.0 - ratio)
    P[tail, tail] = 1.0 - P[tail, lead(lead_cap)]
    pool_r[tail] = beta
    return P, pool_r, honest_r


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve ``x P = x``, ``sum(x) = 1``.

    State 0's balance equation is dropped and ``x[0]`` pinned to 1 before
    normalizing; this keeps the small entries relatively accurate when the
    chain rarely leaves state 0.
    """
    A = P.T - np.eye(P.shape[0])
    rest = np.linalg.solve(A[1:, 1:], -A[1:, 0])
    x = np.concatenate(([1.0], rest))
    return x / x.sum()


def selfish_revenue(alpha: float, gamma: float, lead_cap: int = CHAIN_TRUNCATION) -> tuple[float, float]:
    """Pool share of canonized blocks and its relative mining gain."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if alpha >= 0.5:
        raise ValueError("the withholding chain is not positive recurrent for alpha >= 0.5")
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    P, pool_r, honest_r = _chain_matrix(alpha, gamma, lead_cap)
    x = stationary_distribution(P)
    settled = float(x @ (pool_r + honest_r))
    share = float(x @ pool_r) / settled
    # gain from one dot product; share - alpha cancels badly for small alpha
    rmg = float(x @ (pool_r - alpha * (pool_r + honest_r))) / (alpha * settled)
    return share, rmg


def closed_form_revenue(alpha: float, gamma: float) -> float:
    a = alpha
    num = a * (1 - a) ** 2 * (4 * a + gamma * (1 - 2 * a)) - a**3
    return num / (1 - a * (1 + (2 - a) * a))


def profitability_threshold(gamma: float, tol: float = 1e-12) -> float:
    """Smallest pool share with positive relative gain, by bisection on the chain solve."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    lo, hi = tol, 0.5 - 1e-9
    if selfish_revenue(lo, gamma)[1] > 0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if selfish_revenue(mid, gamma)[1] > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def expansion_order(g: NetworkGraph, strategy: str, seed: int | None = None) -> list[int]:
    if strategy == "descending_degree":
        deg = g.degrees
        return sorted(range(g.n), key=lambda u: (-deg[u], u))
    if strategy == "ascending_index":
        return list(range(g.n))
    if strategy == "random":
        rng = np.random.default_rng(np.random.SeedSequence(seed or 0))
        return rng.permutation(g.n).tolist()
    raise ValueError(f"unknown expansion strategy {strategy!r}; expected one of {STRATEGIES}")


def pool_members(g: NetworkGraph, strategy: str, alpha: float, seed: int | None = None) -> frozenset[int]:
    k = max(1, math.ceil(alpha * g.n - 1e-9))
    return frozenset(expansion_order(g, strategy, seed)[:k])


def pool_share(mp: MiningProfile, members) -> float:
    """Pool power share; exactly ``k/N`` for ``k`` members under uniform rates."""
    scaled = mp.rates / mp.rates.max()
    return math.fsum(scaled[sorted(members)]) / math.fsum(scaled)


def expansion_sweep(
    g: NetworkGraph,
    mp: MiningProfile,
    strategy: str = "descending_degree",
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    seed: int | None = None,
) -> SelfishCurve:
    """Grow the pool along ``strategy`` and evaluate gamma and revenue at each grid point."""
    if any(not 0 < a <= 0.5 for a in alpha_grid):
        raise ValueError("alpha grid must lie in (0, 0.5]")
    points = []
    for a in sorted(alpha_grid):
        members = pool_members(g, strategy, a, seed)
        share = pool_share(mp, members)
        try:
            gam = gamma_sm(g, SelfishConfig(members, share, strategy), mp)
        except GraphError as exc:
            raise GraphError(f"alpha={a}: {exc}") from exc
        rev, rmg = selfish_revenue(min(share, 0.5 - 1e-9), gam)
        points.append(SelfishPoint(share, gam, rev, rmg, len(members)))
    return curve_from_points(points, strategy)


def curve_from_points(points: list[SelfishPoint], strategy: str = "descending_degree") -> SelfishCurve:
    xs = [p.alpha for p in points]
    prth = threshold_crossing(xs, [p.rmg for p in points], 0.0)
    at50 = threshold_crossing(xs, [p.revenue_share for p in points], 0.5)
    prth_grid = threshold_crossing(xs, [p.rmg for p in points], 0.0, method="linear")
    at50_grid = threshold_crossing(xs, [p.revenue_share for p in points], 0.5, method="linear")
    return SelfishCurve(
        points=points,
        prth=prth.x,
        at50=at50.x,
        fit_coeffs=prth.coeffs,
        prth_method=prth.method,
        at50_method=at50.method,
        prth_grid=prth_grid.x,
        at50_grid=at50_grid.x,
        strategy=strategy,
    )
