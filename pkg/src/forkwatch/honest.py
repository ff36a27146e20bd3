"""Analytical model of honest mining on a hop-distance network.

Every quantity is conditioned on a "clean start": a node ``i`` produces the
first block after a canonization event, which happens with probability
``pi_i / pi``.  The block then spreads one hop per slot while the still
uninformed part of the network may produce a competitor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import NetworkGraph
from .propagation import (
    MiningProfile,
    PropagationProfile,
    all_pairs_hop_distance,
    uninformed_profile,
)

# prefix sums this close to one half are treated as exactly one half
_HALF_TOL = 1e-12


@dataclass
class HonestAnalysisReport:
    fork_rate: float
    p_no_compete: np.ndarray  # limiting no-competitor probability per origin
    expected_win: np.ndarray
    mr_est: np.ndarray
    rmg_est: np.ndarray
    at50: float

    def to_dict(self) -> dict:
        return {
            "fork_rate": self.fork_rate,
            "at50": self.at50,
            "p_no_compete": self.p_no_compete.tolist(),
            "expected_win": self.expected_win.tolist(),
            "mr_est": self.mr_est.tolist(),
            "rmg_est": [None if np.isnan(x) else x for x in self.rmg_est.tolist()],
        }


def no_compete_series(pp: PropagationProfile) -> np.ndarray:
    """``P_NC(t)`` for ``t = 0..eccentricity``; entry 0 is the empty product."""
    factors = 1.0 - pp.uninformed_rate[1:]
    if np.any(factors < 0):
        raise ValueError(f"uninformed rate above 1 for origin {pp.origin}")
    return np.concatenate(([1.0], np.cumprod(factors)))


def p_no_compete(pp: PropagationProfile, t: int) -> float:
    """Probability that nobody still unaware of the origin's block mines a rival by slot ``t``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    series = no_compete_series(pp)
    return float(series[min(t, pp.eccentricity)])


def _distances(g: NetworkGraph, dm: np.ndarray | None) -> np.ndarray:
    return all_pairs_hop_distance(g) if dm is None else dm


def fork_rate(g: NetworkGraph, mp: MiningProfile, dm: np.ndarray | None = None) -> float:
    dm = _distances(g, dm)
    if mp.total == 0:
        return 0.0
    shares = mp.shares
    fr = 0.0
    for i in range(g.n):
        pp = uninformed_profile(dm, mp, i)
        fr += shares[i] * (1.0 - no_compete_series(pp)[-1])
    return float(fr)


def fork_rate_uniform_approx(
    g: NetworkGraph, mp: MiningProfile, dm: np.ndarray | None = None, first_slot: int = 1
) -> float:
    """Closed-form fork rate ``1 - (1 - pi) ** I`` for evenly spread mining power.

    ``I`` sums the node-averaged uninformed fraction over slots starting at
    ``first_slot``.  The default (1) is the slot convention of :func:`fork_rate`;
    ``first_slot=0`` also counts the birth slot, the continuous-time reading.
    """
    if not mp.is_uniform():
        warnings.warn("fork_rate_uniform_approx assumes uniform mining rates", stacklevel=2)
    dm = _distances(g, dm)
    ecc = int(dm.max()) if dm.size else 0
    exponent = 0.0
    for t in range(first_slot, ecc + 1):
        exponent += float((dm > t).mean())
    return float(1.0 - (1.0 - mp.total) ** exponent)


def omega_hat(dm: np.ndarray, mp: MiningProfile, i: int, j: int, t: int) -> float:
    """Power share siding with ``i``'s block when ``j`` mines a rival ``t`` slots later.

    Ties on arrival time count one half.
    """
    if i == j:
        raise ValueError("omega_hat needs two distinct nodes")
    if not 0 <= t < dm[i, j]:
        raise ValueError(f"need 0 <= t < dist(i, j) = {dm[i, j]}, got t={t}")
    return float(_omega_rows(dm, mp.shares, i, np.array([j]), t)[0])


def _omega_rows(dm: np.ndarray, shares: np.ndarray, i: int, rivals: np.ndarray, t: int) -> np.ndarray:
    lead = dm[i] - t
    rival_dist = dm[rivals]
    return (rival_dist > lead) @ shares + 0.5 * ((rival_dist == lead) @ shares)


def expected_wins(g: NetworkGraph, mp: MiningProfile, dm: np.ndarray | None = None) -> np.ndarray:
    """``E[W_i]`` for every node: chance of winning the first block after canonization."""
    dm = _distances(g, dm)
    n = g.n
    ew = np.zeros(n)
    if mp.total == 0:
        return ew
    shares = mp.shares
    rates = mp.rates
    for o in range(n):
        if rates[o] == 0:
            continue
        pp = uninformed_profile(dm, mp, o)
        pnc = no_compete_series(pp)
        ew[o] += shares[o] * pnc[-1]
        for t in range(1, pp.eccentricity):
            rivals = np.flatnonzero(dm[o] > t)
            om = _omega_rows(dm, shares, o, rivals, t)
            weight = shares[o] * pnc[t]
            ew[o] += weight * float(rates[rivals] @ om)
            ew[rivals] += weight * rates[rivals] * (1.0 - om)
    return ew


def expected_win(g: NetworkGraph, mp: MiningProfile, i: int, dm: np.ndarray | None = None) -> float:
    return float(expected_wins(g, mp, dm)[i])


def at50_from_mr(mr, power) -> float:
    """Smallest power share of a top-revenue coalition holding more than half the revenue.

    Nodes are taken in descending revenue order, ties by ascending index.
    """
    mr = np.asarray(mr, dtype=float)
    power = np.asarray(power, dtype=float)
    if mr.size == 0:
        raise ValueError("at50 needs at least one node")
    if mr.shape != power.shape:
        raise ValueError("revenue and power vectors differ in length")
    if mr.sum() <= 0:
        raise ValueError("revenue shares must have a positive sum")
    mr = mr / mr.sum()
    power = power / power.sum()
    order = np.lexsort((np.arange(mr.size), -np.round(mr, 12)))
    cum = np.cumsum(mr[order])
    k = int(np.argmax(cum > 0.5 + _HALF_TOL))
    return float(power[order[: k + 1]].sum())


def analyze_honest(g: NetworkGraph, mp: MiningProfile, dm: np.ndarray | None = None) -> HonestAnalysisReport:
    dm = _distances(g, dm)
    pnc = np.array([no_compete_series(uninformed_profile(dm, mp, i))[-1] for i in range(g.n)])
    shares = mp.shares
    fr = float(shares @ (1.0 - pnc))
    ew = expected_wins(g, mp, dm)
    with np.errstate(divide="ignore", invalid="ignore"):
        rmg = np.where(shares > 0, (ew - shares) / shares, np.nan)
    return HonestAnalysisReport(
        fork_rate=fr,
        p_no_compete=pnc,
        expected_win=ew,
        mr_est=ew.copy(),
        rmg_est=rmg,
        at50=at50_from_mr(ew, shares),
    )
