"""Slot-driven network simulator for honest and selfish mining.

Every processed slot runs, in order:

1. deliver every in-flight block one hop (recipients apply the longest-chain
   rule; equal height keeps the first-accepted block),
2. mine: the slot's miner extends its current tip,
3. queue every block a node newly adopted for its neighbours next slot.

A block carries its ancestry, so only the newest adopted tip is sent.  Slots
with nothing in flight and no mining are skipped.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .graph import NetworkGraph, contract_pool
from .propagation import MiningProfile
from .selfish import SelfishConfig, contract_rates

MINING_MODES = ("merged", "independent")
TIE_BREAKS = ("deliverers", "lowest_id")


@dataclass(frozen=True)
class SimOptions:
    """Simulator conventions that the model leaves open.

    ``mining="merged"``: each slot yields at most one block network-wide, by
    node ``i`` with probability ``pi_i`` (marginals match per-node Bernoulli
    trials).  ``"independent"`` draws one Bernoulli trial per node per slot.

    ``tie_break="deliverers"``: a node offered rival blocks of equal height in
    the same slot picks one with probability proportional to the number of
    neighbours delivering it.  ``"lowest_id"`` picks the oldest block.
    """

    mining: str = "merged"
    tie_break: str = "deliverers"

    def __post_init__(self) -> None:
        if self.mining not in MINING_MODES:
            raise ValueError(f"mining must be one of {MINING_MODES}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")


@dataclass
class SimReport:
    seed: int
    slots: int
    canonized_height: int
    blocks_total: int
    stale_blocks: int
    per_node_mr: list[float]
    per_node_rmg: list[float | None]
    power_share: list[float]
    fork_rate_sim: float
    forked_heights: int
    multi_prong_heights: int
    canonization_count: int
    w_counts: list[int]
    pool: int | None = None
    gamma_sim: float | None = None
    gamma_samples: int = 0
    races_interrupted: int = 0
    options: dict = field(default_factory=dict)

    @property
    def pool_revenue_share(self) -> float | None:
        return None if self.pool is None else self.per_node_mr[self.pool]

    @property
    def pool_rmg(self) -> float | None:
        return None if self.pool is None else self.per_node_rmg[self.pool]

    def to_dict(self) -> dict:
        return asdict(self)


def mining_events(
    rates: np.ndarray, slots: int, rng: np.random.Generator, mode: str = "merged"
) -> tuple[list[int], list[int]]:
    """Sorted (slot, miner) pairs for the whole run."""
    total = float(rates.sum())
    n = rates.size
    if total <= 0 or slots <= 0:
        return [], []
    if mode == "merged":
        at = _bernoulli_slots(total, slots, rng)
        miners = rng.choice(n, size=at.size, p=rates / total)
        return at.tolist(), miners.tolist()
    ev_slot, ev_node = [], []
    for i in range(n):
        if rates[i] > 0:
            at = _bernoulli_slots(float(rates[i]), slots, rng)
            ev_slot.append(at)
            ev_node.append(np.full(at.size, i))
    s = np.concatenate(ev_slot)
    v = np.concatenate(ev_node)
    order = np.lexsort((v, s))
    return s[order].tolist(), v[order].tolist()


def _bernoulli_slots(p: float, slots: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of successful slots among ``slots`` Bernoulli(p) trials."""
    expected = p * slots
    chunk = int(expected + 6 * math.sqrt(expected) + 16)
    parts = []
    last = -1
    while last < slots:
        at = last + np.cumsum(rng.geometric(p, size=chunk))
        parts.append(at)
        last = int(at[-1])
    at = np.concatenate(parts)
    return at[at < slots]


class _Race:
    __slots__ = ("pool_block", "rival_miner", "blocks_at_start")

    def __init__(self, pool_block: int, rival_miner: int, blocks_at_start: int):
        self.pool_block = pool_block
        self.rival_miner = rival_miner
        self.blocks_at_start = blocks_at_start


def _run(
    adj: Sequence[Sequence[int]],
    rates: np.ndarray,
    slots: int,
    seed: int,
    options: SimOptions,
    pool: int | None = None,
) -> SimReport:
    n = len(adj)
    ss = np.random.SeedSequence(seed)
    ev_seq, tie_seq = ss.spawn(2)
    ev_slot, ev_node = mining_events(rates, slots, np.random.default_rng(ev_seq), options.mining)
    tie_rng = random.Random(int(tie_seq.generate_state(1, np.uint64)[0]))
    uniform_ties = options.tie_break == "deliverers"

    height = [0]
    parent = [-1]
    miner = [-1]
    tip = [0] * n
    tip_h = [0] * n  # for the pool: height of its public view
    outbox: dict[int, int] = {}

    # pool state; the mining base is the top of the private chain, else the
    # released race block, else the public tip
    priv: list[int] = []
    racing = False
    pool_base = 0
    race: _Race | None = None
    honest_power = float(rates.sum() - (rates[pool] if pool is not None else 0.0))
    gamma_samples: list[float] = []
    interrupted = 0

    n_ev = len(ev_slot)
    ev_i = 0
    slot = -1
    while True:
        if outbox:
            s = slot + 1
        elif ev_i < n_ev:
            s = ev_slot[ev_i]
        else:
            break
        if s >= slots:
            break
        slot = s

        if outbox:
            inbox: dict[int, list[int]] = {}
            for u, b in outbox.items():
                hb = height[b]
                for v in adj[u]:
                    if hb > tip_h[v]:
                        lst = inbox.get(v)
                        if lst is None:
                            inbox[v] = [b]
                        else:
                            lst.append(b)
            outbox = {}
            for v, cands in inbox.items():
                b = cands[0]
                if len(cands) > 1:
                    top = max(height[c] for c in cands)
                    best = [c for c in cands if height[c] == top]
                    if uniform_ties:
                        b = best[tie_rng.randrange(len(best))] if len(set(best)) > 1 else best[0]
                    else:
                        b = min(best)
                if v != pool:
                    tip[v] = b
                    tip_h[v] = height[b]
                    outbox[v] = b
                    continue
                # ---- honest chain grew in the pool's view
                hb = height[b]
                tip_h[v] = hb
                if racing or not priv or height[priv[-1]] < hb:
                    racing = False
                    priv = []
                    pool_base = b
                    outbox[v] = b
                    continue
                lead = height[priv[-1]] - hb
                if lead == 0:
                    top_block = priv[-1]
                    race = _Race(top_block, miner[b], len(height))
                    priv = []
                    racing = True
                    pool_base = top_block
                    outbox[v] = top_block
                elif lead == 1:
                    top_block = priv[-1]
                    priv = []
                    pool_base = top_block
                    tip_h[v] = height[top_block]
                    outbox[v] = top_block
                else:
                    k = 0
                    while height[priv[k]] <= hb:
                        k += 1
                    if k:
                        outbox[v] = priv[k - 1]
                        priv = priv[k:]

        while ev_i < n_ev and ev_slot[ev_i] == slot:
            m = ev_node[ev_i]
            ev_i += 1
            b = len(height)
            if m == pool:
                height.append(height[pool_base] + 1)
                parent.append(pool_base)
                miner.append(m)
                pool_base = b
                if racing:
                    racing = False
                    tip_h[m] = height[b]
                    outbox[m] = b
                else:
                    priv.append(b)
                continue
            height.append(tip_h[m] + 1)
            parent.append(tip[m])
            miner.append(m)
            tip[m] = b
            tip_h[m] += 1
            outbox[m] = b

        if race is not None:
            if len(height) != race.blocks_at_start:
                race = None
                interrupted += 1
            elif not outbox:
                i = race.rival_miner
                denom = honest_power - rates[i]
                if denom > 0:
                    pb = race.pool_block
                    won = sum(rates[j] for j in range(n) if j != pool and j != i and tip[j] == pb)
                    gamma_samples.append(won / denom)
                race = None

    return _finalize(
        seed, slots, rates, height, parent, miner, tip, pool, gamma_samples, interrupted, options
    )


def _finalize(seed, slots, rates, height, parent, miner, tip, pool, gamma_samples, interrupted, options):
    n = rates.size
    tips = {tip[v] for v in range(n) if v != pool}
    if not tips:
        tips = {0}
    low = min(height[t] for t in tips)
    cur = set()
    for t in tips:
        while height[t] > low:
            t = parent[t]
        cur.add(t)
    while len(cur) > 1:
        cur = {parent[t] for t in cur}
    anchor = cur.pop()
    canon_h = height[anchor]

    chain = [0] * (canon_h + 1)
    b = anchor
    while b > 0:
        chain[height[b]] = b
        b = parent[b]

    per_height = Counter(height)
    counts = [0] * n
    for h in range(1, canon_h + 1):
        counts[miner[chain[h]]] += 1
    forked = sum(1 for h in range(1, canon_h + 1) if per_height[h] > 1)
    multi = sum(1 for h in range(1, canon_h + 1) if per_height[h] > 2)
    w = [0] * n
    for h in range(canon_h):
        if per_height[h] == 1:
            w[miner[chain[h + 1]]] += 1

    share = (rates / rates.sum()).tolist() if rates.sum() > 0 else [0.0] * n
    mr = [c / canon_h for c in counts] if canon_h else [0.0] * n
    rmg = [(m - s) / s if s > 0 else None for m, s in zip(mr, share)]
    blocks_total = len(height) - 1
    return SimReport(
        seed=seed,
        slots=slots,
        canonized_height=canon_h,
        blocks_total=blocks_total,
        stale_blocks=blocks_total - canon_h,
        per_node_mr=mr,
        per_node_rmg=rmg,
        power_share=share,
        fork_rate_sim=forked / canon_h if canon_h else 0.0,
        forked_heights=forked,
        multi_prong_heights=multi,
        canonization_count=sum(w),
        w_counts=w,
        pool=pool,
        gamma_sim=float(np.mean(gamma_samples)) if gamma_samples else None,
        gamma_samples=len(gamma_samples),
        races_interrupted=interrupted,
        options=asdict(options),
    )


def simulate_honest(
    g: NetworkGraph, mp: MiningProfile, slots: int, seed: int, options: SimOptions | None = None
) -> SimReport:
    if len(mp) != g.n:
        raise ValueError("mining profile length differs from node count")
    if slots < 1:
        raise ValueError("slots must be >= 1")
    return _run(g.adjacency, mp.rates, slots, seed, options or SimOptions())


def simulate_selfish(
    g: NetworkGraph,
    mp: MiningProfile,
    sc: SelfishConfig,
    slots: int,
    seed: int,
    options: SimOptions | None = None,
) -> SimReport:
    """Run with ``sc.members`` merged into one withholding super node.

    Node indices in the report refer to the contracted graph; ``report.pool``
    is the super node.
    """
    if len(mp) != g.n:
        raise ValueError("mining profile length differs from node count")
    if slots < 1:
        raise ValueError("slots must be >= 1")
    cg, con = contract_pool(g, sc.members)
    return _run(cg.adjacency, contract_rates(mp, con).rates, slots, seed, options or SimOptions(), con.pool)


def measure_fork_rate(report: SimReport) -> float:
    return report.fork_rate_sim


def measure_w_process(report: SimReport) -> list[float]:
    """Frequency with which each node mined the first block after a canonization."""
    total = sum(report.w_counts)
    return [c / total for c in report.w_counts] if total else [0.0] * len(report.w_counts)
