"""Hop-distance propagation model.

Blocks advance exactly one hop per slot.  A node at hop distance ``d`` from
the origin learns the block during slot ``d``, before it mines in that slot,
so the set of nodes still unaware of the block after ``s`` slots is
``{k : dist(origin, k) > s}``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import GraphError, NetworkGraph


@dataclass(frozen=True)
class MiningProfile:
    """Per-node block generation probability per slot."""

    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 1 or rates.size == 0:
            raise ValueError("rates must be a non-empty vector")
        if np.any(rates < 0):
            raise ValueError("rates must be non-negative")
        if rates.sum() > 0.5 + 1e-12:
            raise ValueError(f"total rate {rates.sum():.6g} exceeds 0.5 blocks per slot")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def uniform(cls, n: int, total: float) -> "MiningProfile":
        return cls(np.full(n, total / n))

    @property
    def total(self) -> float:
        return float(self.rates.sum())

    @property
    def shares(self) -> np.ndarray:
        return self.rates / self.total

    def __len__(self) -> int:
        return self.rates.size

    def is_uniform(self) -> bool:
        return bool(np.allclose(self.rates, self.rates[0], rtol=1e-12, atol=0))


def bfs_distances(adjacency: Sequence[Sequence[int]], source: int) -> list[int]:
    dist = [-1] * len(adjacency)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in adjacency[u]:
            if dist[v] < 0:
                dist[v] = du
                queue.append(v)
    return dist


def all_pairs_hop_distance(g: NetworkGraph) -> np.ndarray:
    """``N x N`` matrix of hop counts (int32).  Raises on a disconnected graph."""
    dm = np.empty((g.n, g.n), dtype=np.int32)
    for s in range(g.n):
        row = bfs_distances(g.adjacency, s)
        if -1 in row:
            raise GraphError(f"graph is disconnected: node {row.index(-1)} unreachable from {s}")
        dm[s] = row
    return dm


@dataclass(frozen=True)
class PropagationProfile:
    origin: int
    uninformed_rate: np.ndarray  # entry s: combined rate of nodes farther than s hops

    @property
    def eccentricity(self) -> int:
        return int(self.uninformed_rate.size - 1)


def uninformed_profile(dm: np.ndarray, mp: MiningProfile, origin: int) -> PropagationProfile:
    dist = dm[origin]
    ecc = int(dist.max())
    beyond = np.array([mp.rates[dist > s].sum() for s in range(ecc + 1)])
    return PropagationProfile(origin, beyond)


def tau(dm: np.ndarray, i: int, k: int, t: int) -> int:
    """Slots still needed for ``i``'s block to reach ``k``, ``t`` slots after its birth.

    Negative when ``k`` already has it; deliberately not clamped.
    """
    return int(dm[i, k]) - t
