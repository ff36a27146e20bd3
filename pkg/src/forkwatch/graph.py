"""Peer-to-peer network graphs: generation, validation, serialization, pool contraction.

Three families are supported:

* ``regular``            every node has degree ``d`` (pairing model)
* ``regular_clustered``  a regular graph plus a clique over the first ``X%`` of nodes
* ``exponential``        degrees drawn from an exponential distribution with mean ``d``
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

FAMILIES = ("regular", "regular_clustered", "exponential")

MAX_PAIRING_ATTEMPTS = 1000


class GraphError(ValueError):
    """Raised for infeasible graph parameters or unusable graphs."""


@dataclass(frozen=True)
class NetworkGraph:
    """Undirected simple graph over nodes ``0..n-1``.

    ``adjacency[u]`` is the sorted tuple of neighbours of ``u``.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] | None = None

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int]], labels: Sequence[str] | None = None
    ) -> "NetworkGraph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs), tuple(labels) if labels else None)

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    @property
    def edge_count(self) -> int:
        return sum(self.degrees) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def is_connected(self) -> bool:
        return len(components(self.adjacency)[0]) == self.n if self.n else True


@dataclass(frozen=True)
class GraphSpec:
    family: str
    n: int
    d: float
    cluster_pct: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        problems = []
        if self.family not in FAMILIES:
            problems.append(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.n < 1:
            problems.append("n must be >= 1")
        if not (1 <= self.d < max(self.n, 2)):
            problems.append(f"d must satisfy 1 <= d < n (d={self.d}, n={self.n})")
        if not 0 <= self.cluster_pct <= 100:
            problems.append("cluster_pct must be within [0, 100]")
        if self.family == "regular" and (self.n * int(self.d)) % 2:
            problems.append("n*d must be even for a regular graph")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise GraphError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


def components(adjacency: Sequence[Sequence[int]]) -> list[list[int]]:
    """Connected components, largest first (ties by smallest member)."""
    n = len(adjacency)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def validate(g: NetworkGraph) -> list[str]:
    """Return human-readable invariant violations; empty when ``g`` is usable."""
    violations = []
    if len(g.adjacency) != g.n:
        violations.append(f"adjacency has {len(g.adjacency)} rows for n={g.n}")
        return violations
    for u, nbrs in enumerate(g.adjacency):
        if len(set(nbrs)) != len(nbrs):
            violations.append(f"duplicate edge at node {u}")
        for v in nbrs:
            if not 0 <= v < g.n:
                violations.append(f"node {u} has out-of-range neighbour {v}")
            elif v == u:
                violations.append(f"self-loop at node {u}")
            elif u not in g.adjacency[v]:
                violations.append(f"asymmetric edge {u}->{v}")
    if not violations and g.n and not g.is_connected():
        comps = components(g.adjacency)
        violations.append(f"disconnected: {len(comps)} components")
    return violations


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _pair_stubs(degrees: Sequence[int], rng: np.random.Generator) -> set[tuple[int, int]] | None:
    """Pairing model that re-pairs only the stubs that collided.

    Returns ``None`` when the leftover stubs cannot form any new simple edge.
    """
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    while stubs.size:
        rng.shuffle(stubs)
        leftover = []
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover += [a, b]
        if not leftover:
            break
        if not _can_extend(edges, leftover):
            return None
        stubs = np.array(leftover)
    return edges


def _can_extend(edges: set[tuple[int, int]], stubs: list[int]) -> bool:
    nodes = sorted(set(stubs))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            if (a, b) not in edges:
                return True
    return False


def gen_regular(n: int, d: int, seed: int) -> NetworkGraph:
    """Connected random ``d``-regular graph on ``n`` nodes."""
    GraphSpec("regular", n, d, 0, seed)
    if n == 1:
        raise GraphError("a regular graph needs n >= 2")
    rng = _rng(seed)
    for _ in range(MAX_PAIRING_ATTEMPTS):
        edges = _pair_stubs([d] * n, rng)
        if edges is None:
            continue
        g = NetworkGraph.from_edges(n, edges)
        if g.is_connected():
            return g
    raise GraphError(
        f"no connected {d}-regular graph on {n} nodes after {MAX_PAIRING_ATTEMPTS} attempts; "
        "try another seed"
    )


def gen_regular_clustered(n: int, d: int, cluster_pct: float, seed: int) -> NetworkGraph:
    """Regular graph with the first ``cluster_pct`` percent of nodes made a clique."""
    GraphSpec("regular_clustered", n, d, cluster_pct, seed)
    base = gen_regular(n, d, seed)
    k = int(n * cluster_pct // 100)
    if k < 2:
        return base
    edges = set(base.edges())
    edges.update((u, v) for u in range(k) for v in range(u + 1, k))
    return NetworkGraph.from_edges(n, edges)


def _expected_clipped_degree(scale: float) -> float:
    # E[max(2, round(X))] for X ~ Exp(mean=scale)
    total = 2.0 * (1.0 - math.exp(-2.5 / scale))
    k = 3
    while True:
        p = math.exp(-(k - 0.5) / scale) - math.exp(-(k + 0.5) / scale)
        total += k * p
        if p < 1e-15 and k > 10 * scale:
            return total
        k += 1


def _exponential_scale(d_mean: float) -> float:
    lo, hi = 1e-6, d_mean
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _expected_clipped_degree(mid) < d_mean:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gen_exponential(n: int, d_mean: float, seed: int, max_rewires: int | None = None) -> NetworkGraph:
    """Connected graph whose degree sequence follows an exponential distribution.

    Degrees are ``max(2, round(X))`` with ``X`` exponential, the scale chosen so
    that the clipped mean equals ``d_mean``.  The configuration model drops
    self-loops and parallel edges; leftover components are joined to the largest
    one by degree-preserving edge swaps.
    """
    if n < 3:
        raise GraphError("exponential graphs need n >= 3")
    if d_mean < 2:
        raise GraphError("exponential graphs need d_mean >= 2")
    GraphSpec("exponential", n, d_mean, 0, seed)
    rng = _rng(seed)
    scale = _exponential_scale(d_mean)
    deg = np.maximum(2, np.rint(rng.exponential(scale, size=n))).astype(int)
    deg = np.minimum(deg, n - 1)
    if deg.sum() % 2:
        i = int(rng.integers(n))
        deg[i] += 1 if deg[i] < n - 1 else -1

    stubs = np.repeat(np.arange(n), deg)
    rng.shuffle(stubs)
    edges = set()
    for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
        if a != b:
            edges.add((min(a, b), max(a, b)))
    edges = _repair_connectivity(n, edges, rng, max_rewires or 10 * n)
    return NetworkGraph.from_edges(n, edges)


def _adjacency_sets(n: int, edges: set[tuple[int, int]]) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _non_bridge_edge(
    comp: list[int], adj: list[set[int]], rng: np.random.Generator
) -> tuple[int, int] | None:
    cand = sorted((u, v) for u in comp for v in adj[u] if u < v)
    order = rng.permutation(len(cand))
    for idx in order[:200]:
        u, v = cand[int(idx)]
        adj[u].discard(v)
        adj[v].discard(u)
        reachable = _reaches(adj, u, v)
        adj[u].add(v)
        adj[v].add(u)
        if reachable:
            return u, v
    return None


def _reaches(adj: list[set[int]], src: int, dst: int) -> bool:
    seen = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            return True
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


def _repair_connectivity(
    n: int, edges: set[tuple[int, int]], rng: np.random.Generator, max_rewires: int
) -> set[tuple[int, int]]:
    adj = _adjacency_sets(n, edges)
    for _ in range(max_rewires):
        comps = components([sorted(a) for a in adj])
        if len(comps) == 1:
            return {(u, v) for u in range(n) for v in adj[u] if u < v}
        big, small = comps[0], comps[1]
        cut = _non_bridge_edge(big, adj, rng)
        if cut is None:
            # largest component is a tree: any swap could split it, so just bridge
            a = big[int(rng.integers(len(big)))]
            adj[a].add(small[0])
            adj[small[0]].add(a)
            continue
        a, b = cut
        adj[a].discard(b)
        adj[b].discard(a)
        small_edges = sorted((u, v) for u in small for v in adj[u] if u < v)
        if small_edges:
            c, d = small_edges[int(rng.integers(len(small_edges)))]
            adj[c].discard(d)
            adj[d].discard(c)
        else:
            c = d = small[0]
        adj[a].add(c)
        adj[c].add(a)
        adj[b].add(d)
        adj[d].add(b)
    raise GraphError(f"connectivity repair did not finish within {max_rewires} rewires")


def generate(spec: GraphSpec) -> NetworkGraph:
    if spec.family == "regular":
        return gen_regular(spec.n, int(spec.d), spec.seed)
    if spec.family == "regular_clustered":
        return gen_regular_clustered(spec.n, int(spec.d), spec.cluster_pct, spec.seed)
    return gen_exponential(spec.n, spec.d, spec.seed)


@dataclass(frozen=True)
class Contraction:
    """Index bookkeeping for a pool merged into one super node."""

    pool: int  # index of the super node in the contracted graph
    old_to_new: tuple[int, ...]
    new_to_old: tuple[tuple[int, ...], ...] = field(repr=False)


def contract_pool(g: NetworkGraph, members: Iterable[int]) -> tuple[NetworkGraph, Contraction]:
    """Merge ``members`` into one node that keeps every external link.

    Honest nodes keep their relative order; the super node takes the index of
    the smallest member.
    """
    mset = set(members)
    if not mset:
        raise GraphError("pool must have at least one member")
    if any(not 0 <= m < g.n for m in mset):
        raise GraphError("pool member index out of range")
    if len(mset) == g.n:
        raise GraphError("pool cannot contain every node: no honest nodes remain")
    anchor = min(mset)
    old_to_new = []
    new_to_old: list[tuple[int, ...]] = []
    for u in range(g.n):
        if u in mset and u != anchor:
            old_to_new.append(-1)
            continue
        old_to_new.append(len(new_to_old))
        new_to_old.append(tuple(sorted(mset)) if u == anchor else (u,))
    pool = old_to_new[anchor]
    for m in mset:
        old_to_new[m] = pool

    edges = set()
    for u, v in g.edges():
        a, b = old_to_new[u], old_to_new[v]
        if a != b:
            edges.add((min(a, b), max(a, b)))
    labels = None
    if g.labels:
        labels = ["+".join(g.labels[o] for o in olds) for olds in new_to_old]
    cg = NetworkGraph.from_edges(len(new_to_old), edges, labels)
    return cg, Contraction(pool, tuple(old_to_new), tuple(new_to_old))


def to_json(g: NetworkGraph, spec: GraphSpec | None = None) -> str:
    doc: dict = {"n": g.n, "edges": [list(e) for e in sorted(g.edges())]}
    if g.labels:
        doc["labels"] = list(g.labels)
    doc["spec"] = spec.to_dict() if spec else None
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> tuple[NetworkGraph, GraphSpec | None]:
    doc = json.loads(text)
    g = NetworkGraph.from_edges(int(doc["n"]), [tuple(e) for e in doc["edges"]], doc.get("labels"))
    spec = GraphSpec(**doc["spec"]) if doc.get("spec") else None
    return g, spec
