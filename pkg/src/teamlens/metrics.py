"""Structural metrics on binary network topology.

Weights are ignored here; apply :func:`teamlens.graph.threshold_binary`
first to decide which ties count.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from math import comb

from teamlens.graph import SocialNetwork

UNDIRECTED_CLASSES = ("T0", "T1", "T2", "T3")
DIRECTED_CLASSES = (
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U",
    "030T", "030C", "201", "120D", "120U", "120C", "210", "300",
)


@dataclass(frozen=True)
class CentralityScores:
    metric: str  # "degree" | "betweenness"
    normalized: bool
    scores: dict[str, float]

    def mean(self) -> float:
        return sum(self.scores.values()) / len(self.scores) if self.scores else 0.0


@dataclass(frozen=True)
class TriadCensus:
    directed: bool
    n: int
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def proportions(self) -> dict[str, float]:
        total = self.total
        return {k: (c / total if total else 0.0) for k, c in self.counts.items()}


def degree_centrality(net: SocialNetwork, normalized: bool = False) -> CentralityScores:
    n = net.n
    if normalized and n < 2:
        raise ValueError("normalized degree needs at least 2 nodes")
    deg = dict.fromkeys(net.nodes, 0)
    for u, v in net.edges:
        deg[u] += 1
        deg[v] += 1
    scale = 1.0
    if normalized:
        scale = 1.0 / ((2 if net.directed else 1) * (n - 1))
    return CentralityScores("degree", normalized, {v: d * scale for v, d in deg.items()})


def betweenness_centrality(net: SocialNetwork, normalized: bool = False) -> CentralityScores:
    """Shortest-path betweenness via per-source dependency accumulation."""
    n = net.n
    if normalized and n < 3:
        raise ValueError("normalized betweenness needs at least 3 nodes")
    adj = net.successors()
    cb = [0.0] * n
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    if not net.directed:
        # each unordered pair was counted from both ends
        cb = [c / 2.0 for c in cb]
    if normalized:
        pairs = (n - 1) * (n - 2)
        if not net.directed:
            pairs /= 2
        cb = [c / pairs for c in cb]
    return CentralityScores("betweenness", normalized, dict(zip(net.nodes, cb)))


def triad_census_undirected(net: SocialNetwork) -> TriadCensus:
    """Count node triples by how many of their three ties are present."""
    if net.directed:
        raise ValueError("undirected census needs an undirected network")
    n = net.n
    if n < 3:
        raise ValueError("triad census needs at least 3 nodes")
    adj = [set(row) for row in net.successors()]
    counts = [0, 0, 0, 0]
    for a, b, c in combinations(range(n), 3):
        counts[(b in adj[a]) + (c in adj[a]) + (c in adj[b])] += 1
    return TriadCensus(False, n, dict(zip(UNDIRECTED_CLASSES, counts)))


def _classify_triad(arc) -> str:
    """MAN label of the triad on nodes 0, 1, 2; ``arc(i, j)`` tells if i -> j."""
    mutual, asym = [], []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ij, ji = arc(i, j), arc(j, i)
        if ij and ji:
            mutual.append((i, j))
        elif ij:
            asym.append((i, j))
        elif ji:
            asym.append((j, i))
    m, a = len(mutual), len(asym)
    if m + a <= 1:
        return ("003", "012", "102")[a + 2 * m]
    if (m, a) == (0, 2):
        (s1, t1), (s2, t2) = asym
        if s1 == s2:
            return "021D"
        if t1 == t2:
            return "021U"
        return "021C"
    if (m, a) == (1, 1):
        (p, q), (s, t) = mutual[0], asym[0]
        # the asymmetric arc points into the mutual pair -> D, out of it -> U
        return "111D" if t in (p, q) else "111U"
    if (m, a) == (0, 3):
        outs = {s for s, _ in asym}
        return "030C" if len(outs) == 3 else "030T"
    if (m, a) == (2, 0):
        return "201"
    if (m, a) == (1, 2):
        (s1, t1), (s2, t2) = asym
        if s1 == s2:
            return "120D"
        if t1 == t2:
            return "120U"
        return "120C"
    if (m, a) == (2, 1):
        return "210"
    return "300"


def triad_census_directed(net: SocialNetwork) -> TriadCensus:
    """Count node triples by their 16 MAN isomorphism classes."""
    if not net.directed:
        raise ValueError("directed census needs a directed network")
    n = net.n
    if n < 3:
        raise ValueError("triad census needs at least 3 nodes")
    out = [set(row) for row in net.successors()]
    counts = dict.fromkeys(DIRECTED_CLASSES, 0)
    for tri in combinations(range(n), 3):
        counts[_classify_triad(lambda i, j: tri[j] in out[tri[i]])] += 1
    return TriadCensus(True, n, counts)


def triad_census(net: SocialNetwork) -> TriadCensus:
    return triad_census_directed(net) if net.directed else triad_census_undirected(net)


def transitivity(census: TriadCensus) -> float | None:
    """Closed share of connected triples: 3*T3 / (3*T3 + T2).

    ``None`` when the network has no connected triple at all.
    """
    if census.directed:
        raise ValueError("transitivity is only defined here for undirected censuses")
    closed = 3 * census.counts["T3"]
    open_ = census.counts["T2"]
    if closed + open_ == 0:
        return None
    return closed / (closed + open_)


def density(net: SocialNetwork) -> float:
    n = net.n
    if n < 2:
        raise ValueError("density needs at least 2 nodes")
    possible = n * (n - 1) if net.directed else comb(n, 2)
    return len(net.edges) / possible
