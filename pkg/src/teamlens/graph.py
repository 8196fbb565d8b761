"""Weighted social networks over a team roster."""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from numbers import Rational, Real
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from teamlens.ingest import EventKind, InteractionEvent, TeamRoster


class ChannelPolicy(str, enum.Enum):
    IGNORE = "ignore"
    CLIQUE = "clique"


def as_fraction(x: Real) -> Fraction:
    """Exact rational for a user-supplied number; floats go through their decimal repr."""
    if isinstance(x, bool):
        raise TypeError("booleans are not weights")
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True, eq=False)
class SocialNetwork:
    """Immutable weighted graph over a fixed, ordered node set.

    Undirected edge keys are stored with the endpoint that comes first in
    ``nodes`` as the first element. Use :meth:`key` to canonicalize a pair.
    """

    directed: bool
    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], Fraction]

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate nodes")
        index = {v: i for i, v in enumerate(self.nodes)}
        clean: dict[tuple[str, str], Fraction] = {}
        for (u, v), w in self.edges.items():
            if u not in index or v not in index:
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside the node set")
            if u == v:
                raise ValueError(f"self-loop on {u}")
            w = as_fraction(w)
            if w < 0:
                raise ValueError(f"negative weight on ({u}, {v})")
            if w == 0:
                continue
            if not self.directed and index[u] > index[v]:
                u, v = v, u
            if (u, v) in clean:
                raise ValueError(f"duplicate edge ({u}, {v})")
            clean[(u, v)] = w
        ordered = sorted(clean.items(), key=lambda kv: (index[kv[0][0]], index[kv[0][1]]))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", MappingProxyType(dict(ordered)))

    def __eq__(self, other):
        if not isinstance(other, SocialNetwork):
            return NotImplemented
        return (
            self.directed == other.directed
            and self.nodes == other.nodes
            and dict(self.edges) == dict(other.edges)
        )

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"SocialNetwork({kind}, n={len(self.nodes)}, m={len(self.edges)})"

    @property
    def n(self) -> int:
        return len(self.nodes)

    def key(self, u: str, v: str) -> tuple[str, str]:
        if self.directed:
            return (u, v)
        return (u, v) if self.nodes.index(u) < self.nodes.index(v) else (v, u)

    def weight(self, u: str, v: str) -> Fraction:
        return self.edges.get(self.key(u, v), Fraction(0))

    def total_weight(self) -> Fraction:
        return sum(self.edges.values(), Fraction(0))

    def successors(self) -> list[list[int]]:
        """Adjacency as index lists (out-neighbours when directed), sorted."""
        index = {v: i for i, v in enumerate(self.nodes)}
        adj: list[list[int]] = [[] for _ in self.nodes]
        for u, v in self.edges:
            adj[index[u]].append(index[v])
            if not self.directed:
                adj[index[v]].append(index[u])
        for row in adj:
            row.sort()
        return adj

    def symmetrized(self) -> "SocialNetwork":
        """Undirected copy; a pair's weight is the sum of both arc weights."""
        if not self.directed:
            return self
        acc: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
        index = {v: i for i, v in enumerate(self.nodes)}
        for (u, v), w in self.edges.items():
            k = (u, v) if index[u] < index[v] else (v, u)
            acc[k] += w
        return SocialNetwork(False, self.nodes, acc)


def _check_members(members: Iterable[str], roster: TeamRoster) -> None:
    for m in members:
        if m not in roster:
            raise ValueError(f"member {m!r} is not on the roster of team {roster.team_id!r}")


def build_message_network(
    events: Iterable[InteractionEvent],
    roster: TeamRoster,
    channel_policy: ChannelPolicy | str = ChannelPolicy.IGNORE,
) -> SocialNetwork:
    """Directed message network; arc weight counts messages from sender to recipient.

    Non-message events are skipped. A channel message without explicit
    recipients is dropped under ``ignore`` and spread as weight 1/(n-1) to
    every other member under ``clique``.
    """
    policy = ChannelPolicy(channel_policy)
    acc: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    share = Fraction(1, len(roster) - 1)
    for ev in events:
        if ev.kind is not EventKind.MESSAGE:
            continue
        _check_members([ev.actor, *sorted(ev.recipients)], roster)
        if ev.recipients:
            for r in ev.recipients:
                acc[(ev.actor, r)] += 1
        elif policy is ChannelPolicy.CLIQUE:
            for r in roster.members:
                if r != ev.actor:
                    acc[(ev.actor, r)] += share
    return SocialNetwork(True, roster.members, acc)


def _pair_counts(groups: Iterable[set[str]], roster: TeamRoster) -> dict[tuple[str, str], Fraction]:
    acc: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    for group in groups:
        ordered = sorted(group, key=roster.index)
        for u, v in combinations(ordered, 2):
            acc[(u, v)] += 1
    return acc


def build_cochange_network(events: Iterable[InteractionEvent], roster: TeamRoster) -> SocialNetwork:
    """Undirected network; pair weight = number of distinct files both members touched."""
    touched: dict[str, set[str]] = defaultdict(set)
    for ev in events:
        if ev.kind is not EventKind.COMMIT:
            continue
        _check_members([ev.actor], roster)
        for f in ev.files:
            touched[f.path].add(ev.actor)
    return SocialNetwork(False, roster.members, _pair_counts(touched.values(), roster))


def task_groups(events: Iterable[InteractionEvent], roster: TeamRoster) -> list[set[str]]:
    """Member sets per work item from work-log and task-assignment events.

    Events sharing a ``task_id`` pool their members; a work log without a
    task id is its own work item (actor plus co-workers).
    """
    by_task: dict[str, set[str]] = defaultdict(set)
    groups: list[set[str]] = []
    for ev in events:
        if ev.kind not in (EventKind.WORKLOG, EventKind.TASK_ASSIGN):
            continue
        members = {ev.actor} | set(ev.co_workers)
        _check_members(sorted(members), roster)
        if ev.task_id is None:
            groups.append(members)
        else:
            by_task[ev.task_id] |= members
    return [by_task[t] for t in sorted(by_task)] + groups


def build_collaboration_network(events: Iterable[InteractionEvent], roster: TeamRoster) -> SocialNetwork:
    """Undirected network; pair weight = number of work items both members are on."""
    return SocialNetwork(False, roster.members, _pair_counts(task_groups(events, roster), roster))


def merge_networks(nets: Sequence[SocialNetwork], weights: Sequence[Real]) -> SocialNetwork:
    """Weighted sum of symmetrized networks over a shared node set."""
    if not nets:
        raise ValueError("nothing to merge")
    if len(nets) != len(weights):
        raise ValueError(f"{len(nets)} networks but {len(weights)} weights")
    coeffs = [as_fraction(w) for w in weights]
    for c in coeffs:
        if c < 0:
            raise ValueError(f"negative merge weight {c}")
    nodes = nets[0].nodes
    for net in nets[1:]:
        if set(net.nodes) != set(nodes):
            missing = sorted(set(nodes) - set(net.nodes))
            extra = sorted(set(net.nodes) - set(nodes))
            raise ValueError(f"node sets differ: missing {missing}, extra {extra}")
    index = {v: i for i, v in enumerate(nodes)}
    acc: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    for net, c in zip(nets, coeffs):
        if c == 0:
            continue
        for (u, v), w in net.symmetrized().edges.items():
            k = (u, v) if index[u] < index[v] else (v, u)
            acc[k] += c * w
    return SocialNetwork(False, nodes, acc)


def threshold_binary(net: SocialNetwork, min_weight: Real = 1) -> SocialNetwork:
    """Keep edges with weight >= ``min_weight``, each at weight 1."""
    cut = as_fraction(min_weight)
    if cut <= 0:
        raise ValueError("min_weight must be positive")
    return SocialNetwork(net.directed, net.nodes, {k: 1 for k, w in net.edges.items() if w >= cut})
