"""Communication anti-pattern detection and the recommendation table.

Thresholds are heuristics with overridable defaults. The recommendation
table is policy ``v0``.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from teamlens.congruence import CongruenceResult
from teamlens.graph import SocialNetwork, build_cochange_network, build_collaboration_network
from teamlens.ingest import InteractionEvent, TeamRoster
from teamlens.metrics import CentralityScores, TriadCensus

POLICY_VERSION = "v0"
RECOMMEND_CAP = 3


class DiagnosticKind(str, enum.Enum):
    COMMUNICATION_BROKER = "CommunicationBroker"
    FRAGMENTED_TEAM = "FragmentedTeam"
    PAIR_DOMINATED = "PairDominated"
    UNMET_COORDINATION = "UnmetCoordination"
    PAIRING_GAP = "PairingGap"


class Action(str, enum.Enum):
    COORDINATE_DIRECTLY = "CoordinateDirectly"
    ROTATE_PAIR_PROGRAMMING = "RotatePairProgramming"
    REBALANCE_TASKS = "RebalanceTasks"
    SHARE_KNOWLEDGE_SESSION = "ShareKnowledgeSession"


_ACTION_ORDER = {a: i for i, a in enumerate(Action)}


@dataclass(frozen=True)
class Diagnostic:
    """A detected anti-pattern.

    ``subjects`` holds member ids (brokers, whole team) or member pairs
    (unmet coordination, pairing gaps). ``related_pairs`` is only filled
    for brokers: pairs of the broker's contacts that are not tied to each
    other, i.e. communication the broker mediates.
    """

    kind: DiagnosticKind
    subjects: tuple
    severity: float
    evidence: dict[str, float]
    related_pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.subjects:
            raise ValueError("diagnostic needs at least one subject")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"severity {self.severity} outside [0, 1]")

    @property
    def id(self) -> str:
        parts = ["-".join(s) if isinstance(s, tuple) else s for s in self.subjects]
        return f"{self.kind.value}:{','.join(parts)}"


@dataclass(frozen=True)
class Recommendation:
    action: Action
    subjects: tuple[str, ...]
    rationale: str
    sources: tuple[str, ...] = field(default=())
    severity: float = 0.0


def _pair(u: str, v: str, order: dict[str, int]) -> tuple[str, str]:
    return (u, v) if order[u] < order[v] else (v, u)


def mediated_pairs(net: SocialNetwork, member: str) -> tuple[tuple[str, str], ...]:
    """Pairs of ``member``'s contacts that have no tie between themselves."""
    und = net.symmetrized()
    nbrs = [v for v in und.nodes if v != member and und.weight(member, v) > 0]
    return tuple((u, v) for u, v in combinations(nbrs, 2) if und.weight(u, v) == 0)


def detect_brokers(
    scores: CentralityScores,
    ratio_threshold: float = 2.0,
    floor: float = 0.2,
    net: SocialNetwork | None = None,
) -> list[Diagnostic]:
    """Flag members whose normalized betweenness is both above ``floor`` and
    at least ``ratio_threshold`` times the team mean.

    Passing the (binary) network the scores came from fills in each
    broker's mediated pairs for the recommendation step.
    """
    if scores.metric != "betweenness" or not scores.normalized:
        raise ValueError("detect_brokers expects normalized betweenness scores")
    if ratio_threshold <= 1:
        raise ValueError("ratio_threshold must exceed 1")
    mean = scores.mean()
    found = []
    for member, score in scores.scores.items():
        if score > 0 and score >= floor and score >= ratio_threshold * mean:
            found.append(
                Diagnostic(
                    DiagnosticKind.COMMUNICATION_BROKER,
                    (member,),
                    min(1.0, score),
                    {"betweenness": score, "team_mean": mean, "ratio": score / mean},
                    mediated_pairs(net, member) if net is not None else (),
                )
            )
    return found


def detect_fragmentation(
    census: TriadCensus,
    zero_edge_threshold: float = 0.5,
    pair_threshold: float = 0.6,
    members: Sequence[str] = (),
) -> list[Diagnostic]:
    """Flag empty-triad dominance (fragmentation) and pair-only structure."""
    if census.directed:
        raise ValueError("fragmentation rules use the undirected census")
    total = census.total
    if total == 0:
        return []
    p = {k: c / total for k, c in census.counts.items()}
    subjects = tuple(members) or ("__team__",)
    found = []
    if p["T0"] >= zero_edge_threshold:
        found.append(Diagnostic(DiagnosticKind.FRAGMENTED_TEAM, subjects, p["T0"], dict(p)))
    pairish = p["T1"] + p["T2"]
    if pairish >= pair_threshold and p["T3"] < 0.1:
        found.append(Diagnostic(DiagnosticKind.PAIR_DOMINATED, subjects, pairish, dict(p)))
    return found


def detect_unmet_coordination(result: CongruenceResult) -> list[Diagnostic]:
    if not result.unmet_pairs:
        return []
    top = max(result.requirement_weights[p] for p in result.unmet_pairs)
    return [
        Diagnostic(
            DiagnosticKind.UNMET_COORDINATION,
            (pair,),
            result.requirement_weights[pair] / top,
            {"coordination_requirement": result.requirement_weights[pair], "max_requirement": top},
        )
        for pair in result.unmet_pairs
    ]


def pairing_coverage(events: Sequence[InteractionEvent], roster: TeamRoster) -> list[Diagnostic]:
    """Report roster pairs that never shared a work item or a file."""
    covered = set(build_collaboration_network(events, roster).edges)
    covered |= set(build_cochange_network(events, roster).edges)
    gaps = tuple(p for p in combinations(roster.members, 2) if p not in covered)
    if not gaps:
        return []
    total = comb(len(roster), 2)
    return [
        Diagnostic(
            DiagnosticKind.PAIRING_GAP,
            gaps,
            len(gaps) / total,
            {"gap_pairs": len(gaps), "total_pairs": total},
        )
    ]


def _rationale(diag: Diagnostic) -> str:
    return f"{diag.id} (severity {diag.severity:.3f})"


def recommend(diagnostics: Iterable[Diagnostic], roster: TeamRoster) -> list[Recommendation]:
    """Map diagnostics to actions with the ``v0`` rule table.

    * UnmetCoordination -> CoordinateDirectly for the pair.
    * PairingGap -> RotatePairProgramming for at most 3 gap pairs, picking
      pairs whose members appear in the most gaps.
    * CommunicationBroker -> RebalanceTasks for the broker plus
      CoordinateDirectly for up to 3 pairs that do not involve the broker:
      unmet pairs first (by severity), then mediated pairs.
    * FragmentedTeam / PairDominated -> ShareKnowledgeSession for the team.

    The same action on the same subjects is emitted once and lists every
    diagnostic that asked for it. Output is sorted by descending severity,
    then roster order.
    """
    diagnostics = list(diagnostics)
    order = {m: i for i, m in enumerate(roster.members)}
    by_key: dict[tuple[Action, tuple[str, ...]], dict] = {}

    def add(action: Action, subjects: tuple[str, ...], diag: Diagnostic) -> None:
        entry = by_key.setdefault(
            (action, subjects), {"sources": [], "rationales": [], "severity": 0.0}
        )
        if diag.id not in entry["sources"]:
            entry["sources"].append(diag.id)
            entry["rationales"].append(_rationale(diag))
            entry["severity"] = max(entry["severity"], diag.severity)

    def roster_key(subjects) -> tuple[int, ...]:
        return tuple(order[s] for s in subjects)

    unmet = sorted(
        (d for d in diagnostics if d.kind is DiagnosticKind.UNMET_COORDINATION),
        key=lambda d: (-d.severity, roster_key(d.subjects[0])),
    )
    for diag in sorted(diagnostics, key=lambda d: (-d.severity, d.kind.value, d.id)):
        if diag.kind is DiagnosticKind.UNMET_COORDINATION:
            add(Action.COORDINATE_DIRECTLY, diag.subjects[0], diag)
        elif diag.kind is DiagnosticKind.PAIRING_GAP:
            load = Counter(m for pair in diag.subjects for m in pair)
            ranked = sorted(
                diag.subjects,
                key=lambda p: (-(load[p[0]] + load[p[1]]), roster_key(p)),
            )
            for pair in ranked[:RECOMMEND_CAP]:
                add(Action.ROTATE_PAIR_PROGRAMMING, pair, diag)
        elif diag.kind is DiagnosticKind.COMMUNICATION_BROKER:
            broker = diag.subjects[0]
            add(Action.REBALANCE_TASKS, (broker,), diag)
            candidates: list[tuple[str, str]] = []
            for d in unmet:
                candidates.append(d.subjects[0])
            candidates.extend(sorted(diag.related_pairs, key=roster_key))
            picked: list[tuple[str, str]] = []
            for pair in candidates:
                pair = _pair(pair[0], pair[1], order)
                if broker in pair or pair in picked:
                    continue
                picked.append(pair)
                if len(picked) == RECOMMEND_CAP:
                    break
            for pair in picked:
                add(Action.COORDINATE_DIRECTLY, pair, diag)
        else:
            add(Action.SHARE_KNOWLEDGE_SESSION, roster.members, diag)

    recs = [
        Recommendation(
            action,
            subjects,
            "; ".join(entry["rationales"]),
            tuple(entry["sources"]),
            entry["severity"],
        )
        for (action, subjects), entry in by_key.items()
    ]
    recs.sort(key=lambda r: (-r.severity, roster_key(r.subjects), _ACTION_ORDER[r.action]))
    return recs
