"""Socio-technical congruence.

Coordination needs come from shared or co-committed files
(``CR = T_A . T_D . T_A^T``); actual coordination is the thresholded
communication network. Congruence is the share of needed pairs that
actually communicate, for the team and per member.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

from teamlens.graph import SocialNetwork, as_fraction
from teamlens.ingest import EventKind, InteractionEvent, TeamRoster


class DependencyRule(str, enum.Enum):
    SAME_FILE_ONLY = "same_file_only"
    CO_COMMIT = "cocommit"


@dataclass(frozen=True)
class CongruenceMatrices:
    members: tuple[str, ...]
    files: tuple[str, ...]
    assignment: np.ndarray  # T_A, m x f
    dependency: np.ndarray  # T_D, f x f
    requirements: np.ndarray  # CR, m x m
    actual: np.ndarray  # A, m x m


@dataclass(frozen=True)
class CongruenceResult:
    members: tuple[str, ...]
    team_score: Fraction | None
    member_scores: dict[str, Fraction | None]
    unmet_pairs: tuple[tuple[str, str], ...]
    # CR magnitude for every pair with a coordination need
    requirement_weights: dict[tuple[str, str], int]


def _commits(events: Iterable[InteractionEvent]) -> list[InteractionEvent]:
    return [ev for ev in events if ev.kind is EventKind.COMMIT]


def file_universe(events: Iterable[InteractionEvent]) -> tuple[str, ...]:
    return tuple(sorted({f.path for ev in _commits(events) for f in ev.files}))


def assignment_matrix(
    events: Iterable[InteractionEvent],
    roster: TeamRoster,
    files: Sequence[str] | None = None,
) -> np.ndarray:
    events = _commits(events)
    if files is None:
        files = file_universe(events)
    col = {p: k for k, p in enumerate(files)}
    ta = np.zeros((len(roster), len(files)), dtype=np.int64)
    for ev in events:
        if ev.actor not in roster:
            raise ValueError(f"member {ev.actor!r} is not on the roster of team {roster.team_id!r}")
        i = roster.index(ev.actor)
        for f in ev.files:
            ta[i, col[f.path]] = 1
    return ta


def dependency_matrix(
    events: Iterable[InteractionEvent],
    files: Sequence[str],
    rule: DependencyRule | str = DependencyRule.CO_COMMIT,
) -> np.ndarray:
    rule = DependencyRule(rule)
    td = np.eye(len(files), dtype=np.int64)
    if rule is DependencyRule.CO_COMMIT:
        col = {p: k for k, p in enumerate(files)}
        for ev in _commits(events):
            idx = sorted({col[f.path] for f in ev.files})
            for k, l in combinations(idx, 2):
                td[k, l] = td[l, k] = 1
    return td


def coordination_requirements(assignment: np.ndarray, dependency: np.ndarray) -> np.ndarray:
    assignment = np.asarray(assignment, dtype=np.int64)
    dependency = np.asarray(dependency, dtype=np.int64)
    if assignment.ndim != 2 or dependency.shape != (assignment.shape[1], assignment.shape[1]):
        raise ValueError(
            f"dimension mismatch: assignment {assignment.shape}, dependency {dependency.shape}"
        )
    cr = assignment @ dependency @ assignment.T
    np.fill_diagonal(cr, 0)
    return cr


def actual_coordination(net: SocialNetwork, roster: TeamRoster, min_weight: Real = 1) -> np.ndarray:
    if set(net.nodes) != set(roster.members):
        raise ValueError(f"network nodes do not match the roster of team {roster.team_id!r}")
    cut = as_fraction(min_weight)
    if cut <= 0:
        raise ValueError("min_weight must be positive")
    m = len(roster)
    a = np.zeros((m, m), dtype=np.int64)
    for (u, v), w in net.symmetrized().edges.items():
        if w >= cut:
            i, j = roster.index(u), roster.index(v)
            a[i, j] = a[j, i] = 1
    return a


def congruence(cr: np.ndarray, actual: np.ndarray, members: Sequence[str]) -> CongruenceResult:
    cr = np.asarray(cr)
    actual = np.asarray(actual)
    m = len(members)
    if cr.shape != (m, m) or actual.shape != (m, m):
        raise ValueError(f"dimension mismatch: CR {cr.shape}, A {actual.shape}, {m} members")
    need = cr > 0
    met = need & (actual > 0)

    needed_pairs = met_pairs = 0
    unmet = []
    weights = {}
    for i, j in combinations(range(m), 2):
        if need[i, j] or need[j, i]:
            needed_pairs += 1
            weights[(members[i], members[j])] = int(max(cr[i, j], cr[j, i]))
            if actual[i, j] or actual[j, i]:
                met_pairs += 1
            else:
                unmet.append((members[i], members[j]))

    scores: dict[str, Fraction | None] = {}
    for i, name in enumerate(members):
        partners = int(need[i].sum())
        scores[name] = Fraction(int(met[i].sum()), partners) if partners else None
    team = Fraction(met_pairs, needed_pairs) if needed_pairs else None
    return CongruenceResult(tuple(members), team, scores, tuple(unmet), weights)


def compute_congruence(
    events: Sequence[InteractionEvent],
    communication: SocialNetwork,
    roster: TeamRoster,
    rule: DependencyRule | str = DependencyRule.CO_COMMIT,
    min_weight: Real = 1,
) -> tuple[CongruenceMatrices, CongruenceResult]:
    """Run the whole chain for one sprint's events and communication network."""
    files = file_universe(events)
    ta = assignment_matrix(events, roster, files)
    td = dependency_matrix(events, files, rule)
    cr = coordination_requirements(ta, td)
    a = actual_coordination(communication, roster, min_weight)
    mats = CongruenceMatrices(roster.members, files, ta, td, cr, a)
    return mats, congruence(cr, a, roster.members)


def congruence_trend(series: Iterable[tuple[int, Real | None]]) -> float | None:
    """Least-squares slope of score against sprint index.

    Points with an undefined score are skipped. Returns ``None`` with fewer
    than two points or when every index is the same. Computed in exact
    rational arithmetic, so a constant series gives exactly 0.
    """
    pts = [(Fraction(x), Fraction(y)) for x, y in series if y is not None]
    if len(pts) < 2:
        return None
    n = len(pts)
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    if sxx == 0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    return float(sxy / sxx)
