"""End-to-end analysis of one team over its sprint windows."""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from teamlens import __version__
from teamlens.config import Config
from teamlens.congruence import CongruenceResult, compute_congruence, congruence_trend
from teamlens.diagnostics import (
    Diagnostic,
    Recommendation,
    detect_brokers,
    detect_fragmentation,
    detect_unmet_coordination,
    pairing_coverage,
    recommend,
)
from teamlens.graph import (
    SocialNetwork,
    build_collaboration_network,
    build_cochange_network,
    build_message_network,
    merge_networks,
    threshold_binary,
)
from teamlens.ingest import (
    UNASSIGNED,
    EventKind,
    InteractionEvent,
    ParseError,
    SprintWindow,
    TeamRoster,
    format_timestamp,
    parse_commit_log,
    parse_events,
    window_events,
)
from teamlens.metrics import (
    TriadCensus,
    betweenness_centrality,
    degree_centrality,
    density,
    transitivity,
    triad_census_directed,
    triad_census_undirected,
)
from teamlens.report import SCHEMA_VERSION


@dataclass(frozen=True)
class SprintNetworks:
    message: SocialNetwork
    cochange: SocialNetwork
    collaboration: SocialNetwork
    merged: SocialNetwork
    analysis: SocialNetwork  # merged, thresholded to binary
    message_binary: SocialNetwork
    communication: SocialNetwork  # the network congruence checks against

    def get(self, source: str) -> SocialNetwork:
        return getattr(self, source)


def load_events(
    events_path: str | Path,
    config: Config,
    *,
    skip_bad_lines: bool = False,
    extra_commit_logs: Sequence[str | Path] = (),
) -> tuple[list[InteractionEvent], list[ParseError]]:
    """Read the event file plus every configured commit log."""
    skipped: list[ParseError] = []
    with open(events_path, encoding="utf-8") as fh:
        events = parse_events(fh, skip_bad_lines=skip_bad_lines, skipped=skipped)
    for path in [*config.commit_log_paths(), *map(Path, extra_commit_logs)]:
        with open(path, encoding="utf-8") as fh:
            try:
                events += parse_commit_log(
                    fh, config.aliases, skip_bad_lines=skip_bad_lines, skipped=skipped
                )
            except ParseError as exc:
                raise ParseError(f"{path}: {exc}") from None
    events.sort(key=lambda ev: ev.timestamp)  # stable: ties keep file order
    return events, skipped


def split_by_team(events: Sequence[InteractionEvent], config: Config) -> dict[str, list[InteractionEvent]]:
    """Assign each event to the team of its actor; every named member must be on that team."""
    owner = config.team_of()
    out: dict[str, list[InteractionEvent]] = {t.team_id: [] for t in config.teams}
    for ev in events:
        team = owner.get(ev.actor)
        if team is None:
            raise ParseError(f"member {ev.actor!r} is not on any configured team")
        for m in sorted(ev.members()):
            if owner.get(m) != team:
                raise ParseError(
                    f"event by {ev.actor!r} ({team}) names {m!r}, who is not on that team"
                )
        out[team].append(ev)
    return out


def build_networks(events: Sequence[InteractionEvent], roster: TeamRoster, config: Config) -> SprintNetworks:
    message = build_message_network(events, roster, config.channel_policy)
    cochange = build_cochange_network(events, roster)
    collab = build_collaboration_network(events, roster)
    w = config.merge_weights
    merged = merge_networks(
        [message, cochange, collab], [w["message"], w["cochange"], w["collaboration"]]
    )
    if config.coordination_source == "message":
        comm = message
    elif config.coordination_source == "collaboration":
        comm = collab
    else:
        comm = merge_networks([message, collab], [1, 1])
    return SprintNetworks(
        message=message,
        cochange=cochange,
        collaboration=collab,
        merged=merged,
        analysis=threshold_binary(merged, config.min_weight),
        message_binary=threshold_binary(message, config.min_weight),
        communication=comm,
    )


def _net_summary(net: SocialNetwork) -> dict:
    return {
        "directed": net.directed,
        "nodes": net.n,
        "edges": len(net.edges),
        "density": density(net),
        "total_weight": net.total_weight(),
    }


def _census_doc(census: TriadCensus | None) -> dict | None:
    if census is None:
        return None
    return {"counts": dict(census.counts), "proportions": census.proportions(), "total": census.total}


def _diag_doc(d: Diagnostic) -> dict:
    return {
        "id": d.id,
        "kind": d.kind.value,
        "subjects": [list(s) if isinstance(s, tuple) else s for s in d.subjects],
        "severity": d.severity,
        "evidence": dict(d.evidence),
        "related_pairs": [list(p) for p in d.related_pairs],
    }


def _rec_doc(r: Recommendation) -> dict:
    return {
        "action": r.action.value,
        "subjects": list(r.subjects),
        "rationale": r.rationale,
        "sources": list(r.sources),
        "severity": r.severity,
    }


def _congruence_doc(result: CongruenceResult, n_files: int, config: Config) -> dict:
    return {
        "team_score": result.team_score,
        "member_scores": dict(result.member_scores),
        "unmet_pairs": [list(p) for p in result.unmet_pairs],
        "coordination_pairs": [[a, b, w] for (a, b), w in result.requirement_weights.items()],
        "files": n_files,
        "dependency_rule": config.dependency_rule.value,
        "coordination_source": config.coordination_source,
        "min_weight": config.coordination_min_weight,
    }


def sprint_diagnostics(
    events: Sequence[InteractionEvent],
    roster: TeamRoster,
    nets: SprintNetworks,
    congruence: CongruenceResult,
    config: Config,
) -> tuple[list[Diagnostic], list[Recommendation]]:
    diags: list[Diagnostic] = []
    if roster_size_ok(roster):
        btw = betweenness_centrality(nets.analysis, normalized=True)
        diags += detect_brokers(btw, config.broker_ratio, config.broker_floor, nets.analysis)
        diags += detect_fragmentation(
            triad_census_undirected(nets.analysis),
            config.zero_edge_threshold,
            config.pair_threshold,
            roster.members,
        )
    diags += detect_unmet_coordination(congruence)
    diags += pairing_coverage(events, roster)
    return diags, recommend(diags, roster)


def roster_size_ok(roster: TeamRoster) -> bool:
    """Triad census and normalized betweenness need three members."""
    return len(roster) >= 3


def analyze_sprint(
    events: Sequence[InteractionEvent], roster: TeamRoster, window: SprintWindow, config: Config
) -> dict:
    """Build the sprint report document for one team and window."""
    nets = build_networks(events, roster, config)
    mats, cong = compute_congruence(
        events, nets.communication, roster, config.dependency_rule, config.coordination_min_weight
    )
    diags, recs = sprint_diagnostics(events, roster, nets, cong, config)

    kinds = Counter(ev.kind for ev in events)
    census_u = census_d = None
    betweenness = None
    if roster_size_ok(roster):
        census_u = triad_census_undirected(nets.analysis)
        census_d = triad_census_directed(nets.message_binary)
        betweenness = betweenness_centrality(nets.analysis, normalized=True).scores

    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config_fingerprint": config.fingerprint(),
        "team_id": roster.team_id,
        "sprint_label": window.label,
        "window": {"start": format_timestamp(window.start), "end": format_timestamp(window.end)},
        "members": list(roster.members),
        "events": {
            **{k.value: kinds.get(k, 0) for k in EventKind},
            "total": len(events),
        },
        "networks": {
            "message": _net_summary(nets.message),
            "cochange": _net_summary(nets.cochange),
            "collaboration": _net_summary(nets.collaboration),
            "merged": _net_summary(nets.merged),
            "analysis": {**_net_summary(nets.analysis), "min_weight": config.min_weight},
        },
        "centrality": {
            "degree": degree_centrality(nets.analysis, normalized=True).scores,
            "betweenness": betweenness,
        },
        "triad_census": {"undirected": _census_doc(census_u), "directed": _census_doc(census_d)},
        "transitivity": transitivity(census_u) if census_u is not None else None,
        "congruence": _congruence_doc(cong, len(mats.files), config),
        "diagnostics": [_diag_doc(d) for d in diags],
        "recommendations": [_rec_doc(r) for r in recs],
    }


def team_summary(roster: TeamRoster, reports: Sequence[dict], config: Config, unassigned: int) -> dict:
    """Per-team rollup across sprints, including congruence trends."""
    team_series = [(i, r["congruence"]["team_score"]) for i, r in enumerate(reports, start=1)]
    member_trend = {
        m: congruence_trend(
            (i, r["congruence"]["member_scores"][m]) for i, r in enumerate(reports, start=1)
        )
        for m in roster.members
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config_fingerprint": config.fingerprint(),
        "team_id": roster.team_id,
        "members": list(roster.members),
        "sprints": [r["sprint_label"] for r in reports],
        "unassigned_events": unassigned,
        "series": {
            "events": [r["events"]["total"] for r in reports],
            "density": [r["networks"]["analysis"]["density"] for r in reports],
            "transitivity": [r["transitivity"] for r in reports],
            "congruence": [s for _, s in team_series],
            "diagnostics": [len(r["diagnostics"]) for r in reports],
        },
        "congruence_trend": congruence_trend(team_series),
        "member_congruence_trend": member_trend,
    }


def _sprint_job(args) -> dict:
    events, roster, window, config = args
    return analyze_sprint(events, roster, window, config)


def analyze_all(
    events: Sequence[InteractionEvent], config: Config, jobs: int = 1
) -> dict[str, tuple[list[dict], dict]]:
    """Reports for every team and sprint, plus each team's summary.

    With ``jobs > 1`` sprints are computed in worker processes; results are
    gathered in (team, sprint) order so output does not depend on ``jobs``.
    """
    by_team = split_by_team(events, config)
    tasks = []
    unassigned = {}
    for roster in config.teams:
        buckets = window_events(by_team[roster.team_id], config.sprints)
        unassigned[roster.team_id] = len(buckets[UNASSIGNED])
        for w in config.sprints:
            tasks.append((buckets[w.label], roster, w, config))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_sprint_job, tasks))
    else:
        results = [_sprint_job(t) for t in tasks]

    out = {}
    per_team = len(config.sprints)
    for k, roster in enumerate(config.teams):
        reports = results[k * per_team : (k + 1) * per_team]
        out[roster.team_id] = (reports, team_summary(roster, reports, config, unassigned[roster.team_id]))
    return out
