"""Command-line entry point: ``teamlens <command> ...``."""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from teamlens import __version__
from teamlens.config import Config, ConfigError, load_config
from teamlens.congruence import compute_congruence
from teamlens.ingest import ParseError, read_outcomes, window_events
from teamlens.metrics import transitivity, triad_census_directed, triad_census_undirected
from teamlens.pipeline import analyze_all, build_networks, load_events, split_by_team
from teamlens.report import ReportError, canonical, dumps, export_graph, render_number, write_text_atomic
from teamlens.stats import PairedSeries, pearson, spearman

METRIC_ALIASES = {
    "transitivity": "transitivity",
    "congruence": "congruence.team_score",
    "density": "networks.analysis.density",
    "message_density": "networks.message.density",
    "t0": "triad_census.undirected.proportions.T0",
    "t1": "triad_census.undirected.proportions.T1",
    "t2": "triad_census.undirected.proportions.T2",
    "t3": "triad_census.undirected.proportions.T3",
}
OUTCOMES = ("stories_passed", "story_points_passed", "communication_score")
SOURCES = ("message", "cochange", "collaboration", "merged", "analysis", "communication")


class CliError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return repr(render_number(x))


def _table(header: Sequence[str], rows: list[Sequence], pretty: bool) -> str:
    cells = [list(header)] + [[c if isinstance(c, str) else _fmt(c) for c in row] for row in rows]
    if not pretty:
        return "".join("\t".join(r) + "\n" for r in cells)
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _overrides(args) -> dict:
    out: dict = {}
    if getattr(args, "channel_policy", None):
        out["channel_policy"] = args.channel_policy
    if getattr(args, "min_weight", None) is not None:
        out["min_weight"] = args.min_weight
    if getattr(args, "dependency_rule", None):
        out["dependency_rule"] = args.dependency_rule
    if getattr(args, "coordination_source", None):
        out["coordination_source"] = args.coordination_source
    if getattr(args, "coordination_min_weight", None) is not None:
        out["coordination_min_weight"] = args.coordination_min_weight
    return out


def _config(args) -> Config:
    return load_config(args.config, _overrides(args))


def _load(args, config: Config):
    events_path = Path(args.events)
    if not events_path.is_file():
        raise CliError(f"events file not found: {events_path}")
    events, skipped = load_events(
        events_path,
        config,
        skip_bad_lines=args.skip_bad_lines,
        extra_commit_logs=args.commit_log or (),
    )
    if skipped:
        print(f"teamlens: skipped {len(skipped)} bad line(s)", file=sys.stderr)
        for err in skipped:
            print(f"  {err}", file=sys.stderr)
    return events


def _pick_teams(args, config: Config):
    if args.team:
        return [config.team(args.team)]
    return list(config.teams)


def _sprint_nets(args, config: Config):
    """(roster, sprint events, networks) for every selected team in ``--sprint``."""
    window = config.sprint(args.sprint)
    by_team = split_by_team(_load(args, config), config)
    for roster in _pick_teams(args, config):
        events = window_events(by_team[roster.team_id], [window])[window.label]
        yield roster, events, build_networks(events, roster, config)


def cmd_analyze(args) -> int:
    config = _config(args)
    if args.print_effective_config:
        return _print_config(config)
    events = _load(args, config)
    results = analyze_all(events, config, jobs=args.jobs)

    out_dir = Path(args.out)
    files: dict[Path, str] = {}
    for team_id, (reports, summary) in results.items():
        for rep in reports:
            files[Path(team_id) / f"{rep['sprint_label']}.json"] = dumps(rep)
        files[Path(team_id) / "summary.json"] = dumps(summary)

    # stage everything next to the destination, then move into place
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    try:
        stage = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    except OSError as exc:
        raise ReportError(f"cannot write to {out_dir.parent}: {exc.strerror}") from None
    try:
        for rel, text in files.items():
            (stage / rel).parent.mkdir(parents=True, exist_ok=True)
            write_text_atomic(stage / rel, text)
        for rel in files:
            (out_dir / rel).parent.mkdir(parents=True, exist_ok=True)
            os.replace(stage / rel, out_dir / rel)
    except OSError as exc:
        raise ReportError(f"cannot write reports to {out_dir}: {exc}") from None
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    print(f"wrote {len(files)} report(s) to {out_dir}", file=sys.stderr)
    return 0


def cmd_census(args) -> int:
    config = _config(args)
    if args.print_effective_config:
        return _print_config(config)
    rows = []
    for roster, _, nets in _sprint_nets(args, config):
        if args.directed:
            census = triad_census_directed(nets.message_binary)
        else:
            census = triad_census_undirected(nets.analysis)
        props = census.proportions()
        for label, count in census.counts.items():
            rows.append([roster.team_id, args.sprint, label, count, props[label]])
        if not args.directed:
            rows.append([roster.team_id, args.sprint, "transitivity", None, transitivity(census)])
    sys.stdout.write(_table(["team_id", "sprint", "class", "count", "proportion"], rows, args.pretty))
    return 0


def cmd_congruence(args) -> int:
    config = _config(args)
    if args.print_effective_config:
        return _print_config(config)
    rows = []
    for roster, events, nets in _sprint_nets(args, config):
        mats, result = compute_congruence(
            events, nets.communication, roster, config.dependency_rule, config.coordination_min_weight
        )
        needed = (mats.requirements > 0).sum(axis=1)
        met = ((mats.requirements > 0) & (mats.actual > 0)).sum(axis=1)
        n_pairs = len(result.requirement_weights)
        rows.append(
            [roster.team_id, args.sprint, "__team__", result.team_score,
             n_pairs, n_pairs - len(result.unmet_pairs)]
        )
        for i, m in enumerate(roster.members):
            rows.append([roster.team_id, args.sprint, m, result.member_scores[m], int(needed[i]), int(met[i])])
    header = ["team_id", "sprint", "member", "score", "needed", "met"]
    sys.stdout.write(_table(header, rows, args.pretty))
    return 0


def _lookup(doc: dict, path: str):
    cur = doc
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            raise CliError(f"metric path {path!r} not found in report")
        cur = cur[part]
    if cur is not None and (isinstance(cur, bool) or not isinstance(cur, (int, float))):
        raise CliError(f"metric path {path!r} is not numeric")
    return cur


def load_reports(reports_dir: Path) -> list[dict]:
    if not reports_dir.is_dir():
        raise CliError(f"reports directory not found: {reports_dir}")
    reports = []
    for path in sorted(reports_dir.rglob("*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(doc, dict) and "sprint_label" in doc:
            reports.append(doc)
    return reports


def cmd_correlate(args) -> int:
    if args.outcome not in OUTCOMES:
        raise CliError(f"unknown outcome {args.outcome!r}; choose from {', '.join(OUTCOMES)}")
    path = METRIC_ALIASES.get(args.metric, args.metric)
    try:
        outcomes_text = Path(args.outcomes).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read outcomes {args.outcomes}: {exc.strerror}") from None
    outcomes = {(o.team_id, o.sprint_label): o for o in read_outcomes(outcomes_text)}

    xs, ys, labels = [], [], []
    for rep in load_reports(Path(args.reports)):
        key = (rep["team_id"], rep["sprint_label"])
        if key not in outcomes:
            continue
        xs.append(_lookup(rep, path))
        ys.append(getattr(outcomes[key], args.outcome))
        labels.append(key)
    series = PairedSeries.from_pairs(xs, ys, labels)
    if series.n < 2:
        raise CliError(f"only {series.n} paired value(s); need at least 2")
    fn = spearman if args.method == "spearman" else pearson
    coef = fn(series)
    header = ["metric", "outcome", "method", "coefficient", "n", "n_dropped"]
    row = [args.metric, args.outcome, args.method, coef, series.n, series.n_dropped]
    sys.stdout.write(_table(header, [row], args.pretty))
    return 0


def cmd_export_dot(args) -> int:
    config = _config(args)
    if args.print_effective_config:
        return _print_config(config)
    teams = _pick_teams(args, config)
    if len(teams) != 1:
        raise CliError("export-dot needs --team when the config has several teams")
    args.team = teams[0].team_id
    for roster, _, nets in _sprint_nets(args, config):
        sys.stdout.write(export_graph(nets.get(args.source), name=f"{roster.team_id}/{args.sprint}/{args.source}"))
    return 0


def _print_config(config: Config) -> int:
    sys.stdout.write(json.dumps(canonical(config.to_dict()), sort_keys=True, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teamlens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"teamlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, sprint=False, out=False):
        p.add_argument("--events", required=True, help="event-line file (one JSON object per line)")
        p.add_argument("--config", help="YAML config (default: $TEAMLENS_CONFIG)")
        p.add_argument("--commit-log", action="append", help="extra numstat commit log (repeatable)")
        p.add_argument("--skip-bad-lines", action="store_true", help="skip and count unparseable lines")
        p.add_argument("--print-effective-config", action="store_true")
        p.add_argument("--channel-policy", choices=["ignore", "clique"])
        p.add_argument("--min-weight", type=float, help="edge threshold for binary metrics")
        p.add_argument("--dependency-rule", choices=["same_file_only", "cocommit"])
        p.add_argument("--coordination-source", choices=["message", "collaboration", "communication"])
        p.add_argument("--coordination-min-weight", type=float)
        p.add_argument("--jobs", type=int, default=1, help="worker processes for per-sprint analysis")
        p.add_argument("--pretty", action="store_true", help="aligned tables instead of TSV")
        if sprint:
            p.add_argument("--sprint", required=True, help="sprint label")
            p.add_argument("--team", help="restrict to one team")
        if out:
            p.add_argument("--out", required=True, help="output directory for reports")

    p = sub.add_parser("analyze", help="write per-sprint reports and team summaries")
    common(p, out=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("census", help="triad census table for one sprint")
    common(p, sprint=True)
    p.add_argument("--directed", action="store_true", help="16-class census of the message network")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("congruence", help="socio-technical congruence for one sprint")
    common(p, sprint=True)
    p.set_defaults(func=cmd_congruence)

    p = sub.add_parser("export-dot", help="DOT graph of one sprint network")
    common(p, sprint=True)
    p.add_argument("--source", choices=SOURCES, default="merged")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("correlate", help="rank correlation of a report metric against an outcome")
    p.add_argument("--reports", "--out", dest="reports", required=True, help="directory written by analyze")
    p.add_argument("--outcomes", required=True, help="outcomes CSV")
    p.add_argument("--metric", required=True, help="alias or dotted path into the sprint report")
    p.add_argument("--outcome", required=True, choices=OUTCOMES)
    p.add_argument("--method", choices=["spearman", "pearson"], default="spearman")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (CliError, ConfigError, ParseError, ReportError, ValueError, OSError) as exc:
        print(f"teamlens: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
