"""Analysis configuration: YAML file + command-line overrides + defaults."""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import yaml

from teamlens.congruence import DependencyRule
from teamlens.diagnostics import POLICY_VERSION
from teamlens.graph import ChannelPolicy, as_fraction
from teamlens.ingest import SprintWindow, TeamRoster, check_windows, format_timestamp, parse_timestamp

CONFIG_ENV = "TEAMLENS_CONFIG"
SOURCES = ("message", "cochange", "collaboration")
COORDINATION_SOURCES = ("message", "collaboration", "communication")

DEFAULTS: dict[str, Any] = {
    "aliases": {},
    "commit_logs": [],
    "channel_policy": "ignore",
    "merge_weights": {"message": 1, "cochange": 1, "collaboration": 1},
    "min_weight": 1,
    "dependency_rule": "cocommit",
    "coordination_source": "message",
    "coordination_min_weight": 1,
    "diagnostics": {
        "broker_ratio": 2.0,
        "broker_floor": 0.2,
        "zero_edge_threshold": 0.5,
        "pair_threshold": 0.6,
    },
    "policy": POLICY_VERSION,
}


class ConfigError(ValueError):
    pass


class _Loader(yaml.SafeLoader):
    """Safe loader that leaves timestamps as strings so zones are never lost."""


_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:timestamp"]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}


@dataclass(frozen=True)
class Config:
    teams: tuple[TeamRoster, ...]
    sprints: tuple[SprintWindow, ...]
    aliases: dict[str, str]
    commit_logs: tuple[str, ...]
    channel_policy: ChannelPolicy
    merge_weights: dict[str, Fraction]
    min_weight: Fraction
    dependency_rule: DependencyRule
    coordination_source: str
    coordination_min_weight: Fraction
    broker_ratio: float
    broker_floor: float
    zero_edge_threshold: float
    pair_threshold: float
    policy: str
    base_dir: Path = Path(".")

    def team(self, team_id: str) -> TeamRoster:
        for t in self.teams:
            if t.team_id == team_id:
                return t
        raise ConfigError(f"unknown team {team_id!r}")

    def sprint(self, label: str) -> SprintWindow:
        for w in self.sprints:
            if w.label == label:
                return w
        raise ConfigError(f"unknown sprint {label!r}")

    def team_of(self) -> dict[str, str]:
        return {m: t.team_id for t in self.teams for m in t.members}

    def commit_log_paths(self) -> list[Path]:
        return [self.base_dir / p for p in self.commit_logs]

    def to_dict(self) -> dict:
        """Effective configuration as plain data (paths left as written)."""
        return {
            "teams": {t.team_id: {"members": list(t.members)} for t in self.teams},
            "sprints": [
                {"label": w.label, "start": format_timestamp(w.start), "end": format_timestamp(w.end)}
                for w in self.sprints
            ],
            "aliases": dict(sorted(self.aliases.items())),
            "commit_logs": list(self.commit_logs),
            "channel_policy": self.channel_policy.value,
            "merge_weights": {k: _num(v) for k, v in self.merge_weights.items()},
            "min_weight": _num(self.min_weight),
            "dependency_rule": self.dependency_rule.value,
            "coordination_source": self.coordination_source,
            "coordination_min_weight": _num(self.coordination_min_weight),
            "diagnostics": {
                "broker_ratio": self.broker_ratio,
                "broker_floor": self.broker_floor,
                "zero_edge_threshold": self.zero_edge_threshold,
                "pair_threshold": self.pair_threshold,
            },
            "policy": self.policy,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _num(x: Fraction) -> int | float:
    return int(x) if x.denominator == 1 else float(x)


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _float_in(raw: Mapping, key: str, lo: float, hi: float, *, lo_open=False) -> float:
    try:
        v = float(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(f"diagnostics.{key} must be a number") from None
    if v > hi or v < lo or (lo_open and v == lo):
        bracket = "(" if lo_open else "["
        raise ConfigError(f"diagnostics.{key}={v} outside {bracket}{lo}, {hi}]")
    return v


def _positive(value, name: str) -> Fraction:
    try:
        v = as_fraction(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number") from None
    if v <= 0:
        raise ConfigError(f"{name} must be positive")
    return v


def build_config(raw: Mapping, overrides: Mapping | None = None, base_dir: Path = Path(".")) -> Config:
    """Validate a raw mapping; precedence is overrides > raw > defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")
    data = _merge(_merge(DEFAULTS, raw), overrides or {})
    unknown = set(data) - set(DEFAULTS) - {"teams", "sprints"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    teams_raw = data.get("teams")
    if not isinstance(teams_raw, Mapping) or not teams_raw:
        raise ConfigError("config needs a non-empty 'teams' mapping")
    teams = []
    owner: dict[str, str] = {}
    for team_id, body in teams_raw.items():
        members = body.get("members") if isinstance(body, Mapping) else body
        if not isinstance(members, list):
            raise ConfigError(f"team {team_id!r}: members must be a list")
        try:
            roster = TeamRoster(str(team_id), tuple(str(m) for m in members))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for m in roster.members:
            if m in owner:
                raise ConfigError(f"member {m!r} is on both {owner[m]!r} and {roster.team_id!r}")
            owner[m] = roster.team_id
        teams.append(roster)

    sprints_raw = data.get("sprints")
    if not isinstance(sprints_raw, list) or not sprints_raw:
        raise ConfigError("config needs a non-empty 'sprints' list")
    sprints = []
    try:
        for s in sprints_raw:
            sprints.append(
                SprintWindow(str(s["label"]), parse_timestamp(str(s["start"])), parse_timestamp(str(s["end"])))
            )
        check_windows(sprints)
    except (KeyError, TypeError):
        raise ConfigError("each sprint needs label, start and end") from None
    except ValueError as exc:
        raise ConfigError(f"sprints: {exc}") from None

    aliases = data["aliases"]
    if not isinstance(aliases, Mapping):
        raise ConfigError("aliases must be a mapping alias -> member")
    aliases = {str(k): str(v) for k, v in aliases.items()}
    for alias, member in aliases.items():
        if member not in owner:
            raise ConfigError(f"alias {alias!r} maps to unknown member {member!r}")

    logs = data["commit_logs"]
    if isinstance(logs, str):
        logs = [logs]
    if not isinstance(logs, list):
        raise ConfigError("commit_logs must be a list of paths")

    try:
        channel_policy = ChannelPolicy(data["channel_policy"])
    except ValueError:
        raise ConfigError(f"channel_policy must be one of {[p.value for p in ChannelPolicy]}") from None
    try:
        rule = DependencyRule(data["dependency_rule"])
    except ValueError:
        raise ConfigError(f"dependency_rule must be one of {[r.value for r in DependencyRule]}") from None

    mw = data["merge_weights"]
    if not isinstance(mw, Mapping) or set(mw) - set(SOURCES):
        raise ConfigError(f"merge_weights keys must be among {list(SOURCES)}")
    merge_weights = {}
    for src in SOURCES:
        try:
            w = as_fraction(mw.get(src, 0))
        except (TypeError, ValueError):
            raise ConfigError(f"merge_weights.{src} must be a number") from None
        if w < 0:
            raise ConfigError(f"merge_weights.{src} must be >= 0")
        merge_weights[src] = w

    if data["coordination_source"] not in COORDINATION_SOURCES:
        raise ConfigError(f"coordination_source must be one of {list(COORDINATION_SOURCES)}")
    if data["policy"] != POLICY_VERSION:
        raise ConfigError(f"unsupported recommendation policy {data['policy']!r}")

    diag = data["diagnostics"]
    return Config(
        teams=tuple(teams),
        sprints=tuple(sprints),
        aliases=aliases,
        commit_logs=tuple(str(p) for p in logs),
        channel_policy=channel_policy,
        merge_weights=merge_weights,
        min_weight=_positive(data["min_weight"], "min_weight"),
        dependency_rule=rule,
        coordination_source=data["coordination_source"],
        coordination_min_weight=_positive(data["coordination_min_weight"], "coordination_min_weight"),
        broker_ratio=_float_in(diag, "broker_ratio", 1.0, float("inf"), lo_open=True),
        broker_floor=_float_in(diag, "broker_floor", 0.0, 1.0),
        zero_edge_threshold=_float_in(diag, "zero_edge_threshold", 0.0, 1.0),
        pair_threshold=_float_in(diag, "pair_threshold", 0.0, 1.0),
        policy=data["policy"],
        base_dir=base_dir,
    )


def load_config(path: str | os.PathLike | None, overrides: Mapping | None = None) -> Config:
    """Read the YAML config at ``path`` (or ``$TEAMLENS_CONFIG``)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        raise ConfigError(f"no config given (use --config or set {CONFIG_ENV})")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return build_config(raw or {}, overrides, base_dir=path.parent)
