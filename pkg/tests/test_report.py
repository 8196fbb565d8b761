import io
import json
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import jsonschema
import pydot
import pytest

from teamlens.config import build_config
from teamlens.graph import SocialNetwork
from teamlens.ingest import EventKind, FileChange, InteractionEvent, SprintWindow
from teamlens.pipeline import analyze_sprint
from teamlens.report import (
    ReportError,
    emit_report,
    export_graph,
    render_number,
    report_schema,
    validate_report,
)

UTC = timezone.utc
RAW = {
    "teams": {"t1": {"members": ["ana", "ben", "cai", "dev"]}},
    "sprints": [{"label": "S1", "start": "2025-03-03T00:00:00Z", "end": "2025-03-17T00:00:00Z"}],
}
CONFIG = build_config(RAW)
ROSTER = CONFIG.teams[0]
WINDOW = CONFIG.sprints[0]
T = datetime(2025, 3, 4, tzinfo=UTC)


def sample_events():
    return [
        InteractionEvent(EventKind.MESSAGE, T, "ana", recipients=frozenset({"ben", "cai"})),
        InteractionEvent(EventKind.MESSAGE, T, "ben", recipients=frozenset({"ana"})),
        InteractionEvent(EventKind.MESSAGE, T, "cai", recipients=frozenset({"ana"})),
        InteractionEvent(EventKind.COMMIT, T, "ana", files=(FileChange("a.py", 3, 1),)),
        InteractionEvent(EventKind.COMMIT, T, "dev", files=(FileChange("a.py", 1, 0), FileChange("b.py", 2, 2))),
        InteractionEvent(EventKind.WORKLOG, T, "ben", task_id="T1", co_workers=frozenset({"cai"})),
    ]


def test_empty_window_report_is_valid_and_zeroed():
    doc = json.loads(emit_report(analyze_sprint([], ROSTER, WINDOW, CONFIG)))
    validate_report(doc)
    assert doc["events"]["total"] == 0
    assert all(s["edges"] == 0 for s in doc["networks"].values())
    assert doc["triad_census"]["undirected"]["counts"] == {"T0": 4, "T1": 0, "T2": 0, "T3": 0}
    assert doc["transitivity"] is None
    assert doc["congruence"]["team_score"] is None
    assert set(doc["centrality"]["betweenness"].values()) == {0}


def test_fixture_report_validates_and_matches_hand_values():
    doc = json.loads(emit_report(analyze_sprint(sample_events(), ROSTER, WINDOW, CONFIG)))
    validate_report(doc)
    # messages: ana->ben, ana->cai, ben->ana, cai->ana; collaboration: ben-cai; cochange: ana-dev
    assert doc["networks"]["message"]["edges"] == 4
    assert doc["networks"]["merged"]["total_weight"] == 6
    # merged weights ab 2, ac 2, bc 1, ad 1 -> all kept at min_weight 1
    assert doc["networks"]["analysis"]["edges"] == 4
    # triples abc: 3 ties, abd: 2, acd: 2, bcd: 1
    assert doc["triad_census"]["undirected"]["counts"] == {"T0": 0, "T1": 1, "T2": 2, "T3": 1}
    assert doc["transitivity"] == 0.6
    # ana and dev share a.py but never message: the only coordination need is unmet
    assert doc["congruence"]["team_score"] == 0.0
    assert doc["congruence"]["unmet_pairs"] == [["ana", "dev"]]
    assert doc["congruence"]["member_scores"] == {"ana": 0.0, "ben": None, "cai": None, "dev": 0.0}


def test_schema_rejects_bad_document():
    doc = json.loads(emit_report(analyze_sprint([], ROSTER, WINDOW, CONFIG)))
    doc["transitivity"] = 1.5
    with pytest.raises(jsonschema.ValidationError):
        validate_report(doc)
    assert report_schema()["properties"]["schema_version"] == {"const": 1}


def test_emit_is_deterministic():
    a = emit_report(analyze_sprint(sample_events(), ROSTER, WINDOW, CONFIG))
    b = emit_report(analyze_sprint(list(sample_events()), ROSTER, WINDOW, CONFIG))
    assert a == b
    assert a.encode() == b.encode()


def test_round_trip_numbers():
    report = {"x": Fraction(1, 3), "y": 2 / 7, "z": 5, "w": [0.1 + 0.2]}
    doc = json.loads(emit_report(report))
    assert doc["x"] == pytest.approx(1 / 3, rel=1e-11)
    assert doc["x"] == render_number(Fraction(1, 3)) == 0.333333333333
    assert doc["y"] == pytest.approx(2 / 7, rel=1e-11)
    assert doc["z"] == 5
    assert doc["w"] == [0.3]


def test_emit_keys_sorted():
    text = emit_report({"b": 1, "a": {"d": 1, "c": 2}})
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')


def test_emit_to_path_and_unwritable(tmp_path):
    target = tmp_path / "r.json"
    emit_report({"a": 1}, target)
    assert json.loads(target.read_text()) == {"a": 1}
    with pytest.raises(ReportError):
        emit_report({"a": 1}, tmp_path / "missing" / "r.json")
    closed = io.StringIO()
    closed.close()
    with pytest.raises(ReportError):
        emit_report({"a": 1}, closed)


def test_export_edgeless():
    net = SocialNetwork(False, ("a", "b", "c"), {})
    text = export_graph(net)
    assert text.count(";") == 3
    assert "--" not in text
    [g] = pydot.graph_from_dot_data(text)
    assert [n.get_name().strip('"') for n in g.get_nodes()] == ["a", "b", "c"]
    assert g.get_edges() == []


def test_export_single_weighted_edge():
    net = SocialNetwork(True, ("a", "b"), {("b", "a"): Fraction(5, 2)})
    text = export_graph(net)
    assert text.startswith("digraph")
    assert '"b" -> "a" [weight=2.5];' in text


def test_export_round_trips_through_pydot(tmp_path):
    net = SocialNetwork(
        False,
        ("ana", "ben", 'quote"d', "dev"),
        {("ana", "ben"): 3, ("ben", 'quote"d'): Fraction(1, 3), ("dev", "ana"): 1},
    )
    sink = tmp_path / "g.dot"
    export_graph(net, sink, name="t1/S1")
    [g] = pydot.graph_from_dot_file(str(sink))
    assert g.get_type() == "graph"
    edges = {}
    for e in g.get_edges():
        key = (json.loads(e.get_source()), json.loads(e.get_destination()))
        edges[key] = float(e.get("weight"))
    assert edges == {("ana", "ben"): 3.0, ("ben", 'quote"d'): pytest.approx(1 / 3, rel=1e-11), ("ana", "dev"): 1.0}
    nodes = [json.loads(n.get_name()) for n in g.get_nodes()]
    assert nodes == list(net.nodes)
