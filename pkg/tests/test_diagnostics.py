import random
from datetime import datetime, timezone
from fractions import Fraction
from itertools import combinations

import pytest

from oracles import census_undirected_bruteforce
from teamlens.congruence import CongruenceResult
from teamlens.diagnostics import (
    Action,
    Diagnostic,
    DiagnosticKind,
    detect_brokers,
    detect_fragmentation,
    detect_unmet_coordination,
    mediated_pairs,
    pairing_coverage,
    recommend,
)
from teamlens.graph import SocialNetwork, threshold_binary
from teamlens.ingest import EventKind, FileChange, InteractionEvent, TeamRoster
from teamlens.metrics import CentralityScores, TriadCensus, betweenness_centrality, triad_census_undirected

T0 = datetime(2025, 3, 1, tzinfo=timezone.utc)
ROSTER5 = TeamRoster("t", ("a", "b", "c", "d", "e"))


def btw(scores):
    return CentralityScores("betweenness", True, dict(scores))


def test_equal_scores_no_brokers():
    assert detect_brokers(btw({m: 0.3 for m in "abcdef"})) == []
    assert detect_brokers(btw({m: 0.0 for m in "abcdef"}), floor=0.0) == []


def test_star_center_flagged():
    nodes = ("hub", "l1", "l2", "l3", "l4")
    net = SocialNetwork(False, nodes, {("hub", v): 1 for v in nodes[1:]})
    [diag] = detect_brokers(betweenness_centrality(net, normalized=True), net=net)
    assert diag.subjects == ("hub",)
    assert diag.severity == 1.0
    assert len(diag.related_pairs) == 6


def test_six_member_fixture():
    scores = {"m1": 0.55, "m2": 0.2, "m3": 0.1, "m4": 0.05, "m5": 0.0, "m6": 0.0}
    [diag] = detect_brokers(btw(scores))
    assert diag.subjects == ("m1",)
    assert diag.severity == 0.55
    assert diag.evidence["team_mean"] == pytest.approx(0.15)
    assert diag.evidence["betweenness"] == 0.55


def test_brokers_need_normalized_betweenness():
    with pytest.raises(ValueError):
        detect_brokers(CentralityScores("degree", True, {"a": 1.0}))


def test_fragmented_edgeless():
    census = TriadCensus(False, 4, {"T0": 4, "T1": 0, "T2": 0, "T3": 0})
    [diag] = detect_fragmentation(census)
    assert diag.kind is DiagnosticKind.FRAGMENTED_TEAM
    assert diag.severity == 1.0
    assert set(diag.evidence) == {"T0", "T1", "T2", "T3"}


def test_complete_graph_no_fragmentation():
    assert detect_fragmentation(TriadCensus(False, 4, {"T0": 0, "T1": 0, "T2": 0, "T3": 4})) == []


def _matching(pairs, n=6):
    nodes = tuple(f"m{i}" for i in range(n))
    return SocialNetwork(False, nodes, {(nodes[2 * k], nodes[2 * k + 1]): 1 for k in range(pairs)})


def test_two_disjoint_pairs_in_six():
    net = _matching(2)
    census = triad_census_undirected(net)
    assert census.counts == census_undirected_bruteforce(net) == {"T0": 12, "T1": 8, "T2": 0, "T3": 0}
    # (T1 + T2) / 20 = 0.4 stays under the 0.6 pair threshold; T0 / 20 = 0.6 trips fragmentation
    diags = detect_fragmentation(census)
    assert [d.kind for d in diags] == [DiagnosticKind.FRAGMENTED_TEAM]
    assert diags[0].severity == pytest.approx(0.6)


def test_three_disjoint_pairs_pair_dominated():
    census = triad_census_undirected(_matching(3))
    assert census.counts == {"T0": 8, "T1": 12, "T2": 0, "T3": 0}
    [diag] = detect_fragmentation(census)
    assert diag.kind is DiagnosticKind.PAIR_DOMINATED
    assert diag.severity == pytest.approx(0.6)


def _result(weights, unmet):
    members = tuple(sorted({m for p in weights for m in p}))
    return CongruenceResult(members, Fraction(0), {}, tuple(unmet), dict(weights))


def test_unmet_none():
    assert detect_unmet_coordination(_result({("a", "b"): 1}, [])) == []


def test_unmet_single():
    [diag] = detect_unmet_coordination(_result({("a", "b"): 3}, [("a", "b")]))
    assert diag.severity == 1.0
    assert diag.subjects == (("a", "b"),)


def test_unmet_relative_severity():
    diags = detect_unmet_coordination(_result({("a", "b"): 4, ("c", "d"): 2}, [("a", "b"), ("c", "d")]))
    assert [d.severity for d in diags] == [1.0, 0.5]


def _task(actor, task, *co):
    return InteractionEvent(EventKind.WORKLOG, T0, actor, task_id=task, co_workers=frozenset(co))


def _commit(actor, path):
    return InteractionEvent(EventKind.COMMIT, T0, actor, files=(FileChange(path, 1, 0),))


def test_pairing_full_coverage():
    roster = TeamRoster("t", ("a", "b", "c"))
    assert pairing_coverage([_task("a", "T1", "b", "c")], roster) == []


def test_pairing_no_events():
    roster = TeamRoster("t", ("a", "b", "c", "d"))
    [diag] = pairing_coverage([], roster)
    assert diag.severity == 1.0
    assert len(diag.subjects) == 6


def test_pairing_fixture():
    roster = TeamRoster("t", ("a", "b", "c", "d"))
    events = [_task("a", "T1", "b"), _commit("b", "x.py"), _commit("c", "x.py")]
    [diag] = pairing_coverage(events, roster)
    covered = {("a", "b"), ("b", "c")}
    assert diag.subjects == tuple(p for p in combinations("abcd", 2) if p not in covered)
    assert diag.subjects == (("a", "c"), ("a", "d"), ("b", "d"), ("c", "d"))
    assert diag.severity == pytest.approx(4 / 6)


def test_recommend_empty():
    assert recommend([], ROSTER5) == []


def test_recommend_single_unmet():
    [diag] = detect_unmet_coordination(_result({("a", "b"): 1}, [("a", "b")]))
    [rec] = recommend([diag], ROSTER5)
    assert (rec.action, rec.subjects) == (Action.COORDINATE_DIRECTLY, ("a", "b"))
    assert rec.sources == (diag.id,)
    assert diag.id in rec.rationale


def test_recommend_broker_and_unmet():
    broker = Diagnostic(
        DiagnosticKind.COMMUNICATION_BROKER, ("c",), 0.8, {"betweenness": 0.8},
        related_pairs=(("a", "b"), ("a", "d")),
    )
    unmet = detect_unmet_coordination(_result({("a", "b"): 4, ("d", "e"): 2}, [("a", "b"), ("d", "e")]))
    recs = recommend([broker, *unmet], ROSTER5)
    assert [(r.action, r.subjects) for r in recs] == [
        (Action.COORDINATE_DIRECTLY, ("a", "b")),
        (Action.COORDINATE_DIRECTLY, ("a", "d")),
        (Action.REBALANCE_TASKS, ("c",)),
        (Action.COORDINATE_DIRECTLY, ("d", "e")),
    ]
    assert recs[0].sources == ("UnmetCoordination:a-b", "CommunicationBroker:c")
    assert [r.severity for r in recs] == [1.0, 0.8, 0.8, 0.8]
    # order of the input list does not matter
    assert recommend([*reversed(unmet), broker], ROSTER5) == recs


def test_recommend_pairing_cap():
    roster = TeamRoster("t", ("a", "b", "c", "d"))
    [gap] = pairing_coverage([_task("a", "T1", "b"), _commit("b", "x"), _commit("c", "x")], roster)
    recs = recommend([gap], roster)
    # gap loads a:2 b:1 c:2 d:3 -> ad 5, cd 5, ac 4, bd 4; keep the top three,
    # which tie on severity and so come out in roster order
    assert [r.subjects for r in recs] == [("a", "c"), ("a", "d"), ("c", "d")]
    assert {r.action for r in recs} == {Action.ROTATE_PAIR_PROGRAMMING}


def test_recommend_team_session_deduplicated():
    census = TriadCensus(False, 5, {"T0": 6, "T1": 4, "T2": 0, "T3": 0})
    # defaults cannot fire both (T0 >= 0.5 and T1+T2 >= 0.6 exceed 1 together)
    diags = detect_fragmentation(census, 0.5, 0.4, members=ROSTER5.members)
    assert len(diags) == 2
    [rec] = recommend(diags, ROSTER5)
    assert rec.action is Action.SHARE_KNOWLEDGE_SESSION
    assert rec.subjects == ROSTER5.members
    assert len(rec.sources) == 2


def test_every_recommendation_links_a_diagnostic():
    rng = random.Random(9)
    for _ in range(20):
        nodes = ROSTER5.members
        net = SocialNetwork(False, nodes, {p: 1 for p in combinations(nodes, 2) if rng.random() < 0.4})
        diags = detect_brokers(betweenness_centrality(net, normalized=True), net=net)
        diags += detect_fragmentation(triad_census_undirected(net), members=nodes)
        diags += pairing_coverage([], ROSTER5)
        ids = {d.id for d in diags}
        recs = recommend(diags, ROSTER5)
        assert recs == recommend(list(diags), ROSTER5)
        for r in recs:
            assert r.sources and set(r.sources) <= ids


def test_mediated_pairs():
    net = SocialNetwork(False, ("a", "b", "c", "d"), {("a", "b"): 1, ("a", "c"): 1, ("b", "c"): 1, ("a", "d"): 1})
    assert mediated_pairs(net, "a") == (("b", "d"), ("c", "d"))


def planted_star(rng, size=7):
    """Star over a shuffled roster plus noise ties below the threshold of 1."""
    names = [f"dev{i}" for i in range(size)]
    rng.shuffle(names)
    center, leaves = names[0], names[1:]
    edges = {(center, leaf): rng.randint(1, 6) for leaf in leaves}
    for u, v in combinations(leaves, 2):
        if rng.random() < 0.5:
            edges[(u, v)] = Fraction(rng.randint(1, 9), 10)
    return SocialNetwork(False, tuple(sorted(names)), edges), center


def test_planted_broker_recovered():
    rng = random.Random(21)
    for _ in range(20):
        net, center = planted_star(rng)
        binary = threshold_binary(net, 1)
        flagged = [d.subjects[0] for d in detect_brokers(betweenness_centrality(binary, normalized=True))]
        assert flagged == [center]


def test_brokers_relabel_invariant():
    rng = random.Random(8)
    for _ in range(30):
        nodes = tuple(f"v{i}" for i in range(7))
        net = SocialNetwork(False, nodes, {p: 1 for p in combinations(nodes, 2) if rng.random() < 0.3})
        perm = list(nodes)
        rng.shuffle(perm)
        rename = dict(zip(nodes, perm))
        moved = SocialNetwork(False, nodes, {(rename[u], rename[v]): 1 for u, v in net.edges})
        before = {rename[d.subjects[0]] for d in detect_brokers(betweenness_centrality(net, normalized=True))}
        after = {d.subjects[0] for d in detect_brokers(betweenness_centrality(moved, normalized=True))}
        assert before == after
