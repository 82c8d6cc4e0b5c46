import math
from pathlib import Path

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from seminar.network import (
    BANDS, Edge, UserGraph, band_of, build_graph, components, cosine, export_graph,
    layout_force_directed, to_dot, to_graphml, write_components,
)

GOLDEN = Path(__file__).parent / "golden"
THREE = {"a": {"x": 3, "y": 4}, "b": {"x": 6, "y": 8, "z": 1}, "c": {"y": 1, "z": 2}}
THREE_POS = {"a": (0.1, 0.2), "b": (0.5, 0.5), "c": (0.9, 0.75)}


# --- cosine -------------------------------------------------------------------------

def test_cosine_identical():
    assert cosine({"a": 2, "b": 3}, {"a": 2, "b": 3}) == 1.0


def test_cosine_disjoint():
    assert cosine({"a": 1}, {"b": 1}) == 0.0


def test_cosine_hand_example():
    assert cosine({"a": 1, "b": 1}, {"a": 1, "c": 1}) == pytest.approx(0.5, abs=1e-15)


def test_cosine_empty_vector():
    with pytest.raises(ValueError, match="no hashtags"):
        cosine({}, {"a": 1})


def test_band_thresholds():
    assert band_of(0.7) == "medium"
    assert band_of(0.8) == "medium" and band_of(0.80001) == "strong"
    assert band_of(0.6) == "weak" and band_of(0.61) == "medium"


def test_exact_boundary_is_lower_band():
    # cos = 4/5 exactly: (4, 3) vs (1, 0)
    g = build_graph(["p", "q"], vectors={"p": {"a": 4, "b": 3}, "q": {"a": 1}})
    assert g.edges[0].band == "medium"
    # cos = 3/5 exactly
    g = build_graph(["p", "q"], vectors={"p": {"a": 3, "b": 4}, "q": {"a": 1}})
    assert g.edges[0].band == "weak"


# --- graph vs brute force --------------------------------------------------------------

def exact_band(u, v):
    """Band from integer arithmetic: cos > 4/5 iff 25 dot^2 > 16 |u|^2 |v|^2, etc."""
    dot = sum(u[k] * v.get(k, 0) for k in u)
    nu = sum(x * x for x in u.values())
    nv = sum(x * x for x in v.values())
    if 25 * dot * dot > 16 * nu * nv:
        return "strong"
    if 25 * dot * dot > 9 * nu * nv:
        return "medium"
    return "weak"


def brute_force_edges(vectors):
    out = {}
    users = sorted(vectors)
    for i, u in enumerate(users):
        for v in users[i + 1:]:
            a, b = vectors[u], vectors[v]
            if not a or not b:
                continue
            dot = sum(a[k] * b.get(k, 0) for k in a)
            if dot == 0:
                continue
            sim = dot / math.sqrt(sum(x * x for x in a.values()) * sum(x * x for x in b.values()))
            out[(u, v)] = (sim, exact_band(a, b))
    return out


vectors_st = st.dictionaries(
    st.sampled_from([f"user{i:02d}" for i in range(50)]),
    st.dictionaries(st.sampled_from([f"h{j}" for j in range(8)]), st.integers(1, 20),
                    max_size=5),
    min_size=2, max_size=50)


@settings(max_examples=40, deadline=None)
@given(vectors_st)
def test_graph_equals_brute_force(vectors):
    g = build_graph(list(vectors), vectors=vectors)
    want = brute_force_edges(vectors)
    assert {(e.u, e.v): e.band for e in g.edges} == {k: b for k, (_, b) in want.items()}
    for e in g.edges:
        assert e.similarity == pytest.approx(want[(e.u, e.v)][0], abs=1e-12)
    assert g.nodes == sorted(vectors)


def test_five_user_fixture():
    vec = {"a": {"x": 1}, "b": {"x": 2}, "c": {"x": 1, "y": 1}, "d": {"z": 5}, "e": {}}
    g = build_graph(list(vec), vectors=vec)
    assert g.edge_set() == {("a", "b", "strong"), ("a", "c", "medium"), ("b", "c", "medium")}


def test_two_identical_users():
    g = build_graph(["a", "b"], vectors={"a": {"x": 1, "y": 2}, "b": {"x": 1, "y": 2}})
    assert g.edge_set() == {("a", "b", "strong")}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 30), min_size=1),
                min_size=2, max_size=6),
       st.lists(st.integers(1, 1000), min_size=6, max_size=6))
def test_scaling_changes_no_band(vecs, scales):
    vectors = {f"u{i}": v for i, v in enumerate(vecs)}
    scaled = {f"u{i}": {k: c * scales[i] for k, c in v.items()} for i, v in enumerate(vecs)}
    a = build_graph(list(vectors), vectors=vectors)
    b = build_graph(list(scaled), vectors=scaled)
    assert a.edge_set() == b.edge_set()


def test_min_similarity_drops_edges():
    g = build_graph(list(THREE), vectors=THREE, min_similarity=0.4)
    assert {(e.u, e.v) for e in g.edges} == {("a", "b"), ("b", "c")}


# --- components ---------------------------------------------------------------------------

def _graph(nodes, edges):
    return UserGraph(nodes, [Edge(u, v, {"strong": 0.9, "medium": 0.7, "weak": 0.3}[b], b)
                             for u, v, b in edges])


def test_edgeless_components():
    assign, sizes = components(_graph(["a", "b", "c"], []))
    assert assign == {"a": 0, "b": 1, "c": 2} and sizes == [1, 1, 1]


def test_triangles_joined_by_weak_edge():
    tri = [("a", "b", "strong"), ("b", "c", "strong"), ("a", "c", "strong"),
           ("d", "e", "strong"), ("e", "f", "strong"), ("d", "f", "strong"), ("c", "d", "weak")]
    g = _graph(list("abcdef"), tri)
    assert components(g, "strong")[1] == [3, 3]
    assert components(g, "weak")[1] == [6]


def test_complete_strong_graph():
    nodes = list("abcd")
    edges = [(u, v, "strong") for i, u in enumerate(nodes) for v in nodes[i + 1:]]
    assert components(_graph(nodes, edges))[1] == [4]


@settings(max_examples=50, deadline=None)
@given(vectors_st)
def test_component_count_monotone(vectors):
    g = build_graph(list(vectors), vectors=vectors)
    counts = [len(components(g, b)[1]) for b in BANDS]
    assert counts[0] >= counts[1] >= counts[2]


# --- layout -------------------------------------------------------------------------------

def test_single_node_centered():
    assert layout_force_directed(UserGraph(["a"], [])) == {"a": (0.5, 0.5)}


def test_two_nodes_symmetric():
    pos = layout_force_directed(_graph(["a", "b"], [("a", "b", "strong")]), seed=3)
    (x1, y1), (x2, y2) = pos["a"], pos["b"]
    assert (x1 + x2) / 2 == pytest.approx(0.5, abs=1e-12)
    assert (y1 + y2) / 2 == pytest.approx(0.5, abs=1e-12)


def test_layout_deterministic_and_in_frame():
    g = build_graph(list(THREE), vectors=THREE)
    a = layout_force_directed(g, seed=11)
    assert a == layout_force_directed(g, seed=11)
    assert all(0.0 <= c <= 1.0 for xy in a.values() for c in xy)


def test_layout_pulls_neighbours_together():
    nodes = [f"n{i}" for i in range(8)]
    edges = [(nodes[i], nodes[j], "strong") for i in range(4) for j in range(i + 1, 4)]
    pos = layout_force_directed(_graph(nodes, edges), iterations=100, seed=0)
    d = lambda a, b: math.dist(pos[a], pos[b])  # noqa: E731
    inside = sum(d(u, v) for u, v, _ in edges) / len(edges)
    across = sum(d(nodes[i], nodes[j]) for i in range(4) for j in range(4, 8)) / 16
    assert inside < across


# --- export -----------------------------------------------------------------------------

def test_golden_dot():
    g = build_graph(list(THREE), vectors=THREE)
    assert to_dot(g, THREE_POS, 0.0) == (GOLDEN / "three.dot").read_text()


def test_golden_graphml():
    g = build_graph(list(THREE), vectors=THREE)
    assert to_graphml(g, THREE_POS, 0.0) == (GOLDEN / "three.graphml").read_text()


def test_graphml_roundtrip(tmp_path):
    g = build_graph(list(THREE), vectors=THREE)
    export_graph(g, tmp_path / "g.graphml", THREE_POS, min_similarity=0.0)
    h = nx.read_graphml(tmp_path / "g.graphml")
    got = {(min(u, v), max(u, v), d["band"]) for u, v, d in h.edges(data=True)}
    assert got == g.edge_set()
    assert h.nodes["a"]["x"] == 0.1


def parse_dot_edges(text):
    out = set()
    for line in text.splitlines():
        if " -- " in line:
            left, attrs = line.strip().rstrip(";").split(" [")
            u, v = (s.strip().strip('"') for s in left.split(" -- "))
            band = attrs.split("band=")[1].rstrip("]")
            out.add((u, v, band))
    return out


def test_dot_roundtrip(tmp_path):
    g = build_graph(list(THREE), vectors=THREE)
    export_graph(g, tmp_path / "g.dot", min_similarity=0.0)
    assert parse_dot_edges((tmp_path / "g.dot").read_text()) == g.edge_set()


def test_export_drops_low_similarity_by_default(tmp_path):
    vec = {**THREE, "d": {"x": 1, "q": 4}}
    g = build_graph(list(vec), vectors=vec)
    assert ("a", "d", "weak") in g.edge_set()
    export_graph(g, tmp_path / "g.dot")
    kept = parse_dot_edges((tmp_path / "g.dot").read_text())
    assert kept == {(e.u, e.v, e.band) for e in g.edges if e.similarity >= 0.3}
    assert ("a", "d", "weak") not in kept


def test_empty_graph_documents(tmp_path):
    g = UserGraph([], [])
    assert to_dot(g) == "graph users {\n}\n"
    export_graph(g, tmp_path / "e.graphml")
    assert nx.read_graphml(tmp_path / "e.graphml").number_of_nodes() == 0


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export_graph(UserGraph([], []), tmp_path / "g.png")


def test_component_file(tmp_path):
    g = build_graph(list(THREE), vectors=THREE)
    write_components(tmp_path / "c.tsv", g, "strong")
    assert (tmp_path / "c.tsv").read_text().splitlines() == [
        "user_id\tcomponent\tcomponent_size", "a\t0\t2", "b\t0\t2", "c\t1\t1"]
