"""User similarity networks over hashtag-frequency profiles.

Edges carry the cosine similarity of two users' hashtag counts and a band:
``strong`` above 0.8, ``medium`` above 0.6, ``weak`` otherwise (a value
exactly on a threshold goes to the lower band).  With integer counts the
band is decided in exact arithmetic, so it cannot flip under rescaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .corpus import UserAggregate

BANDS = ("strong", "medium", "weak")
STRONG_ABOVE = Fraction(4, 5)
MEDIUM_ABOVE = Fraction(3, 5)


def _reduced(weights: Mapping[str, float]) -> dict[str, float]:
    vals = list(weights.values())
    if vals and all(isinstance(v, (int, np.integer)) or float(v).is_integer() for v in vals):
        ints = {k: int(v) for k, v in weights.items() if v}
        g = math.gcd(*ints.values()) if ints else 1
        return {k: v // g for k, v in ints.items()}
    return {k: float(v) for k, v in weights.items() if v}


def _dot_norms(u: Mapping[str, float], v: Mapping[str, float]):
    if len(u) > len(v):
        dot = sum(w * u[k] for k, w in v.items() if k in u)
    else:
        dot = sum(w * v[k] for k, w in u.items() if k in v)
    return dot, sum(w * w for w in u.values()), sum(w * w for w in v.values())


def _cos(dot, nu, nv) -> float:
    return min(1.0, max(0.0, dot / math.sqrt(nu * nv)))


def cosine(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    """Cosine similarity of two non-negative hashtag count vectors."""
    u, v = _reduced(u), _reduced(v)
    if not u or not v:
        raise ValueError("no hashtags")
    return _cos(*_dot_norms(u, v))


def _above(dot, nu, nv, t: Fraction) -> bool:
    if isinstance(dot, int) and isinstance(nu, int) and isinstance(nv, int):
        return dot * dot * t.denominator ** 2 > t.numerator ** 2 * nu * nv
    return _cos(dot, nu, nv) > float(t)


def band_of(similarity: float) -> str:
    # float thresholds, so a similarity given as 0.8 lands in the lower band
    if similarity > float(STRONG_ABOVE):
        return "strong"
    if similarity > float(MEDIUM_ABOVE):
        return "medium"
    return "weak"


def _band(dot, nu, nv) -> str:
    if _above(dot, nu, nv, STRONG_ABOVE):
        return "strong"
    if _above(dot, nu, nv, MEDIUM_ABOVE):
        return "medium"
    return "weak"


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    similarity: float
    band: str


@dataclass
class UserGraph:
    nodes: list[str]
    edges: list[Edge]
    components: dict[str, int] = field(default_factory=dict)

    def edge_set(self) -> set[tuple[str, str, str]]:
        return {(e.u, e.v, e.band) for e in self.edges}


def hashtag_vectors(users: Iterable[str], aggregates: Mapping[str, UserAggregate]):
    return {u: dict(aggregates[u].hashtag_tally) for u in sorted(set(users))}


def build_graph(users: Iterable[str], aggregates: Mapping[str, UserAggregate] | None = None,
                min_similarity: float = 0.0, vectors: Mapping[str, Mapping] | None = None
                ) -> UserGraph:
    """Similarity graph over ``users``; pairs above ``min_similarity`` become edges.

    Pairs are found through an inverted hashtag index, so users that share no
    hashtag (similarity 0) are never compared.  Users without hashtags stay
    as isolated nodes.
    """
    if not 0.0 <= min_similarity < 1.0:
        raise ValueError("min_similarity must be in [0, 1)")
    if vectors is None:
        vectors = hashtag_vectors(users, aggregates)
    nodes = sorted(set(users))
    vecs = {u: _reduced(vectors.get(u, {})) for u in nodes}
    norms = {u: sum(w * w for w in vec.values()) for u, vec in vecs.items()}
    index: dict[str, list[tuple[str, float]]] = {}
    for u in nodes:
        for h, w in vecs[u].items():
            index.setdefault(h, []).append((u, w))
    edges = []
    for u in nodes:
        dots: dict[str, float] = {}
        for h, w in vecs[u].items():
            for v, wv in index[h]:
                if v > u:
                    dots[v] = dots.get(v, 0) + w * wv
        for v in sorted(dots):
            dot = dots[v]
            sim = _cos(dot, norms[u], norms[v])
            if sim > min_similarity:
                edges.append(Edge(u, v, sim, _band(dot, norms[u], norms[v])))
    g = UserGraph(nodes, edges)
    g.components = components(g, "weak")[0]
    return g


def components(g: UserGraph, band_floor: str = "strong") -> tuple[dict[str, int], list[int]]:
    """Connected components using edges at or above ``band_floor``.

    Components are numbered in order of their smallest member user_id.
    Returns (assignment, sizes).
    """
    if band_floor not in BANDS:
        raise ValueError(f"band_floor must be one of {BANDS}")
    allowed = set(BANDS[:BANDS.index(band_floor) + 1])
    parent = {u: u for u in g.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        if e.band in allowed:
            a, b = find(e.u), find(e.v)
            if a != b:
                parent[max(a, b)] = min(a, b)
    # union keeps the smaller id as root, so each root is its component's minimum
    roots = sorted({find(u) for u in g.nodes})
    number = {r: i for i, r in enumerate(roots)}
    assign = {u: number[find(u)] for u in g.nodes}
    sizes = [0] * len(roots)
    for c in assign.values():
        sizes[c] += 1
    return assign, sizes


def layout_force_directed(g: UserGraph, iterations: int = 50, seed: int = 0
                          ) -> dict[str, tuple[float, float]]:
    """Fruchterman-Reingold layout in the unit square.

    Optimal distance k = sqrt(area / n), temperature cooled linearly from 0.1
    to 0.  Edge weights do not affect forces.  The result is centred on
    (0.5, 0.5) and scaled to fit inside the frame.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n = len(g.nodes)
    if n == 0:
        return {}
    if n == 1:
        return {g.nodes[0]: (0.5, 0.5)}
    idx = {u: i for i, u in enumerate(g.nodes)}
    A = np.zeros((n, n))
    for e in g.edges:
        A[idx[e.u], idx[e.v]] = A[idx[e.v], idx[e.u]] = 1.0
    pos = np.random.default_rng(seed).random((n, 2))
    k = math.sqrt(1.0 / n)
    t = 0.1
    dt = t / (iterations + 1)
    for _ in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.maximum(np.linalg.norm(delta, axis=-1), 0.01)
        # repulsion k^2/d for all pairs, attraction d^2/k along edges
        mag = k * k / dist ** 2 - A * dist / k
        disp = np.einsum("ijk,ij->ik", delta, mag)
        length = np.maximum(np.linalg.norm(disp, axis=1), 0.01)
        pos += disp * (np.minimum(length, t) / length)[:, None]
        t -= dt
    pos -= pos.mean(axis=0)
    extent = np.abs(pos).max()
    if extent > 0:
        pos *= 0.45 / extent
    pos += 0.5
    return {u: (float(pos[i, 0]), float(pos[i, 1])) for u, i in idx.items()}


def _kept(g: UserGraph, min_similarity: float) -> list[Edge]:
    return [e for e in g.edges if e.similarity >= min_similarity]


def to_dot(g: UserGraph, positions=None, min_similarity: float = 0.3) -> str:
    q = lambda s: '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'  # noqa: E731
    out = ["graph users {"]
    for u in g.nodes:
        attrs = [f"component={g.components.get(u, -1)}"]
        if positions and u in positions:
            x, y = positions[u]
            attrs += [f"x={x!r}", f"y={y!r}"]
        out.append(f"  {q(u)} [{', '.join(attrs)}];")
    for e in _kept(g, min_similarity):
        out.append(f"  {q(e.u)} -- {q(e.v)} [similarity={e.similarity!r}, band={e.band}];")
    out.append("}")
    return "\n".join(out) + "\n"


def to_graphml(g: UserGraph, positions=None, min_similarity: float = 0.3) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="similarity" for="edge" attr.name="similarity" attr.type="double"/>',
        '  <key id="band" for="edge" attr.name="band" attr.type="string"/>',
        '  <key id="component" for="node" attr.name="component" attr.type="int"/>',
        '  <key id="x" for="node" attr.name="x" attr.type="double"/>',
        '  <key id="y" for="node" attr.name="y" attr.type="double"/>',
        '  <graph id="users" edgedefault="undirected">',
    ]
    for u in g.nodes:
        out.append(f"    <node id={quoteattr(u)}>")
        out.append(f'      <data key="component">{g.components.get(u, -1)}</data>')
        if positions and u in positions:
            x, y = positions[u]
            out.append(f'      <data key="x">{x!r}</data>')
            out.append(f'      <data key="y">{y!r}</data>')
        out.append("    </node>")
    for e in _kept(g, min_similarity):
        out.append(f"    <edge source={quoteattr(e.u)} target={quoteattr(e.v)}>")
        out.append(f'      <data key="similarity">{e.similarity!r}</data>')
        out.append(f'      <data key="band">{escape(e.band)}</data>')
        out.append("    </edge>")
    out += ["  </graph>", "</graphml>"]
    return "\n".join(out) + "\n"


def export_graph(g: UserGraph, path, positions=None, fmt: str | None = None,
                 min_similarity: float = 0.3) -> None:
    """Write DOT or GraphML (chosen by ``fmt`` or the file suffix).

    Edges below ``min_similarity`` are dropped from the file.
    """
    fmt = (fmt or str(path).rsplit(".", 1)[-1]).lower()
    if fmt in ("dot", "gv"):
        text = to_dot(g, positions, min_similarity)
    elif fmt in ("graphml", "xml"):
        text = to_graphml(g, positions, min_similarity)
    else:
        raise ValueError(f"unknown graph format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_components(path, g: UserGraph, band_floor: str = "strong") -> None:
    assign, sizes = components(g, band_floor)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_id\tcomponent\tcomponent_size\n")
        for u in g.nodes:
            fh.write(f"{u}\t{assign[u]}\t{sizes[assign[u]]}\n")
