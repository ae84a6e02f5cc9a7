"""Knowledge graph assembly, transitive inference, and export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from . import _core
from .atomizer import normalize_text
from .extraction import Provenance, Triplet

EdgeKey = tuple[str, str, str]


@dataclass(frozen=True)
class Edge:
    subject: str
    relation: str
    object: str
    provenance: tuple[Provenance, ...] = ()
    derived: bool = False
    trail: tuple[EdgeKey, ...] = ()

    @property
    def key(self) -> EdgeKey:
        return (self.subject, self.relation, self.object)

    def to_dict(self) -> dict:
        return {
            "s": self.subject,
            "r": self.relation,
            "o": self.object,
            "derived": self.derived,
            "provenance": [p.to_dict() for p in self.provenance],
            "trail": [list(k) for k in self.trail],
        }


@dataclass
class KnowledgeGraph:
    nodes: set[str] = field(default_factory=set)
    edges: dict[EdgeKey, Edge] = field(default_factory=dict)

    def copy(self) -> "KnowledgeGraph":
        return KnowledgeGraph(set(self.nodes), dict(self.edges))

    def asserted(self) -> list[Edge]:
        return [e for e in self.edges.values() if not e.derived]

    def derived(self) -> list[Edge]:
        return [e for e in self.edges.values() if e.derived]

    def relations(self) -> set[str]:
        return {e.relation for e in self.edges.values()}

    def to_dict(self) -> dict:
        return {
            "nodes": sorted(self.nodes),
            "edges": [self.edges[k].to_dict() for k in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KnowledgeGraph":
        graph = cls(set(data.get("nodes", [])))
        for rec in data.get("edges", []):
            edge = Edge(
                rec["s"],
                rec["r"],
                rec["o"],
                tuple(Provenance(p.get("source_id", ""), p.get("origin", ""), p.get("proposition"))
                      for p in rec.get("provenance", [])),
                bool(rec.get("derived", False)),
                tuple(tuple(k) for k in rec.get("trail", [])),
            )
            graph.nodes.update((edge.subject, edge.object))
            graph.edges[edge.key] = edge
        return graph


def build_graph(triplets: Iterable[Triplet]) -> KnowledgeGraph:
    """One node per normalized entity, one edge per distinct (s, r, o)."""
    graph = KnowledgeGraph()
    for t in triplets:
        s, r, o = normalize_text(t.subject), normalize_text(t.relation), normalize_text(t.object)
        graph.nodes.update((s, o))
        key = (s, r, o)
        seen = graph.edges.get(key)
        prov = set(t.provenance) | (set(seen.provenance) if seen else set())
        graph.edges[key] = Edge(s, r, o, tuple(sorted(prov)))
    return graph


def _path(via: list[int], n: int, i: int, j: int) -> list[tuple[int, int]]:
    # expand intermediates left to right; -1 marks an asserted edge
    out = []
    stack = [(i, j)]
    while stack:
        a, b = stack.pop()
        k = via[a * n + b]
        if k == -1:
            out.append((a, b))
        else:
            stack.append((k, b))
            stack.append((a, k))
    return out


def infer_transitive(graph: KnowledgeGraph, transitive_relations: Iterable[str]) -> KnowledgeGraph:
    """Add the transitive closure of each listed relation as derived edges.

    Closure runs over asserted edges only, so repeated application adds
    nothing. Derived self-loops are suppressed; each derived edge records
    the chain of asserted edges it follows.
    """
    out = graph.copy()
    for relation in sorted(set(transitive_relations)):
        asserted = sorted(e.key for e in graph.asserted() if e.relation == relation)
        if not asserted:
            continue
        names = sorted({k[0] for k in asserted} | {k[2] for k in asserted})
        index = {name: i for i, name in enumerate(names)}
        n = len(names)
        via = _core.closure(n, [(index[s], index[o]) for s, _, o in asserted])
        for i in range(n):
            for j in range(n):
                if i == j or via[i * n + j] < 0:
                    continue
                key = (names[i], relation, names[j])
                if key in out.edges:
                    continue
                trail = tuple((names[a], relation, names[b]) for a, b in _path(via, n, i, j))
                out.edges[key] = Edge(names[i], relation, names[j], derived=True, trail=trail)
    return out


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_graph(graph: KnowledgeGraph, fmt: str = "dot") -> str:
    """Render as Graphviz DOT or JSON; output is byte-stable."""
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps(graph.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)
    if fmt != "dot":
        raise ValueError(f"unknown export format {fmt!r}")
    if not graph.nodes and not graph.edges:
        return "digraph G { }"
    lines = ["digraph G {"]
    for node in sorted(graph.nodes):
        lines.append(f"  {_dot_quote(node)};")
    for key in sorted(graph.edges):
        edge = graph.edges[key]
        attrs = f"label={_dot_quote(edge.relation)}"
        if edge.derived:
            attrs += ", style=dashed"
        lines.append(f"  {_dot_quote(edge.subject)} -> {_dot_quote(edge.object)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines)
