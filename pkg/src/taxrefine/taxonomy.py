"""Taxonomy data model, TSV exchange format, and structural graph operations.

A taxonomy is a directed graph of child -> parent IS-A edges over a term
vocabulary with one designated root.  Values are immutable; every operation
returns a new taxonomy.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

Edge = tuple[str, str]


class ParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def normalize_term(raw: str) -> str:
    """Normalize a surface term: casefold and collapse runs of whitespace.

    Idempotent.  Raises ValueError if nothing is left after trimming.
    """
    term = " ".join(raw.casefold().split())
    if not term:
        raise ValueError(f"empty term after normalization: {raw!r}")
    return term


def _is_comment(line: str) -> bool:
    return line.startswith("#")


@dataclass(frozen=True)
class Taxonomy:
    """Immutable child -> parent edge set over a vocabulary with a root.

    The vocabulary may be a strict superset of the edge endpoints; terms
    incident to no edge are the taxonomy's orphans.  Dirty inputs (self
    loops, cycles) are representable so that they can be repaired.
    """

    vocabulary: frozenset[str]
    edges: frozenset[Edge]
    root: str

    def __post_init__(self):
        object.__setattr__(self, "vocabulary", frozenset(self.vocabulary))
        object.__setattr__(self, "edges", frozenset(self.edges))
        if self.root not in self.vocabulary:
            raise ValueError(f"root {self.root!r} not in vocabulary")
        for child, parent in self.edges:
            if child not in self.vocabulary or parent not in self.vocabulary:
                raise ValueError(f"edge ({child!r}, {parent!r}) has endpoint outside vocabulary")

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], root: str, extra_vocabulary: Iterable[str] = ()) -> "Taxonomy":
        edges = frozenset(edges)
        vocab = {t for e in edges for t in e} | set(extra_vocabulary) | {root}
        return cls(frozenset(vocab), edges, root)

    def with_edges(self, edges: Iterable[Edge]) -> "Taxonomy":
        """Same vocabulary and root, different edge set."""
        return Taxonomy(self.vocabulary, frozenset(edges), self.root)

    def parents_of(self, term: str) -> set[str]:
        return {p for c, p in self.edges if c == term}

    def children_of(self, term: str) -> set[str]:
        return {c for c, p in self.edges if p == term}

    def connected_terms(self) -> set[str]:
        """Terms incident to at least one edge, plus the root."""
        incident = {t for e in self.edges for t in e}
        incident.add(self.root)
        return incident

    def is_acyclic(self) -> bool:
        return _topological_order(self.vocabulary, self.edges) is not None


@dataclass(frozen=True)
class StructureReport:
    orphan_count: int
    component_count: int
    edge_count: int
    cycle_count_removed: int = 0


def parse_taxonomy(lines: Iterable[str], root: str) -> Taxonomy:
    """Parse `<id>\\t<term>\\t<hypernym>` lines into a taxonomy.

    Identifiers are ignored, terms are normalized, blank and `#` comment
    lines are skipped.  The vocabulary is the union of edge endpoints and
    the (normalized) root.
    """
    root = normalize_term(root)
    edges = set()
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip() or _is_comment(stripped):
            continue
        fields = stripped.split("\t")
        if len(fields) < 3:
            raise ParseError(line_no, f"expected at least 3 tab-separated fields, got {len(fields)}")
        try:
            child = normalize_term(fields[1])
            parent = normalize_term(fields[2])
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
        edges.add((child, parent))
    return Taxonomy.from_edges(edges, root)


def serialize_taxonomy(t: Taxonomy) -> list[str]:
    """Emit edges as TSV lines with sequential ids, sorted by (child, parent)."""
    return [f"{i}\t{child}\t{parent}" for i, (child, parent) in enumerate(sorted(t.edges))]


def read_vocabulary(lines: Iterable[str]) -> set[str]:
    """Collect the normalized term vocabulary of a taxonomy TSV file."""
    vocab = set()
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip() or _is_comment(stripped):
            continue
        fields = stripped.split("\t")
        if len(fields) < 3:
            raise ParseError(line_no, f"expected at least 3 tab-separated fields, got {len(fields)}")
        try:
            vocab.add(normalize_term(fields[1]))
            vocab.add(normalize_term(fields[2]))
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
    return vocab


def orphans(t: Taxonomy) -> set[str]:
    """Vocabulary terms (root excluded) incident to no edge."""
    incident = {term for edge in t.edges for term in edge}
    return set(t.vocabulary) - incident - {t.root}


def components(t: Taxonomy) -> list[frozenset[str]]:
    """Weakly connected components of the undirected edge view.

    Isolated vocabulary terms form singleton components.  The result is a
    partition of the vocabulary, sorted by smallest member for determinism.
    """
    neighbours: dict[str, set[str]] = {term: set() for term in t.vocabulary}
    for child, parent in t.edges:
        neighbours[child].add(parent)
        neighbours[parent].add(child)
    seen: set[str] = set()
    parts: list[frozenset[str]] = []
    for start in t.vocabulary:
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        part = {start}
        while queue:
            node = queue.popleft()
            for other in neighbours[node]:
                if other not in seen:
                    seen.add(other)
                    part.add(other)
                    queue.append(other)
        parts.append(frozenset(part))
    parts.sort(key=min)
    return parts


def component_of(t: Taxonomy, term: str) -> frozenset[str]:
    """The weakly connected component containing `term`."""
    for part in components(t):
        if term in part:
            return part
    raise KeyError(term)


def _topological_order(vocabulary: Iterable[str], edges: Iterable[Edge]) -> list[str] | None:
    """Kahn's algorithm; None if the edge relation has a cycle."""
    out_degree = {term: 0 for term in vocabulary}
    incoming: dict[str, list[str]] = {term: [] for term in vocabulary}
    for child, parent in edges:
        out_degree[child] += 1
        incoming[parent].append(child)
    ready = deque(sorted(t for t, d in out_degree.items() if d == 0))
    order = []
    while ready:
        node = ready.popleft()
        order.append(node)
        for child in incoming[node]:
            out_degree[child] -= 1
            if out_degree[child] == 0:
                ready.append(child)
    if len(order) != len(out_degree):
        return None
    return order


def strongly_connected_components(vocabulary: Iterable[str], edges: Iterable[Edge]) -> list[set[str]]:
    """Tarjan's algorithm, iterative to cope with long cycle chains."""
    succ: dict[str, list[str]] = {term: [] for term in vocabulary}
    for child, parent in edges:
        succ[child].append(parent)
    for targets in succ.values():
        targets.sort()

    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    sccs: list[set[str]] = []

    for start in sorted(succ):
        if start in index:
            continue
        # explicit DFS stack of (node, iterator position)
        work = [(start, 0)]
        while work:
            node, i = work.pop()
            if i == 0:
                index[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            while i < len(succ[node]):
                nxt = succ[node][i]
                i += 1
                if nxt not in index:
                    work.append((node, i))
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            if lowlink[node] == index[node]:
                scc = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.add(member)
                    if member == node:
                        break
                sccs.append(scc)
            if work:
                parent_node = work[-1][0]
                lowlink[parent_node] = min(lowlink[parent_node], lowlink[node])
    return sccs


def break_cycles(t: Taxonomy, seed: int) -> tuple[Taxonomy, frozenset[Edge]]:
    """Remove randomly chosen edges from cycles until the graph is acyclic.

    Every self loop is removed outright.  For each strongly connected
    component of size >= 2 one member edge is removed per round, then the
    components are recomputed; this repeats until no cycle remains.  Only
    edges inside some cycle are ever touched.  Deterministic for a fixed
    seed.
    """
    rng = random.Random(seed)
    edges = set(t.edges)
    removed: set[Edge] = set()

    for edge in [e for e in edges if e[0] == e[1]]:
        edges.discard(edge)
        removed.add(edge)

    while True:
        cyclic = [scc for scc in strongly_connected_components(t.vocabulary, edges) if len(scc) >= 2]
        if not cyclic:
            break
        cyclic.sort(key=min)
        for scc in cyclic:
            internal = sorted(e for e in edges if e[0] in scc and e[1] in scc)
            if not internal:
                continue
            victim = rng.choice(internal)
            edges.discard(victim)
            removed.add(victim)

    return t.with_edges(edges), frozenset(removed)


def sanitize_root(t: Taxonomy) -> Taxonomy:
    """Drop every edge in which the root appears as the child."""
    return t.with_edges(e for e in t.edges if e[0] != t.root)


def structure_report(t: Taxonomy, cycle_count_removed: int = 0) -> StructureReport:
    return StructureReport(
        orphan_count=len(orphans(t)),
        component_count=len(components(t)),
        edge_count=len(t.edges),
        cycle_count_removed=cycle_count_removed,
    )
