"""Three-stage taxonomy repair driven by an embedding backend.

Stage 1 scores every existing child -> parent edge with an embedding rank
and removes edges ranked worse than the mean, re-attaching the severed
components near their best match.  Stage 2 attaches orphan terms whose
best match clears the same mean threshold.  Stage 3 attaches leftover
orphans to the longest connected term that appears inside them as a
token-boundary substring.  A final cycle-breaking pass keeps the result
acyclic.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from typing import Protocol

from taxrefine import euclidean as euc
from taxrefine import hyperbolic as hyp
from taxrefine.taxonomy import Edge, Taxonomy, break_cycles, components, orphans


@dataclass(frozen=True)
class RankTable:
    """Per-edge embedding ranks and their mean, the removal threshold.

    Entries cover exactly the edges the backend could score; the rest are
    recorded in `excluded`.  `mean_rank` is 0.0 for an empty table, in
    which case no rank-gated action fires.
    """

    entries: dict[Edge, int]
    mean_rank: float
    excluded: tuple[Edge, ...] = ()


@dataclass
class RefinementLog:
    """Every taxonomy mutation, grouped by pipeline stage."""

    removed_edges: list[Edge] = field(default_factory=list)
    relocated_components: list[Edge] = field(default_factory=list)
    attached_orphans: list[Edge] = field(default_factory=list)
    attached_compounds: list[Edge] = field(default_factory=list)
    cycle_edges_removed: list[Edge] = field(default_factory=list)

    def merge(self, other: "RefinementLog") -> None:
        self.removed_edges.extend(other.removed_edges)
        self.relocated_components.extend(other.relocated_components)
        self.attached_orphans.extend(other.attached_orphans)
        self.attached_compounds.extend(other.attached_compounds)
        self.cycle_edges_removed.extend(other.cycle_edges_removed)

    def to_tsv_lines(self) -> list[str]:
        stages = [
            ("relocate", "removed", self.removed_edges),
            ("relocate", "attached", self.relocated_components),
            ("orphans", "attached", self.attached_orphans),
            ("compounds", "attached", self.attached_compounds),
            ("cycles", "removed", self.cycle_edges_removed),
        ]
        return [
            f"{stage}\t{action}\t{child}\t{parent}"
            for stage, action, edges in stages
            for child, parent in edges
        ]


class Backend(Protocol):
    """What the refinement stages need from an embedding."""

    name: str

    def has(self, term: str) -> bool: ...

    def edge_rank(self, t: Taxonomy, child: str, parent: str) -> int | None: ...

    def nearest_in(self, term: str, candidates: list[str]) -> str | None: ...

    def orphan_parent(
        self, t: Taxonomy, orphan: str, connected: list[str], mean_rank: float | None
    ) -> str | None: ...


class PoincareBackend:
    """Hyperbolic backend: edge ranks are parent ranks in the distance
    order around the child; orphans attach to their nearest connected term
    when that term's rank clears the stored mean."""

    name = "poincare"

    def __init__(self, model: hyp.PoincareModel):
        self.model = model

    def has(self, term: str) -> bool:
        return term in self.model

    def edge_rank(self, t: Taxonomy, child: str, parent: str) -> int | None:
        if child not in self.model or parent not in self.model:
            return None
        return hyp.rank(self.model, child, parent)

    def nearest_in(self, term: str, candidates: list[str]) -> str | None:
        if term not in self.model:
            return None
        viable = [c for c in candidates if c != term and c in self.model]
        if not viable:
            return None
        return hyp.nearest(self.model, term, viable, 1)[0][0]

    def orphan_parent(
        self, t: Taxonomy, orphan: str, connected: list[str], mean_rank: float | None
    ) -> str | None:
        if mean_rank is None:
            return None
        target = self.nearest_in(orphan, connected)
        if target is None:
            return None
        if hyp.rank(self.model, orphan, target) <= mean_rank:
            return target
        return None


class EuclideanBackend:
    """Distributional backend: similarity stands in for co-hyponymy, so an
    edge is scored by the rank of the child's most similar co-hyponym, and
    an orphan attaches to the parent of its most similar connected term."""

    name = "euclid"

    def __init__(self, model: euc.EuclideanModel):
        self.model = model

    def has(self, term: str) -> bool:
        return term in self.model

    def edge_rank(self, t: Taxonomy, child: str, parent: str) -> int | None:
        if child not in self.model:
            return None
        cohyponyms = [c for c in t.children_of(parent) if c != child and c in self.model]
        if not cohyponyms:
            return None
        return min(euc.sim_rank(self.model, child, c) for c in cohyponyms)

    def nearest_in(self, term: str, candidates: list[str]) -> str | None:
        if term not in self.model:
            return None
        viable = [c for c in candidates if c != term and c in self.model]
        if not viable:
            return None
        return euc.most_similar(self.model, term, viable, 1)[0][0]

    def orphan_parent(
        self, t: Taxonomy, orphan: str, connected: list[str], mean_rank: float | None
    ) -> str | None:
        cohyponym = self.nearest_in(orphan, connected)
        if cohyponym is None:
            return None
        parents = sorted(t.parents_of(cohyponym))
        return parents[0] if parents else None


def build_rank_table(t: Taxonomy, backend: Backend) -> RankTable:
    """Score every edge the backend can see.

    Raises ValueError when the backend shares no vocabulary with the
    taxonomy at all.
    """
    if not any(backend.has(term) for term in t.vocabulary):
        raise ValueError("taxonomy vocabulary and embedding vocabulary do not overlap")
    entries: dict[Edge, int] = {}
    excluded: list[Edge] = []
    for child, parent in sorted(t.edges):
        r = backend.edge_rank(t, child, parent)
        if r is None:
            excluded.append((child, parent))
        else:
            entries[(child, parent)] = r
    mean = sum(entries.values()) / len(entries) if entries else 0.0
    return RankTable(entries, mean, tuple(excluded))


def _component_top(t: Taxonomy, part: frozenset[str]) -> str:
    """The member to re-attach: no parent inside the component, ties broken
    by most descendants within the component, then lexicographically."""
    tops = [m for m in part if not (t.parents_of(m) & part)]
    if not tops:
        tops = list(part)
    children_in = {m: [c for c in t.children_of(m) if c in part] for m in part}

    def descendant_count(member: str) -> int:
        seen = set()
        queue = deque(children_in[member])
        while queue:
            node = queue.popleft()
            if node in seen:
                continue
            seen.add(node)
            queue.extend(children_in[node])
        return len(seen)

    return sorted(tops, key=lambda m: (-descendant_count(m), m))[0]


def relocate_outliers(t: Taxonomy, rt: RankTable, backend: Backend) -> tuple[Taxonomy, RefinementLog]:
    """Remove edges ranked worse than the mean, then re-attach the top of
    each severed non-singleton component to its nearest representable term
    in the root component (or to the root when nothing is representable).

    Terms isolated by the removals are left for orphan attachment.
    """
    log = RefinementLog()
    kept = set(t.edges)
    for edge in sorted(rt.entries):
        if rt.entries[edge] > rt.mean_rank:
            kept.discard(edge)
            log.removed_edges.append(edge)
    stripped = t.with_edges(kept)

    parts = components(stripped)
    root_part = next(p for p in parts if t.root in p)
    root_members = sorted(root_part)
    for part in parts:
        if part is root_part or len(part) == 1:
            continue
        top = _component_top(stripped, part)
        target = backend.nearest_in(top, root_members)
        if target is None:
            target = t.root
        kept.add((top, target))
        log.relocated_components.append((top, target))
    return t.with_edges(kept), log


def attach_orphans(t: Taxonomy, rt: RankTable, backend: Backend) -> tuple[Taxonomy, RefinementLog]:
    """Attach each representable orphan to the parent proposed by the
    backend; the Poincare route additionally requires the candidate's rank
    to be at or below the mean stored in the rank table."""
    log = RefinementLog()
    connected = sorted(t.connected_terms())
    mean = rt.mean_rank if rt.entries else None
    edges = set(t.edges)
    for orphan in sorted(orphans(t)):
        parent = backend.orphan_parent(t, orphan, connected, mean)
        if parent is not None and parent != orphan:
            edges.add((orphan, parent))
            log.attached_orphans.append((orphan, parent))
    return t.with_edges(edges), log


def _token_match_positions(term_tokens: list[str], orphan_tokens: list[str]) -> list[int]:
    width = len(term_tokens)
    return [
        i
        for i in range(len(orphan_tokens) - width + 1)
        if orphan_tokens[i : i + width] == term_tokens
    ]


def _best_substring_parent(orphan: str, connected: list[str]) -> str | None:
    orphan_tokens = orphan.split()
    scored = []
    for term in connected:
        if term == orphan:
            continue
        positions = _token_match_positions(term.split(), orphan_tokens)
        if positions:
            scored.append((-len(term), -max(positions), term))
    if not scored:
        return None
    return sorted(scored)[0][2]


def attach_compounds(t: Taxonomy) -> tuple[Taxonomy, RefinementLog]:
    """Attach remaining orphans to the longest connected term occurring in
    them as a token-boundary substring (ties: rightmost occurrence, then
    lexicographic).  Orphans with no such term stay disconnected.
    """
    log = RefinementLog()
    connected = sorted(t.connected_terms())
    edges = set(t.edges)
    for orphan in sorted(orphans(t)):
        target = _best_substring_parent(orphan, connected)
        if target is not None:
            edges.add((orphan, target))
            log.attached_compounds.append((orphan, target))
    return t.with_edges(edges), log


def refine(
    t: Taxonomy,
    backend: Backend,
    seed: int,
    threshold_override: float | None = None,
) -> tuple[Taxonomy, RefinementLog]:
    """Full pipeline: rank table, outlier relocation, orphan attachment,
    compound attachment, cycle breaking.

    Expects a sanitized input (no root-as-child edge, acyclic).  The
    vocabulary is never changed.  `threshold_override` replaces the mean
    rank as the removal/attachment threshold when given.
    """
    rt = build_rank_table(t, backend)
    if threshold_override is not None:
        rt = dataclasses.replace(rt, mean_rank=float(threshold_override))
    log = RefinementLog()
    t, stage_log = relocate_outliers(t, rt, backend)
    log.merge(stage_log)
    t, stage_log = attach_orphans(t, rt, backend)
    log.merge(stage_log)
    t, stage_log = attach_compounds(t)
    log.merge(stage_log)
    t, removed = break_cycles(t, seed)
    log.cycle_edges_removed.extend(sorted(removed))
    return t, log


def root_baseline(t: Taxonomy) -> Taxonomy:
    """Connect every orphan straight to the root."""
    edges = set(t.edges) | {(o, t.root) for o in orphans(t)}
    return t.with_edges(edges)
