"""Noisy IS-A candidate triples and the cleaning rules that make them
antisymmetric and irreflexive before embedding training."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from taxrefine.taxonomy import ParseError, normalize_term

Pair = tuple[str, str]


class RelationTriple(NamedTuple):
    hyponym: str
    hypernym: str
    frequency: int


@dataclass(frozen=True)
class RelationSet:
    """Candidate (hyponym, hypernym) pairs with aggregated frequencies."""

    pairs: dict[Pair, int] = field(default_factory=dict)

    def __post_init__(self):
        for (hypo, hyper), freq in self.pairs.items():
            if freq < 1:
                raise ValueError(f"frequency must be >= 1 for ({hypo!r}, {hyper!r}), got {freq}")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[RelationTriple]:
        for (hypo, hyper), freq in sorted(self.pairs.items()):
            yield RelationTriple(hypo, hyper, freq)

    def __contains__(self, pair: Pair) -> bool:
        return pair in self.pairs

    def terms(self) -> set[str]:
        return {t for pair in self.pairs for t in pair}

    def total_frequency(self) -> int:
        return sum(self.pairs.values())

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[str, str, int]]) -> "RelationSet":
        pairs: dict[Pair, int] = {}
        for hypo, hyper, freq in triples:
            key = (hypo, hyper)
            pairs[key] = pairs.get(key, 0) + freq
        return cls(pairs)


def parse_relations(lines: Iterable[str]) -> RelationSet:
    """Parse `<hyponym>\\t<hypernym>\\t<frequency>` lines.

    Terms are normalized and duplicate pairs aggregate by frequency sum.
    A non-integer or non-positive frequency is a parse error.
    """
    pairs: dict[Pair, int] = {}
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip() or stripped.startswith("#"):
            continue
        fields = stripped.split("\t")
        if len(fields) != 3:
            raise ParseError(line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        try:
            hypo = normalize_term(fields[0])
            hyper = normalize_term(fields[1])
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
        try:
            freq = int(fields[2])
        except ValueError as exc:
            raise ParseError(line_no, f"frequency is not an integer: {fields[2]!r}") from exc
        if freq < 1:
            raise ParseError(line_no, f"frequency must be positive, got {freq}")
        key = (hypo, hyper)
        pairs[key] = pairs.get(key, 0) + freq
    return RelationSet(pairs)


def serialize_relations(rel: RelationSet) -> list[str]:
    return [f"{hypo}\t{hyper}\t{freq}" for hypo, hyper, freq in rel]


def _resolve_symmetric(pairs: dict[Pair, int]) -> dict[Pair, int]:
    """Keep only the higher-frequency direction of mutually symmetric pairs.

    Frequency ties keep the lexicographically smaller (hyponym, hypernym)
    direction.
    """
    out: dict[Pair, int] = {}
    for (hypo, hyper), freq in pairs.items():
        mirror = (hyper, hypo)
        if mirror in pairs:
            other = pairs[mirror]
            if freq < other:
                continue
            if freq == other and mirror < (hypo, hyper):
                continue
        out[(hypo, hyper)] = freq
    return out


def clean(rel: RelationSet, vocab: set[str], min_freq: int) -> RelationSet:
    """Apply the cleaning rules: vocabulary restriction, frequency cutoff,
    reflexive removal, and symmetric-pair resolution.

    The result is antisymmetric and irreflexive.  `min_freq` is 3 for
    domain corpora and 5 for a general corpus by convention.
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    kept = {
        (hypo, hyper): freq
        for (hypo, hyper), freq in rel.pairs.items()
        if hypo != hyper and freq >= min_freq and hypo in vocab and hyper in vocab
    }
    return RelationSet(_resolve_symmetric(kept))


def merge(domain: RelationSet, general: RelationSet) -> RelationSet:
    """Combine two cleaned relation sets.

    Same-direction collisions sum their frequencies.  Cross-set symmetric
    conflicts are resolved by comparing the per-direction totals and
    keeping the direction with the larger total (ties: lexicographically
    smaller pair), so the result stays antisymmetric and irreflexive.
    """
    totals: dict[Pair, int] = {}
    for rel in (domain, general):
        for (hypo, hyper), freq in rel.pairs.items():
            if hypo == hyper:
                continue
            key = (hypo, hyper)
            totals[key] = totals.get(key, 0) + freq
    return RelationSet(_resolve_symmetric(totals))
