"""Pre-trained Euclidean word vectors with cosine similarity queries.

Vectors arrive in the common text export: a `<count> <dim>` header, then
one term and its coordinates per line.  Compound terms are stored with
underscores by the training side, so lookups try both spellings.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from taxrefine._ranking import rank_from_scores, top_k_from_scores
from taxrefine.hyperbolic import MissingRepresentationError
from taxrefine.taxonomy import ParseError, normalize_term


def cosine(u, v) -> float:
    """Cosine similarity, clamped to [-1, 1].  Zero vectors are rejected."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


class EuclideanModel:
    """Term -> real vector, with similarity ranks mirroring the hyperbolic
    rank contract (greater cosine = closer)."""

    def __init__(self, terms: Sequence[str], vectors: np.ndarray, skipped_zero_rows: int = 0):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(terms) != vectors.shape[0]:
            raise ValueError("terms and vectors disagree")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero vectors cannot be stored")
        self.dim = int(vectors.shape[1])
        self.skipped_zero_rows = skipped_zero_rows
        self._terms = list(terms)
        self._vectors = vectors
        self._norms = norms
        self._index = {term: i for i, term in enumerate(self._terms)}

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return self.resolve(term) is not None

    def terms(self) -> list[str]:
        return list(self._terms)

    def resolve(self, term: str) -> str | None:
        """Stored key for a term: exact spelling first, then the
        space/underscore swapped form."""
        if term in self._index:
            return term
        swapped = term.replace(" ", "_") if " " in term else term.replace("_", " ")
        if swapped in self._index:
            return swapped
        return None

    def _idx(self, term: str) -> int:
        key = self.resolve(term)
        if key is None:
            raise MissingRepresentationError(term)
        return self._index[key]

    def vector(self, term: str) -> np.ndarray:
        return self._vectors[self._idx(term)].copy()

    def similarities_from(self, term: str) -> np.ndarray:
        """Cosine similarity from one term to every stored term."""
        i = self._idx(term)
        u = self._vectors[i]
        sims = self._vectors @ u / (self._norms * self._norms[i])
        return np.clip(sims, -1.0, 1.0)


def load_vectors(lines: Iterable[str], vocab_filter: set[str] | None = None) -> EuclideanModel:
    """Read the text vector format, keeping only filter hits when a
    vocabulary filter is given (matched via space/underscore forms).

    Zero vectors are skipped and counted, not stored.
    """
    wanted = None
    if vocab_filter is not None:
        wanted = set(vocab_filter)
        wanted |= {t.replace(" ", "_") for t in vocab_filter}
        wanted |= {t.replace("_", " ") for t in vocab_filter}
    terms: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    skipped = 0
    dim = None
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip() or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if dim is None:
            if len(fields) != 2:
                raise ParseError(line_no, "expected `<count> <dim>` header")
            try:
                dim = int(fields[1])
            except ValueError as exc:
                raise ParseError(line_no, f"bad dimension {fields[1]!r}") from exc
            if dim < 1:
                raise ParseError(line_no, "dimension must be positive")
            continue
        if len(fields) != dim + 1:
            raise ParseError(line_no, f"expected {dim} coordinates, got {len(fields) - 1}")
        term = normalize_term(fields[0])
        if wanted is not None and term not in wanted and term.replace("_", " ") not in wanted:
            continue
        if term in seen:
            continue
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(line_no, "bad coordinate") from exc
        if not np.any(vec):
            skipped += 1
            continue
        seen.add(term)
        terms.append(term)
        rows.append(vec)
    if dim is None:
        raise ParseError(1, "missing `<count> <dim>` header")
    return EuclideanModel(terms, np.array(rows).reshape(len(rows), dim), skipped_zero_rows=skipped)


def serialize_vectors(model: EuclideanModel) -> list[str]:
    lines = [f"{len(model)} {model.dim}"]
    for term in model.terms():
        coords = " ".join(repr(float(x)) for x in model.vector(term))
        lines.append(f"{term.replace(' ', '_')} {coords}")
    return lines


def sim_rank(model: EuclideanModel, x: str, y: str) -> int:
    """1-based position of y among all stored terms sorted by descending
    cosine similarity to x; same indexing and tie contract as the
    hyperbolic rank."""
    xi = model._idx(x)
    yi = model._idx(y)
    if xi == yi:
        raise ValueError(f"rank of a term against itself is undefined: {x!r}")
    return rank_from_scores(-model.similarities_from(x), model._terms, xi, yi)


def most_similar(
    model: EuclideanModel, x: str, candidates: Iterable[str], k: int
) -> list[tuple[str, float]]:
    """The k candidates most similar to x, descending by (similarity, term
    ascending on ties); x is excluded if present."""
    xi = model._idx(x)
    idx = sorted({model._idx(c) for c in candidates} - {xi})
    sims = model.similarities_from(x)
    return [(term, -score) for term, score in top_k_from_scores(-sims, model._terms, idx, k)]
