"""Poincare ball geometry and embedding training on cleaned IS-A pairs.

Points live strictly inside the d-dimensional unit ball.  The distance

    d(u, v) = arcosh(1 + 2 * ||u - v||^2 / ((1 - ||u||^2) * (1 - ||v||^2)))

grows without bound toward the boundary, which is what lets the embedding
encode hierarchy depth: general terms sit near the centre, specific terms
near the rim.  Training minimises, over positive (hyponym, hypernym) pairs,
the negative log softmax of -d(u, v) against sampled negatives, using
Riemannian SGD: the Euclidean gradient is rescaled by (1 - ||theta||^2)^2 / 4
and the updated point is pulled back inside the ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from taxrefine._ranking import rank_from_scores, top_k_from_scores
from taxrefine.relations import RelationSet
from taxrefine.taxonomy import ParseError

BALL_EPS = 1e-5

# pairs whose arcosh argument is this close to 1 are treated as coincident:
# the distance is 0 and no gradient flows through them
_DEGENERATE_GAMMA = 1.0 + 1e-15

_BATCH_SIZE = 32
_REJECTION_ROUNDS = 16


class MissingRepresentationError(KeyError):
    """A term has no embedding; callers decide the fallback."""

    def __init__(self, term: str):
        super().__init__(term)
        self.term = term


def _check_in_ball(point: np.ndarray, name: str) -> None:
    if float(np.dot(point, point)) >= 1.0:
        raise ValueError(f"{name} lies on or outside the unit ball")


def poincare_distance(u, v) -> float:
    """Ball-model distance between two interior points.

    Symmetric, non-negative, zero iff u = v.  The arcosh argument is
    clamped at 1 to absorb rounding near coincident points.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_in_ball(u, "u")
    _check_in_ball(v, "v")
    diff = u - v
    gamma = 1.0 + 2.0 * float(np.dot(diff, diff)) / (
        (1.0 - float(np.dot(u, u))) * (1.0 - float(np.dot(v, v)))
    )
    return float(np.arccosh(max(gamma, 1.0)))


def distance_gradient(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean gradients of poincare_distance with respect to u and v.

    Zero vectors are returned for coincident points, where the distance is
    not differentiable.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_in_ball(u, "u")
    _check_in_ball(v, "v")
    alpha = 1.0 - float(np.dot(u, u))
    beta = 1.0 - float(np.dot(v, v))
    diff = u - v
    gamma = 1.0 + 2.0 * float(np.dot(diff, diff)) / (alpha * beta)
    if gamma <= _DEGENERATE_GAMMA:
        return np.zeros_like(u), np.zeros_like(v)
    root = np.sqrt(gamma * gamma - 1.0)
    uv = float(np.dot(u, v))
    grad_u = (4.0 / (beta * root)) * (
        ((float(np.dot(v, v)) - 2.0 * uv + 1.0) / (alpha * alpha)) * u - v / alpha
    )
    grad_v = (4.0 / (alpha * root)) * (
        ((float(np.dot(u, u)) - 2.0 * uv + 1.0) / (beta * beta)) * v - u / beta
    )
    return grad_u, grad_v


def ball_metric_scale(point) -> float:
    """Inverse metric factor (1 - ||p||^2)^2 / 4 turning Euclidean gradients
    into Riemannian ones."""
    point = np.asarray(point, dtype=np.float64)
    alpha = 1.0 - float(np.dot(point, point))
    return alpha * alpha / 4.0


def project_into_ball(points: np.ndarray, epsilon: float = BALL_EPS) -> np.ndarray:
    """Rescale rows with norm above 1 - epsilon back onto that radius."""
    points = np.atleast_2d(points)
    norms = np.sqrt(np.sum(points * points, axis=1))
    limit = 1.0 - epsilon
    over = norms > limit
    if np.any(over):
        points = points.copy()
        points[over] *= (limit / norms[over])[:, None]
    return points


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 50
    epochs: int = 400
    learning_rate: float = 0.1
    negatives: int = 10
    burn_in_epochs: int = 10
    burn_in_rate_divisor: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.negatives < 1:
            raise ValueError("negatives must be positive")
        if self.burn_in_epochs < 0:
            raise ValueError("burn_in_epochs must be non-negative")
        if self.burn_in_epochs >= self.epochs:
            raise ValueError("burn_in_epochs must be smaller than epochs")
        if self.burn_in_rate_divisor <= 0:
            raise ValueError("burn_in_rate_divisor must be positive")


class PoincareModel:
    """Term -> interior ball point, with vectorized distance queries.

    Lookups are strict: a missing term raises MissingRepresentationError
    rather than returning a default.  A compound queried with spaces also
    matches its underscore-joined spelling and vice versa.
    """

    def __init__(self, terms: Sequence[str], vectors: np.ndarray, epsilon: float = BALL_EPS):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(terms) != vectors.shape[0]:
            raise ValueError("terms and vectors disagree")
        norms2 = np.sum(vectors * vectors, axis=1)
        if np.any(norms2 >= 1.0):
            bad = terms[int(np.argmax(norms2))]
            raise ValueError(f"vector for {bad!r} lies on or outside the unit ball")
        self.dim = int(vectors.shape[1])
        self.epsilon = epsilon
        self._terms = list(terms)
        self._vectors = vectors
        self._index = {term: i for i, term in enumerate(self._terms)}
        self.loss_history: list[float] = []

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return self.resolve(term) is not None

    def terms(self) -> list[str]:
        return list(self._terms)

    def resolve(self, term: str) -> str | None:
        """Stored key for a term, trying the space and underscore forms."""
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

    def distances_from(self, term: str) -> np.ndarray:
        """Poincare distances from one term to every stored term."""
        u = self._vectors[self._idx(term)]
        diff = self._vectors - u
        dist2 = np.sum(diff * diff, axis=1)
        alpha = 1.0 - float(np.dot(u, u))
        beta = 1.0 - np.sum(self._vectors * self._vectors, axis=1)
        gamma = np.maximum(1.0 + 2.0 * dist2 / (alpha * beta), 1.0)
        return np.arccosh(gamma)


def rank(model: PoincareModel, x: str, y: str) -> int:
    """1-based position of y among all stored terms sorted by distance to x.

    x itself is excluded from the list; distance ties order by term.  Rank 1
    means y is x's nearest neighbour.
    """
    xi = model._idx(x)
    yi = model._idx(y)
    if xi == yi:
        raise ValueError(f"rank of a term against itself is undefined: {x!r}")
    return rank_from_scores(model.distances_from(x), model._terms, xi, yi)


def nearest(
    model: PoincareModel, x: str, candidates: Iterable[str], k: int
) -> list[tuple[str, float]]:
    """The k candidates closest to x, ascending by (distance, term).

    x is excluded if it appears among the candidates.
    """
    xi = model._idx(x)
    idx = sorted({model._idx(c) for c in candidates} - {xi})
    scores = model.distances_from(x)
    return top_k_from_scores(scores, model._terms, idx, k)


def _sample_negatives(
    rng: np.random.Generator,
    forbidden: np.ndarray,
    fallback: np.ndarray,
    u_idx: np.ndarray,
    count: int,
) -> np.ndarray:
    """Uniform negatives per row, avoiding each row's forbidden set.

    Rows whose forbidden set covers the whole vocabulary fall back to
    excluding only the known positives, so every row can be served.
    Rejection sampling keeps the common case fully vectorized; stragglers
    are filled exactly from the allowed set.
    """
    n = forbidden.shape[1]
    rows = len(u_idx)
    use_fallback = forbidden[u_idx].all(axis=1)
    mask_rows = np.where(use_fallback[:, None], fallback[u_idx], forbidden[u_idx])
    out = rng.integers(0, n, size=(rows, count))
    bad = np.take_along_axis(mask_rows, out, axis=1)
    for _ in range(_REJECTION_ROUNDS):
        if not bad.any():
            return out
        fresh = rng.integers(0, n, size=(rows, count))
        out = np.where(bad, fresh, out)
        bad = np.take_along_axis(mask_rows, out, axis=1)
    for r, c in zip(*np.nonzero(bad)):
        allowed = np.flatnonzero(~mask_rows[r])
        out[r, c] = rng.choice(allowed)
    return out


def train(relations: RelationSet, config: TrainConfig) -> PoincareModel:
    """Train ball embeddings for every term of a cleaned relation set.

    Deterministic for a fixed seed.  Each positive pair is scored against
    `config.negatives` uniformly sampled negatives (excluding the hyponym's
    known hypernyms and the hyponym itself); pairs are processed in small
    shuffled batches with Riemannian SGD and re-projection into the ball.
    The mean loss of each epoch is recorded on the returned model.
    """
    if len(relations) == 0:
        raise ValueError("cannot train on an empty relation set")
    if config.dim < 2:
        raise ValueError("embedding dimension must be at least 2")

    pairs = sorted(relations.pairs)
    terms = sorted({t for pair in pairs for t in pair})
    n = len(terms)
    index = {t: i for i, t in enumerate(terms)}
    pos_u = np.array([index[c] for c, _ in pairs], dtype=np.intp)
    pos_v = np.array([index[p] for _, p in pairs], dtype=np.intp)

    forbidden = np.zeros((n, n), dtype=bool)
    forbidden[np.arange(n), np.arange(n)] = True
    forbidden[pos_u, pos_v] = True
    fallback = np.zeros((n, n), dtype=bool)
    fallback[pos_u, pos_v] = True

    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(-0.001, 0.001, size=(n, config.dim))

    limit = 1.0 - BALL_EPS
    n_pairs = len(pairs)
    loss_history: list[float] = []

    for epoch in range(config.epochs):
        lr = config.learning_rate
        if epoch < config.burn_in_epochs:
            lr /= config.burn_in_rate_divisor
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, _BATCH_SIZE):
            batch = order[start : start + _BATCH_SIZE]
            u_idx = pos_u[batch]
            negs = _sample_negatives(rng, forbidden, fallback, u_idx, config.negatives)
            cand = np.concatenate([pos_v[batch][:, None], negs], axis=1)

            u = theta[u_idx]
            c = theta[cand]
            uu = np.sum(u * u, axis=1)
            cc = np.sum(c * c, axis=2)
            uc = np.einsum("md,mkd->mk", u, c)
            diff2 = uu[:, None] - 2.0 * uc + cc
            alpha = 1.0 - uu
            beta = 1.0 - cc
            gamma = np.maximum(1.0 + 2.0 * diff2 / (alpha[:, None] * beta), 1.0)
            dist = np.arccosh(gamma)

            neg_d = -dist
            peak = neg_d.max(axis=1, keepdims=True)
            lse = peak[:, 0] + np.log(np.sum(np.exp(neg_d - peak), axis=1))
            epoch_loss += float(np.sum(dist[:, 0] + lse))
            prob = np.exp(neg_d - lse[:, None])
            weight = -prob
            weight[:, 0] += 1.0

            live = gamma > _DEGENERATE_GAMMA
            root = np.sqrt(np.maximum(gamma * gamma - 1.0, 0.0))
            safe_root = np.where(live, root, 1.0)

            wc_u = np.where(live, weight * 4.0 / (beta * safe_root), 0.0)
            coef_u = (cc - 2.0 * uc + 1.0) / (alpha * alpha)[:, None]
            grad_u = np.sum(wc_u * coef_u, axis=1)[:, None] * u
            grad_u -= np.einsum("mk,mkd->md", wc_u, c) / alpha[:, None]

            wc_c = np.where(live, weight * 4.0 / (alpha[:, None] * safe_root), 0.0)
            coef_c = (uu[:, None] - 2.0 * uc + 1.0) / (beta * beta)
            grad_c = (wc_c * coef_c)[:, :, None] * c
            grad_c -= (wc_c / beta)[:, :, None] * u[:, None, :]

            grad_u *= (alpha * alpha / 4.0)[:, None]
            grad_c *= (beta * beta / 4.0)[:, :, None]

            np.add.at(theta, u_idx, -lr * grad_u)
            np.add.at(theta, cand.reshape(-1), -lr * grad_c.reshape(-1, config.dim))

            touched = np.unique(np.concatenate([u_idx, cand.reshape(-1)]))
            block = theta[touched]
            norms = np.sqrt(np.sum(block * block, axis=1))
            over = norms > limit
            if np.any(over):
                rows = touched[over]
                theta[rows] *= (limit / norms[over])[:, None]
        loss_history.append(epoch_loss / n_pairs)

    model = PoincareModel(terms, theta)
    model.loss_history = loss_history
    return model


def serialize_model(model: PoincareModel) -> list[str]:
    """Text export: `<count> <dim>` header, then one term and its
    coordinates per line, spaces in terms written as underscores."""
    lines = [f"{len(model)} {model.dim}"]
    for term in model.terms():
        vec = model.vector(term)
        coords = " ".join(repr(float(x)) for x in vec)
        lines.append(f"{term.replace(' ', '_')} {coords}")
    return lines


def load_model(lines: Iterable[str], epsilon: float = BALL_EPS) -> PoincareModel:
    """Inverse of serialize_model; rejects rows outside the unit ball."""
    terms: list[str] = []
    rows: list[np.ndarray] = []
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
            continue
        if len(fields) != dim + 1:
            raise ParseError(line_no, f"expected {dim} coordinates, got {len(fields) - 1}")
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(line_no, "bad coordinate") from exc
        if float(np.dot(vec, vec)) >= 1.0:
            raise ParseError(line_no, "point lies on or outside the unit ball")
        terms.append(fields[0].replace("_", " "))
        rows.append(vec)
    if dim is None:
        raise ParseError(1, "missing `<count> <dim>` header")
    return PoincareModel(terms, np.array(rows).reshape(len(rows), dim), epsilon=epsilon)
