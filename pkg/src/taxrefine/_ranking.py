"""Shared rank/top-k logic so both embedding backends obey one contract:
1-based ranks over ascending (score, term) order, ties broken by term."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def rank_from_scores(scores: np.ndarray, terms: Sequence[str], x_idx: int, y_idx: int) -> int:
    """Rank of y among all terms except x, ordered by (score, term) ascending."""
    target = scores[y_idx]
    less = scores < target
    count = int(np.count_nonzero(less))
    if less[x_idx]:
        count -= 1
    for i in np.flatnonzero(scores == target):
        if i != x_idx and i != y_idx and terms[i] < terms[y_idx]:
            count += 1
    return count + 1


def top_k_from_scores(
    scores: np.ndarray, terms: Sequence[str], candidate_idx: Sequence[int], k: int
) -> list[tuple[str, float]]:
    """The k candidates with smallest (score, term), as (term, score) pairs."""
    ordered = sorted((float(scores[i]), terms[i]) for i in candidate_idx)
    return [(term, score) for score, term in ordered[:k]]
