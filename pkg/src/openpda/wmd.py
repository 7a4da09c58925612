"""Word Mover's Distance over an embedding store.

A document is reduced to a normalized bag of words (nBOW): distinct
in-vocabulary words with frequency weights summing to one. The distance
between two documents is the cost of the cheapest transport plan moving
one weight distribution onto the other, where moving weight between two
words costs their euclidean embedding distance.

The transport problem is solved exactly with a simplex LP solver; the
resulting plan is then re-balanced on its support so the row and column
sums match the document weights to full floating-point accuracy. A cheap
lower bound (dropping one side's constraints) is provided for pruning.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import AllWordsDropped, SizeExceeded
from .embeddings import EmbeddingStore
from .language import Token, stopwords

MAX_DOC_WORDS = 64
_MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class NBowDoc:
    words: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        assert len(self.words) == len(self.weights) >= 1
        assert all(w > 0 for w in self.weights)
        assert abs(sum(self.weights) - 1.0) <= 1e-9


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray  # shape (len(a.words), len(b.words))
    cost: float


def to_nbow(tokens: list[Token], store: EmbeddingStore, drop_stopwords: bool = True) -> NBowDoc:
    """Count in-vocabulary content words and normalize the counts.

    Punctuation, stopwords (when enabled) and out-of-vocabulary words are
    dropped. Raises AllWordsDropped when nothing survives, which callers
    treat as "this utterance cannot be scored".
    """
    counts: dict[str, int] = {}
    for tok in tokens:
        if tok.is_punct:
            continue
        if drop_stopwords and tok.is_stopword:
            continue
        if tok.normalized not in store:
            continue
        counts[tok.normalized] = counts.get(tok.normalized, 0) + 1
    if not counts:
        raise AllWordsDropped("no in-vocabulary content words in the utterance")
    total = sum(counts.values())
    words = tuple(counts.keys())
    weights = tuple(c / total for c in counts.values())
    return NBowDoc(words=words, weights=weights)


def _cost_matrix(a: NBowDoc, b: NBowDoc, store: EmbeddingStore) -> np.ndarray:
    xa = store.matrix(list(a.words))
    xb = store.matrix(list(b.words))
    diff = xa[:, None, :] - xb[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def _rebalance_on_support(
    plan: np.ndarray, row_w: np.ndarray, col_w: np.ndarray
) -> np.ndarray | None:
    """Recompute allocations exactly from the marginals on the plan's support.

    A basic LP solution's support is a forest in the bipartite row/column
    graph, so allocations are uniquely determined by iteratively peeling
    degree-one nodes. Returns None when the support is not a forest (then
    the raw solver output is kept).
    """
    m, n = plan.shape
    support = [(i, j) for i in range(m) for j in range(n) if plan[i, j] > 1e-12]
    # every row and column must be touched, else the marginals cannot be met
    rows_deg = np.zeros(m, dtype=int)
    cols_deg = np.zeros(n, dtype=int)
    for i, j in support:
        rows_deg[i] += 1
        cols_deg[j] += 1
    if (rows_deg == 0).any() or (cols_deg == 0).any():
        return None

    remaining_row = row_w.astype(np.float64).copy()
    remaining_col = col_w.astype(np.float64).copy()
    out = np.zeros_like(plan)
    cells = list(support)  # fixed order keeps the peel fully deterministic
    while cells:
        leaf_at = None
        for idx, (i, j) in enumerate(cells):
            if rows_deg[i] == 1 or cols_deg[j] == 1:
                leaf_at = idx
                break
        if leaf_at is None:
            return None  # cycle in the support
        i, j = cells.pop(leaf_at)
        amount = remaining_row[i] if rows_deg[i] == 1 else remaining_col[j]
        amount = max(amount, 0.0)
        out[i, j] = amount
        remaining_row[i] -= amount
        remaining_col[j] -= amount
        rows_deg[i] -= 1
        cols_deg[j] -= 1
    return out


def solve_transport(a: NBowDoc, b: NBowDoc, store: EmbeddingStore) -> TransportPlan:
    """Exact minimum-cost transport of a's weights onto b's weights."""
    m, n = len(a.words), len(b.words)
    if m > MAX_DOC_WORDS or n > MAX_DOC_WORDS:
        raise SizeExceeded(f"documents limited to {MAX_DOC_WORDS} distinct words, got {m}x{n}")

    cost = _cost_matrix(a, b, store)
    row_w = np.array(a.weights)
    col_w = np.array(b.weights)

    # equality constraints: row sums and column sums
    n_vars = m * n
    a_eq = np.zeros((m + n, n_vars))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([row_w, col_w])

    res = linprog(
        c=cost.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
    )
    if not res.success:  # cannot happen for balanced nonnegative marginals
        raise RuntimeError(f"transport solve failed: {res.message}")

    plan = res.x.reshape(m, n)
    refined = _rebalance_on_support(plan, row_w, col_w)
    if refined is not None:
        plan = refined

    assert np.abs(plan.sum(axis=1) - row_w).max() <= _MARGINAL_TOL
    assert np.abs(plan.sum(axis=0) - col_w).max() <= _MARGINAL_TOL
    return TransportPlan(matrix=plan, cost=float((plan * cost).sum()))


def wmd(a: NBowDoc, b: NBowDoc, store: EmbeddingStore) -> float:
    return solve_transport(a, b, store).cost


def wmd_lower_bound(a: NBowDoc, b: NBowDoc, store: EmbeddingStore) -> float:
    """Relaxed distance: each word's mass flows to its nearest counterpart.

    The maximum of the two one-sided relaxations, never exceeding the true
    transport cost.
    """
    m, n = len(a.words), len(b.words)
    if m > MAX_DOC_WORDS or n > MAX_DOC_WORDS:
        raise SizeExceeded(f"documents limited to {MAX_DOC_WORDS} distinct words, got {m}x{n}")
    cost = _cost_matrix(a, b, store)
    row_w = np.array(a.weights)
    col_w = np.array(b.weights)
    forward = float((row_w * cost.min(axis=1)).sum())
    backward = float((col_w * cost.min(axis=0)).sum())
    return max(forward, backward)
