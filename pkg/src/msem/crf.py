"""Linear-chain CRF over per-position tag potentials.

Potentials are additive in log space: a path y scores
``h[0, y0] + sum_j (h[j, yj] + A[y_{j-1}, y_j])``.  The layer is agnostic
about where h comes from; callers may feed per-position probabilities or
logits.  All computation happens on a caller-supplied subset of allowed
tags so special tags can be excluded wholesale; `start_tags` further
narrows which tags may open a sequence (the transfer matrix only
constrains positions 1..n-1, so begin-inside schemes need this to keep
continuation tags off position 0).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp


class CrfError(Exception):
    pass


def _restrict(
    h: np.ndarray, A: np.ndarray, allowed: Optional[Sequence[int]]
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    if h.ndim != 2:
        raise CrfError(f"h must be (n, K), got shape {h.shape}")
    k = h.shape[1]
    if A.shape != (k, k):
        raise CrfError(f"A shape {A.shape} incompatible with K={k}")
    if h.shape[0] == 0:
        raise CrfError("empty sequence")
    if not (np.isfinite(h).all() and np.isfinite(A).all()):
        raise CrfError("non-finite potential")
    tags = sorted(allowed) if allowed is not None else list(range(k))
    if not tags:
        raise CrfError("allowed tag set is empty")
    if tags[0] < 0 or tags[-1] >= k:
        raise CrfError("allowed tag index out of range")
    return h[:, tags], A[np.ix_(tags, tags)], tags


START_PENALTY = -10000.0


def _start_offsets(
    tags: Sequence[int], start_tags: Optional[Sequence[int]]
) -> np.ndarray:
    """Additive first-position scores over the restricted tag list.

    Forbidden starts get the same large finite penalty used for impossible
    transitions; exp of it underflows to zero, so forbidden tags carry no
    probability mass and no gradient.
    """
    if start_tags is None:
        return np.zeros(len(tags))
    start = set(start_tags)
    extra = start - set(tags)
    if extra:
        raise CrfError(f"start tags {sorted(extra)} outside allowed set")
    if not start:
        raise CrfError("start tag set is empty")
    return np.array([0.0 if t in start else START_PENALTY for t in tags])


def sequence_score(
    h: np.ndarray, A: np.ndarray, tags: Sequence[int]
) -> float:
    """Unnormalized log score of one tag path."""
    n = h.shape[0]
    if len(tags) != n:
        raise CrfError(f"path length {len(tags)} != sequence length {n}")
    score = h[0, tags[0]]
    for j in range(1, n):
        score += h[j, tags[j]] + A[tags[j - 1], tags[j]]
    return float(score)


def log_partition(
    h: np.ndarray,
    A: np.ndarray,
    allowed: Optional[Sequence[int]] = None,
    start_tags: Optional[Sequence[int]] = None,
) -> float:
    """log Z by the forward algorithm in log space."""
    hs, As, tags = _restrict(h, A, allowed)
    alpha = hs[0].astype(float) + _start_offsets(tags, start_tags)
    for j in range(1, hs.shape[0]):
        alpha = hs[j] + logsumexp(alpha[:, None] + As, axis=0)
    return float(logsumexp(alpha))


def viterbi(
    h: np.ndarray,
    A: np.ndarray,
    allowed: Optional[Sequence[int]] = None,
    start_tags: Optional[Sequence[int]] = None,
) -> tuple[list[int], float]:
    """Best path and its score; ties resolve toward the lowest tag index."""
    hs, As, tags = _restrict(h, A, allowed)
    n, k = hs.shape
    delta = hs[0].astype(float) + _start_offsets(tags, start_tags)
    back = np.zeros((n, k), dtype=int)
    for j in range(1, n):
        cand = delta[:, None] + As  # (from, to)
        back[j] = np.argmax(cand, axis=0)  # first max = lowest index
        delta = hs[j] + cand[back[j], np.arange(k)]
    best_last = int(np.argmax(delta))
    path_sub = [best_last]
    for j in range(n - 1, 0, -1):
        path_sub.append(int(back[j, path_sub[-1]]))
    path_sub.reverse()
    return [tags[t] for t in path_sub], float(delta[best_last])


def path_log_probability(
    h: np.ndarray,
    A: np.ndarray,
    tags: Sequence[int],
    allowed: Optional[Sequence[int]] = None,
    start_tags: Optional[Sequence[int]] = None,
) -> float:
    """log P(y | x) = score(y) - log Z."""
    score = sequence_score(h, A, tags)
    if start_tags is not None and tags[0] not in set(start_tags):
        score += START_PENALTY
    return score - log_partition(h, A, allowed, start_tags)


def nll_and_grad(
    h: np.ndarray,
    A: np.ndarray,
    gold: Sequence[int],
    allowed: Optional[Sequence[int]] = None,
    start_tags: Optional[Sequence[int]] = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative log likelihood of gold with exact gradients wrt h and A.

    Gradients are expected counts under the model minus observed counts,
    from one forward-backward sweep.  Returned arrays match the full (n, K)
    and (K, K) shapes; rows/columns outside the allowed set stay zero.
    """
    hs, As, tags = _restrict(h, A, allowed)
    n, k = hs.shape
    sub_index = {t: i for i, t in enumerate(tags)}
    try:
        gold_sub = [sub_index[t] for t in gold]
    except KeyError as exc:
        raise CrfError(f"gold tag {exc.args[0]} not in allowed set") from None
    if len(gold_sub) != n:
        raise CrfError(f"gold length {len(gold_sub)} != sequence length {n}")
    offsets = _start_offsets(tags, start_tags)
    if offsets[gold_sub[0]] != 0.0:
        raise CrfError(f"gold path starts with forbidden tag {gold[0]}")

    alpha = np.empty((n, k))
    alpha[0] = hs[0] + offsets
    for j in range(1, n):
        alpha[j] = hs[j] + logsumexp(alpha[j - 1][:, None] + As, axis=0)
    log_z = float(logsumexp(alpha[-1]))

    beta = np.empty((n, k))
    beta[-1] = 0.0
    for j in range(n - 2, -1, -1):
        beta[j] = logsumexp(As + (hs[j + 1] + beta[j + 1])[None, :], axis=1)

    nll = log_z - sequence_score(hs, As, gold_sub)

    d_hs = np.exp(alpha + beta - log_z)  # unary marginals
    d_as = np.zeros((k, k))
    for j in range(n - 1):
        d_as += np.exp(
            alpha[j][:, None] + As + (hs[j + 1] + beta[j + 1])[None, :] - log_z
        )
    for j, t in enumerate(gold_sub):
        d_hs[j, t] -= 1.0
    for j in range(1, n):
        d_as[gold_sub[j - 1], gold_sub[j]] -= 1.0

    dh = np.zeros_like(h, dtype=float)
    dh[:, tags] = d_hs
    da = np.zeros_like(A, dtype=float)
    da[np.ix_(tags, tags)] = d_as
    return float(nll), dh, da
