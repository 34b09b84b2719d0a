"""Pure-numpy reference implementations of the hot kernels.

Always importable; serves as the fallback backend and as the numerical
reference the numba backend is checked against. Reduction order differs
from the numba loops (numpy uses pairwise summation), so loss values agree
with the numba backend to ~1e-15 relative rather than bit-exactly.
``rank_auc`` agrees bit-exactly: rank sums are half-integers far below
2**53, so every intermediate is exact in double precision.
"""

from __future__ import annotations

import numpy as np


def loss_value(probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps):
    """Mean over samples of the class-weighted asymmetric loss.

    Per entry, with p clamped to [eps, 1-eps] and pm = max(p - margin, 0):

        y=1:  -w_pos * (1-p)**gamma_pos * log(p)
        y=0:  -w_neg * pm**gamma_neg   * log(1-pm)

    ``0**0`` evaluates to 1, which keeps the gamma_neg=0, margin=0 case an
    exact unweighted cross-entropy.
    """
    p = np.clip(probs, eps, 1.0 - eps)
    pos = w_pos * (1.0 - p) ** gamma_pos * np.log(p)
    pm = np.maximum(p - margin, 0.0)
    neg = w_neg * pm**gamma_neg * np.log(1.0 - pm)
    total = float(np.where(targets == 1.0, pos, neg).sum())
    return -total / probs.shape[0]


def loss_grad(probs, targets, w_pos, w_neg, gamma_pos, gamma_neg, margin, eps):
    """d(loss_value)/d(probs), entrywise, shape (n, c).

    At the margin kink (p == margin, y=0) the one-sided derivative from
    below is returned, i.e. exactly 0, matching the clamped region.
    """
    p = np.clip(probs, eps, 1.0 - eps)
    n = probs.shape[0]
    one_m = 1.0 - p
    if gamma_pos == 0.0:
        gpos = -w_pos / p
    else:
        gpos = w_pos * (gamma_pos * one_m ** (gamma_pos - 1.0) * np.log(p) - one_m**gamma_pos / p)
    pm = np.maximum(p - margin, 0.0)
    one_mpm = 1.0 - pm
    with np.errstate(divide="ignore", invalid="ignore"):
        if gamma_neg == 0.0:
            gneg = w_neg / one_mpm
        else:
            gneg = w_neg * (pm**gamma_neg / one_mpm - gamma_neg * pm ** (gamma_neg - 1.0) * np.log(one_mpm))
    gneg = np.where(pm > 0.0, gneg, 0.0)
    return np.where(targets == 1.0, gpos, gneg) / n


def rank_auc(scores, labels):
    """Tie-corrected Mann-Whitney AUC; NaN when a class is degenerate.

    AUC = (sum of positive ranks - p*(p+1)/2) / (p*q) with average ranks
    assigned inside tie groups (each tied positive/negative pair credited
    one half).
    """
    pos = labels == 1.0
    p = int(pos.sum())
    q = scores.shape[0] - p
    if p == 0 or q == 0:
        return np.nan
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    n = s.shape[0]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    np.not_equal(s[1:], s[:-1], out=new_group[1:])
    group_id = np.cumsum(new_group) - 1
    starts = np.flatnonzero(new_group)
    counts = np.diff(np.append(starts, n))
    avg_rank = starts + (counts + 1) / 2.0
    ranks_sorted = avg_rank[group_id]
    rank_pos_sum = float(ranks_sorted[pos[order]].sum())
    return (rank_pos_sum - p * (p + 1) / 2.0) / (p * q)
