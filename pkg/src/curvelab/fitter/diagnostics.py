"""Convergence and predictive-accuracy diagnostics for posterior samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp


def rhat(chains) -> float:
    """Split-chain potential scale reduction factor.

    ``chains`` is ``(n_chains, n_draws)``.  Each chain is cut into two halves
    (dropping the middle draw when the length is odd) and the statistic is
    ``sqrt((W + B/n) / W)`` over the halves, where ``W`` is the mean
    within-half variance and ``B/n`` the variance of the half means.
    Returns ``inf`` when every half is constant.

    >>> rhat([[0.0, 1.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0]])
    1.0
    """
    x = np.asarray(chains, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("rhat needs at least two chains as a 2-d array")
    n = x.shape[1] // 2
    if n < 2:
        raise ValueError("chains are too short to split")
    halves = np.concatenate([x[:, :n], x[:, -n:]], axis=0)
    w = halves.var(axis=1, ddof=1).mean()
    b_over_n = halves.mean(axis=1).var(ddof=1)
    if w <= 0:
        return float("inf")
    return float(np.sqrt((w + b_over_n) / w))


@dataclass(frozen=True)
class LooResult:
    loo: float
    penalty: float
    ll: float
    n_degenerate: int


def loo_is(pointwise_loglik, degenerate_weight: float = 0.5, details: bool = False):
    """Importance-sampling leave-one-out log predictive density.

    ``pointwise_loglik`` has the sample index first; every other axis indexes
    data points.  For each point the estimate is the harmonic mean of its
    likelihood over the samples, ``-logsumexp(-ll) + log S``.  The penalty
    is the mean-sample total log-likelihood minus ``loo``, so the two always
    add up to that total.  Points where one sample carries more than
    ``degenerate_weight`` of the normalised importance weight are counted.

    Returns ``(loo, penalty)``, or a :class:`LooResult` when ``details``.
    """
    ll = np.asarray(pointwise_loglik, dtype=float)
    if ll.ndim < 2:
        raise ValueError("pointwise log-likelihood needs a sample axis and a data axis")
    if not np.all(np.isfinite(ll)):
        raise ValueError("pointwise log-likelihood must be finite")
    ll = ll.reshape(ll.shape[0], -1)
    s = ll.shape[0]
    neg = -ll
    lse = logsumexp(neg, axis=0)
    loo_i = -lse + np.log(s)
    max_w = np.exp(neg.max(axis=0) - lse)
    total = float(ll.sum(axis=1).mean())
    loo = float(loo_i.sum())
    res = LooResult(loo, total - loo, total, int(np.sum(max_w > degenerate_weight)) if s > 1 else 0)
    return res if details else (res.loo, res.penalty)
