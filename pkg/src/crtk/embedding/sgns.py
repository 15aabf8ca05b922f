"""Skip-gram negative-sampling loss, gradients and the compiled training loop.

For a center vector ``v``, the positive context's output vector ``u`` and
negative output vectors ``u_k`` the per-pair loss is::

    L = -log sigmoid(u . v) - sum_k log sigmoid(-u_k . v)

The numpy functions below are the reference used by the tests; the numba
kernels implement the same update for training.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_LCG_MUL = np.uint64(25214903917)
_LCG_ADD = np.uint64(11)
_INV_2_53 = 1.0 / 9007199254740992.0


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss(center, context, negatives) -> float:
    """Loss for one (center, context, negatives) triple; ``negatives`` is k x d."""
    center = np.asarray(center, dtype=np.float64)
    pos = _log_sigmoid(np.dot(context, center))
    neg = _log_sigmoid(-(np.asarray(negatives) @ center)).sum()
    return float(-(pos + neg))


def sgns_grad(center, context, negatives):
    """Analytic gradients of ``sgns_loss`` w.r.t. center, context and each negative row."""
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    pos_coef = _sigmoid(np.dot(context, center)) - 1.0
    neg_coef = _sigmoid(negatives @ center)
    g_center = pos_coef * context + neg_coef @ negatives
    g_context = pos_coef * center
    g_negatives = neg_coef[:, None] * center[None, :]
    return g_center, g_context, g_negatives


@njit(cache=True, inline="always")
def _lcg(state):
    return state * _LCG_MUL + _LCG_ADD


@njit(cache=True, inline="always")
def _uniform(state):
    return float(state >> np.uint64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def _sig(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def sgns_step(w_in, w_out, center, context, negs, n_neg, lr, grad, coefs):
    """One exact gradient-descent step on a single triple.

    All dot products use the pre-update vectors; repeated negatives each
    contribute their own term. ``grad`` (length d) and ``coefs`` (length
    >= n_neg) are scratch buffers. Returns the loss before the update.
    """
    d = w_in.shape[1]
    s = 0.0
    for t in range(d):
        s += w_in[center, t] * w_out[context, t]
    p = _sig(s)
    loss = -np.log(max(p, 1e-300))
    coef_pos = 1.0 - p  # -dL/ds for the positive
    for t in range(d):
        grad[t] = coef_pos * w_out[context, t]
    for k in range(n_neg):
        s = 0.0
        nk = negs[k]
        for t in range(d):
            s += w_in[center, t] * w_out[nk, t]
        q = _sig(s)
        loss -= np.log(max(1.0 - q, 1e-300))
        coefs[k] = -q
        for t in range(d):
            grad[t] += coefs[k] * w_out[nk, t]
    for t in range(d):
        w_out[context, t] += lr * coef_pos * w_in[center, t]
    for k in range(n_neg):
        nk = negs[k]
        for t in range(d):
            w_out[nk, t] += lr * coefs[k] * w_in[center, t]
    for t in range(d):
        w_in[center, t] += lr * grad[t]
    return loss


@njit(cache=True, inline="always")
def _draw(cum, total, state):
    # index of the first cumulative weight strictly above u * total
    u = _uniform(state) * total
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def train_range(
    w_in, w_out, ids, sent_starts, s_lo, s_hi, keep_prob, cum,
    window, negatives, lr0, lr1, epochs, seed,
):
    """Train on sentences ``s_lo:s_hi`` for all epochs; returns (pairs, summed loss).

    The learning rate decays linearly with the fraction of center positions
    of this range processed so far, floored at ``lr1``.
    """
    d = w_in.shape[1]
    grad = np.empty(d, dtype=w_in.dtype)
    negs = np.empty(negatives, dtype=np.int64)
    coefs = np.empty(max(negatives, 1))
    n_pos = sent_starts[s_hi] - sent_starts[s_lo]
    total_sched = max(1, n_pos * epochs)
    max_len = 0
    for s in range(s_lo, s_hi):
        max_len = max(max_len, sent_starts[s + 1] - sent_starts[s])
    kept = np.empty(max(max_len, 1), dtype=np.int64)
    cum_total = cum[cum.shape[0] - 1]
    state = np.uint64(seed)
    pairs = 0
    loss = 0.0
    done = 0
    for ep in range(epochs):
        for s in range(s_lo, s_hi):
            a = sent_starts[s]
            b = sent_starts[s + 1]
            m = 0
            for p in range(a, b):
                w = ids[p]
                if keep_prob[w] < 1.0:
                    state = _lcg(state)
                    if _uniform(state) >= keep_prob[w]:
                        continue
                kept[m] = w
                m += 1
            for i in range(m):
                lr = lr0 - (lr0 - lr1) * ((done + i) / total_sched)
                if lr < lr1:
                    lr = lr1
                state = _lcg(state)
                eff = window - int(_uniform(state) * window)
                lo = max(0, i - eff)
                hi = min(m, i + eff + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    ctx = kept[j]
                    n = 0
                    for _ in range(negatives):
                        state = _lcg(state)
                        cand = _draw(cum, cum_total, state)
                        if cand != ctx:
                            negs[n] = cand
                            n += 1
                    loss += sgns_step(w_in, w_out, kept[i], ctx, negs, n, lr, grad, coefs)
                    pairs += 1
            done += b - a
    return pairs, loss


@njit(cache=True, parallel=True)
def train_parallel(
    w_in, w_out, ids, sent_starts, bounds, keep_prob, cum,
    window, negatives, lr0, lr1, epochs, seeds,
):
    """Hogwild training: each chunk of sentences updates the shared matrices without locks."""
    n = bounds.shape[0] - 1
    pairs = np.zeros(n, dtype=np.int64)
    losses = np.zeros(n)
    for c in prange(n):
        p, l = train_range(
            w_in, w_out, ids, sent_starts, bounds[c], bounds[c + 1], keep_prob, cum,
            window, negatives, lr0, lr1, epochs, seeds[c],
        )
        pairs[c] = p
        losses[c] = l
    return pairs.sum(), losses.sum()
