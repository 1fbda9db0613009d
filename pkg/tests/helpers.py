"""Shared independent oracles used by unit and acceptance tests."""

import numpy as np

from innscore import tinynet


def fd_gradients(model, X, targets, loss_kind, step=1e-5):
    """Central finite differences over every parameter."""
    grads = []
    for W, b in zip(model.weights, model.biases):
        gw = np.zeros_like(W)
        for idx in np.ndindex(W.shape):
            orig = W[idx]
            W[idx] = orig + step
            hi, _ = tinynet.loss_and_grad(model, X, targets, loss_kind)
            W[idx] = orig - step
            lo, _ = tinynet.loss_and_grad(model, X, targets, loss_kind)
            W[idx] = orig
            gw[idx] = (hi - lo) / (2 * step)
        gb = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            orig = b[idx]
            b[idx] = orig + step
            hi, _ = tinynet.loss_and_grad(model, X, targets, loss_kind)
            b[idx] = orig - step
            lo, _ = tinynet.loss_and_grad(model, X, targets, loss_kind)
            b[idx] = orig
            gb[idx] = (hi - lo) / (2 * step)
        grads.append((gw, gb))
    return grads


def max_rel_error(analytic, numeric):
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.abs(n), 1e-8)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def brute_force_knn(features, i, L):
    """Full distance list plus lexicographic (distance, id) sort."""
    diff = features - features[i]
    dist = np.sqrt((diff * diff).sum(axis=1))
    order = sorted((dist[j], j) for j in range(len(features)) if j != i)
    ids = np.array([j for _, j in order[:L]])
    return ids, np.array([d for d, _ in order[:L]])


def pairwise_auc(scores, clean_mask):
    """Exhaustive pairwise count with half ties."""
    pos = scores[clean_mask]
    neg = scores[~clean_mask]
    gt = ties = 0
    for a in pos:
        for b in neg:
            if a > b:
                gt += 1
            elif a == b:
                ties += 1
    return (gt + 0.5 * ties) / (len(pos) * len(neg))
