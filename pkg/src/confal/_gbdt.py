"""Compiled kernels for histogram gradient boosting with a softmax loss.

Trees are stored in flat arrays, one row per (boosting round, class):
``feature[t, node] == -1`` marks a leaf. Internal nodes send a sample left
when its bin index is ``<= bin_threshold`` (training) or its raw value is
``<= threshold`` (prediction); both tests agree by construction of the bins.
"""
import numpy as np
from numba import njit

MIN_HESSIAN = 1e-16


@njit(cache=True)
def _softmax_rows(F, P):
    n, k = F.shape
    for i in range(n):
        m = F[i, 0]
        for c in range(1, k):
            if F[i, c] > m:
                m = F[i, c]
        s = 0.0
        for c in range(k):
            e = np.exp(F[i, c] - m)
            P[i, c] = e
            s += e
        for c in range(k):
            P[i, c] /= s


@njit(cache=True)
def _log_loss(F, y, w):
    n, k = F.shape
    total = 0.0
    wsum = 0.0
    for i in range(n):
        m = F[i, 0]
        for c in range(1, k):
            if F[i, c] > m:
                m = F[i, c]
        s = 0.0
        for c in range(k):
            s += np.exp(F[i, c] - m)
        total += w[i] * (m + np.log(s) - F[i, y[i]])
        wsum += w[i]
    return total / wsum


@njit(cache=True)
def _grow_tree(binned, n_bins, grad, hess, max_depth, min_leaf, l2,
               feature, bin_threshold, left, right, value, leaf_of):
    """Grow one depth-limited tree; writes leaf assignment per sample into ``leaf_of``."""
    n, n_feat = binned.shape
    max_bins = 0
    for f in range(n_feat):
        if n_bins[f] > max_bins:
            max_bins = n_bins[f]
    order = np.arange(n)
    # explicit stack of (node, start, stop, depth)
    stack = np.empty((2 ** (max_depth + 1), 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    g_hist = np.empty(max_bins)
    h_hist = np.empty(max_bins)
    c_hist = np.empty(max_bins, dtype=np.int64)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        stop = stack[top, 2]
        depth = stack[top, 3]
        G = 0.0
        H = 0.0
        for j in range(start, stop):
            G += grad[order[j]]
            H += hess[order[j]]
        count = stop - start
        best_gain = 1e-12
        best_f = -1
        best_b = -1
        if depth < max_depth and count >= 2 * min_leaf:
            parent = G * G / (H + l2)
            for f in range(n_feat):
                nb = n_bins[f]
                if nb < 2:
                    continue
                for b in range(nb):
                    g_hist[b] = 0.0
                    h_hist[b] = 0.0
                    c_hist[b] = 0
                for j in range(start, stop):
                    i = order[j]
                    b = binned[i, f]
                    g_hist[b] += grad[i]
                    h_hist[b] += hess[i]
                    c_hist[b] += 1
                GL = 0.0
                HL = 0.0
                CL = 0
                for b in range(nb - 1):
                    GL += g_hist[b]
                    HL += h_hist[b]
                    CL += c_hist[b]
                    if CL < min_leaf:
                        continue
                    if count - CL < min_leaf:
                        break
                    GR = G - GL
                    HR = H - HL
                    gain = GL * GL / (HL + l2) + GR * GR / (HR + l2) - parent
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_b = b
        if best_f < 0:
            feature[node] = -1
            value[node] = -G / (H + l2)
            for j in range(start, stop):
                leaf_of[order[j]] = node
            continue
        # stable in-place partition of order[start:stop]
        buf = order[start:stop].copy()
        lo = start
        for j in range(buf.shape[0]):
            if binned[buf[j], best_f] <= best_b:
                order[lo] = buf[j]
                lo += 1
        hi = lo
        for j in range(buf.shape[0]):
            if binned[buf[j], best_f] > best_b:
                order[hi] = buf[j]
                hi += 1
        feature[node] = best_f
        bin_threshold[node] = best_b
        l_node = n_nodes
        r_node = n_nodes + 1
        n_nodes += 2
        left[node] = l_node
        right[node] = r_node
        stack[top, 0] = r_node
        stack[top, 1] = lo
        stack[top, 2] = stop
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = l_node
        stack[top, 1] = start
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1
    return n_nodes


@njit(cache=True)
def fit_softmax_boosting(binned, n_bins, y, w, n_classes, base, n_rounds, learning_rate,
                         max_depth, min_leaf, l2, max_halvings):
    """Fit ``n_rounds * n_classes`` trees by Newton steps on weighted softmax loss.

    Each round's joint step is halved until the training loss does not
    increase (a zero step is the fallback), so the returned loss history is
    non-increasing.
    """
    n = binned.shape[0]
    max_nodes = 2 ** (max_depth + 1) - 1
    n_trees = n_rounds * n_classes
    feature = np.full((n_trees, max_nodes), -1, dtype=np.int32)
    bin_threshold = np.full((n_trees, max_nodes), -1, dtype=np.int32)
    left = np.full((n_trees, max_nodes), -1, dtype=np.int32)
    right = np.full((n_trees, max_nodes), -1, dtype=np.int32)
    value = np.zeros((n_trees, max_nodes))
    losses = np.empty(n_rounds + 1)
    scales = np.empty(n_rounds)

    F = np.empty((n, n_classes))
    for i in range(n):
        for c in range(n_classes):
            F[i, c] = base[c]
    P = np.empty((n, n_classes))
    grad = np.empty(n)
    hess = np.empty(n)
    leaf_of = np.empty(n, dtype=np.int64)
    delta = np.empty((n, n_classes))
    trial = np.empty((n, n_classes))
    losses[0] = _log_loss(F, y, w)

    for r in range(n_rounds):
        _softmax_rows(F, P)
        for c in range(n_classes):
            t = r * n_classes + c
            for i in range(n):
                p = P[i, c]
                target = 1.0 if y[i] == c else 0.0
                grad[i] = w[i] * (p - target)
                h = w[i] * p * (1.0 - p)
                hess[i] = h if h > MIN_HESSIAN else MIN_HESSIAN
            _grow_tree(binned, n_bins, grad, hess, max_depth, min_leaf, l2,
                       feature[t], bin_threshold[t], left[t], right[t], value[t], leaf_of)
            for i in range(n):
                delta[i, c] = value[t, leaf_of[i]]
        scale = learning_rate
        accepted = False
        for _ in range(max_halvings + 1):
            for i in range(n):
                for c in range(n_classes):
                    trial[i, c] = F[i, c] + scale * delta[i, c]
            new_loss = _log_loss(trial, y, w)
            if new_loss <= losses[r]:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            scale = 0.0
            new_loss = losses[r]
        else:
            for i in range(n):
                for c in range(n_classes):
                    F[i, c] = trial[i, c]
        for c in range(n_classes):
            t = r * n_classes + c
            for j in range(max_nodes):
                value[t, j] *= scale
        scales[r] = scale
        losses[r + 1] = new_loss
    return feature, bin_threshold, left, right, value, losses, scales


@njit(cache=True)
def predict_raw(X, base, tree_class, feature, threshold, left, right, value):
    n = X.shape[0]
    k = base.shape[0]
    out = np.empty((n, k))
    for i in range(n):
        for c in range(k):
            out[i, c] = base[c]
    for t in range(feature.shape[0]):
        c = tree_class[t]
        for i in range(n):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            out[i, c] += value[t, node]
    return out


@njit(cache=True)
def softmax(F):
    P = np.empty_like(F)
    _softmax_rows(F, P)
    return P
