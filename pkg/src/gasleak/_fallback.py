"""Pure-Python/numpy implementations of the numerical kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same arithmetic order, so both backends produce identical trees,
identical detector logs and (up to the iteration cap) identical SVR duals.
"""

from __future__ import annotations

import math

import numpy as np

NAME = "python"

TAU = 1e-12


def build_tree(X, y, samples, max_features, min_samples_split, min_samples_leaf,
               max_depth, randoms):
    """Grow a least-squares regression tree depth-first.

    ``samples`` are row indices into ``X`` (repeats allowed, as produced by
    bootstrapping). Every feature is sorted once up front; each split then
    stably partitions the sorted orders, so a node's order matches a stable
    argsort of its own rows. When ``max_features < n_features`` each node
    draws its candidate features from ``randoms`` by a partial Fisher-Yates
    shuffle. Returns the flat node arrays (feature, threshold, left, right,
    value, n_samples); leaves carry feature -1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    rows = np.asarray(samples, dtype=np.int64)
    m = rows.shape[0]
    n_features = X.shape[1]
    work = np.arange(m)
    order = np.argsort(X[rows].T, axis=1, kind="stable")
    goleft = np.zeros(m, dtype=bool)
    feature, threshold, left, right, value, count = [], [], [], [], [], []
    rand_pos = 0

    def grow(start, end, depth):
        nonlocal rand_pos
        node = len(feature)
        n = end - start
        yn = y[rows[work[start:end]]]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.add.accumulate(yn)[-1] / n)
        count.append(n)

        if (n < min_samples_split or n < 2 * min_samples_leaf
                or (max_depth >= 0 and depth >= max_depth) or yn.max() == yn.min()):
            return node

        if max_features < n_features:
            feats = np.arange(n_features)
            for i in range(max_features):
                j = i + int(randoms[rand_pos] % (n_features - i))
                rand_pos += 1
                feats[i], feats[j] = feats[j], feats[i]
            candidates = np.sort(feats[:max_features])
        else:
            candidates = np.arange(n_features)

        best_proxy = -np.inf
        best_feat = -1
        lo = hi = 0.0
        counts = np.arange(1, n, dtype=np.float64)
        for f in candidates:
            r = rows[order[f, start:end]]
            vs = X[r, f]
            prefix = np.add.accumulate(y[r])
            total = prefix[-1]
            sl = prefix[:-1]
            sr = total - sl
            proxy = sl * sl / counts + sr * sr / (n - counts)
            valid = vs[:-1] < vs[1:]
            if min_samples_leaf > 1:
                valid &= (counts >= min_samples_leaf) & (n - counts >= min_samples_leaf)
            if not valid.any():
                continue
            proxy = np.where(valid, proxy, -np.inf)
            pos = int(np.argmax(proxy))
            if proxy[pos] > best_proxy:
                best_proxy = proxy[pos]
                best_feat = int(f)
                lo, hi = vs[pos], vs[pos + 1]

        if best_feat < 0:
            return node

        thr = (lo + hi) / 2.0
        if thr >= hi:
            thr = lo
        seg = work[start:end]
        goleft[seg] = X[rows[seg], best_feat] <= thr
        n_left = int(goleft[seg].sum())
        work[start:end] = np.concatenate([seg[goleft[seg]], seg[~goleft[seg]]])
        block = order[:, start:end]
        move = np.argsort(~goleft[block], axis=1, kind="stable")
        order[:, start:end] = np.take_along_axis(block, move, axis=1)
        feature[node] = best_feat
        threshold[node] = thr
        left[node] = grow(start, start + n_left, depth + 1)
        right[node] = grow(start + n_left, end, depth + 1)
        return node

    grow(0, m, 0)
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64), np.array(count, dtype=np.int64))


def predict_tree(X, feature, threshold, left, right, value):
    X = np.ascontiguousarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    rows = np.arange(X.shape[0])
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active[r] = feature[node[r]] >= 0
    return value[node]


def smo_svr(K, y, C, epsilon, tol, max_iter):
    """Solve the epsilon-SVR dual by SMO with second-order working-set selection.

    Variables 0..n-1 are the alpha multipliers (sign +1), n..2n-1 the
    alpha* multipliers (sign -1). Returns (alpha - alpha*, bias, iterations,
    converged).
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    beta = np.zeros(2 * n)
    G = np.concatenate([epsilon - y, epsilon + y])
    diag = np.diagonal(K).copy()
    diag2 = np.concatenate([diag, diag])
    pos = sign > 0

    it = 0
    converged = False
    while it < max_iter:
        at_upper = beta >= C
        at_lower = beta <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        if not up.any() or not low.any():
            converged = True
            break
        score = np.where(up, -sign * G, -np.inf)
        i = int(np.argmax(score))
        gmax = score[i]
        sG = sign * G
        gmax2 = np.max(np.where(low, sG, -np.inf))
        if gmax + gmax2 < tol:
            converged = True
            break
        ii = i % n
        kcol = np.concatenate([K[ii], K[ii]])
        grad_diff = gmax + sG
        quad = diag[ii] + diag2 - 2.0 * kcol
        quad = np.where(quad <= 0, TAU, quad)
        cand = low & (grad_diff > 0)
        if not cand.any():
            converged = True
            break
        obj = np.where(cand, -(grad_diff * grad_diff) / quad, np.inf)
        j = int(np.argmin(obj))
        jj = j % n

        old_i, old_j = beta[i], beta[j]
        kij = K[ii, jj]
        if sign[i] != sign[j]:
            q = diag[ii] + diag[jj] - 2.0 * kij
            if q <= 0:
                q = TAU
            delta = (-G[i] - G[j]) / q
            diff = beta[i] - beta[j]
            bi = beta[i] + delta
            bj = beta[j] + delta
            if diff > 0:
                if bj < 0:
                    bj = 0.0
                    bi = diff
            else:
                if bi < 0:
                    bi = 0.0
                    bj = -diff
            if diff > 0:
                if bi > C:
                    bi = C
                    bj = C - diff
            else:
                if bj > C:
                    bj = C
                    bi = C + diff
        else:
            q = diag[ii] + diag[jj] - 2.0 * kij
            if q <= 0:
                q = TAU
            delta = (G[i] - G[j]) / q
            total = beta[i] + beta[j]
            bi = beta[i] - delta
            bj = beta[j] + delta
            if total > C:
                if bi > C:
                    bi = C
                    bj = total - C
            else:
                if bj < 0:
                    bj = 0.0
                    bi = total
            if total > C:
                if bj > C:
                    bj = C
                    bi = total - C
            else:
                if bi < 0:
                    bi = 0.0
                    bj = total
        beta[i] = bi
        beta[j] = bj
        ci = sign[i] * (bi - old_i)
        cj = sign[j] * (bj - old_j)
        u = ci * K[ii] + cj * K[jj]
        G[:n] += u
        G[n:] -= u
        it += 1

    # bias from free variables, else midpoint of the feasible interval
    sG = sign * G
    at_upper = beta >= C
    at_lower = beta <= 0
    free = ~at_upper & ~at_lower
    ub_mask = np.where(pos, at_lower, at_upper) & ~free
    lb_mask = np.where(pos, at_upper, at_lower) & ~free
    if free.any():
        rho = np.add.accumulate(sG[free])[-1] / free.sum()
    else:
        ub = sG[ub_mask].min() if ub_mask.any() else np.inf
        lb = sG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2.0
    coef = beta[:n] - beta[n:]
    return coef, -rho, it, converged


def scan_detector(abs_residual, threshold, window, index_trip, persistence, flag_only):
    """Run the windowed leak-index detector over a residual series.

    Returns per-sample flag (-1 when the sample is skipped as NaN), the
    index argument ``a``, the leak index, the consecutive-trip counter,
    plus the alarm position and the best-index position (-1 if none).
    """
    r = np.asarray(abs_residual, dtype=np.float64)
    n = r.shape[0]
    flags = np.full(n, -1, dtype=np.int8)
    a_log = np.full(n, -1, dtype=np.int64)
    index_log = np.full(n, np.nan)
    counter_log = np.zeros(n, dtype=np.int64)
    ring = [0] * window
    head = 0
    filled = 0
    in_window = 0
    counter = 0
    best = -math.inf
    best_pos = -1
    alarm_pos = -1
    for t in range(n):
        res = r[t]
        if math.isnan(res):
            counter_log[t] = counter
            continue
        flag = 1 if res > threshold else 0
        a = in_window + 1
        idx = math.exp(-1.0 / (1.0 + a * a))
        if filled == window:
            in_window -= ring[head]
        else:
            filled += 1
        ring[head] = flag
        in_window += flag
        head = (head + 1) % window
        if not (flag_only and flag == 0):
            if idx > index_trip:
                counter += 1
            else:
                counter = 0
            if alarm_pos < 0 and idx > best:
                best = idx
                best_pos = t
            if alarm_pos < 0 and counter > persistence:
                alarm_pos = t
        flags[t] = flag
        a_log[t] = a
        index_log[t] = idx
        counter_log[t] = counter
    return flags, a_log, index_log, counter_log, alarm_pos, best_pos
