# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels; see ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, isnan, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"

cdef double TAU = 1e-12


# ---------------------------------------------------------------- tree growth
#
# Positions p index the (possibly repeated) training rows ``rows[p]``. Each
# node owns a contiguous segment of ``work`` (its positions in increasing
# order) and of every row of ``order`` (its positions sorted by that feature,
# ties by position). Splitting stably partitions all of them, so no node
# ever re-sorts.

cdef class _TreeBuilder:
    cdef const double[:, ::1] X
    cdef const double[::1] y
    cdef const Py_ssize_t[::1] rows
    cdef Py_ssize_t[::1] work
    cdef Py_ssize_t[:, ::1] order
    cdef Py_ssize_t[::1] scratch
    cdef const long long[::1] randoms
    cdef Py_ssize_t rand_pos
    cdef Py_ssize_t n_features, max_features, min_samples_split, min_samples_leaf
    cdef long max_depth
    cdef char* goleft
    cdef double* sorted_vals
    cdef double* prefix
    cdef Py_ssize_t* feats
    cdef list feature, threshold, left, right, value, count

    def __cinit__(self):
        self.goleft = NULL
        self.sorted_vals = NULL
        self.prefix = NULL
        self.feats = NULL

    def __dealloc__(self):
        free(self.goleft)
        free(self.sorted_vals)
        free(self.prefix)
        free(self.feats)

    cdef void _partition(self, Py_ssize_t[::1] seq, Py_ssize_t start, Py_ssize_t end) noexcept nogil:
        cdef Py_ssize_t i, p, nl = 0, nr = 0
        for i in range(start, end):
            p = seq[i]
            if self.goleft[p]:
                seq[start + nl] = p
                nl += 1
            else:
                self.scratch[nr] = p
                nr += 1
        for i in range(nr):
            seq[start + nl + i] = self.scratch[i]

    cdef Py_ssize_t grow(self, Py_ssize_t start, Py_ssize_t end, long depth):
        cdef Py_ssize_t n = end - start
        cdef Py_ssize_t node = len(self.feature)
        cdef Py_ssize_t i, k, f, fi, j, nl, best_feat = -1, p
        cdef double s = 0.0, ymin, ymax, yv, total, sl, sr, proxy, best_proxy = -INFINITY
        cdef double lo = 0.0, hi = 0.0, thr, cnt

        ymin = self.y[self.rows[self.work[start]]]
        ymax = ymin
        for i in range(start, end):
            yv = self.y[self.rows[self.work[i]]]
            s = s + yv
            if yv < ymin:
                ymin = yv
            if yv > ymax:
                ymax = yv
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(s / n)
        self.count.append(n)

        if (n < self.min_samples_split or n < 2 * self.min_samples_leaf
                or (self.max_depth >= 0 and depth >= self.max_depth) or ymax == ymin):
            return node

        for i in range(self.n_features):
            self.feats[i] = i
        if self.max_features < self.n_features:
            for i in range(self.max_features):
                j = i + <Py_ssize_t>(self.randoms[self.rand_pos] % (self.n_features - i))
                self.rand_pos += 1
                f = self.feats[i]; self.feats[i] = self.feats[j]; self.feats[j] = f
            _sort_small(self.feats, self.max_features)
            k = self.max_features
        else:
            k = self.n_features

        for fi in range(k):
            f = self.feats[fi]
            total = 0.0
            for i in range(n):
                p = self.order[f, start + i]
                self.sorted_vals[i] = self.X[self.rows[p], f]
                total = total + self.y[self.rows[p]]
                self.prefix[i] = total
            for i in range(1, n):
                if not (self.sorted_vals[i - 1] < self.sorted_vals[i]):
                    continue
                if i < self.min_samples_leaf or n - i < self.min_samples_leaf:
                    continue
                cnt = <double>i
                sl = self.prefix[i - 1]
                sr = total - sl
                proxy = sl * sl / cnt + sr * sr / (n - cnt)
                if proxy > best_proxy:
                    best_proxy = proxy
                    best_feat = f
                    lo = self.sorted_vals[i - 1]
                    hi = self.sorted_vals[i]

        if best_feat < 0:
            return node

        thr = (lo + hi) / 2.0
        if thr >= hi:
            thr = lo
        nl = 0
        for i in range(start, end):
            p = self.work[i]
            self.goleft[p] = self.X[self.rows[p], best_feat] <= thr
            nl += self.goleft[p]
        self._partition(self.work, start, end)
        for f in range(self.n_features):
            self._partition(self.order[f], start, end)
        self.feature[node] = best_feat
        self.threshold[node] = thr
        self.left[node] = self.grow(start, start + nl, depth + 1)
        self.right[node] = self.grow(start + nl, end, depth + 1)
        return node


cdef void _sort_small(Py_ssize_t* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, key
    for i in range(1, n):
        key = a[i]
        j = i - 1
        while j >= 0 and a[j] > key:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = key


def build_tree(X, y, samples, Py_ssize_t max_features, Py_ssize_t min_samples_split,
               Py_ssize_t min_samples_leaf, long max_depth, randoms):
    cdef _TreeBuilder b = _TreeBuilder()
    X = np.ascontiguousarray(X, dtype=np.float64)
    rows = np.ascontiguousarray(samples, dtype=np.intp)
    m = rows.shape[0]
    b.X = X
    b.y = np.ascontiguousarray(y, dtype=np.float64)
    b.rows = rows
    b.work = np.arange(m, dtype=np.intp)
    b.order = np.ascontiguousarray(np.argsort(X[rows].T, axis=1, kind="stable"), dtype=np.intp)
    b.scratch = np.empty(max(m, 1), dtype=np.intp)
    if randoms is None or len(randoms) == 0:
        randoms = np.zeros(1, dtype=np.int64)
    b.randoms = np.ascontiguousarray(randoms, dtype=np.int64)
    b.rand_pos = 0
    b.n_features = X.shape[1]
    b.max_features = max_features
    b.min_samples_split = min_samples_split
    b.min_samples_leaf = min_samples_leaf
    b.max_depth = max_depth
    b.goleft = <char*> malloc(max(m, 1) * sizeof(char))
    b.sorted_vals = <double*> malloc(max(m, 1) * sizeof(double))
    b.prefix = <double*> malloc(max(m, 1) * sizeof(double))
    b.feats = <Py_ssize_t*> malloc(max(b.n_features, 1) * sizeof(Py_ssize_t))
    if b.goleft == NULL or b.sorted_vals == NULL or b.prefix == NULL or b.feats == NULL:
        raise MemoryError()
    b.feature, b.threshold, b.left, b.right, b.value, b.count = [], [], [], [], [], []
    b.grow(0, m, 0)
    return (np.array(b.feature, dtype=np.int64), np.array(b.threshold, dtype=np.float64),
            np.array(b.left, dtype=np.int64), np.array(b.right, dtype=np.int64),
            np.array(b.value, dtype=np.float64), np.array(b.count, dtype=np.int64))


def predict_tree(X, feature, threshold, left, right, value):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const long long[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const long long[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const long long[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], i
    cdef long long node
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            node = 0
            while fv[node] >= 0:
                if Xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            ov[i] = vv[node]
    return out


# ------------------------------------------------------------------ SVR / SMO

def smo_svr(K, y, double C, double epsilon, double tol, long max_iter):
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], m = 2 * n, t, i, j, ii, jj, tt
    beta_arr = np.zeros(m, dtype=np.float64)
    G_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] beta = beta_arr
    cdef double[::1] G = G_arr
    cdef double s_t, sG, score, gmax, gmax2, grad_diff, quad, obj, obj_min
    cdef double old_i, old_j, q, delta, diff, total, bi, bj, ci, cj, u, kij, s_i, s_j
    cdef bint up, low, conv = False
    cdef long it = 0
    for t in range(n):
        G[t] = epsilon - yv[t]
        G[n + t] = epsilon + yv[t]

    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            gmax2 = -INFINITY
            i = -1
            for t in range(m):
                s_t = 1.0 if t < n else -1.0
                if s_t > 0:
                    up = beta[t] < C
                    low = beta[t] > 0
                else:
                    up = beta[t] > 0
                    low = beta[t] < C
                sG = s_t * G[t]
                if up:
                    score = -s_t * G[t]
                    if score > gmax:
                        gmax = score
                        i = t
                if low:
                    if sG > gmax2:
                        gmax2 = sG
            if i < 0 or gmax2 == -INFINITY:
                conv = True
                break
            if gmax + gmax2 < tol:
                conv = True
                break
            ii = i % n
            j = -1
            obj_min = INFINITY
            for t in range(m):
                s_t = 1.0 if t < n else -1.0
                if s_t > 0:
                    low = beta[t] > 0
                else:
                    low = beta[t] < C
                if not low:
                    continue
                tt = t % n
                grad_diff = gmax + s_t * G[t]
                if not (grad_diff > 0):
                    continue
                quad = Kv[ii, ii] + Kv[tt, tt] - 2.0 * Kv[ii, tt]
                if quad <= 0:
                    quad = TAU
                obj = -(grad_diff * grad_diff) / quad
                if obj < obj_min:
                    obj_min = obj
                    j = t
            if j < 0:
                conv = True
                break
            jj = j % n
            s_i = 1.0 if i < n else -1.0
            s_j = 1.0 if j < n else -1.0
            old_i = beta[i]
            old_j = beta[j]
            kij = Kv[ii, jj]
            q = Kv[ii, ii] + Kv[jj, jj] - 2.0 * kij
            if q <= 0:
                q = TAU
            if s_i != s_j:
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
            ci = s_i * (bi - old_i)
            cj = s_j * (bj - old_j)
            for t in range(n):
                u = ci * Kv[ii, t] + cj * Kv[jj, t]
                G[t] = G[t] + u
                G[n + t] = G[n + t] - u
            it += 1

    cdef double ub = INFINITY, lb = -INFINITY, sum_free = 0.0, rho
    cdef Py_ssize_t nr_free = 0
    cdef bint at_upper, at_lower
    for t in range(m):
        s_t = 1.0 if t < n else -1.0
        sG = s_t * G[t]
        at_upper = beta[t] >= C
        at_lower = beta[t] <= 0
        if not at_upper and not at_lower:
            nr_free += 1
            sum_free = sum_free + sG
        elif (s_t > 0 and at_lower) or (s_t < 0 and at_upper):
            if sG < ub:
                ub = sG
        else:
            if sG > lb:
                lb = sG
    if nr_free > 0:
        rho = sum_free / nr_free
    else:
        rho = (ub + lb) / 2.0
    coef = beta_arr[:n] - beta_arr[n:]
    return coef, -rho, it, bool(conv)


# ------------------------------------------------------------ leak detector

def scan_detector(abs_residual, double threshold, Py_ssize_t window, double index_trip,
                  long persistence, bint flag_only):
    cdef const double[::1] r = np.ascontiguousarray(abs_residual, dtype=np.float64)
    cdef Py_ssize_t n = r.shape[0], t, head = 0, filled = 0
    flags_arr = np.full(n, -1, dtype=np.int8)
    a_arr = np.full(n, -1, dtype=np.int64)
    idx_arr = np.full(n, np.nan)
    cnt_arr = np.zeros(n, dtype=np.int64)
    cdef signed char[::1] flags = flags_arr
    cdef long long[::1] a_log = a_arr
    cdef double[::1] idx_log = idx_arr
    cdef long long[::1] cnt_log = cnt_arr
    ring_arr = np.zeros(max(window, 1), dtype=np.int8)
    cdef signed char[::1] ring = ring_arr
    cdef long long in_window = 0, counter = 0, a
    cdef double best = -INFINITY, idx, res
    cdef Py_ssize_t best_pos = -1, alarm_pos = -1
    cdef int flag
    with nogil:
        for t in range(n):
            res = r[t]
            if isnan(res):
                cnt_log[t] = counter
                continue
            flag = 1 if res > threshold else 0
            a = in_window + 1
            idx = exp(-1.0 / (1.0 + <double>(a * a)))
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
            idx_log[t] = idx
            cnt_log[t] = counter
    return flags_arr, a_arr, idx_arr, cnt_arr, alarm_pos, best_pos
