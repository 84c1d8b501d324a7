"""Compiled and numpy kernels: parity with each other and with outside oracles."""

import math

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from sklearn.tree import DecisionTreeRegressor

from gasleak import _accel, _fallback
from gasleak.models.svr import rbf_kernel

needs_compiled = pytest.mark.skipif(not _accel.compiled_available(),
                                    reason="compiled kernels not built")
# the backend fixture only selects a module, so sharing it across examples is safe
fixture_ok = settings(suppress_health_check=[HealthCheck.function_scoped_fixture])


def tree_case(rng, n, d, decimals):
    X = np.round(rng.normal(size=(n, d)), decimals)
    y = rng.normal(size=n)
    return X, y


def brute_window_counts(flags, window):
    """a at every valid sample, recounted from scratch."""
    valid = [f for f in flags if f >= 0]
    return [sum(valid[max(0, k - window):k]) + 1 for k in range(len(valid))]


# ---------------------------------------------------------------- parity

@needs_compiled
@given(st.integers(0, 2**32 - 1))
def test_build_tree_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(2, 120)), int(rng.integers(1, 6))
    X, y = tree_case(rng, n, d, int(rng.integers(0, 3)))
    samples = rng.integers(0, n, n) if seed % 2 else np.arange(n)
    args = (X, y, samples, int(rng.integers(1, d + 1)), int(rng.integers(2, 6)),
            int(rng.integers(1, 4)), int(rng.integers(-1, 6)), rng.integers(0, 2**62, size=4 * n * d))
    for a, b in zip(_fallback.build_tree(*args), _accel.get("cython").build_tree(*args)):
        np.testing.assert_array_equal(a, b)


@needs_compiled
def test_predict_tree_backends_agree(rng):
    X, y = tree_case(rng, 200, 4, 2)
    tree = _fallback.build_tree(X, y, np.arange(200), 4, 2, 1, -1, None)
    Z = rng.normal(size=(500, 4))
    np.testing.assert_array_equal(_fallback.predict_tree(Z, *tree[:5]),
                                  _accel.get("cython").predict_tree(Z, *tree[:5]))


@needs_compiled
@pytest.mark.parametrize("C,eps", [(1.0, 0.1), (10.0, 0.01), (100.0, 0.001)])
def test_smo_backends_agree(rng, C, eps):
    X = rng.uniform(size=(60, 3))
    y = np.sin(3 * X[:, 0]) + X[:, 1]
    K = rbf_kernel(X, X, 2.0)
    a = _fallback.smo_svr(K, y, C, eps, 1e-6, 100000)
    b = _accel.get("cython").smo_svr(K, y, C, eps, 1e-6, 100000)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1:] == b[1:]


@needs_compiled
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_scan_backends_agree(seed, flag_only):
    rng = np.random.default_rng(seed)
    r = np.abs(rng.normal(0, 1, 400)) * rng.choice([0.3, 3.0], 400)
    r[rng.random(400) < 0.05] = np.nan
    args = (r, 1.0, int(rng.integers(1, 40)), 0.99, int(rng.integers(1, 5)), flag_only)
    for a, b in zip(_fallback.scan_detector(*args), _accel.get("cython").scan_detector(*args)):
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


# ---------------------------------------------------------------- tree oracle

def best_split_proxy(X, y, rows):
    """Largest sl^2/nl + sr^2/nr over every feature and cut, by exhaustive search."""
    best = -np.inf
    for j in range(X.shape[1]):
        vals = np.unique(X[rows, j])
        for cut in (vals[1:] + vals[:-1]) / 2:
            left = X[rows, j] <= cut
            yl, yr = y[rows][left], y[rows][~left]
            best = max(best, yl.sum() ** 2 / len(yl) + yr.sum() ** 2 / len(yr))
    return best


# With a continuous target and distinct feature values, equally good splits only
# arise when they put the same training rows on each side. The training-point
# partition is then unique even where the chosen feature differs, so predictions
# are compared on the training rows rather than on fresh points.
@pytest.mark.parametrize("depth", [None, 1, 3, 6])
def test_tree_matches_sklearn_on_distinct_values(backend, rng, depth):
    # integer-valued features are exact in float32, so sklearn sees the same splits
    n, d = 150, 3
    X = np.column_stack([rng.permutation(n) for _ in range(d)]).astype(float)
    y = rng.normal(size=n)
    tree = backend.build_tree(X, y, np.arange(n), d, 2, 1, -1 if depth is None else depth, None)
    ref = DecisionTreeRegressor(max_depth=depth, random_state=0).fit(X, y)
    np.testing.assert_allclose(backend.predict_tree(X, *tree[:5]), ref.predict(X), atol=1e-12)
    assert len(tree[0]) == ref.tree_.node_count


def test_bootstrap_tree_matches_weighted_sklearn(backend, rng):
    n = 120
    X = np.column_stack([rng.permutation(n), rng.permutation(n)]).astype(float)
    y = rng.normal(size=n)
    samples = rng.integers(0, n, n)
    tree = backend.build_tree(X, y, samples, 2, 2, 1, 4, None)
    weights = np.bincount(samples, minlength=n).astype(float)
    ref = DecisionTreeRegressor(max_depth=4, random_state=0).fit(X, y, sample_weight=weights)
    drawn = np.unique(samples)
    np.testing.assert_allclose(backend.predict_tree(X[drawn], *tree[:5]), ref.predict(X[drawn]),
                               atol=1e-12)


def test_every_split_is_the_exhaustive_optimum(backend, rng):
    n, d = 90, 3
    X = np.round(rng.normal(size=(n, d)), 1)
    y = rng.normal(size=n)
    feature, threshold, left, right, *_ = backend.build_tree(X, y, np.arange(n), d, 2, 1, 5, None)
    stack = [(0, np.arange(n))]
    while stack:
        node, rows = stack.pop()
        if feature[node] < 0:
            continue
        go = X[rows, feature[node]] <= threshold[node]
        yl, yr = y[rows][go], y[rows][~go]
        got = yl.sum() ** 2 / len(yl) + yr.sum() ** 2 / len(yr)
        assert got == pytest.approx(best_split_proxy(X, y, rows), rel=1e-12)
        stack += [(left[node], rows[go]), (right[node], rows[~go])]


def test_tree_leaves_are_node_means(backend, rng):
    X, y = tree_case(rng, 80, 2, 1)
    feature, threshold, left, right, value, count = backend.build_tree(
        X, y, np.arange(80), 2, 5, 2, -1, None)
    leaves = np.asarray(backend.predict_tree(X, feature, threshold, left, right, value))
    for v in np.unique(leaves):
        assert v == pytest.approx(y[leaves == v].mean(), abs=1e-12)
    assert count[0] == 80
    assert np.all(count[np.asarray(feature) < 0] >= 2)


def test_constant_target_gives_single_leaf(backend):
    X = np.arange(20.0).reshape(10, 2)
    tree = backend.build_tree(X, np.full(10, 3.0), np.arange(10), 2, 2, 1, -1, None)
    assert len(tree[0]) == 1 and tree[4][0] == 3.0


# ---------------------------------------------------------------- SMO oracle

def dense_dual_oracle(K, y, C, eps):
    """Epsilon-SVR dual solved by a general-purpose conic solver."""
    n = len(y)
    a, s = cp.Variable(n), cp.Variable(n)
    beta = a - s
    balance = cp.sum(beta) == 0
    obj = 0.5 * cp.quad_form(beta, cp.psd_wrap(K)) + eps * cp.sum(a + s) - y @ beta
    prob = cp.Problem(cp.Minimize(obj), [a >= 0, a <= C, s >= 0, s <= C, balance])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return beta.value, float(balance.dual_value)


@fixture_ok
@given(st.integers(0, 2**32 - 1), st.integers(8, 30), st.sampled_from([1.0, 10.0]))
def test_smo_matches_dense_qp(backend, seed, n, C):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 2))
    y = np.sin(4 * X[:, 0]) + 0.5 * X[:, 1] + 0.05 * rng.normal(size=n)
    K = rbf_kernel(X, X, 1.5)
    coef, bias, _, converged = backend.smo_svr(K, y, C, 0.05, 1e-9, 1_000_000)
    assert converged
    free = (np.abs(coef) > 1e-6) & (np.abs(coef) < C - 1e-6)
    assume(free.any())  # otherwise the bias is not unique
    ref_coef, ref_bias = dense_dual_oracle(K, y, C, 0.05)
    Z = rng.uniform(size=(20, 2))
    Kz = rbf_kernel(Z, X, 1.5)
    np.testing.assert_allclose(Kz @ np.asarray(coef) + bias, Kz @ ref_coef + ref_bias, atol=1e-4)


def test_smo_satisfies_kkt(backend, rng):
    X = rng.uniform(size=(50, 2))
    y = X[:, 0] ** 2 - X[:, 1]
    C, eps = 5.0, 0.02
    K = rbf_kernel(X, X, 3.0)
    coef, bias, _, converged = backend.smo_svr(K, y, C, eps, 1e-8, 1_000_000)
    coef = np.asarray(coef)
    assert converged
    assert abs(coef.sum()) < 1e-9
    assert np.all(np.abs(coef) <= C + 1e-12)
    f = K @ coef + bias
    inside = np.abs(coef) < 1e-12
    assert np.all(np.abs(f[inside] - y[inside]) <= eps + 1e-6)
    free = (np.abs(coef) > 1e-9) & (np.abs(coef) < C - 1e-9)
    np.testing.assert_allclose(np.abs(f[free] - y[free]), eps, atol=1e-6)


def test_smo_reports_non_convergence(backend, rng):
    X = rng.uniform(size=(40, 2))
    K = rbf_kernel(X, X, 1.0)
    _, _, iters, converged = backend.smo_svr(K, X[:, 0], 100.0, 0.001, 1e-12, 3)
    assert iters == 3 and not converged


# ---------------------------------------------------------------- scan oracle

@fixture_ok
@given(st.integers(0, 2**32 - 1), st.integers(1, 35))
def test_scan_window_counts_match_recount(backend, seed, window):
    rng = np.random.default_rng(seed)
    r = np.abs(rng.normal(0, 1, 600)) * rng.choice([0.2, 2.0], 600, p=[0.7, 0.3])
    r[rng.random(600) < 0.03] = np.nan
    flags, a_log, *_ = backend.scan_detector(r, 1.0, window, 0.99, 3, False)
    flags, a_log = np.asarray(flags), np.asarray(a_log)
    assert list(a_log[flags >= 0]) == brute_window_counts(list(flags), window)
    assert np.all(flags[np.isnan(r)] == -1)


def test_scan_index_formula(backend):
    r = np.array([5.0] * 12)
    _, a_log, index_log, *_ = backend.scan_detector(r, 1.0, 30, 0.99, 3, False)
    for a, idx in zip(np.asarray(a_log), np.asarray(index_log)):
        assert idx == pytest.approx(math.exp(-1.0 / (1.0 + a * a)), rel=1e-15)
