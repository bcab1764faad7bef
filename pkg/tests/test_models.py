import math

import numpy as np
import pytest

from conftest import make_matrix
from epfbench.features import FeatureMatrix
from epfbench.models import (
    BudgetExceededError,
    ColumnMismatchError,
    DivergenceError,
    GradientBoostSpec,
    KnnSpec,
    LinearSvrSpec,
    MlpSpec,
    ModelError,
    OlsSpec,
    RandomForestSpec,
    SgdLinearSpec,
    SpecError,
    TreeSpec,
    build_tree,
    fit,
    grid_search,
    load_model,
    save_model,
    spec_from_dict,
    zoo,
)
from epfbench.models.knn import nearest, pairwise_distances
from epfbench.models.neural import forward, init_params, loss_and_grads
from epfbench.models.svr import _gradient, svr_objective


def brute_stump(x, y):
    """Best single split of one feature by enumerating every midpoint."""
    xs = np.unique(x)
    best = None
    for lo, hi in zip(xs[:-1], xs[1:]):
        t = 0.5 * (lo + hi)
        left, right = y[x <= t], y[x > t]
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if best is None or sse < best[0]:
            best = (sse, t, left.mean(), right.mean())
    return best


# specs


def test_zoo_names_and_defaults():
    z = zoo(seed=4)
    assert list(z) == [
        "linear_regression", "dense0", "mlp_4n", "mlp_multiple", "knn", "random_forest", "gradient_boost", "linear_svr"
    ]
    assert z["mlp_multiple"].hidden == (32, 64, 32)
    assert z["knn"].k == 11 and z["knn"].weighting == "distance"
    assert (z["random_forest"].n_trees, z["random_forest"].max_depth) == (70, 8)
    assert (z["gradient_boost"].learning_rate, z["gradient_boost"].max_depth, z["gradient_boost"].n_trees) == (0.05, 5, 100)
    assert (z["linear_svr"].epsilon, z["linear_svr"].C, z["linear_svr"].max_iter) == (0.07, 1.5, 7500)
    assert all(s.seed == 4 for s in z.values())


def test_model_spec_from_dict():
    s = spec_from_dict({"preset": "knn", "k": 3}, seed=2)
    assert isinstance(s, KnnSpec) and s.k == 3 and s.seed == 2
    m = spec_from_dict({"kind": "mlp", "hidden": [8, 8]})
    assert m.hidden == (8, 8)
    with pytest.raises(SpecError):
        spec_from_dict({"kind": "lstm"})
    with pytest.raises(SpecError):
        spec_from_dict({"preset": "knn", "C": 1.5})


@pytest.mark.parametrize(
    "make",
    [
        lambda: KnnSpec(k=0),
        lambda: MlpSpec(hidden=(0,)),
        lambda: MlpSpec(activation="tanh"),
        lambda: GradientBoostSpec(learning_rate=1.5),
        lambda: LinearSvrSpec(epsilon=-1),
        lambda: RandomForestSpec(min_samples_split=0),
        lambda: TreeSpec(min_samples_split=1),
    ],
)
def test_model_spec_validation(make):
    with pytest.raises(SpecError):
        make()


# shared contract


@pytest.mark.parametrize("name", list(zoo()))
def test_predict_rejects_wrong_columns(name, rng):
    spec = zoo()[name]
    if isinstance(spec, (MlpSpec, SgdLinearSpec)):
        spec = spec.with_params(epochs=2)
    if isinstance(spec, RandomForestSpec):
        spec = spec.with_params(n_trees=3)
    if isinstance(spec, GradientBoostSpec):
        spec = spec.with_params(n_trees=3)
    m = make_matrix(rng, n=40, p=3)
    model = fit(spec, m)
    assert model.predict(m).shape == (40,)
    with pytest.raises(ColumnMismatchError, match="different order"):
        model.predict(m.select(["x2", "x1", "x0"]))
    with pytest.raises(ColumnMismatchError, match="missing"):
        model.predict(m.select(["x0", "x1"]))


def test_save_load_roundtrip(tmp_path, rng):
    m = make_matrix(rng)
    model = fit(GradientBoostSpec(n_trees=5), m)
    path = save_model(model, tmp_path / "m.pkl")
    back = load_model(path)
    assert np.array_equal(back.predict(m), model.predict(m))
    (tmp_path / "bad.pkl").write_bytes(b"\x80\x04N.")
    with pytest.raises(ModelError):
        load_model(tmp_path / "bad.pkl")


# OLS


def test_ols_recovers_noiseless_coefficients(rng):
    m = make_matrix(rng, noise=0.0)
    model = fit(OlsSpec(), m)
    assert np.allclose(model.coefficients, [1, 2, 3], atol=1e-10)
    assert model.intercept == pytest.approx(2.0, abs=1e-10)
    assert not model.jittered


def test_ols_collinear_columns_jitter(rng):
    x = rng.normal(size=50)
    m = FeatureMatrix.from_arrays(np.column_stack([x, x, rng.normal(size=50)]), 2 * x + 1)
    model = fit(OlsSpec(), m)
    assert model.jittered
    assert np.all(np.isfinite(model.coefficients))
    assert model.coefficients[0] == pytest.approx(model.coefficients[1])
    assert np.allclose(model.predict(m), m.y, atol=1e-6)


def test_ols_without_features(rng):
    m = FeatureMatrix.from_arrays(np.empty((10, 0)), np.arange(10.0), [])
    assert np.allclose(fit(OlsSpec(), m).predict(m), 4.5)


# SGD linear and MLP


def test_sgd_linear_approaches_ols(rng):
    m = make_matrix(rng, n=400, noise=0.1)
    sgd = fit(SgdLinearSpec(learning_rate=1e-2, epochs=60, seed=1), m)
    ols = fit(OlsSpec(), m)
    assert np.allclose(sgd.coefficients, ols.coefficients, atol=0.02)
    assert sgd.intercept == pytest.approx(ols.intercept, abs=0.02)


def test_network_deterministic_per_seed(rng):
    m = make_matrix(rng, n=120)
    a = fit(MlpSpec(hidden=(5,), epochs=5, seed=3), m)
    b = fit(MlpSpec(hidden=(5,), epochs=5, seed=3), m)
    c = fit(MlpSpec(hidden=(5,), epochs=5, seed=4), m)
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_mlp_training_reduces_loss(rng):
    X = rng.normal(size=(300, 2))
    y = np.abs(X[:, 0]) * 3 + X[:, 1]
    model = fit(MlpSpec(hidden=(16,), learning_rate=1e-2, epochs=80, seed=0), FeatureMatrix.from_arrays(X, y))
    assert model.loss_trace[-1] < 0.25 * model.loss_trace[0]
    assert model.coefficients is None


def test_mlp_gradients_match_finite_differences(rng):
    X, y = rng.normal(size=(7, 3)), rng.normal(size=7)
    weights, biases = init_params([3, 4, 2, 1], rng)
    for b in biases:
        b += rng.normal(scale=0.1, size=b.shape)
    _, gw, gb = loss_and_grads(weights, biases, X, y)
    h = 1e-6
    for group, grads in ((weights, gw), (biases, gb)):
        for P, G in zip(group, grads):
            for idx in np.ndindex(P.shape):
                old = P[idx]
                P[idx] = old + h
                up = loss_and_grads(weights, biases, X, y)[0]
                P[idx] = old - h
                down = loss_and_grads(weights, biases, X, y)[0]
                P[idx] = old
                assert G[idx] == pytest.approx((up - down) / (2 * h), rel=1e-4, abs=1e-7)


def test_forward_is_linear_without_hidden(rng):
    W, b = init_params([3, 1], rng)
    X = rng.normal(size=(5, 3))
    assert np.allclose(forward(W, b, X, "linear")[0], X @ W[0][:, 0] + b[0][0])


def test_divergence_is_reported(rng):
    m = make_matrix(rng, n=64)
    m = m.with_X(m.X * 1e6)
    with pytest.raises(DivergenceError, match="learning rate"):
        fit(SgdLinearSpec(learning_rate=1.0, epochs=50), m)


# KNN


def test_knn_small_cases():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    y = np.array([0.0, 10.0, 20.0, 100.0])
    m = FeatureMatrix.from_arrays(X, y)
    one = fit(KnnSpec(k=1), m)
    assert np.array_equal(one.predict(m), y)
    q = FeatureMatrix.from_arrays(np.array([[0.5], [1.0]]), [0.0, 0.0])
    uni = fit(KnnSpec(k=2, weighting="uniform"), m)
    # 0.5 is equidistant from 0 and 1; 1.0 ties 0 and 2, lower index wins
    assert np.allclose(uni.predict(q), [5.0, 5.0])
    dist = fit(KnnSpec(k=3), m)
    assert dist.predict(q)[1] == 10.0  # exact match short-circuits the weighting
    w = 1 / np.array([0.5, 0.5, 1.5])
    assert dist.predict(q)[0] == pytest.approx((w @ [0.0, 10.0, 20.0]) / w.sum())


def test_knn_k_too_large(rng):
    with pytest.raises(ModelError, match="exceeds"):
        fit(KnnSpec(k=11), make_matrix(rng, n=5))


def test_nearest_tie_break():
    d = np.array([1.0, 0.5, 1.0, 0.5, 2.0])
    assert list(nearest(d, 3)) == [1, 3, 0]
    assert list(nearest(d, 10)) == [1, 3, 0, 2, 4]


def test_pairwise_distances(rng):
    Q, X = rng.normal(size=(4, 3)), rng.normal(size=(6, 3))
    ref = np.sqrt(((Q[:, None] - X[None]) ** 2).sum(-1))
    assert np.allclose(pairwise_distances(Q, X), ref, atol=1e-14)


def test_knn_leaf_size_does_not_matter(rng):
    m = make_matrix(rng, n=80)
    a = fit(KnnSpec(k=5, leaf_size=1), m).predict(m)
    b = fit(KnnSpec(k=5, leaf_size=40), m).predict(m)
    assert np.array_equal(a, b)


# trees


def test_tree_stump_matches_enumeration(rng):
    for _ in range(30):
        n = rng.integers(2, 11)
        x = rng.integers(0, 6, size=n).astype(float)
        y = rng.normal(size=n)
        tree = build_tree(x[:, None], y, max_depth=1)
        best = brute_stump(x, y)
        if best is None:
            assert tree.n_nodes == 1
            continue
        assert tree.threshold[0] == best[1]
        assert tree.value[tree.left[0]] == pytest.approx(best[2], abs=1e-12)
        assert tree.value[tree.right[0]] == pytest.approx(best[3], abs=1e-12)


def test_tree_fits_training_data_fully(rng):
    m = make_matrix(rng, n=50)
    model = fit(TreeSpec(), m)
    assert np.allclose(model.predict(m), m.y)


def test_tree_depth_limit_and_pure_node(rng):
    m = make_matrix(rng, n=200)
    model = fit(TreeSpec(max_depth=3), m)
    assert model.tree.depth == 3 and model.tree.n_leaves <= 8
    flat = FeatureMatrix.from_arrays(rng.normal(size=(20, 2)), np.full(20, 7.0))
    assert fit(TreeSpec(), flat).tree.n_nodes == 1


def test_tree_min_samples_split(rng):
    m = make_matrix(rng, n=40)
    model = fit(TreeSpec(min_samples_split=40), m)
    assert model.tree.n_nodes == 3
    assert model.tree.n_samples[0] == 40


def test_tree_constant_feature_is_leaf():
    m = FeatureMatrix.from_arrays(np.ones((10, 1)), np.arange(10.0))
    assert fit(TreeSpec(), m).tree.n_nodes == 1


# forest and boosting


def test_forest_deterministic_and_averaged(rng):
    m = make_matrix(rng, n=120, p=4)
    spec = RandomForestSpec(n_trees=8, max_depth=4, seed=9)
    a, b = fit(spec, m), fit(spec, m)
    assert np.array_equal(a.predict(m), b.predict(m))
    assert np.allclose(a.predict(m), a.tree_predictions(m.X).mean(axis=0))
    c = fit(spec.with_params(seed=10), m)
    assert not np.array_equal(a.predict(m), c.predict(m))


def test_forest_accepts_min_samples_split_one(rng):
    m = make_matrix(rng, n=60)
    a = fit(RandomForestSpec(n_trees=3, min_samples_split=1, seed=0), m)
    b = fit(RandomForestSpec(n_trees=3, min_samples_split=2, seed=0), m)
    assert np.array_equal(a.predict(m), b.predict(m))


def test_forest_without_bootstrap_or_subsampling_equals_tree(rng):
    m = make_matrix(rng, n=80)
    forest = fit(RandomForestSpec(n_trees=2, max_depth=4, bootstrap=False, max_features=None), m)
    tree = fit(TreeSpec(max_depth=4), m)
    assert np.allclose(forest.predict(m), tree.predict(m), atol=1e-12)


def test_boosting_staged_and_monotone(rng):
    m = make_matrix(rng, n=150)
    model = fit(GradientBoostSpec(n_trees=30, max_depth=2, learning_rate=0.3), m)
    assert np.all(np.diff(model.train_loss) <= 1e-12)
    stages = list(model.staged_predict(m.X))
    assert len(stages) == 31
    assert np.allclose(stages[-1], model.predict(m))
    assert np.allclose(stages[0], m.y.mean())


def test_boosting_single_stage_equals_tree(rng):
    m = make_matrix(rng, n=90)
    boost = fit(GradientBoostSpec(n_trees=1, learning_rate=1.0, max_depth=3), m)
    tree = fit(TreeSpec(max_depth=3), m)
    assert np.allclose(boost.predict(m), tree.predict(m), atol=1e-12)


# linear SVR


def test_svr_gradient_matches_finite_differences(rng):
    X, y = rng.normal(size=(30, 3)), rng.normal(size=30)
    w, b = rng.normal(size=3), 0.3
    gw, gb = _gradient(w, b, X, y, 0.1, 2.0)
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (svr_objective(w + e, b, X, y, 0.1, 2.0) - svr_objective(w - e, b, X, y, 0.1, 2.0)) / (2 * h)
        assert gw[j] == pytest.approx(fd, rel=1e-6)
    fd = (svr_objective(w, b + h, X, y, 0.1, 2.0) - svr_objective(w, b - h, X, y, 0.1, 2.0)) / (2 * h)
    assert gb == pytest.approx(fd, rel=1e-6)


def test_svr_objective_never_increases(rng):
    m = make_matrix(rng, n=200)
    model = fit(LinearSvrSpec(max_iter=500), m)
    assert np.all(np.diff(model.objective_trace) <= 0)


def test_svr_close_to_ols_with_small_epsilon(rng):
    m = make_matrix(rng, n=300, noise=0.2)
    svr = fit(LinearSvrSpec(epsilon=0.0, C=100.0, max_iter=5000), m)
    ols = fit(OlsSpec(), m)
    assert np.allclose(svr.coefficients, ols.coefficients, atol=1e-3)


# grid search


def test_grid_search_picks_lowest_mae(rng):
    m = make_matrix(rng, n=200, p=2)
    train, val = m.split_tail(0.3)
    result = grid_search("knn", {"k": [1, 5, 15], "weighting": ["uniform", "distance"]}, train, val)
    assert len(result.table) == 6
    assert result.best_mae == result.table["mae"].min()
    row = result.table.loc[result.table["mae"].idxmin()]
    assert (result.best.k, result.best.weighting) == (row["k"], row["weighting"])


def test_grid_search_budget_checked_before_training(rng, monkeypatch):
    import epfbench.models as models

    calls = []
    monkeypatch.setattr(models, "fit", lambda *a: calls.append(a))
    m = make_matrix(rng)
    with pytest.raises(BudgetExceededError):
        grid_search(KnnSpec(), {"k": list(range(1, 12))}, m, m, budget=10)
    assert calls == []


def test_grid_search_failed_points(rng):
    m = make_matrix(rng, n=30)
    train, val = m.split_tail(0.5)
    result = grid_search(KnnSpec(), {"k": [3, 100]}, train, val)
    assert result.best.k == 3
    assert math.isnan(result.table["mae"].iloc[1])


def test_grid_search_rejects_unknown_parameter(rng):
    m = make_matrix(rng)
    with pytest.raises(SpecError):
        grid_search(KnnSpec(), {"C": [1.5]}, m, m)
