import numpy as np
import pytest

from falcur import classifier as clf
from falcur.classifier import GridSpec, LogisticModel, TrainConfig


def gradient_errors(n_points=10, seed=0, h=1e-6):
    """Max relative error between the analytic gradient and central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        n, d = int(rng.integers(5, 40)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n)
        w, b = rng.normal(size=d), float(rng.normal())
        c = float(10 ** rng.uniform(-2, 2))
        gw, gb = clf.gradient(w, b, X, y, c)
        num = np.empty(d + 1)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            num[j] = (clf.objective(w + e, b, X, y, c) - clf.objective(w - e, b, X, y, c)) / (2 * h)
        num[d] = (clf.objective(w, b + h, X, y, c) - clf.objective(w, b - h, X, y, c)) / (2 * h)
        ana = np.append(gw, gb)
        worst = max(worst, float(np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-12)))
    return worst


def blobs(n=200, d=3, shift=1.5, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d)) + shift * y[:, None]
    return X, y


def test_gradient_matches_finite_differences():
    assert gradient_errors() < 1e-5


def test_objective_by_hand():
    X = np.array([[1.0], [-2.0]])
    y = np.array([1, 0])
    w, b, c = np.array([0.5]), 0.25, 2.0
    want = np.log1p(np.exp(-0.75)) + np.log1p(np.exp(-0.75)) + 0.25 / 4.0
    assert clf.objective(w, b, X, y, c) == pytest.approx(want, rel=1e-12)


def test_separable_one_dimensional():
    X = np.array([[0.0], [1.0]])
    model = clf.fit(X, np.array([0, 1]), TrainConfig(max_iter=200))
    p = clf.predict_proba(model, X)
    assert p[0] < 0.5 < p[1]


def test_zero_weights_give_half():
    model = LogisticModel(weights=np.zeros(3), intercept=0.0)
    assert np.all(clf.predict_proba(model, np.random.default_rng(0).normal(size=(5, 3))) == 0.5)


def test_proba_monotone_in_feature():
    model = LogisticModel(weights=np.array([1.0]), intercept=0.0)
    xs = np.linspace(-5, 40, 50)[:, None]
    p = clf.predict_proba(model, xs)
    assert clf.predict_proba(model, np.zeros((1, 1)))[0] == 0.5
    assert np.all(np.diff(p) >= 0) and p[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        clf.predict_proba(model, np.zeros((2, 2)))


def test_duplicated_rows_with_rescaled_c():
    # doubling every row doubles the summed loss, so the penalty 1/(2c) must
    # double too (c -> c/2) for the same minimiser
    X, y = blobs(60)
    a = clf.fit(X, y, TrainConfig(c=0.7, max_iter=300))
    b = clf.fit(np.vstack([X, X]), np.concatenate([y, y]), TrainConfig(c=0.35, max_iter=300))
    assert np.allclose(a.weights, b.weights, atol=1e-6)
    assert a.intercept == pytest.approx(b.intercept, abs=1e-6)


def test_descent_decreases_objective_and_converges():
    X, y = blobs(100)
    cfg = TrainConfig(c=1.0, max_iter=5000, learning_rate=1.0)
    model = clf.fit(X, y, cfg)
    assert model.converged
    zero = clf.objective(np.zeros(3), 0.0, X, y, 1.0)
    assert clf.objective(model.weights, model.intercept, X, y, 1.0) < zero
    gw, gb = clf.gradient(model.weights, model.intercept, X, y, 1.0)
    assert np.sqrt(gw @ gw + gb * gb) / len(y) < cfg.grad_tol


def test_predict_thresholds():
    model = LogisticModel(weights=np.array([1.0]), intercept=0.0)
    X = np.array([[-3.0], [0.0], [3.0]])
    assert clf.predict(model, X).tolist() == [0, 1, 1]
    assert clf.predict(model, X, threshold=0.0).tolist() == [1, 1, 1]
    assert clf.predict(model, X, threshold=1.0 + 1e-9).tolist() == [0, 0, 0]


def test_fit_errors():
    with pytest.raises(ValueError):
        clf.fit(np.zeros((3, 1)), np.array([1, 1, 1]))
    with pytest.raises(ValueError):
        clf.fit(np.array([[np.inf], [0.0]]), np.array([0, 1]))
    with pytest.raises(ValueError):
        TrainConfig(c=0)


def test_warm_start_from_init():
    X, y = blobs(80)
    first = clf.fit(X, y, TrainConfig(max_iter=50))
    resumed = clf.fit(X, y, TrainConfig(max_iter=50), init=first)
    assert clf.objective(resumed.weights, resumed.intercept, X, y, 1.0) <= \
        clf.objective(first.weights, first.intercept, X, y, 1.0)


def test_grid_single_pair():
    X, y = blobs(50)
    best = clf.grid_search(X, y, GridSpec(c_grid=(3.0,), max_iter_grid=(7,)))
    assert (best.c, best.max_iter) == (3.0, 7)


def test_grid_prefers_dominating_pair():
    # a heavy penalty pins w near zero so the model cannot use the signal
    X, y = blobs(200, shift=3.0)
    grid = GridSpec(c_grid=(1e-5, 10.0), max_iter_grid=(200,), folds=4)
    scores = clf.cv_scores(X, y, grid)
    assert scores[(10.0, 200)] > scores[(1e-5, 200)]
    assert clf.grid_search(X, y, grid).c == 10.0


def test_grid_tie_goes_to_smaller_c():
    # both settings reach the same predictions on perfectly separated data
    y = np.arange(40) % 2
    X = (2.0 * y - 1.0)[:, None] + np.random.default_rng(0).normal(0, 0.01, (40, 1))
    best = clf.grid_search(X, y, GridSpec(c_grid=(100.0, 10.0), max_iter_grid=(500, 100), folds=2))
    assert (best.c, best.max_iter) == (10.0, 100)


def test_grid_infeasible_stratification():
    X = np.zeros((6, 1))
    y = np.array([0, 0, 0, 0, 0, 1])
    with pytest.raises(ValueError):
        clf.cv_scores(X, y, GridSpec(folds=2))
