import numpy as np
import pytest

from oracles import active_set_optimum
from uavcount.svm import (
    ConvergenceError,
    KernelSpec,
    MultiClassSvm,
    SvmModel,
    SvmTrainingError,
    dual_objective,
    kkt_violation,
    load_model,
    save_model,
    svm_classify_multiclass,
    svm_decision,
    svm_train_binary,
    svm_train_multiclass,
)

LINEAR = KernelSpec("linear")


def test_matches_active_set_oracle_rbf():
    rng = np.random.default_rng(0)
    for trial in range(5):
        X = rng.normal(size=(6, 2))
        g = np.array([1, 1, 1, -1, -1, -1.0])
        kern = KernelSpec("rbf", 0.7)
        m = svm_train_binary(X, g, C=1.0, kernel=kern, tol=1e-8, standardize=False)
        K = kern.matrix(X, X)
        Q = np.outer(g, g) * K
        oracle = active_set_optimum(Q, g, 1.0)
        assert dual_objective(m.alpha, g, K) == pytest.approx(oracle, abs=1e-6)


def test_xor_linear_matches_grid_search():
    X = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1.0]])
    g = np.array([1, 1, -1, -1.0])
    m = svm_train_binary(X, g, C=1.0, kernel=LINEAR, tol=1e-8, standardize=False)
    K = X @ X.T
    grid = np.linspace(0, 1, 101)
    a1, a2, a3 = np.meshgrid(grid, grid, grid, indexing="ij")
    a4 = a1 + a2 - a3
    ok = (a4 >= 0) & (a4 <= 1)
    A = np.stack([a1[ok], a2[ok], a3[ok], a4[ok]], axis=1)
    V = A * g
    obj = A.sum(1) - 0.5 * np.einsum("ni,ij,nj->n", V, K, V)
    assert dual_objective(m.alpha, g, K) == pytest.approx(obj.max(), abs=1e-3)


def test_two_point_symmetry():
    X = np.array([[-1.0], [1.0]])
    g = np.array([-1.0, 1.0])
    m = svm_train_binary(X, g, C=1e3, kernel=LINEAR, tol=1e-10, standardize=False)
    assert svm_decision(m, [0.0]) == pytest.approx(0.0, abs=1e-9)
    assert m.alpha[0] == pytest.approx(m.alpha[1])
    assert m.alpha == pytest.approx([0.5, 0.5])
    assert svm_decision(m, [1.0]) == pytest.approx(1.0)
    assert svm_decision(m, [-1.0]) == pytest.approx(-1.0)


def test_duplicate_opposite_labels_hit_bound():
    X = np.array([[0, 0], [0, 0], [3, 3], [-3, -3.0]])
    g = np.array([1, -1, 1, -1.0])
    m = svm_train_binary(X, g, C=1.0, kernel=LINEAR, tol=1e-8, standardize=False)
    assert m.alpha[:2] == pytest.approx([1.0, 1.0])
    f0 = svm_decision(m, [0.0, 0.0])
    # both copies sit inside the margin: slack is positive
    assert 1 - f0 > 0 and 1 + f0 > 0


def overlapping(n=60, seed=1):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n // 2, 3)), rng.normal(1.2, 1, (n // 2, 3))])
    g = np.repeat([1.0, -1.0], n // 2)
    return X, g


@pytest.mark.parametrize("kind", ["linear", "rbf"])
def test_kkt_and_equality_constraint(kind):
    X, g = overlapping()
    m = svm_train_binary(X, g, C=1.0, kernel=KernelSpec(kind), tol=1e-3)
    assert kkt_violation(m) <= 1e-3
    assert abs(m.alpha @ g) <= 1e-8
    assert np.all((m.alpha >= 0) & (m.alpha <= m.C))


def test_margin_at_free_support_vectors():
    X, g = overlapping(seed=4)
    m = svm_train_binary(X, g, C=10.0, kernel=KernelSpec("rbf"), tol=1e-6)
    free = (m.alpha > 1e-9) & (m.alpha < m.C - 1e-9)
    assert free.any()
    f = svm_decision(m, X[free])
    assert g[free] * f == pytest.approx(np.ones(free.sum()), abs=1e-5)


def test_dual_objective_non_decreasing():
    X, g = overlapping(seed=2)
    m = svm_train_binary(X, g, kernel=KernelSpec("rbf"), record_objective=True)
    trace = np.array(m.objective_trace)
    assert len(trace) == m.iterations + 1
    assert np.all(np.diff(trace) >= -1e-12)


def test_label_swap_negates_decision():
    X, g = overlapping(seed=3)
    a = svm_train_binary(X, g, tol=1e-8)
    b = svm_train_binary(X, -g, tol=1e-8)
    Q = np.random.default_rng(0).normal(size=(20, 3))
    assert svm_decision(b, Q) == pytest.approx(-svm_decision(a, Q), abs=1e-5)


def test_separable_set_classified():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(-3, 0.5, (20, 2)), rng.normal(3, 0.5, (20, 2))])
    g = np.repeat([-1.0, 1.0], 20)
    for kern in (LINEAR, KernelSpec("rbf")):
        m = svm_train_binary(X, g, C=10.0, kernel=kern)
        assert np.all(np.sign(svm_decision(m, X)) == g)


def test_training_errors():
    X, g = overlapping()
    with pytest.raises(SvmTrainingError):
        svm_train_binary(X, np.ones(len(g)))
    with pytest.raises(SvmTrainingError):
        svm_train_binary(X, g, C=0.0)
    with pytest.raises(SvmTrainingError):
        svm_train_binary(X, np.where(g > 0, 1.0, 0.0))
    with pytest.raises(ConvergenceError) as err:
        svm_train_binary(X, g, max_passes=0)
    assert isinstance(err.value.best, SvmModel)
    with pytest.raises(ValueError):
        KernelSpec("poly")


def constant_model(bias):
    return SvmModel(np.zeros((0, 1)), np.zeros(0), bias, LINEAR, 1.0, np.zeros(1), np.ones(1))


def test_multiclass_vote_rules():
    agree = MultiClassSvm(3, {(1, 2): constant_model(-1), (1, 3): constant_model(-1), (2, 3): constant_model(1)})
    assert svm_classify_multiclass(agree, [0.0]) == 2
    two = MultiClassSvm(2, {(1, 2): constant_model(-0.3)})
    assert svm_classify_multiclass(two, [0.0]) == 2
    two = MultiClassSvm(2, {(1, 2): constant_model(0.3)})
    assert svm_classify_multiclass(two, [0.0]) == 1
    # 1 beats 2, 2 beats 3, 3 beats 1: largest summed margin wins
    cycle = MultiClassSvm(3, {(1, 2): constant_model(0.5), (2, 3): constant_model(0.7), (1, 3): constant_model(-0.9)})
    assert svm_classify_multiclass(cycle, [0.0]) == 3
    flat = MultiClassSvm(3, {(1, 2): constant_model(0.5), (2, 3): constant_model(0.5), (1, 3): constant_model(-0.5)})
    assert svm_classify_multiclass(flat, [0.0]) == 1


def test_multiclass_training_and_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    centers = np.array([[-4, 0], [0, 4], [4, 0.0]])
    X = np.vstack([rng.normal(c, 0.5, (15, 2)) for c in centers])
    y = np.repeat([1, 2, 3], 15)
    mc = svm_train_multiclass(X, y, 3)
    assert sorted(mc.models) == [(1, 2), (1, 3), (2, 3)]
    assert np.all(mc.predict(X) == y)
    p = tmp_path / "svm.json"
    save_model(mc, p)
    mc2 = load_model(p)
    assert np.array_equal(mc2.predict(X), mc.predict(X))
    for k in mc.models:
        assert svm_decision(mc2.models[k], X) == pytest.approx(svm_decision(mc.models[k], X), abs=1e-12)
    with pytest.raises(SvmTrainingError):
        svm_train_multiclass(X[y < 3], y[y < 3], 3)
