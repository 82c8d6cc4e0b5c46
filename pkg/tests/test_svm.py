import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone
from sklearn.svm import SVC

from seminar.features import FEATURE_NAMES
from seminar.svm import (
    ConvergenceWarning, DegenerateLabels, EvalReport, KernelSvmModel, SeminarSVC,
    dual_objective, evaluate, format_table, format_tsv, kkt_violation, loocv, rbf_kernel,
    smo_solve,
)

from oracles import active_set_optimum, grid_optimum, objective, rbf_gram, toy_problems

TOYS = toy_problems()


# --- kernel -----------------------------------------------------------------------

def test_kernel_self_is_one():
    x = np.array([0.3, -2.0, 7.5])
    assert rbf_kernel(x, x, 0.7) == 1.0


def test_kernel_unit_distance():
    assert rbf_kernel([0.0, 1.0], [1.0, 1.0], 1.0) == pytest.approx(0.367879, abs=1e-6)
    assert rbf_kernel([0.0], [1.0], 1.0) == math.exp(-1)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.01, 3))
def test_kernel_symmetric(x, y, g):
    assert rbf_kernel(x, y, g) == rbf_kernel(y, x, g)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        rbf_kernel([1, 2], [1, 2, 3], 1.0)


# --- solver against independent optima ---------------------------------------------------

def test_two_point_closed_form():
    # equal alphas by the equality constraint; the 1-D dual gives a = 2 / (2 - 2k)
    k = math.exp(-1.0)
    K = np.array([[1, k], [k, 1]])
    y = np.array([1.0, -1.0])
    r = smo_solve(K, y, C=100.0, tol=1e-12)
    assert r.alpha[0] == pytest.approx(1 / (1 - k), rel=1e-12)
    assert r.alpha[0] == pytest.approx(r.alpha[1], rel=1e-12)
    f = K @ (r.alpha * y) + r.bias
    assert f == pytest.approx([1.0, -1.0], abs=1e-12)


@pytest.mark.parametrize("name,X,y,C,gamma", TOYS, ids=[t[0] for t in TOYS])
def test_smo_matches_reference_optima(name, X, y, C, gamma):
    K = rbf_gram(X, gamma)
    r = smo_solve(K, y, C, tol=1e-9)
    f = objective(r.alpha, y.astype(float), K)
    f_exact, _ = active_set_optimum(K, y, C)
    f_grid, _ = grid_optimum(K, y, C)
    assert abs(f - f_exact) <= 1e-8
    assert abs(f - f_grid) <= 1e-3
    assert dual_objective(r.alpha, y, K) == pytest.approx(-f)


@pytest.mark.parametrize("name,X,y,C,gamma", TOYS, ids=[t[0] for t in TOYS])
def test_kkt_and_equality_on_toys(name, X, y, C, gamma):
    est = SeminarSVC(C=C, gamma=gamma, tol=1e-9, feature_subset=["a", "b"][:X.shape[1]],
                     feature_names=("a", "b")[:X.shape[1]]).fit(X, y)
    a, yy, K = est.train_alpha_, est.train_y_, est.train_K_
    assert np.all(a >= 0) and np.all(a <= C)
    assert abs(a @ yy) <= 1e-8
    assert kkt_violation(a, yy, K, C, est.intercept_) <= 1e-8


def test_separable_toy_has_no_training_errors():
    _, X, y, C, g = TOYS[1]
    est = SeminarSVC(C=C, gamma=g, feature_subset=["a", "b"], feature_names=("a", "b"))
    assert np.array_equal(est.fit(X, y).predict(X), y)


def test_free_support_vectors_on_margin():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0, 1, -1)
    names = ("a", "b", "c")
    est = SeminarSVC(C=2.0, gamma=0.5, tol=1e-9, feature_subset=list(names),
                     feature_names=names).fit(X, y)
    m = est.model_
    free = (m.alphas > 1e-9) & (m.alphas < m.C - 1e-9)
    assert free.any()
    margins = m.decision_function(m.support_vectors[free]) * m.labels[free]
    assert margins == pytest.approx(1.0, abs=1e-7)


def test_far_point_margin_is_bias():
    _, X, y, C, g = TOYS[1]
    est = SeminarSVC(C=C, gamma=g, feature_subset=["a", "b"], feature_names=("a", "b"))
    est.fit(X, y)
    assert est.decision_function([[1e4, 1e4]])[0] == est.intercept_


def test_hand_evaluated_model():
    m = KernelSvmModel(np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.25]),
                       np.array([1, -1]), bias=0.1, gamma=2.0, C=1.0,
                       feature_order=["a", "b"])
    x = [0.0, 1.0]
    hand = 0.5 * math.exp(-2.0) - 0.25 * math.exp(-4.0) + 0.1
    assert m.decision_function([x])[0] == pytest.approx(hand, abs=1e-15)


def test_duplicated_rows_same_decision_function():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(12, 2))
    y = np.where(X[:, 1] > 0, 1, -1)
    kw = dict(C=1.0, gamma=1.0, tol=1e-10, feature_subset=["a", "b"], feature_names=("a", "b"))
    once = SeminarSVC(**kw).fit(X, y)
    twice = SeminarSVC(**kw).fit(np.vstack([X, X]), np.concatenate([y, y]))
    grid = rng.normal(size=(50, 2))
    assert twice.decision_function(grid) == pytest.approx(once.decision_function(grid), abs=1e-6)


def test_matches_libsvm():
    rng = np.random.default_rng(9)
    X = rng.random((80, 20))
    y = np.where(X[:, :5].sum(1) + 0.3 * rng.normal(size=80) > 2.5, 1, -1)
    ours = SeminarSVC(C=1.0, tol=1e-8).fit(X, y)
    ref = SVC(C=1.0, kernel="rbf", gamma=1 / 20, tol=1e-8).fit(X, y)
    grid = rng.random((40, 20))
    assert ours.decision_function(grid) == pytest.approx(ref.decision_function(grid), abs=1e-5)


def test_degenerate_labels():
    with pytest.raises(DegenerateLabels, match="degenerate labels"):
        SeminarSVC().fit(np.zeros((3, 20)), [1, 1, 1])


def test_bad_labels():
    with pytest.raises(ValueError, match="labels must be"):
        SeminarSVC().fit(np.zeros((3, 20)), [0, 1, 2])


def test_convergence_warning_on_tiny_budget():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 20))
    y = np.where(rng.random(40) > 0.5, 1, -1)
    with pytest.warns(ConvergenceWarning):
        est = SeminarSVC(C=10.0, tol=1e-12, max_passes=1).fit(X, y)
    assert not est.converged_


def test_feature_dimension_mismatch():
    est = SeminarSVC().fit(np.random.default_rng(0).random((6, 20)), [1, -1] * 3)
    with pytest.raises(ValueError, match="dimension mismatch"):
        est.predict(np.zeros((1, 19)))


# --- invariances ----------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_permutation_invariant(seed, rnd):
    rng = np.random.default_rng(seed)
    X = rng.random((15, 20))
    y = np.array([1, -1] + [int(v) for v in rng.choice([-1, 1], 13)])
    perm = list(range(15))
    rnd.shuffle(perm)
    a = SeminarSVC().fit(X, y)
    b = SeminarSVC().fit(X[perm], y[perm])
    probe = rng.random((10, 20))
    assert np.array_equal(a.decision_function(probe), b.decision_function(probe))


def test_interaction_mask_uses_five_columns():
    rng = np.random.default_rng(4)
    X = rng.random((30, 20))
    y = np.where(X[:, 0] > 0.5, 1, -1)
    est = SeminarSVC(feature_subset="interaction").fit(X, y)
    assert len(est.columns_) == 5 and est.model_.support_vectors.shape[1] == 5
    assert est.gamma_ == 1 / 5
    scrambled = X.copy()
    scrambled[:, 5:] = rng.random((30, 15))
    other = SeminarSVC(feature_subset="interaction").fit(scrambled, y)
    probe = rng.random((8, 20))
    probe2 = probe.copy()
    probe2[:, 5:] = 99.0
    assert np.array_equal(est.decision_function(probe), other.decision_function(probe2))


def test_get_params_and_clone():
    est = SeminarSVC(C=3.0, feature_subset="style")
    c = clone(est)
    assert c.get_params()["C"] == 3.0 and c.get_params()["feature_subset"] == "style"


# --- evaluation -------------------------------------------------------------------------

def test_evaluate_hand_example():
    pred = [1, 1, 1, 1, -1, -1, -1]
    gold = [1, 1, 1, -1, 1, 1, -1]
    r = evaluate(pred, gold)
    assert (r.tp, r.fp, r.fn, r.tn) == (3, 1, 2, 1)
    assert r.row()[:3] == [75.0, 60.0, 66.7]


def test_evaluate_all_normal_predictions():
    gold = [1] * 71 + [-1] * 79
    r = evaluate([-1] * 150, gold)
    assert r.row()[:3] == [0.0, 0.0, 0.0]
    assert r.row()[4] == 100.0
    assert r.row()[5] == 69.0


def test_evaluate_perfect():
    assert evaluate([1, -1, 1], [1, -1, 1]).row() == [100.0] * 7


def test_evaluate_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        evaluate([1], [1, -1])


@given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.sampled_from([-1, 1])), min_size=1))
def test_macro_f1_symmetric_under_relabeling(pairs):
    p = np.array([a for a, _ in pairs])
    g = np.array([b for _, b in pairs])
    assert evaluate(p, g).macro_f1 == pytest.approx(evaluate(-p, -g).macro_f1, abs=1e-15)


def test_report_formats():
    reps = {"all": EvalReport(3, 1, 2, 1)}
    assert "75.0" in format_table(reps)
    assert format_tsv(reps).splitlines()[1].startswith("all\t0.750000\t0.600000")


# --- leave-one-out ---------------------------------------------------------------------

def test_loocv_perfectly_separated():
    X = np.vstack([np.full((6, 20), 0.0), np.full((6, 20), 1.0)])
    X[:, 0] += np.linspace(0, 0.01, 12)
    y = np.array([-1] * 6 + [1] * 6)
    assert loocv(X, y, C=10.0).report.macro_f1 == 1.0


def test_loocv_equals_external_loop():
    rng = np.random.default_rng(12)
    X = rng.random((10, 20))
    y = np.array([1, -1] * 5)
    res = loocv(X, y)
    pred = []
    for i in range(10):
        keep = np.arange(10) != i
        pred.append(int(SeminarSVC().fit(X[keep], y[keep]).predict(X[i:i + 1])[0]))
    assert list(res.predictions) == pred
    assert res.report == evaluate(pred, y)


def test_loocv_thread_invariant():
    rng = np.random.default_rng(13)
    X = rng.random((16, 20))
    y = np.where(X[:, 0] > 0.5, 1, -1)
    a = loocv(X, y, threads=1)
    b = loocv(X, y, threads=3)
    assert np.array_equal(a.margins, b.margins) and a.report == b.report


def test_loocv_with_tuning_runs():
    rng = np.random.default_rng(14)
    X = rng.random((12, 20))
    y = np.where(X[:, 0] > 0.5, 1, -1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = loocv(X, y, tune=True)
    assert res.report.n == 12


# --- persistence ----------------------------------------------------------------------

@pytest.mark.parametrize("standardize", [False, True])
def test_model_roundtrip(tmp_path, standardize):
    rng = np.random.default_rng(6)
    X = rng.random((25, 20))
    y = np.where(X[:, 3] > 0.5, 1, -1)
    est = SeminarSVC(standardize=standardize, feature_subset="interaction+diversity").fit(X, y)
    est.model_.save(tmp_path / "m.txt")
    back = KernelSvmModel.load(tmp_path / "m.txt")
    again = SeminarSVC.from_model(back, FEATURE_NAMES)
    probe = rng.random((9, 20))
    assert np.array_equal(again.decision_function(probe), est.decision_function(probe))
    assert back.dumps() == est.model_.dumps()


def test_model_load_rejects_garbage():
    with pytest.raises(ValueError):
        KernelSvmModel.loads("hello\n")
