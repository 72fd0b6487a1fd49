import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
import scipy.optimize
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from slrupdate.classifiers import (
    HyperParams,
    class_weights,
    load_model,
    predict,
    save_model,
    threshold_for_recall,
    train,
    train_gbt,
    train_lsvm,
    train_mnb,
)
from slrupdate.classifiers.boosting import best_split, fit_gbt, logistic_grad_hess, split_gain
from slrupdate.classifiers.linear import HINGE, LOG, gradient, objective, sgd_fit
from slrupdate.classifiers.model import model_from_json, model_to_json, scores
from slrupdate.errors import SingleClassCorpus, UnreachableRecall, VocabularyMismatch
from slrupdate.text import LabeledDocument, Vocabulary, build_vocabulary, vectorize, vectorize_documents


def _random_problem(rng, n=40, d=6):
    X = rng.poisson(1.0, size=(n, d)).astype(float)
    y = (rng.random(n) < 0.3).astype(int)
    y[0], y[1] = 0, 1
    w0, w1 = class_weights(y)
    sw = np.where(y == 1, w1, w0)
    return X, y, sw


# -- gradients versus central finite differences -------------------------------

def _fd_check(loss, rng, reg):
    X, y, sw = _random_problem(rng)
    w = rng.normal(size=X.shape[1])
    b = float(rng.normal())
    if loss == HINGE:
        margins = np.where(y > 0, 1, -1) * (X @ w + b)
        if np.min(np.abs(margins - 1)) < 1e-3:
            return False  # too close to a kink
    gw, gb = gradient(w, b, X, y, sw, reg, loss)
    eps = 1e-6
    num = np.empty_like(w)
    for j in range(w.size):
        e = np.zeros_like(w)
        e[j] = eps
        num[j] = (objective(w + e, b, X, y, sw, reg, loss) - objective(w - e, b, X, y, sw, reg, loss)) / (2 * eps)
    nb = (objective(w, b + eps, X, y, sw, reg, loss) - objective(w, b - eps, X, y, sw, reg, loss)) / (2 * eps)
    full_a = np.append(gw, gb)
    full_n = np.append(num, nb)
    rel = np.linalg.norm(full_a - full_n) / max(np.linalg.norm(full_n), 1e-12)
    assert rel < 1e-4
    return True


@pytest.mark.parametrize("loss", [LOG, HINGE])
def test_gradient_matches_finite_differences(loss):
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 10:
        checked += _fd_check(loss, rng, reg=0.1)


def test_sgd_reaches_batch_optimum():
    rng = np.random.default_rng(3)
    X, y, sw = _random_problem(rng, n=80, d=5)
    reg = 0.05

    def f(p):
        return objective(p[:-1], p[-1], X, y, sw, reg, LOG)

    def g(p):
        gw, gb = gradient(p[:-1], p[-1], X, y, sw, reg, LOG)
        return np.append(gw, gb)

    opt = scipy.optimize.minimize(f, np.zeros(X.shape[1] + 1), jac=g, method="L-BFGS-B")
    w, b = sgd_fit(X, y, sw, reg, LOG, epochs=200, seed=0)
    assert f(np.append(w, b)) <= opt.fun * 1.02 + 1e-6


def test_sgd_deterministic():
    rng = np.random.default_rng(0)
    X, y, sw = _random_problem(rng)
    a = sgd_fit(sp.csr_matrix(X), y, sw, 0.5, HINGE, 5, seed=11)
    b = sgd_fit(X, y, sw, 0.5, HINGE, 5, seed=11)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


# -- multinomial naive Bayes versus exact Bayes posteriors ----------------------

def _exact_log_odds(X, y, x, a=1):
    d = X.shape[1]
    joint = []
    for c in (0, 1):
        rows = [i for i in range(len(y)) if y[i] == c]
        prior = Fraction(len(rows), len(y))
        totals = [sum(int(X[i][j]) for i in rows) for j in range(d)]
        denom = sum(totals) + a * d
        lik = Fraction(1)
        for j in range(d):
            lik *= Fraction(totals[j] + a, denom) ** int(x[j])
        joint.append(prior * lik)
    post1 = joint[1] / (joint[0] + joint[1])
    return math.log(post1) - math.log(1 - post1)


@st.composite
def small_corpora(draw):
    d = draw(st.integers(1, 5))
    n = draw(st.integers(2, 8))
    X = [[draw(st.integers(0, 4)) for _ in range(d)] for _ in range(n)]
    y = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    if len(set(y)) < 2:
        y[0], y[-1] = 0, 1
    return np.array(X, dtype=float), np.array(y)


@settings(max_examples=300, deadline=None)
@given(small_corpora())
def test_mnb_matches_brute_force(corpus):
    X, y = corpus
    model = train_mnb(X, y)
    got = scores(model, X)
    for i in range(X.shape[0]):
        assert abs(got[i] - _exact_log_odds(X, y, X[i])) < 1e-9


# -- gradient boosting: realised splits are the exhaustive optimum --------------

def _enumerate_best(X, g, h, lam):
    best = -math.inf
    m, d = X.shape
    for j in range(d):
        values = sorted(set(X[:, j]))
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2
            left = X[:, j] < t
            gl, hl = g[left].sum(), h[left].sum()
            gr, hr = g[~left].sum(), h[~left].sum()
            best = max(best, split_gain(gl, hl, gr, hr, lam))
    return best


def _rows_at_nodes(tree, X):
    rows = {0: np.arange(X.shape[0])}
    for node in range(tree.n_nodes):
        if tree.is_leaf(node) or node not in rows:
            continue
        r = rows[node]
        go_left = X[r, tree.feature[node]] < tree.threshold[node]
        rows[tree.left[node]] = r[go_left]
        rows[tree.right[node]] = r[~go_left]
    return rows


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 32), d=st.integers(1, 4),
       gamma=st.sampled_from([0.0, 0.1, 1.0]))
def test_gbt_splits_are_optimal(seed, n, d, gamma):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(n, d)).astype(float)
    y = (rng.random(n) < 0.4).astype(float)
    y[0], y[1] = 0, 1
    lam = 1.0
    spw = (y == 0).sum() / (y == 1).sum()
    base, trees = fit_gbt(X, y, scale_pos_weight=spw, gamma=gamma, subsample=1.0, n_trees=3,
                          max_depth=3, learning_rate=0.3, lam=lam, seed=0)
    weight = np.where(y > 0, spw, 1.0)
    margin = np.full(n, base)
    for tree in trees:
        g, h = logistic_grad_hess(margin, y, weight)
        rows = _rows_at_nodes(tree, X)
        for node in tree.internal_nodes():
            r = rows[node]
            expected = _enumerate_best(X[r], g[r], h[r], lam)
            assert tree.gain[node] == pytest.approx(expected, rel=1e-9, abs=1e-12)
            assert tree.gain[node] - gamma > 0
        margin = margin + tree.predict(X)


def test_gbt_large_gamma_gives_stumps_free_trees():
    rng = np.random.default_rng(0)
    for _ in range(5):
        X = rng.integers(0, 3, size=(12, 3)).astype(float)
        y = np.zeros(12)
        y[rng.integers(12)] = 1
        model = train_gbt(X, y, HyperParams(gbt_gamma=20.0, gbt_subsample=1.0, gbt_trees=10))
        assert all(t.n_nodes == 1 for t in model.parameters["trees"])


def test_best_split_none_on_constant():
    assert best_split(np.ones((5, 2)), np.ones(5), np.ones(5), 1.0) is None


# -- threshold tuning ---------------------------------------------------------

def _recall(s, y, t):
    flagged = s > t
    return flagged[y == 1].mean()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5).map(float), st.integers(0, 1)), min_size=1, max_size=30),
       st.sampled_from([0.5, 0.8, 0.97, 1.0]))
def test_threshold_matches_sweep(pairs, target):
    s = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if y.sum() == 0:
        with pytest.raises(UnreachableRecall):
            threshold_for_recall(s, y, target)
        return
    t = threshold_for_recall(s, y, target)
    candidates = set(s) | {float(np.nextafter(v, -np.inf)) for v in s}
    oracle = max(c for c in candidates if _recall(s, y, c) >= target)
    assert t == oracle
    assert _recall(s, y, t) >= target
    assert _recall(s, y, float(np.nextafter(t, np.inf))) < target


def test_flagged_count_monotone_in_target():
    rng = np.random.default_rng(5)
    s = rng.normal(size=200)
    y = (rng.random(200) < 0.2).astype(int)
    flagged = [int((s > threshold_for_recall(s, y, t)).sum()) for t in (0.5, 0.8, 0.97, 1.0)]
    assert flagged == sorted(flagged)


# -- model artifact ------------------------------------------------------------

DOCS = [
    LabeledDocument("a", "snowballing review literature update", 1),
    LabeledDocument("b", "systematic review snowballing search", 1),
    LabeledDocument("c", "blockchain energy network", 0),
    LabeledDocument("d", "robot vehicle sensor network", 0),
    LabeledDocument("e", "cloud energy mobile", 0),
]


@pytest.mark.parametrize("kind", ["lsvm", "logreg", "mnb", "gbt"])
def test_models_train_predict_round_trip(kind, tmp_path):
    vocab = build_vocabulary(DOCS)
    vecs = vectorize_documents(DOCS, vocab)
    y = [d.relevance for d in DOCS]
    hp = HyperParams(model_kind=kind, gbt_gamma=0.0, gbt_subsample=1.0, seed=3)
    model = train(vecs, y, hp, vocab)
    preds = predict(model, vecs, [d.id for d in DOCS])
    assert [p.label for p in preds] == y
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    assert model_to_json(again) == path.read_text()
    assert [p.score for p in predict(again, vecs)] == [p.score for p in preds]
    assert model_to_json(train(vecs, y, hp, vocab)) == model_to_json(model)


def test_predict_threshold_override():
    vocab = build_vocabulary(DOCS)
    vecs = vectorize_documents(DOCS, vocab)
    model = train_lsvm(vecs, [d.relevance for d in DOCS], vocabulary=vocab).with_threshold(math.inf)
    assert all(p.label == 0 for p in predict(model, vecs))


def test_vocabulary_mismatch_and_single_class():
    vocab = build_vocabulary(DOCS)
    vecs = vectorize_documents(DOCS, vocab)
    model = train_lsvm(vecs, [d.relevance for d in DOCS], vocabulary=vocab)
    other = Vocabulary(("zzz",))
    with pytest.raises(VocabularyMismatch):
        predict(model, [vectorize(["zzz"], other)])
    with pytest.raises(SingleClassCorpus):
        train_lsvm(vecs, [0] * 5, vocabulary=vocab)


def test_class_weights():
    assert class_weights([0, 0, 0, 1]) == (4 / 6, 2.0)
    assert class_weights([0, 1], "none") == (1.0, 1.0)
    with pytest.raises(SingleClassCorpus):
        class_weights([1, 1])


def test_model_file_rejects_garbage():
    from slrupdate.errors import ConfigError
    with pytest.raises(ConfigError):
        model_from_json("{}")
    with pytest.raises(ConfigError):
        model_from_json("not json")
