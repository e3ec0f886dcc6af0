import numpy as np
import pytest
from sklearn.base import clone

from cncood import CnCGenerator, OodMlpClassifier, RngStream, gaussian_clusters_2d

CENTERS = [[0, 0], [1, 0], [0, 1], [1, 1]]


def _data(seed=0, n=60):
    d = gaussian_clusters_2d(4, n, CENTERS, 0.1, RngStream(seed))
    return d.points, d.labels


def test_generator_get_params_and_clone():
    gen = CnCGenerator(variant="pbcc_only", seed=3)
    params = gen.get_params()
    assert params["variant"] == "pbcc_only"
    twin = clone(gen)
    assert twin.get_params() == params


def test_generator_fit_sample_shapes_and_labels():
    x, y = _data()
    gen = CnCGenerator(seed=1).fit(x, y)
    ood_x, ood_y = gen.sample(100)
    assert ood_x.shape == (100, 2)
    assert np.all(ood_y == 5)


def test_generator_sample_deterministic():
    x, y = _data()
    a = CnCGenerator(seed=5).fit(x, y).sample(64)[0]
    b = CnCGenerator(seed=5).fit(x, y).sample(64)[0]
    assert np.array_equal(a, b)


def test_generator_fit_resample_concatenates():
    x, y = _data(n=30)
    gen = CnCGenerator(ood_ratio=0.5, seed=2)
    bx, by = gen.fit_resample(x, y)
    assert bx.shape[0] == len(x) + round(0.5 * len(x))
    assert set(np.unique(by)) == {1, 2, 3, 4, 5}


def test_generator_validates_inputs():
    with pytest.raises(ValueError):
        CnCGenerator().fit(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        CnCGenerator().fit(np.zeros((4, 3)), np.array([1, 1, 2, 2]))
    with pytest.raises(ValueError):
        CnCGenerator().fit(np.zeros((4, 2)), np.array([0, 0, 1, 1]))  # 0-based
    with pytest.raises(RuntimeError):
        CnCGenerator().sample(5)


def test_classifier_fit_predict_cycle():
    x, y = _data(n=40)
    clf = OodMlpClassifier(
        hidden_layers=(16, 16), epochs=150, batch_size=64, seed=0
    ).fit(x, y)
    assert clf.model_.class_count == 5
    preds = clf.predict_id(x)
    assert np.mean(preds == y) > 0.95
    probs = clf.predict_proba(x)
    assert probs.shape == (len(x), 5)
    assert np.all(np.abs(probs.sum(axis=1) - 1) < 1e-9)
    scores = clf.ood_score(x)
    assert np.all((0 <= scores) & (scores <= 1))


def test_classifier_vanilla_variant():
    x, y = _data(n=40)
    clf = OodMlpClassifier(
        hidden_layers=(16,), variant="vanilla", epochs=150, seed=0
    ).fit(x, y)
    assert clf.model_.class_count == 4
    assert np.mean(clf.predict(x) == y) > 0.95
    with pytest.raises(RuntimeError):
        clf.ood_score(x)


def test_classifier_ood_scores_separate_ring():
    from cncood import uniform_ring

    x, y = _data(n=50)
    clf = OodMlpClassifier(hidden_layers=(16, 16), epochs=250, seed=1).fit(x, y)
    ring = uniform_ring(100, x.mean(axis=0), 3.0, RngStream(7))
    id_scores = clf.ood_score(x)
    ood_scores = clf.ood_score(ring)
    assert np.median(ood_scores) > np.median(id_scores)


def test_classifier_clone_and_params_roundtrip():
    clf = OodMlpClassifier(epochs=5, lr=0.01, variant="r_cnc")
    params = clf.get_params()
    assert params["lr"] == 0.01 and params["variant"] == "r_cnc"
    twin = clone(clf)
    assert twin.get_params() == params


def test_classifier_rejects_non_point_input():
    x = np.zeros((10, 5))
    y = np.array([1, 2] * 5)
    with pytest.raises(ValueError):
        OodMlpClassifier(epochs=1).fit(x, y)
