import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nstate.estimators import BandpassFilter, NetClassifier, check_epoch_array
from nstate.numerics import seeded_rng


def toy_data(n=60, channels=4, samples=32, seed=0):
    rng = seeded_rng(seed, 70)
    x = rng.standard_normal((n, channels, samples)).astype(np.float32)
    y = (np.arange(n) % 2).astype(np.int64)
    x[y == 1, 0] += 2.5
    return x, y


def test_get_set_params_round_trip():
    est = NetClassifier(arch="lstm", epochs=7, seed=5)
    params = est.get_params()
    assert params["arch"] == "lstm" and params["epochs"] == 7
    est.set_params(arch="cnn1d", batch_size=16)
    assert est.arch == "cnn1d" and est.batch_size == 16


def test_clone_preserves_params():
    est = NetClassifier(arch="cnnlstm", epochs=3, learning_rate=1e-4, seed=2)
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_fit_predict_shapes_and_determinism():
    x, y = toy_data()
    a = NetClassifier(arch="cnn1d", epochs=2, batch_size=16, seed=1).fit(x, y)
    b = NetClassifier(arch="cnn1d", epochs=2, batch_size=16, seed=1).fit(x, y)
    pa = a.predict_proba(x)
    pb = b.predict_proba(x)
    assert pa.shape == (len(x), 2)
    assert np.allclose(pa.sum(axis=1), 1.0)
    assert np.array_equal(pa, pb)
    labels = a.predict(x)
    assert set(np.unique(labels)) <= {0, 1}
    assert np.array_equal(labels, (pa[:, 1] >= 0.5).astype(int))
    assert np.array_equal(a.classes_, [0, 1])


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        NetClassifier().predict(np.zeros((1, 3, 250), dtype=np.float32))


def test_score_on_separable_toy_problem():
    x, y = toy_data(n=120)
    est = NetClassifier(arch="cnn1d", epochs=20, batch_size=8,
                        learning_rate=1e-3, seed=3).fit(x, y)
    assert est.score(x, y) >= 0.9


def test_input_validation():
    with pytest.raises(ValueError):
        check_epoch_array(np.zeros((4, 5)))
    with pytest.raises(ValueError):
        check_epoch_array(np.full((1, 2, 3), np.nan))
    with pytest.raises(ValueError):
        NetClassifier(arch="nope").fit(*toy_data(n=8))
    x, y = toy_data(n=8)
    with pytest.raises(ValueError):
        NetClassifier(epochs=1).fit(x, y + 1)


def test_bandpass_filter_transformer():
    bp = BandpassFilter()
    assert bp.get_params()["low"] == 1.0
    rng = seeded_rng(4, 71)
    x = rng.standard_normal((2, 3, 5_000))
    y = bp.fit().transform(x)
    assert y.shape == x.shape
    assert y.var() < x.var()
