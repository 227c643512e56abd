"""Scikit-learn style wrappers so the toolkit composes with that ecosystem.

``NetClassifier`` exposes any of the four architectures through the familiar
``fit`` / ``predict`` / ``predict_proba`` / ``get_params`` surface, taking
epoch arrays of shape (n_epochs, channels, timesteps). ``BandpassFilter`` is
a stateless transformer for continuous signals.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import dsp
from .data import EpochSet
from .models import MODEL_NAMES, build_model
from .training import DEFAULT_BATCH_SIZE, DEFAULT_EPOCHS, predict, train


def check_epoch_array(X, timesteps: int | None = None) -> np.ndarray:
    """Validate a (n_epochs, channels, timesteps) float array."""
    X = np.asarray(X)
    if X.ndim != 3:
        raise ValueError(f"expected a 3-d (n_epochs, channels, timesteps) array, "
                         f"got shape {X.shape}")
    if timesteps is not None and X.shape[2] != timesteps:
        raise ValueError(f"expected {timesteps} timesteps, got {X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("epoch array contains non-finite values")
    return X


def check_binary_labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"labels must be shape ({n},), got {y.shape}")
    if not np.all(np.isin(np.unique(y), (0, 1))):
        raise ValueError("labels must be binary 0/1")
    return y.astype(np.int8)


class NetClassifier(ClassifierMixin, BaseEstimator):
    """Binary epoch classifier backed by one of the four architectures.

    Parameters mirror the training defaults: ``learning_rate=None`` keeps
    the architecture's own rate. Training is fully determined by ``seed``.
    """

    def __init__(self, arch: str = "cnn1d", epochs: int = DEFAULT_EPOCHS,
                 batch_size: int = DEFAULT_BATCH_SIZE,
                 learning_rate: float | None = None, seed: int = 0,
                 threshold: float = 0.5) -> None:
        self.arch = arch
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.threshold = threshold

    def fit(self, X, y):
        if self.arch not in MODEL_NAMES:
            raise ValueError(f"arch must be one of {MODEL_NAMES}")
        X = check_epoch_array(X)
        y = check_binary_labels(y, X.shape[0])
        self.classes_ = np.array([0, 1])
        train_set = EpochSet(X.astype(np.float32), y,
                             tuple(str(i) for i in range(X.shape[0])),
                             tuple(f"ch{i}" for i in range(X.shape[1])))
        self.model_ = build_model(self.arch, X.shape[1], X.shape[2], seed=self.seed)
        self.history_ = train(self.model_, train_set, None, epochs=self.epochs,
                              batch_size=self.batch_size, seed=self.seed,
                              lr=self.learning_rate)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predicting")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_epoch_array(X, self.model_.timesteps)
        probs, _ = predict(self.model_, X.astype(np.float32))
        return np.column_stack([1.0 - probs, probs])

    def predict(self, X):
        self._check_fitted()
        X = check_epoch_array(X, self.model_.timesteps)
        _, labels = predict(self.model_, X.astype(np.float32),
                            threshold=self.threshold)
        return labels.astype(np.int64)


class BandpassFilter(TransformerMixin, BaseEstimator):
    """Zero-phase band-pass for continuous (..., samples) signals.

    Signals must be longer than three filter lengths, so this applies to
    continuous recordings, not to already-epoched one-second segments.
    """

    def __init__(self, low: float = 1.0, high: float = 45.0, fs: float = 250.0):
        self.low = low
        self.high = high
        self.fs = fs

    def fit(self, X=None, y=None):
        self.filter_ = dsp.design_bandpass(self.low, self.high, self.fs)
        return self

    def transform(self, X):
        if not hasattr(self, "filter_"):
            self.fit()
        return dsp.filtfilt(np.asarray(X), self.filter_)
