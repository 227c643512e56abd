"""Loss, optimizer, training loop, inference, and grouped cross-validation.

The loop is deliberately plain: seeded shuffle each epoch, mini-batches in
train mode, one Adam step plus weight constraints per batch, validation in
infer mode at the end of every epoch. Re-running with the same seed gives
bit-identical weights and history in single-threaded mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import metrics as M
from .data import EpochSet, FoldPlan, stratified_group_kfold
from .models import Model, build_model
from .numerics import derive_seed, seeded_rng

CLIP = 1e-7
DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 64


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite; carries the epoch index."""

    def __init__(self, epoch: int, message: str) -> None:
        super().__init__(message)
        self.epoch = epoch


def bce_loss(predictions: np.ndarray, labels: np.ndarray):
    """Mean binary cross-entropy and its gradient w.r.t. the predictions.

    Predictions are clipped to [1e-7, 1 - 1e-7] before the logs; the gradient
    is zero where the clip is active.
    """
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.size == 0:
        raise ValueError("empty batch")
    p_hat = np.clip(p, CLIP, 1.0 - CLIP)
    loss = float(np.mean(-(y * np.log(p_hat) + (1.0 - y) * np.log(1.0 - p_hat))))
    grad = (p_hat - y) / (p_hat * (1.0 - p_hat)) / p.size
    grad = np.where((p > CLIP) & (p < 1.0 - CLIP), grad, 0.0).astype(p.dtype)
    return loss, grad


class Adam:
    """Adam with bias correction; moments mirror the parameter shapes."""

    def __init__(self, model: Model, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-7) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {key: np.zeros_like(p) for key, p, _ in model.parameters()}
        self.v = {key: np.zeros_like(p) for key, p, _ in model.parameters()}

    def step(self, model: Model) -> None:
        self.t += 1
        grads = model.gradients()
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for key, p, _ in model.parameters():
            g = grads[key]
            if not np.all(np.isfinite(g)):
                raise TrainingDiverged(self.t, f"non-finite gradient in {key}")
            m = self.m[key]
            v = self.v[key]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * np.square(g)
            p -= (self.lr / bias1) * m / (np.sqrt(v / bias2) + self.eps)
        model.constrain()


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float | None
    val_acc: float | None


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    epochs: int = 0
    batch_size: int = 0
    seed: int = 0

    def to_ndjson(self) -> str:
        lines = []
        for r in self.records:
            lines.append(json.dumps({"epoch": r.epoch, "train_loss": r.train_loss,
                                     "train_acc": r.train_acc, "val_loss": r.val_loss,
                                     "val_acc": r.val_acc}))
        return "\n".join(lines) + ("\n" if lines else "")


def predict(model: Model, data: EpochSet | np.ndarray, threshold: float = 0.5,
            batch_size: int = 256):
    """Infer-mode probabilities and hard labels (1 when p >= threshold)."""
    x = data.epochs if isinstance(data, EpochSet) else np.asarray(data)
    if x.shape[1] != model.channels:
        raise ValueError(f"model expects {model.channels} channels, got {x.shape[1]}")
    probs = np.empty(x.shape[0], dtype=np.float64)
    for start in range(0, x.shape[0], batch_size):
        xb = x[start : start + batch_size]
        probs[start : start + xb.shape[0]] = model.forward(xb, train=False).ravel()
    labels = (probs >= threshold).astype(np.int8)
    return probs, labels


def evaluate(model: Model, data: EpochSet, batch_size: int = 256):
    """Infer-mode mean BCE and accuracy over an epoch set."""
    probs, pred = predict(model, data, batch_size=batch_size)
    loss, _ = bce_loss(probs, data.labels.astype(np.float64))
    acc = float(np.mean(pred == data.labels))
    return loss, acc


def train(model: Model, train_set: EpochSet, val_set: EpochSet | None,
          epochs: int = DEFAULT_EPOCHS, batch_size: int = DEFAULT_BATCH_SIZE,
          seed: int = 0, lr: float | None = None) -> TrainHistory:
    """Mini-batch training with a seeded per-epoch shuffle.

    Dropout masks, the shuffle order, and therefore the final weights are a
    pure function of ``seed``. Validation (when given) runs in infer mode
    after every epoch. A non-finite loss aborts with the epoch index.
    """
    if train_set.epochs.shape[1] != model.channels:
        raise ValueError("training data channel count does not match the model")
    x = np.ascontiguousarray(train_set.epochs, dtype=model_dtype(model))
    y = train_set.labels.astype(x.dtype)
    n = x.shape[0]
    shuffle_rng = seeded_rng(seed, stream=11)
    model.reseed(seed)
    opt = Adam(model, lr if lr is not None else model.learning_rate)
    history = TrainHistory(epochs=epochs, batch_size=batch_size, seed=seed)
    for epoch_idx in range(epochs):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        hit_sum = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb = x[idx]
            yb = y[idx]
            p = model.forward(xb, train=True).ravel()
            loss, dp = bce_loss(p, yb)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch_idx, f"loss became non-finite at "
                                                  f"epoch {epoch_idx}")
            model.backward(dp.reshape(-1, 1))
            opt.step(model)
            loss_sum += loss * len(idx)
            hit_sum += float(np.sum((p >= 0.5) == (yb >= 0.5)))
        val_loss = val_acc = None
        if val_set is not None:
            val_loss, val_acc = evaluate(model, val_set)
        history.records.append(EpochRecord(epoch_idx + 1, loss_sum / n, hit_sum / n,
                                           val_loss, val_acc))
    return history


def model_dtype(model: Model):
    for _, p, _ in model.parameters():
        return p.dtype
    return np.float32


@dataclass
class FoldResult:
    fold: int
    record: M.MetricsRecord
    history: TrainHistory


@dataclass
class CrossValResult:
    report: M.CvReport
    folds: list[FoldResult]
    plan: FoldPlan


def cross_validate(data: EpochSet, model_name: str, k: int = 6, seed: int = 0,
                   epochs: int = DEFAULT_EPOCHS, batch_size: int = DEFAULT_BATCH_SIZE,
                   lr: float | None = None, dataset_name: str | None = None,
                   timesteps: int = 250) -> CrossValResult:
    """Grouped, stratified k-fold cross-validation of one architecture.

    Fold i trains a fresh model built and trained with the derived seed
    ``seed XOR mix64(i)``, so folds are independent but reproducible. The
    reported loss is the validation BCE at the final epoch.
    """
    plan = stratified_group_kfold(data.labels, data.groups, k=k, seed=seed)
    channels = data.epochs.shape[1]
    if dataset_name is None:
        dataset_name = f"FULL-{channels}"
    results = []
    for i, fold in enumerate(plan.folds):
        fold_seed = derive_seed(seed, i)
        model = build_model(model_name, channels, timesteps, seed=fold_seed)
        train_set = data.subset(fold.train_idx)
        val_set = data.subset(fold.val_idx)
        history = train(model, train_set, val_set, epochs=epochs,
                        batch_size=batch_size, seed=fold_seed, lr=lr)
        probs, pred = predict(model, val_set)
        counts = M.confusion(pred, val_set.labels)
        val_loss, _ = bce_loss(probs, val_set.labels.astype(np.float64))
        record = M.compute_metrics(counts, val_loss)
        results.append(FoldResult(i + 1, record, history))
    report = M.aggregate([r.record for r in results], model=model_name,
                         dataset=dataset_name)
    return CrossValResult(report, results, plan)
