"""Minibatch Adam training with early stopping on validation weighted F1."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from ..evaluation import weighted_f1
from .model import CNNBiLSTM

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


class Adam:
    def __init__(self, params: dict, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7,
                 frozen=()):
        self.lr, self.beta1, self.beta2, self.epsilon = lr, beta1, beta2, epsilon
        self.frozen = set(frozen)
        self.m = {k: np.zeros_like(v) for k, v in params.items() if k not in self.frozen}
        self.v = {k: np.zeros_like(v) for k, v in params.items() if k not in self.frozen}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k in self.m:
            g = grads[k]
            self.m[k] *= b1
            self.m[k] += (1 - b1) * g
            self.v[k] *= b2
            self.v[k] += (1 - b2) * g * g
            params[k] -= lr_t * self.m[k] / (np.sqrt(self.v[k]) + self.epsilon)


class EarlyStopping:
    """Track the best score; ``update`` returns True once patience runs out.

    An epoch improves on the best if its score is higher, or equal with a
    lower tie-break loss (when one is given).
    """

    def __init__(self, patience):
        self.patience = patience
        self.best = -np.inf
        self.best_loss = np.inf
        self.best_epoch = None
        self.bad_epochs = 0

    def update(self, epoch, score, loss=None) -> bool:
        tie_better = score == self.best and loss is not None and loss < self.best_loss
        if score > self.best or tie_better:
            self.best, self.best_epoch, self.bad_epochs = score, epoch, 0
            self.best_loss = np.inf if loss is None else loss
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class TrainRecord:
    epochs: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    valid_f1: list = field(default_factory=list)
    early_stopped: bool = False
    best_epoch: int | None = None

    def add(self, epoch, loss, f1):
        self.epochs.append(epoch)
        self.losses.append(loss)
        self.valid_f1.append(f1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "valid_f1"])
        for e, l, f in zip(self.epochs, self.losses, self.valid_f1):
            w.writerow([e, repr(float(l)), "" if f is None else repr(float(f))])
        return buf.getvalue()

    def as_dict(self):
        return {"epochs": self.epochs, "losses": self.losses, "valid_f1": self.valid_f1,
                "early_stopped": self.early_stopped, "best_epoch": self.best_epoch}


def train_network(model: CNNBiLSTM, X_train, y_train, X_valid=None, y_valid=None,
                  rng=None, scorer=None):
    """Fit ``model`` in place; returns its :class:`TrainRecord`.

    ``y_*`` are class indices. With validation data the parameters from the
    best epoch are restored at the end. Epochs are ranked by validation
    weighted F1, ties broken by validation loss. ``scorer(model)`` may
    replace that and return a score or a ``(score, loss)`` pair.
    """
    cfg = model.config
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    X_train, y_train = np.asarray(X_train), np.asarray(y_train)
    frozen = () if cfg.trainable_embedding else ("embedding",)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, frozen)
    stopper = EarlyStopping(cfg.patience)
    record = TrainRecord()
    have_valid = scorer is not None or (X_valid is not None and len(X_valid) > 0)
    if scorer is None and have_valid:
        labels = list(range(model.n_classes))

        def scorer(m):
            proba = m.predict_proba(X_valid)
            pred = np.argmax(proba, axis=1)
            f1 = weighted_f1(np.asarray(y_valid).tolist(), pred.tolist(), labels)
            loss = -np.mean(np.log(np.maximum(proba[np.arange(len(proba)), y_valid], 1e-300)))
            return f1, float(loss)

    best_params = model.copy_params()
    n = len(X_train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss = model.loss(X_train[idx], y_train[idx], train=True, rng=rng, keep_cache=True)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting at {start}")
            grads = model.backward(y_train[idx])
            opt.step(model.params, grads)
            total += loss * len(idx)
            seen += len(idx)
        epoch_loss = total / seen
        f1 = valid_loss = None
        if have_valid:
            f1 = scorer(model)
            if isinstance(f1, tuple):
                f1, valid_loss = f1
        record.add(epoch, epoch_loss, f1)
        log.info("epoch %d loss=%.4f valid_f1=%s", epoch, epoch_loss,
                 "n/a" if f1 is None else f"{f1:.4f}")
        if not have_valid:
            continue
        stop = stopper.update(epoch, f1, valid_loss)
        if stopper.best_epoch == epoch:
            best_params = model.copy_params()
        if stop:
            record.early_stopped = True
            break
    if have_valid:
        model.params = best_params
        record.best_epoch = stopper.best_epoch
    else:
        record.best_epoch = record.epochs[-1]
    model._cache = None
    return record
