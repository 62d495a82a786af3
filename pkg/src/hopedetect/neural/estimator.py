"""Text-in, label-out wrapper around the numpy CNN-BiLSTM."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..features import SequenceEncoder, Vocabulary, load_pretrained_vectors
from .model import CNNBiLSTM, NeuralConfig
from .train import train_network


class CNNBiLSTMClassifier(ClassifierMixin, BaseEstimator):
    """Convolution + BiLSTM text classifier over raw strings.

    With ``vectors_path`` the embedding table is read from a pretrained
    text vector file (its dimension overrides ``embed_dim``) and frozen
    unless ``trainable_embedding=True``. Otherwise it is randomly
    initialized and trained.
    """

    def __init__(self, max_len=100, embed_dim=100, conv_filters=128, conv_kernel=3,
                 pool_window=5, lstm_units=100, dropout=0.2, learning_rate=1e-3,
                 batch_size=32, epochs=30, patience=3, output_mode="final",
                 vectors_path=None, vectors_dim=300, trainable_embedding=None,
                 lowercase=True, random_state=0):
        self.max_len = max_len
        self.embed_dim = embed_dim
        self.conv_filters = conv_filters
        self.conv_kernel = conv_kernel
        self.pool_window = pool_window
        self.lstm_units = lstm_units
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience
        self.output_mode = output_mode
        self.vectors_path = vectors_path
        self.vectors_dim = vectors_dim
        self.trainable_embedding = trainable_embedding
        self.lowercase = lowercase
        self.random_state = random_state

    def _config(self):
        pretrained = self.vectors_path is not None
        trainable = (not pretrained) if self.trainable_embedding is None else self.trainable_embedding
        return NeuralConfig(
            max_len=self.max_len,
            embed_dim=self.vectors_dim if pretrained else self.embed_dim,
            conv_filters=self.conv_filters, conv_kernel=self.conv_kernel,
            pool_window=self.pool_window, lstm_units=self.lstm_units, dropout=self.dropout,
            learning_rate=self.learning_rate, batch_size=self.batch_size, epochs=self.epochs,
            patience=self.patience, seed=self.random_state, output_mode=self.output_mode,
            trainable_embedding=trainable,
        )

    def fit(self, X, y, X_valid=None, y_valid=None):
        X, y = list(X), np.asarray(y)
        if len(X) != len(y):
            raise ValueError("X and y have different lengths")
        config = self._config()
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 distinct classes")
        self.encoder_ = SequenceEncoder(self.max_len, self.lowercase).fit(X)
        vocab = self.encoder_.vocabulary_
        embedding = None
        if self.vectors_path is not None:
            embedding = load_pretrained_vectors(self.vectors_path, vocab, config.embed_dim,
                                                seed=self.random_state).weights
        rng = np.random.default_rng(self.random_state)
        self.network_ = CNNBiLSTM.initialize(config, len(vocab), len(self.classes_),
                                             embedding=embedding,
                                             seed=int(rng.integers(2 ** 31)))
        valid_ids = valid_enc = None
        if X_valid is not None:
            valid_ids = self.encoder_.transform(list(X_valid))
            index = {c: i for i, c in enumerate(self.classes_.tolist())}
            valid_enc = np.array([index[v] for v in np.asarray(y_valid).tolist()])
        self.record_ = train_network(self.network_, self.encoder_.transform(X), y_enc,
                                     valid_ids, valid_enc, rng=rng)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        return self.network_.predict_proba(self.encoder_.transform(list(X)))

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def _export(self):
        return {
            "classes": self.classes_.tolist(),
            "vocabulary": self.encoder_.vocabulary_.tokens,
            "config": self.network_.config.to_dict(),
            "params": self.network_.export_params(),
            "record": self.record_.as_dict(),
        }

    def _import(self, state):
        from .train import TrainRecord

        self.classes_ = np.asarray(state["classes"])
        self.encoder_ = SequenceEncoder(self.max_len, self.lowercase)
        self.encoder_.vocabulary_ = Vocabulary(state["vocabulary"])
        config = NeuralConfig.from_dict(state["config"])
        self.network_ = CNNBiLSTM(config, len(self.classes_),
                                  CNNBiLSTM.import_params(state["params"]))
        rec = state.get("record", {})
        self.record_ = TrainRecord(rec.get("epochs", []), rec.get("losses", []),
                                   rec.get("valid_f1", []), rec.get("early_stopped", False),
                                   rec.get("best_epoch"))
        return self


def train(train_corpus, valid_corpus, config: NeuralConfig | None = None, vectors_path=None):
    """Fit on a labeled corpus with early stopping on ``valid_corpus``.

    Returns ``(classifier, record)``.
    """
    config = config or NeuralConfig()
    clf = CNNBiLSTMClassifier(
        max_len=config.max_len, embed_dim=config.embed_dim, conv_filters=config.conv_filters,
        conv_kernel=config.conv_kernel, pool_window=config.pool_window,
        lstm_units=config.lstm_units, dropout=config.dropout,
        learning_rate=config.learning_rate, batch_size=config.batch_size,
        epochs=config.epochs, patience=config.patience, output_mode=config.output_mode,
        vectors_path=vectors_path, vectors_dim=config.embed_dim,
        trainable_embedding=config.trainable_embedding if vectors_path is None else None,
        random_state=config.seed,
    )
    valid_texts = valid_corpus.texts if valid_corpus is not None else None
    valid_labels = valid_corpus.labels if valid_corpus is not None else None
    clf.fit(train_corpus.texts, train_corpus.labels, valid_texts, valid_labels)
    return clf, clf.record_
