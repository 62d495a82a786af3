"""Text featurization: tokenization, vocabularies, TF-IDF and id sequences."""
from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import LabeledCorpus

PAD_INDEX = 0


class Tokenizer:
    """NFC-normalize, optionally lowercase, then split on whitespace runs."""

    def __init__(self, lowercase=True):
        self.lowercase = lowercase

    def __call__(self, text: str) -> list[str]:
        text = unicodedata.normalize("NFC", text)
        if self.lowercase:
            text = text.lower()
        return text.split()

    def __repr__(self):
        return f"Tokenizer(lowercase={self.lowercase})"


def tokenize(text: str, lowercase=True) -> list[str]:
    return Tokenizer(lowercase)(text)


def _as_texts(documents) -> list[str]:
    if isinstance(documents, LabeledCorpus):
        return documents.texts
    if isinstance(documents, str):
        raise TypeError("expected an iterable of documents, got a single string")
    return list(documents)


class Vocabulary:
    """Token to index map using indices 1..V.

    Index 0 is padding and ``V + 1`` the shared unknown-token id used in
    sequence mode. Indices follow first-occurrence order.
    """

    def __init__(self, tokens: Iterable[str] = ()):
        self._index = {}
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._index) + 1

    @classmethod
    def from_token_lists(cls, token_lists: Iterable[list]):
        return cls(tok for tokens in token_lists for tok in tokens)

    def __len__(self):
        return len(self._index)

    def __contains__(self, token):
        return token in self._index

    def __getitem__(self, token) -> int:
        return self._index[token]

    def get(self, token, default=None):
        return self._index.get(token, default)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    @property
    def unknown_index(self) -> int:
        return len(self._index) + 1

    @property
    def tokens(self) -> list[str]:
        return list(self._index)

    def items(self):
        return self._index.items()


class SparseVector(NamedTuple):
    indices: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.indices)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def as_dict(self) -> dict:
        return dict(zip(self.indices.tolist(), self.weights.tolist()))


class TfidfVectorizer(TransformerMixin, BaseEstimator):
    """Unigram TF-IDF with smoothed idf and L2-normalized rows.

    ``idf(t) = ln((1 + N) / (1 + df(t))) + 1``; a document's weight for ``t``
    is its raw count times ``idf(t)``. Column ``j`` holds the token with
    vocabulary index ``j + 1``.

    Parameters
    ----------
    lowercase : bool
    min_df : int or float
        Absolute document count if int, proportion of documents if float.
    max_df : int or float
        Same convention as ``min_df``; the default 1.0 keeps every token.
    """

    def __init__(self, lowercase=True, min_df=1, max_df=1.0):
        self.lowercase = lowercase
        self.min_df = min_df
        self.max_df = max_df

    def _df_bounds(self, n_docs):
        lo = self.min_df if isinstance(self.min_df, (int, np.integer)) else math.ceil(self.min_df * n_docs)
        hi = self.max_df if isinstance(self.max_df, (int, np.integer)) else math.floor(self.max_df * n_docs)
        return lo, hi

    def fit(self, raw_documents, y=None):
        texts = _as_texts(raw_documents)
        if not texts:
            raise ValueError("cannot fit TF-IDF on zero documents")
        tok = Tokenizer(self.lowercase)
        token_lists = [tok(t) for t in texts]
        if not any(token_lists):
            raise ValueError("cannot fit TF-IDF: corpus has no tokens")
        full = Vocabulary.from_token_lists(token_lists)
        df = np.zeros(len(full) + 1, dtype=np.int64)
        for tokens in token_lists:
            for t in set(tokens):
                df[full[t]] += 1
        lo, hi = self._df_bounds(len(texts))
        kept = [t for t in full.tokens if lo <= df[full[t]] <= hi]
        if not kept:
            raise ValueError("min_df/max_df prune every token")
        self.vocabulary_ = Vocabulary(kept)
        self.document_frequency_ = np.array([df[full[t]] for t in kept], dtype=np.int64)
        self.n_documents_ = len(texts)
        self.idf_ = np.log((1.0 + self.n_documents_) / (1.0 + self.document_frequency_)) + 1.0
        return self

    @property
    def n_features_out_(self):
        return len(self.vocabulary_)

    def transform(self, raw_documents):
        check_is_fitted(self, "idf_")
        texts = _as_texts(raw_documents)
        tok = Tokenizer(self.lowercase)
        vocab = self.vocabulary_
        indptr, indices, data = [0], [], []
        for text in texts:
            counts = {}
            for t in tok(text):
                j = vocab.get(t)
                if j is not None:
                    counts[j - 1] = counts.get(j - 1, 0) + 1
            cols = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
            w = np.array([counts[c] for c in cols.tolist()], dtype=np.float64) * self.idf_[cols]
            norm = np.sqrt(np.dot(w, w))
            if norm > 0:
                w /= norm
            indices.append(cols)
            data.append(w)
            indptr.append(indptr[-1] + len(cols))
        X = sp.csr_matrix(
            (np.concatenate(data) if data else np.zeros(0),
             np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
             np.asarray(indptr)),
            shape=(len(texts), len(vocab)),
        )
        return X

    def idf_of(self, token) -> float:
        return float(self.idf_[self.vocabulary_[token] - 1])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.vocabulary_.tokens, dtype=object)

    def _export(self):
        return {
            "vocabulary": self.vocabulary_.tokens,
            "document_frequency": self.document_frequency_.tolist(),
            "n_documents": self.n_documents_,
            "idf": self.idf_.tolist(),
        }

    def _import(self, state):
        self.vocabulary_ = Vocabulary(state["vocabulary"])
        self.document_frequency_ = np.asarray(state["document_frequency"], dtype=np.int64)
        self.n_documents_ = state["n_documents"]
        self.idf_ = np.asarray(state["idf"], dtype=np.float64)
        return self


def fit_tfidf(train, lowercase=True) -> TfidfVectorizer:
    return TfidfVectorizer(lowercase=lowercase).fit(train)


def transform_tfidf(model: TfidfVectorizer, text: str) -> SparseVector:
    row = model.transform([text])
    return SparseVector(row.indices.astype(np.int64), row.data.copy())


class DocumentFrequencySelector(TransformerMixin, BaseEstimator):
    """Keep the ``max_features`` columns with the highest document frequency.

    Ties go to the lower column index. ``None`` keeps every column.
    """

    def __init__(self, max_features=20000):
        self.max_features = max_features

    def fit(self, X, y=None):
        X = sp.csc_matrix(X)
        df = np.diff(X.indptr)
        self.n_features_in_ = X.shape[1]
        if self.max_features is None or self.max_features >= X.shape[1]:
            self.columns_ = np.arange(X.shape[1])
        else:
            order = np.lexsort((np.arange(len(df)), -df))
            self.columns_ = np.sort(order[: self.max_features])
        return self

    def transform(self, X):
        check_is_fitted(self, "columns_")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return sp.csr_matrix(X)[:, self.columns_]

    def _export(self):
        return {"columns": self.columns_.tolist(), "n_features_in": self.n_features_in_}

    def _import(self, state):
        self.columns_ = np.asarray(state["columns"], dtype=np.int64)
        self.n_features_in_ = state["n_features_in"]
        return self


def encode_sequence(vocab: Vocabulary, text: str, max_len: int, tokenizer=None) -> np.ndarray:
    """Map the first ``max_len`` tokens to ids, padding the tail with 0."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    tokenizer = tokenizer or Tokenizer()
    unk = vocab.unknown_index
    ids = [vocab.get(t, unk) for t in tokenizer(text)[:max_len]]
    out = np.zeros(max_len, dtype=np.int64)
    out[: len(ids)] = ids
    return out


class SequenceEncoder(TransformerMixin, BaseEstimator):
    """Fit a vocabulary over training texts and emit fixed-length id rows."""

    def __init__(self, max_len=100, lowercase=True):
        self.max_len = max_len
        self.lowercase = lowercase

    def fit(self, raw_documents, y=None):
        tok = Tokenizer(self.lowercase)
        self.vocabulary_ = Vocabulary.from_token_lists(tok(t) for t in _as_texts(raw_documents))
        return self

    def transform(self, raw_documents):
        check_is_fitted(self, "vocabulary_")
        tok = Tokenizer(self.lowercase)
        texts = _as_texts(raw_documents)
        out = np.zeros((len(texts), self.max_len), dtype=np.int64)
        for i, text in enumerate(texts):
            out[i] = encode_sequence(self.vocabulary_, text, self.max_len, tok)
        return out


@dataclass
class EmbeddingMatrix:
    weights: np.ndarray
    trainable: bool = True
    found: np.ndarray | None = None

    @property
    def dim(self):
        return self.weights.shape[1]


class VectorFileError(ValueError):
    pass


def random_embedding(vocab: Vocabulary, dim: int, seed=0, scale=0.05) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    w = rng.uniform(-scale, scale, size=(len(vocab) + 2, dim))
    w[PAD_INDEX] = 0.0
    return EmbeddingMatrix(w, trainable=True)


def load_pretrained_vectors(path, vocab: Vocabulary, dim: int, seed=0,
                            oov_scale=0.25, trainable=False) -> EmbeddingMatrix:
    """Read a text vector file (``count dim`` header, then ``token v1 .. vdim``).

    Vocabulary tokens missing from the file, and the unknown-token row, are
    drawn from ``uniform(-oov_scale, oov_scale)`` with ``seed``.
    """
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-oov_scale, oov_scale, size=(len(vocab) + 2, dim))
    weights[PAD_INDEX] = 0.0
    found = np.zeros(len(vocab) + 2, dtype=bool)
    with open(path, encoding="utf-8", errors="strict") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise VectorFileError(f"{path}: line 1: expected header 'count dim'")
        file_dim = int(header[1])
        if file_dim != dim:
            raise VectorFileError(f"{path}: file dimension {file_dim} != requested {dim}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n").rstrip(" ")
            if not line:
                continue
            parts = line.rsplit(" ", dim)
            if len(parts) != dim + 1 or not parts[0]:
                raise VectorFileError(f"{path}: line {lineno}: expected token and {dim} values")
            j = vocab.get(parts[0])
            if j is None:
                continue
            try:
                weights[j] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise VectorFileError(f"{path}: line {lineno}: non-numeric vector value") from None
            found[j] = True
    return EmbeddingMatrix(weights, trainable=trainable, found=found)
