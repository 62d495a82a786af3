"""Labeled corpus ingestion and the per-class statistics used for dataset tables."""
from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

LABELS = ("HS", "NHS", "NIL")
LANGUAGES = ("english", "tamil", "malayalam", "other")
SPLITS = ("train", "valid", "test")


class CorpusError(ValueError):
    """Raised when a corpus file cannot be read as labeled TSV."""

    def __init__(self, message, path=None, lines=()):
        self.path = path
        self.lines = tuple(lines)
        where = f"{path}: " if path else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Document:
    id: int
    text: str
    label: str | None = None


@dataclass(frozen=True)
class LabeledCorpus:
    documents: tuple
    language: str = "other"
    split: str = "train"

    def __post_init__(self):
        if not self.documents:
            raise CorpusError("corpus is empty")
        if self.language not in LANGUAGES:
            raise CorpusError(f"unknown language tag {self.language!r}")
        if self.split not in SPLITS:
            raise CorpusError(f"unknown split tag {self.split!r}")
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            raise CorpusError("document ids are not unique")

    def __len__(self):
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @property
    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    @property
    def labels(self) -> list:
        return [d.label for d in self.documents]

    @property
    def is_labeled(self) -> bool:
        return all(d.label is not None for d in self.documents)

    @classmethod
    def from_pairs(cls, pairs: Iterable, language="other", split="train"):
        """Build a corpus from ``(text, label)`` pairs, numbering ids from 0."""
        docs = tuple(Document(i, text, label) for i, (text, label) in enumerate(pairs))
        return cls(docs, language=language, split=split)


@dataclass(frozen=True)
class LabelStats:
    documents: int
    total_words: int
    unique_words: int
    max_length_words: int
    avg_words_per_text: float

    def as_dict(self):
        return {
            "documents": self.documents,
            "total_words": self.total_words,
            "unique_words": self.unique_words,
            "max_length_words": self.max_length_words,
            "avg_words_per_text": self.avg_words_per_text,
        }


@dataclass(frozen=True)
class CorpusStats:
    per_label: dict
    language: str = "other"
    split: str = "train"
    distribution: dict = field(default_factory=dict)

    def __getitem__(self, label) -> LabelStats:
        return self.per_label[label]

    def as_dict(self):
        return {
            "language": self.language,
            "split": self.split,
            "class_distribution": dict(self.distribution),
            "per_label": {k: v.as_dict() for k, v in self.per_label.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False)

    def to_text(self) -> str:
        header = ("Class", "Docs", "Total words", "Unique words", "Max. length", "Avg. words")
        rows = [
            (label, str(s.documents), str(s.total_words), str(s.unique_words),
             str(s.max_length_words), f"{s.avg_words_per_text:.2f}")
            for label, s in self.per_label.items()
        ]
        widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
        lines = [f"language={self.language} split={self.split}"]
        lines.append("  ".join(h.ljust(w) if i == 0 else h.rjust(w)
                               for i, (h, w) in enumerate(zip(header, widths))))
        for r in rows:
            lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                   for i, (c, w) in enumerate(zip(r, widths))))
        return "\n".join(lines) + "\n"


def _resolve_label(raw: str, schema: Mapping[str, str]):
    if raw in LABELS:
        return raw
    return schema.get(raw)


def load_corpus(path, schema: Mapping[str, str] | None = None, language="other",
                split="train", labeled=True) -> LabeledCorpus:
    """Read a UTF-8 TSV corpus with one ``text<TAB>label`` record per line.

    ``schema`` maps external label strings (e.g. ``"Non_hope_speech"``) onto
    HS/NHS/NIL. With ``labeled=False`` each line is the text itself; a
    trailing label column, if present, is ignored.
    """
    schema = dict(schema or {})
    if not os.path.exists(path):
        raise CorpusError("file not found", path=path)
    with open(path, encoding="utf-8", newline="") as fh:
        raw = fh.read()
    if raw.startswith("﻿"):
        raw = raw[1:]
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorpusError("file is empty", path=path)

    docs, malformed, unknown = [], [], []
    for lineno, line in enumerate(lines, start=1):
        if line.endswith("\r"):
            line = line[:-1]
        fields = line.split("\t")
        if not labeled:
            if len(fields) > 2:
                malformed.append(lineno)
                continue
            docs.append(Document(lineno - 1, fields[0], None))
            continue
        if len(fields) != 2:
            malformed.append(lineno)
            continue
        text, raw_label = fields
        label = _resolve_label(raw_label.strip(), schema)
        if label is None:
            unknown.append(lineno)
            continue
        docs.append(Document(lineno - 1, text, label))

    if malformed:
        raise CorpusError(
            f"malformed record (expected {'2' if labeled else '1 or 2'} tab-separated "
            f"fields) on lines {_fmt_lines(malformed)}", path=path, lines=malformed)
    if unknown:
        raise CorpusError(f"unknown label on lines {_fmt_lines(unknown)}",
                          path=path, lines=unknown)
    return LabeledCorpus(tuple(docs), language=language, split=split)


def _fmt_lines(lines: Sequence[int], limit=20) -> str:
    shown = ", ".join(map(str, lines[:limit]))
    return shown + (f" (+{len(lines) - limit} more)" if len(lines) > limit else "")


def save_corpus(corpus: LabeledCorpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for doc in corpus:
            if "\t" in doc.text or "\n" in doc.text:
                raise CorpusError(f"document {doc.id} contains a tab or newline", path=path)
            fh.write(doc.text if doc.label is None else f"{doc.text}\t{doc.label}")
            fh.write("\n")


def class_distribution(corpus: LabeledCorpus) -> dict:
    counts = Counter(corpus.labels)
    return {label: counts.get(label, 0) for label in LABELS}


def corpus_stats(corpus: LabeledCorpus, tokenizer: Callable[[str], list] | None = None) -> CorpusStats:
    """Word statistics per label, computed over ``tokenizer`` output."""
    if tokenizer is None:
        from .features import Tokenizer
        tokenizer = Tokenizer()
    per_label = {}
    for label in LABELS:
        lengths, vocab = [], set()
        for doc in corpus:
            if doc.label != label:
                continue
            tokens = tokenizer(doc.text)
            lengths.append(len(tokens))
            vocab.update(tokens)
        total = sum(lengths)
        per_label[label] = LabelStats(
            documents=len(lengths),
            total_words=total,
            unique_words=len(vocab),
            max_length_words=max(lengths, default=0),
            avg_words_per_text=total / len(lengths) if lengths else 0.0,
        )
    return CorpusStats(per_label, corpus.language, corpus.split, class_distribution(corpus))
