"""Keyword-labeled toy corpora for smoke tests and demos."""
from __future__ import annotations

import numpy as np

from .corpus import LabeledCorpus

KEYWORDS = {
    "HS": ("hope", "inspire", "together"),
    "NHS": ("hate", "useless", "never"),
    "NIL": ("vanakkam", "enna", "romba"),
}
FILLER = tuple(f"w{i}" for i in range(40))
FOREIGN_FILLER = tuple(f"t{i}" for i in range(15))


def make_keyword_corpus(n=300, seed=0, rare_fraction=0.08, hope_fraction=0.3,
                        min_words=3, max_words=10, language="other", split="train"):
    """Each text carries one keyword of its class among random filler words.

    NIL texts use a separate filler vocabulary, mimicking off-language posts.
    Class sizes are fixed (not sampled) so the rare class is always present.
    """
    rng = np.random.default_rng(seed)
    n_nil = max(1, int(round(rare_fraction * n)))
    n_hs = int(round(hope_fraction * n))
    labels = ["NIL"] * n_nil + ["HS"] * n_hs + ["NHS"] * (n - n_nil - n_hs)
    labels = [labels[i] for i in rng.permutation(n)]
    pairs = []
    for label in labels:
        filler = FOREIGN_FILLER if label == "NIL" else FILLER
        words = [filler[j] for j in rng.integers(0, len(filler), rng.integers(min_words, max_words + 1))]
        kw = KEYWORDS[label][rng.integers(len(KEYWORDS[label]))]
        words.insert(int(rng.integers(0, len(words) + 1)), kw.upper() if rng.random() < 0.2 else kw)
        pairs.append((" ".join(words), label))
    return LabeledCorpus.from_pairs(pairs, language=language, split=split)


def split_corpus(corpus: LabeledCorpus, sizes=(0.6, 0.2, 0.2)):
    """Cut a corpus into consecutive train/valid/test pieces (ids preserved)."""
    n = len(corpus)
    a = int(round(sizes[0] * n))
    b = a + int(round(sizes[1] * n))
    docs = corpus.documents
    return (LabeledCorpus(docs[:a], corpus.language, "train"),
            LabeledCorpus(docs[a:b], corpus.language, "valid"),
            LabeledCorpus(docs[b:], corpus.language, "test"))
