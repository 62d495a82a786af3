import itertools

import numpy as np
import pytest

from hopedetect.classical import build_ensemble, majority_vote
from hopedetect.features import fit_tfidf
from hopedetect.synthetic import make_keyword_corpus

from .oracles import vote_oracle

LABELS = ["HS", "NHS", "NIL"]


def test_vote_cases():
    assert majority_vote([["HS"], ["HS"], ["NHS"], ["NHS"]]) == ["HS"]
    assert majority_vote([["NHS"], ["NHS"], ["NHS"], ["HS"]]) == ["NHS"]
    assert majority_vote([["HS"]] * 4) == ["HS"]
    assert majority_vote([["NHS"], ["HS"], ["HS"], ["NHS"]]) == ["NHS"]
    assert majority_vote([["NIL"], ["HS"], ["HS"], ["NHS"]]) == ["HS"]


def test_smallest_policy():
    assert majority_vote([["NHS"], ["HS"]], policy="smallest") == ["HS"]


def test_vote_errors():
    with pytest.raises(ValueError):
        majority_vote([["HS"]])
    with pytest.raises(ValueError):
        majority_vote([[], []])
    with pytest.raises(ValueError):
        majority_vote([["HS"], ["HS", "NHS"]])
    with pytest.raises(ValueError):
        majority_vote([["HS"], ["HS"]], policy="random")


def test_vote_matches_counting_oracle(rng):
    members = rng.choice(LABELS, size=(4, 1000))
    got = majority_vote(members.tolist())
    assert got == [vote_oracle(list(col)) for col in members.T]


def test_tied_loser_permutation_invariance():
    for votes in itertools.product(LABELS, repeat=4):
        winner = majority_vote([[v] for v in votes])[0]
        counts = {label: votes.count(label) for label in LABELS}
        if list(counts.values()).count(max(counts.values())) > 1:
            continue  # only clear winners are order free
        losers = [i for i, v in enumerate(votes) if v != winner]
        for perm in itertools.permutations(losers):
            shuffled = list(votes)
            for src, dst in zip(losers, perm):
                shuffled[dst] = votes[src]
            assert majority_vote([[v] for v in shuffled])[0] == winner


def test_ensemble_members_and_vote():
    corpus = make_keyword_corpus(120, seed=2)
    vec = fit_tfidf(corpus)
    X = vec.transform(corpus)
    model = build_ensemble(n_estimators=5).fit(X, corpus.labels)
    assert list(model.named_estimators_) == ["svm", "lr", "dt", "rf"]
    members = model.member_predictions(X)
    np.testing.assert_array_equal(model.predict(X), majority_vote(members))
    assert sorted(model.classes_) == LABELS
