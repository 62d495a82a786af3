"""Versioned JSON model archives.

An archive holds the fitted text-to-label model (TF-IDF vectorizer, any
column selection and the classifier) or a neural section, plus metadata.
Files are written to a temporary name and renamed, so a failed write never
leaves a partial archive behind.
"""
from __future__ import annotations

import json
import os
import tempfile

import numpy as np
from sklearn.pipeline import Pipeline

from .classical import (DecisionTreeClassifier, LinearSVC, LogisticRegression,
                        MajorityVoteClassifier, RandomForestClassifier)
from .features import DocumentFrequencySelector, TfidfVectorizer
from .neural import CNNBiLSTMClassifier

FORMAT = "hopedetect-model"
FORMAT_VERSION = 1

_REGISTRY = {cls.__name__: cls for cls in (
    TfidfVectorizer, DocumentFrequencySelector, LogisticRegression, LinearSVC,
    DecisionTreeClassifier, RandomForestClassifier, CNNBiLSTMClassifier,
)}


class ArchiveError(ValueError):
    pass


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def estimator_to_dict(est) -> dict:
    if isinstance(est, Pipeline):
        return {"type": "Pipeline",
                "steps": [[name, estimator_to_dict(step)] for name, step in est.steps]}
    if isinstance(est, MajorityVoteClassifier):
        return {"type": "MajorityVoteClassifier",
                "params": {"tie_policy": est.tie_policy},
                "members": [[name, estimator_to_dict(fitted)]
                            for (name, _), fitted in zip(est.estimators, est.estimators_)]}
    name = type(est).__name__
    if name not in _REGISTRY:
        raise ArchiveError(f"cannot serialize {name}")
    params = {k: _plain(v) for k, v in est.get_params(deep=False).items()}
    return {"type": name, "params": params, "state": est._export()}


def estimator_from_dict(d: dict):
    kind = d.get("type")
    if kind == "Pipeline":
        return Pipeline([(name, estimator_from_dict(step)) for name, step in d["steps"]])
    if kind == "MajorityVoteClassifier":
        members = [(name, estimator_from_dict(m)) for name, m in d["members"]]
        est = MajorityVoteClassifier(members, **d["params"])
        est.estimators_ = [m for _, m in members]
        est.classes_ = np.asarray(members[0][1].classes_ if hasattr(members[0][1], "classes_")
                                  else members[0][1][-1].classes_)
        return est
    if kind not in _REGISTRY:
        raise ArchiveError(f"unknown estimator type {kind!r}")
    return _REGISTRY[kind](**d["params"])._import(d["state"])


def model_classes(model) -> list:
    final = model[-1] if isinstance(model, Pipeline) else model
    return np.asarray(final.classes_).tolist()


def dumps_archive(model, language="other", model_name="", extra=None) -> str:
    doc = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "language": language,
        "model_name": model_name,
        "classes": model_classes(model),
    }
    if isinstance(model, CNNBiLSTMClassifier):
        doc["neural"] = estimator_to_dict(model)
    else:
        doc["estimator"] = estimator_to_dict(model)
    if extra:
        doc["extra"] = extra
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_archive(path, model, language="other", model_name="", extra=None) -> None:
    atomic_write_text(path, dumps_archive(model, language, model_name, extra))


class Archive:
    def __init__(self, model, language, model_name, classes, extra=None):
        self.model = model
        self.language = language
        self.model_name = model_name
        self.classes = classes
        self.extra = extra or {}


def load_archive(path) -> Archive:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ArchiveError(f"{path}: archive not found") from None
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: not a JSON archive ({exc})") from None
    if doc.get("format") != FORMAT or "format_version" not in doc:
        raise ArchiveError(f"{path}: missing format header")
    if doc["format_version"] != FORMAT_VERSION:
        raise ArchiveError(f"{path}: unsupported format_version {doc['format_version']}")
    if "neural" in doc:
        model = estimator_from_dict(doc["neural"])
    else:
        model = estimator_from_dict(doc["estimator"])
    return Archive(model, doc["language"], doc.get("model_name", ""), doc["classes"],
                   doc.get("extra"))
