"""Command-line entry point: ``hopedetect {stats,train,evaluate,predict,compare}``.

Settings are resolved as packaged defaults, then the INI file given by
``--config`` (or ``$HOPEDETECT_CONFIG``), then command-line flags. Logs go to
stderr; results go to files under ``--out`` and to stdout.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np
from sklearn.pipeline import Pipeline

from . import __version__
from .archive import ArchiveError, atomic_write_text, load_archive, save_archive
from .classical import (DecisionTreeClassifier, LinearSVC, LogisticRegression,
                        OptimizationError, RandomForestClassifier, build_ensemble)
from .config import MODELS, ConfigError, RunConfig, load_config
from .corpus import LABELS, CorpusError, LabeledCorpus, corpus_stats, load_corpus
from .evaluation import compare_report, evaluate
from .features import DocumentFrequencySelector, TfidfVectorizer, VectorFileError
from .neural import CNNBiLSTMClassifier, TrainingDivergedError

log = logging.getLogger("hopedetect")


class CommandError(RuntimeError):
    pass


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects inputs, artifacts and timings for the run manifest."""

    def __init__(self, command, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.inputs = {}
        self.artifacts = []
        self.timings = {}
        self._t0 = time.perf_counter()

    def input(self, path):
        self.inputs[os.path.abspath(path)] = sha256(path)
        return path

    def path(self, name):
        return os.path.join(self.cfg.out, name)

    def write(self, name, text):
        path = self.path(name)
        atomic_write_text(path, text)
        self.artifacts.append(path)
        return path

    def timed(self, label):
        run = self

        class _Timer:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[label] = round(time.perf_counter() - self.t, 6)

        return _Timer()

    def finish(self):
        self.timings["total"] = round(time.perf_counter() - self._t0, 6)
        manifest = {
            "command": self.command,
            "toolkit_version": __version__,
            "seed": self.cfg.seed,
            "config": self.cfg.snapshot(),
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "timings_seconds": self.timings,
        }
        path = self.path(f"{self.command}.manifest.json")
        atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True))
        return path


def _corpus(run: Run, path, split, labeled=True) -> LabeledCorpus:
    if not path:
        raise CommandError(f"no --{split} corpus given")
    run.input(path)
    return load_corpus(path, run.cfg.labels, run.cfg.language, split, labeled=labeled)


def build_model(cfg: RunConfig):
    """Untrained text-to-label model for ``cfg.model``."""
    tfidf = ("tfidf", TfidfVectorizer())
    select = ("select", DocumentFrequencySelector(cfg.tree_max_features))
    if cfg.model == "lr":
        return Pipeline([tfidf, ("clf", LogisticRegression(C=cfg.lr_C, tol=cfg.lr_tol,
                                                           max_iter=cfg.lr_max_iter))])
    if cfg.model == "svm":
        return Pipeline([tfidf, ("clf", LinearSVC(C=cfg.svm_C, tol=cfg.svm_tol,
                                                  max_iter=cfg.svm_max_iter,
                                                  random_state=cfg.seed))])
    if cfg.model == "dt":
        return Pipeline([tfidf, select, ("clf", DecisionTreeClassifier(random_state=cfg.seed))])
    if cfg.model == "rf":
        return Pipeline([tfidf, select, ("clf", RandomForestClassifier(
            n_estimators=cfg.n_estimators, random_state=cfg.seed, n_jobs=cfg.n_jobs))])
    if cfg.model == "ensemble":
        ens = build_ensemble(svm_C=cfg.svm_C, lr_C=cfg.lr_C, n_estimators=cfg.n_estimators,
                             tree_max_features=cfg.tree_max_features, random_state=cfg.seed,
                             tie_policy=cfg.tie_policy, n_jobs=cfg.n_jobs)
        ens.estimators[0][1].set_params(tol=cfg.svm_tol, max_iter=cfg.svm_max_iter)
        ens.estimators[1][1].set_params(tol=cfg.lr_tol, max_iter=cfg.lr_max_iter)
        return Pipeline([tfidf, ("clf", ens)])
    vectors = None
    if cfg.model == "cnn-bilstm-ft":
        if not cfg.vectors:
            raise CommandError("model cnn-bilstm-ft needs --vectors")
        vectors = cfg.vectors
    return CNNBiLSTMClassifier(
        max_len=cfg.max_len, embed_dim=cfg.embed_dim, conv_filters=cfg.conv_filters,
        conv_kernel=cfg.conv_kernel, pool_window=cfg.pool_window, lstm_units=cfg.lstm_units,
        dropout=cfg.dropout, learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
        epochs=cfg.epochs, patience=cfg.patience, output_mode=cfg.output_mode,
        vectors_path=vectors, vectors_dim=cfg.vectors_dim, random_state=cfg.seed)


def cmd_stats(cfg: RunConfig, args) -> int:
    run = Run("stats", cfg)
    corpus = _corpus(run, cfg.train, "train")
    stats = corpus_stats(corpus)
    text = stats.to_text()
    run.write("stats.txt", text)
    run.write("stats.json", stats.to_json() + "\n")
    run.finish()
    sys.stdout.write(text)
    return 0


def cmd_train(cfg: RunConfig, args) -> int:
    run = Run("train", cfg)
    train = _corpus(run, cfg.train, "train")
    model = build_model(cfg)
    if cfg.vectors and cfg.model == "cnn-bilstm-ft":
        run.input(cfg.vectors)
    with run.timed("fit"):
        if isinstance(model, CNNBiLSTMClassifier):
            valid = _corpus(run, cfg.valid, "valid")
            model.fit(train.texts, train.labels, valid.texts, valid.labels)
        else:
            model.fit(train.texts, np.asarray(train.labels))
    path = run.path("model.json")
    save_archive(path, model, language=cfg.language, model_name=cfg.model,
                 extra={"seed": cfg.seed})
    run.artifacts.append(path)
    if isinstance(model, CNNBiLSTMClassifier):
        run.write("train_record.csv", model.record_.to_csv())
    run.finish()
    log.info("wrote %s", path)
    sys.stdout.write(f"archive={path}\n")
    return 0


def _archive_for(cfg: RunConfig, run: Run, path):
    if not path:
        raise CommandError("no --archive given")
    run.input(path)
    archive = load_archive(path)
    if cfg.language != "other" and archive.language != cfg.language:
        raise CommandError(f"archive language {archive.language!r} does not match "
                           f"configured language {cfg.language!r}")
    return archive


def _write_eval_outputs(run: Run, report, prefix=""):
    run.write(f"{prefix}report.txt", report.to_text())
    run.write(f"{prefix}report.json", report.to_json() + "\n")
    run.write(f"{prefix}report.csv", report.to_csv())
    run.write(f"{prefix}confusion.csv", report.matrix.to_csv())
    run.write(f"{prefix}confusion_long.csv", report.matrix.to_long_csv())


def _predictions_tsv(corpus: LabeledCorpus, predictions) -> str:
    return "".join(f"{d.id}\t{d.text}\t{p}\n" for d, p in zip(corpus, predictions))


def cmd_evaluate(cfg: RunConfig, args) -> int:
    run = Run("evaluate", cfg)
    archive = _archive_for(cfg, run, args.archive)
    cfg.language = archive.language
    test = _corpus(run, cfg.test, "test")
    with run.timed("predict"):
        pred = archive.model.predict(test.texts).tolist()
    report = evaluate(test.labels, pred, LABELS)
    _write_eval_outputs(run, report)
    run.write("predictions.tsv", _predictions_tsv(test, pred))
    run.finish()
    sys.stdout.write(report.to_text())
    sys.stdout.write(report.matrix.to_text())
    sys.stdout.write(f"weighted_f1={report.weighted_f1!r}\n")
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    run = Run("predict", cfg)
    archive = _archive_for(cfg, run, args.archive)
    if not args.input:
        raise CommandError("no --input given")
    run.input(args.input)
    corpus = load_corpus(args.input, cfg.labels, archive.language, "test", labeled=False)
    pred = archive.model.predict(corpus.texts).tolist()
    name = args.output or "predictions.tsv"
    run.write(name, _predictions_tsv(corpus, pred))
    run.finish()
    sys.stdout.write(f"predictions={run.path(name)}\n")
    return 0


def read_predictions(path, corpus: LabeledCorpus, aliases=None) -> list:
    """Labels from an external prediction file, aligned to ``corpus`` by id.

    Accepted rows: ``id<TAB>text<TAB>label``, ``id<TAB>label`` or ``label``.
    """
    aliases = aliases or {}
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    by_id, order = {}, []
    for lineno, line in enumerate(lines, start=1):
        fields = line.rstrip("\r").split("\t")
        raw = fields[-1].strip()
        label = raw if raw in LABELS else aliases.get(raw)
        if label is None:
            raise CommandError(f"{path}: line {lineno}: unknown label {raw!r}")
        if len(fields) == 1:
            order.append(label)
            continue
        try:
            doc_id = int(fields[0])
        except ValueError:
            raise CommandError(f"{path}: line {lineno}: bad id {fields[0]!r}") from None
        by_id[doc_id] = label
    if order and by_id:
        raise CommandError(f"{path}: mixes rows with and without ids")
    if order:
        if len(order) != len(corpus):
            raise CommandError(f"{path}: {len(order)} predictions for {len(corpus)} documents")
        return order
    missing = [d.id for d in corpus if d.id not in by_id]
    if missing or len(by_id) != len(corpus):
        raise CommandError(f"{path}: ids do not match the test corpus "
                           f"({len(missing)} missing, {len(by_id)} given)")
    return [by_id[d.id] for d in corpus]


def cmd_compare(cfg: RunConfig, args) -> int:
    run = Run("compare", cfg)
    archives = list(args.archives or []) + list(args.archive_list or [])
    if args.archive:
        archives.insert(0, args.archive)
    if not archives and not args.predictions:
        raise CommandError("compare needs at least one archive or --predictions file")
    loaded = [(p, _archive_for(cfg, run, p)) for p in archives]
    languages = {a.language for _, a in loaded}
    if len(languages) > 1:
        raise CommandError(f"archives mix languages: {sorted(languages)}")
    language = languages.pop() if languages else cfg.language
    cfg.language = language
    test = _corpus(run, cfg.test, "test")
    entries, seen = [], set()
    for path, archive in loaded:
        name = archive.model_name or os.path.splitext(os.path.basename(path))[0]
        pred = archive.model.predict(test.texts).tolist()
        entries.append((name, pred))
    for spec in args.predictions or []:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = os.path.splitext(os.path.basename(spec))[0], spec
        run.input(path)
        entries.append((name, read_predictions(path, test, cfg.labels)))
    reports = []
    for name, pred in entries:
        if name in seen:
            raise CommandError(f"duplicate model name {name!r} in comparison")
        seen.add(name)
        report = evaluate(test.labels, pred, LABELS)
        _write_eval_outputs(run, report, prefix=f"{name}.")
        reports.append((name, language, report))
    table = compare_report(reports)
    run.write("comparison.txt", table.to_text())
    run.write("comparison.csv", table.to_csv())
    run.write("comparison.json", table.to_json() + "\n")
    run.finish()
    sys.stdout.write(table.to_text())
    return 0


COMMANDS = {
    "stats": cmd_stats,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "compare": cmd_compare,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (default: $HOPEDETECT_CONFIG)")
    common.add_argument("--language", choices=("english", "tamil", "malayalam", "other"))
    common.add_argument("--model", choices=MODELS)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--train")
    common.add_argument("--valid")
    common.add_argument("--test")
    common.add_argument("--vectors", help="pretrained vectors in text format")
    common.add_argument("--archive", help="model archive (model.json)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hopedetect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[common], help="per-class corpus statistics")
    sub.add_parser("train", parents=[common], help="fit a model and write an archive")
    sub.add_parser("evaluate", parents=[common], help="score an archive on --test")
    p = sub.add_parser("predict", parents=[common], help="label an unlabeled TSV")
    p.add_argument("--input", required=True, help="TSV with one text per line")
    p.add_argument("--output", help="file name inside --out (default predictions.tsv)")
    p = sub.add_parser("compare", parents=[common], help="tabulate several models on --test")
    p.add_argument("archives", nargs="*", help="model archives")
    p.add_argument("--archives", dest="archive_list", nargs="+", default=[],
                   help=argparse.SUPPRESS)
    p.add_argument("--predictions", action="append", metavar="NAME=PATH",
                   help="external prediction file to include (repeatable)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    overrides = {k: getattr(args, k) for k in
                 ("language", "model", "seed", "out", "train", "valid", "test", "vectors")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except (CommandError, ConfigError, CorpusError, ArchiveError, VectorFileError,
            TrainingDivergedError, OptimizationError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
