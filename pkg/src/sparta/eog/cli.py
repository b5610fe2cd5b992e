#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""cli.py: Command line entry point ``sparta-eog``.

Subcommands:

* ``prepare`` parse a PubTator file, drop ungrounded mentions and write line-delimited documents (optionally a vocabulary and regenerated PubTator),
* ``train`` train a model into a run directory named by the configuration hash,
* ``evaluate`` score a checkpoint on a prepared split,
* ``analyze`` corpus statistics, graph dumps, sentence-distance breakdowns and ablation sweeps,
* ``gradcheck`` run the finite-difference gradient suites.

Every training configuration key is also a flag (``--batch-size 3``, ``--edges-ss-direct false``); flags override the ``--config`` file, which overrides
the ``--dataset`` preset. Exit codes: 0 success, 1 usage error, 2 data error, 3 divergence or failed gradient check.

Examples:
    Train on CDR with two inference iterations::

        sparta-eog prepare CDR_TrainingSet.PubTator.txt data/train.jsonl --vocabulary data/vocab.txt
        sparta-eog prepare CDR_DevelopmentSet.PubTator.txt data/dev.jsonl
        sparta-eog train --dataset CDR --train data/train.jsonl --dev data/dev.jsonl --vocabulary data/vocab.txt --inference-iterations 2 --output runs
        sparta-eog evaluate --checkpoint runs/<hash>/checkpoint --data data/test.jsonl
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, NoReturn, Optional, Sequence, Set

import numpy as np

from sparta.eog.config import TrainConfig, config_hash, dump_config, load_config
from sparta.eog.corpus.documents import ExclusionKey, filter_ungrounded, load_documents, merge_train_dev, read_exclusions, save_documents
from sparta.eog.corpus.pubtator import PubTatorReader, read_tokenized, write_pubtator
from sparta.eog.corpus.vocabulary import Vocabulary, load_embeddings
from sparta.eog.diagnostics import GRADCHECK_TOLERANCE, run_gradcheck
from sparta.eog.errors import DataError, DivergenceError, EogError, NumericError, UsageError
from sparta.eog.evaluation.metrics import distance_breakdown, format_distance_breakdown, format_metrics, score
from sparta.eog.evaluation.statistics import corpus_statistics
from sparta.eog.evaluation.sweep import ABLATIONS, ablation_sweep, format_sweep, parse_grid, resolve_points
from sparta.eog.models.constants import DATASET_PRESETS
from sparta.eog.models.model import Document
from sparta.eog.network.graph import edge_layout, graph_records
from sparta.eog.training.checkpoint import load_checkpoint, save_checkpoint
from sparta.eog.training.trainer import Trainer

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training configuration")
    group.add_argument("--config", type=Path, help="key=value configuration file")
    group.add_argument("--dataset", choices=sorted(DATASET_PRESETS), help="dataset preset")
    for name, field in TrainConfig.model_fields.items():
        group.add_argument(f"--{name.replace('_', '-')}", dest=f"cfg_{name}", metavar="VALUE", help=field.description)


def _config(args: argparse.Namespace) -> TrainConfig:
    overrides = {name: getattr(args, f"cfg_{name}") for name in TrainConfig.model_fields}
    return load_config(args.config, overrides=overrides, dataset=args.dataset)


def _documents(path: Path) -> List[Document]:
    try:
        return load_documents(path)
    except OSError as e:
        raise DataError(f"cannot read documents {path}: {e}") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None


def _exclusions(path: Optional[Path]) -> Optional[Set[ExclusionKey]]:
    if path is None:
        return None
    try:
        return read_exclusions(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataError(f"cannot read exclusions {path}: {e}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparta-eog", description="Edge-oriented graph relation extraction on PubTator corpora.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    prepare = commands.add_parser("prepare", help="parse and filter a PubTator file")
    prepare.add_argument("input", type=Path, help="PubTator file")
    prepare.add_argument("output", type=Path, help="line-delimited document file to write")
    prepare.add_argument("--sentences", type=Path, help="pre-tokenized sentences (PMID line, one sentence per line, blank line between documents)")
    prepare.add_argument("--relation-types", default=None, help="comma-separated relation tags to keep (default from --dataset, else CID)")
    prepare.add_argument("--dataset", choices=sorted(DATASET_PRESETS))
    prepare.add_argument("--vocabulary", type=Path, help="also write the vocabulary of the prepared documents")
    prepare.add_argument("--min-freq", type=int, default=1)
    prepare.add_argument("--no-lowercase", action="store_true", help="keep token case in the vocabulary")
    prepare.add_argument("--pubtator", type=Path, help="also write the filtered documents back as PubTator")

    train = commands.add_parser("train", help="train a model")
    train.add_argument("--train", type=Path, required=True, dest="train_path")
    train.add_argument("--dev", type=Path, dest="dev_path", help="development split for early stopping")
    train.add_argument("--merge-dev", action="store_true", help="train on train+dev for max_epochs without early stopping")
    train.add_argument("--vocabulary", type=Path, help="vocabulary written by prepare; built from the training split when absent")
    train.add_argument("--embeddings", type=Path, help="text embedding file")
    train.add_argument("--exclusions", type=Path, help="PMID<TAB>ID<TAB>ID pairs to leave out")
    train.add_argument("--output", type=Path, default=Path("runs"), help="root of the run directories")
    train.add_argument("--progress", action="store_true")
    _add_config_flags(train)

    evaluate = commands.add_parser("evaluate", help="score a checkpoint")
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--data", type=Path, required=True)
    evaluate.add_argument("--exclusions", type=Path)
    evaluate.add_argument("--predictions", type=Path, help="write one JSON prediction per pair")

    analyze = commands.add_parser("analyze", help="statistics, graph dumps, distance breakdowns and sweeps")
    analyses = analyze.add_subparsers(dest="analysis", required=True)
    stats = analyses.add_parser("stats", help="corpus statistics")
    stats.add_argument("--data", type=Path, required=True)
    _add_config_flags(stats)
    graph = analyses.add_parser("graph", help="dump the initial edges of every document")
    graph.add_argument("--data", type=Path, required=True)
    graph.add_argument("--output", type=Path, required=True)
    _add_config_flags(graph)
    distance = analyses.add_parser("distance", help="F1 per sentence distance of inter-sentence pairs")
    distance.add_argument("--checkpoint", type=Path, required=True)
    distance.add_argument("--data", type=Path, required=True)
    distance.add_argument("--exclusions", type=Path)
    distance.add_argument("--output", type=Path, help="tab-separated table to write")
    sweep = analyses.add_parser("sweep", help="train and score a grid of configurations")
    sweep.add_argument("--train", type=Path, required=True, dest="train_path")
    sweep.add_argument("--dev", type=Path, dest="dev_path")
    sweep.add_argument("--test", type=Path, required=True, dest="test_path")
    sweep.add_argument("--vocabulary", type=Path, help="vocabulary written by prepare; built from the training split when absent")
    sweep.add_argument("--embeddings", type=Path)
    sweep.add_argument("--exclusions", type=Path)
    sweep.add_argument("--ablation", action="append", default=[], choices=list(ABLATIONS), help="named ablation, repeatable")
    sweep.add_argument("--grid", action="append", default=[], help="key=v1,v2, repeatable")
    sweep.add_argument("--concurrency", type=int, default=2)
    sweep.add_argument("--output", type=Path, help="line-delimited results to write")
    sweep.add_argument("--progress", action="store_true")
    _add_config_flags(sweep)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference gradient suites")
    gradcheck.add_argument("--seed", type=int, default=0)
    return parser


def _prepare(args: argparse.Namespace) -> int:
    relation_types = load_config(dataset=args.dataset).relation_types
    if args.relation_types:
        relation_types = [tag.strip() for tag in args.relation_types.split(",") if tag.strip()]
    try:
        text = args.input.read_text(encoding="utf-8")
        tokenized = read_tokenized(args.sentences.read_text(encoding="utf-8")) if args.sentences else None
    except OSError as e:
        raise DataError(f"cannot read {e.filename}: {e.strerror}") from None
    reader = PubTatorReader(relation_types, tokenized)
    documents = [filter_ungrounded(doc) for doc in reader.read(text)]
    args.output.parent.mkdir(parents=True, exist_ok=True)
    save_documents(args.output, documents)
    if args.vocabulary:
        Vocabulary.build(documents, min_freq=args.min_freq, lowercase=not args.no_lowercase).save(args.vocabulary)
    if args.pubtator:
        args.pubtator.write_text(write_pubtator(documents, relation_types), encoding="utf-8")
    print(f"{len(documents)} documents, {reader.dropped_annotations} dropped annotations, {reader.dropped_relations} dropped relations")
    return 0


def _vocabulary(path: Optional[Path], documents: Sequence[Document], config: TrainConfig) -> Vocabulary:
    if path is None:
        return Vocabulary.build(documents, lowercase=config.lowercase)
    try:
        vocab = Vocabulary.load(path, lowercase=config.lowercase)
    except OSError as e:
        raise DataError(f"cannot read vocabulary {path}: {e}") from None
    logger.info(f"Loaded vocabulary of {len(vocab)} entries from {path}")
    return vocab


def _embeddings(path: Optional[Path], vocab: Vocabulary, config: TrainConfig) -> Optional[np.ndarray]:
    if path is None:
        return None
    table, coverage = load_embeddings(path, vocab, config.word_dimension, np.random.default_rng(config.seed))
    print(f"embedding coverage {coverage:.1%}")
    return table


def _train(args: argparse.Namespace) -> int:
    config = _config(args)
    train_documents = _documents(args.train_path)
    dev_documents = _documents(args.dev_path) if args.dev_path else []
    if args.merge_dev:
        train_documents, dev_documents = merge_train_dev(train_documents, dev_documents), []
    run_directory = args.output / config_hash(config)
    run_directory.mkdir(parents=True, exist_ok=True)
    (run_directory / "config.txt").write_text(dump_config(config), encoding="utf-8")
    log_path = run_directory / "train_log.jsonl"
    log_path.unlink(missing_ok=True)

    vocab = _vocabulary(args.vocabulary, train_documents, config)
    embeddings = _embeddings(args.embeddings, vocab, config)
    trainer = Trainer(config, vocab, embeddings, _exclusions(args.exclusions), progress=args.progress, log_path=log_path)
    checkpoint = trainer.train(train_documents, dev_documents)
    save_checkpoint(run_directory / "checkpoint", checkpoint)
    print(f"run directory {run_directory}; best epoch {checkpoint.epoch}, dev F1 {checkpoint.best_f1:.4f}")
    return 0


def _evaluate(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    predictions = checkpoint.model().predict_all(_documents(args.data))
    metrics = score(predictions, checkpoint.config.no_relation, _exclusions(args.exclusions))
    if args.predictions:
        args.predictions.write_text("".join(p.model_dump_json() + "\n" for p in predictions), encoding="utf-8")
    print(format_metrics(metrics), end="")
    return 0


def _analyze(args: argparse.Namespace) -> int:
    if args.analysis == "stats":
        config = _config(args)
        stats = corpus_statistics(_documents(args.data), config.head_type, config.tail_type, config.no_relation)
        print(json.dumps(stats.model_dump(), indent=2))
    elif args.analysis == "graph":
        config = _config(args)
        count = 0
        with open(args.output, "w", encoding="utf-8") as f:
            for doc in _documents(args.data):
                for record in graph_records(doc, edge_layout(doc, config, full=config.variant == "Full")):
                    f.write(record.model_dump_json() + "\n")
                    count += 1
        print(f"{count} edges written to {args.output}")
    elif args.analysis == "distance":
        checkpoint = load_checkpoint(args.checkpoint)
        exclusions = _exclusions(args.exclusions) or set()
        predictions = [p for p in checkpoint.model().predict_all(_documents(args.data)) if (p.doc_id, p.head_id, p.tail_id) not in exclusions]
        table = format_distance_breakdown(distance_breakdown(predictions, checkpoint.config.no_relation))
        if args.output:
            args.output.write_text(table, encoding="utf-8")
        print(table, end="")
    else:
        config = _config(args)
        points = resolve_points(args.ablation, parse_grid(args.grid))
        if not points:
            points = [("base", {})]
        train_documents = _documents(args.train_path)
        vocab = _vocabulary(args.vocabulary, train_documents, config)
        results = ablation_sweep(
            config,
            points,
            train_documents,
            _documents(args.dev_path) if args.dev_path else [],
            _documents(args.test_path),
            vocab,
            _embeddings(args.embeddings, vocab, config),
            _exclusions(args.exclusions),
            concurrency=args.concurrency,
            progress=args.progress,
        )
        if args.output:
            args.output.write_text("".join(r.model_dump_json() + "\n" for r in results), encoding="utf-8")
        print(format_sweep(results), end="")
    return 0


def _gradcheck(args: argparse.Namespace) -> int:
    errors = run_gradcheck(args.seed)
    for name, error in errors.items():
        print(f"{name}\t{error:.3e}\t{'ok' if error < GRADCHECK_TOLERANCE else 'FAILED'}")
    return 0 if max(errors.values()) < GRADCHECK_TOLERANCE else 3


COMMANDS = {"prepare": _prepare, "train": _train, "evaluate": _evaluate, "analyze": _analyze, "gradcheck": _gradcheck}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parses ``argv`` and runs the subcommand, mapping errors to exit codes."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except DivergenceError as e:
        print(f"diverged: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    except EogError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"data error: cannot access {e.filename}: {e.strerror}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
