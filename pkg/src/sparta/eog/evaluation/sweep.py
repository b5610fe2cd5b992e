#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""sweep.py: Ablation and hyper-parameter sweeps.

Every sweep point trains a fresh model from the base configuration with some keys overridden and scores it on an evaluation split. Points run
concurrently in worker threads, all with the base seed; a failing point is reported with its error instead of stopping the sweep.

Examples:
    Compare the named edge ablations::

        from sparta.eog.evaluation.sweep import ABLATIONS, ablation_sweep, format_sweep

        points = [(name, ABLATIONS[name]) for name in ("-MM", "-SS", "-ES,MS,SS")]
        results = ablation_sweep(config, points, train_documents, dev_documents, test_documents, vocab)
        print(format_sweep(results))

    Sweep the number of inference iterations asynchronously::

        from sparta.eog.evaluation.sweep import expand_grid, run_sweep

        points = expand_grid({"inference_iterations": [1, 2, 3]})
        results = await run_sweep(config, points, train_documents, dev_documents, test_documents, vocab)
"""
import asyncio
import itertools
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from tqdm import tqdm

from sparta.eog.autodiff.tensor import Array
from sparta.eog.config import TrainConfig, build_config
from sparta.eog.corpus.documents import ExclusionKey
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.errors import EogError, UsageError
from sparta.eog.evaluation.metrics import score
from sparta.eog.models.model import Document, SweepResult
from sparta.eog.training.trainer import Trainer

logger = logging.getLogger(__name__)

Overrides = Dict[str, object]
SweepPoint = Tuple[str, Overrides]

ABLATIONS: Dict[str, Overrides] = {
    "-MM": {"edges_mm": False},
    "-ME": {"edges_me": False},
    "-MS": {"edges_ms": False},
    "-ES": {"edges_es": False},
    "-SS_indirect": {"edges_ss_indirect": False},
    "-SS": {"edges_ss_direct": False, "edges_ss_indirect": False},
    "-MM,ME,MS": {"edges_mm": False, "edges_me": False, "edges_ms": False},
    "-ES,MS,SS": {"edges_es": False, "edges_ms": False, "edges_ss_direct": False, "edges_ss_indirect": False},
    "-T": {"node_types": False},
    "-C": {"mm_context": False},
    "-D": {"distances": False},
    "-T,C,D": {"node_types": False, "mm_context": False, "distances": False},
}


def parse_grid(items: Sequence[str]) -> Dict[str, List[str]]:
    """Parses ``key=v1,v2`` strings into a grid of candidate values.

    Raises:
        UsageError: On an item without ``=`` or without values.
    """
    grid: Dict[str, List[str]] = {}
    for item in items:
        key, sep, values = item.partition("=")
        choices = [v.strip() for v in values.split(",") if v.strip()]
        if not sep or not key.strip() or not choices:
            raise UsageError(f"grid entries look like key=v1,v2; got {item!r}")
        grid[key.strip()] = choices
    return grid


def expand_grid(grid: Mapping[str, Sequence[object]]) -> List[SweepPoint]:
    """Cartesian product of a grid, labelled ``key=value`` joined by spaces."""
    keys = list(grid)
    points = []
    for values in itertools.product(*(grid[key] for key in keys)):
        overrides = dict(zip(keys, values))
        points.append((" ".join(f"{k}={v}" for k, v in overrides.items()), overrides))
    return points


def resolve_points(names: Sequence[str], grid: Optional[Mapping[str, Sequence[object]]] = None) -> List[SweepPoint]:
    """Sweep points from named ablations followed by the grid expansion.

    Raises:
        UsageError: For an unknown ablation name.
    """
    unknown = [name for name in names if name not in ABLATIONS]
    if unknown:
        raise UsageError(f"unknown ablations {unknown}; choose from {list(ABLATIONS)}")
    points: List[SweepPoint] = [(name, dict(ABLATIONS[name])) for name in names]
    if grid:
        points.extend(expand_grid(grid))
    return points


def run_point(
    index: int,
    point: SweepPoint,
    base: TrainConfig,
    train_documents: Sequence[Document],
    dev_documents: Sequence[Document],
    test_documents: Sequence[Document],
    vocab: Vocabulary,
    embeddings: Optional[Array] = None,
    exclusions: Optional[Set[ExclusionKey]] = None,
) -> SweepResult:
    """Trains and scores one sweep point.

    Errors of the package and numeric failures from numpy (``ArithmeticError``, ``ValueError``) are captured in the result.
    """
    label, overrides = point
    try:
        config = build_config({**base.model_dump(), **overrides})
        checkpoint = Trainer(config, vocab, embeddings, exclusions).train(train_documents, dev_documents)
        metrics = score(checkpoint.model().predict_all(test_documents), config.no_relation, exclusions)
    except EogError as e:
        logger.warning(f"Sweep point {index} ({label}) failed: {e}")
        return SweepResult(point=index, label=label, overrides=overrides, error=str(e))
    except (ArithmeticError, ValueError) as e:
        logger.warning(f"Sweep point {index} ({label}) failed with {type(e).__name__}: {e}")
        return SweepResult(point=index, label=label, overrides=overrides, error=f"{type(e).__name__}: {e}")
    logger.info(f"Sweep point {index} ({label}): F1 {metrics.overall.f1:.4f}")
    return SweepResult(point=index, label=label, overrides=overrides, metrics=metrics)


async def run_sweep(
    base: TrainConfig,
    points: Sequence[SweepPoint],
    train_documents: Sequence[Document],
    dev_documents: Sequence[Document],
    test_documents: Sequence[Document],
    vocab: Vocabulary,
    embeddings: Optional[Array] = None,
    exclusions: Optional[Set[ExclusionKey]] = None,
    concurrency: int = 2,
    progress: bool = False,
) -> List[SweepResult]:
    """Runs the sweep points in worker threads, at most ``concurrency`` at a time.

    Returns:
        List[SweepResult]: One result per point, in the order of ``points``.
    """
    semaphore = asyncio.Semaphore(max(1, concurrency))
    bar = tqdm(total=len(points), desc="sweep", disable=not progress)

    async def bounded(index: int, point: SweepPoint) -> SweepResult:
        async with semaphore:
            result = await asyncio.to_thread(run_point, index, point, base, train_documents, dev_documents, test_documents, vocab, embeddings, exclusions)
            bar.update(1)
            return result

    try:
        return list(await asyncio.gather(*(bounded(index, point) for index, point in enumerate(points))))
    finally:
        bar.close()


def ablation_sweep(
    base: TrainConfig,
    points: Sequence[SweepPoint],
    train_documents: Sequence[Document],
    dev_documents: Sequence[Document],
    test_documents: Sequence[Document],
    vocab: Vocabulary,
    embeddings: Optional[Array] = None,
    exclusions: Optional[Set[ExclusionKey]] = None,
    concurrency: int = 2,
    progress: bool = False,
) -> List[SweepResult]:
    """Blocking wrapper around :func:`run_sweep`."""
    return asyncio.run(run_sweep(base, points, train_documents, dev_documents, test_documents, vocab, embeddings, exclusions, concurrency, progress))


def format_sweep(results: Sequence[SweepResult]) -> str:
    """Tab-separated table with one row per sweep point."""
    lines = ["point\tlabel\toverall_f1\tintra_f1\tinter_f1\terror"]
    for result in results:
        if result.metrics is None:
            lines.append(f"{result.point}\t{result.label}\t-\t-\t-\t{result.error}")
            continue
        m = result.metrics
        lines.append(f"{result.point}\t{result.label}\t{m.overall.f1:.4f}\t{m.intra.f1:.4f}\t{m.inter.f1:.4f}\t")
    return "\n".join(lines) + "\n"
