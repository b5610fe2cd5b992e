#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""metrics.py: Micro precision, recall and F1 over concept-level pair predictions.

Counts are split into intra-sentence pairs (some sentence mentions both concepts) and inter-sentence pairs. The no-relation class is never a target:
a true positive needs the predicted positive class to equal the gold class.

Examples:
    Score predictions and print the summary table::

        from sparta.eog.evaluation.metrics import format_metrics, score

        metrics = score(predictions, no_relation=1)
        print(format_metrics(metrics))
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from sparta.eog.errors import DuplicatePredictionError
from sparta.eog.models.model import PRF, DistanceScore, Document, Metrics, PairPrediction

logger = logging.getLogger(__name__)

PredictionKey = Tuple[str, str, str]


def pair_locality(doc: Document, head: int, tail: int) -> Tuple[bool, int]:
    """Intra flag and minimum sentence distance between any mention of ``head`` and any mention of ``tail``."""
    head_sentences = doc.entity_sentences(head)
    tail_sentences = doc.entity_sentences(tail)
    distance = min(abs(a - b) for a in head_sentences for b in tail_sentences)
    return distance == 0, distance


def _count(counts: PRF, prediction: PairPrediction, no_relation: int) -> None:
    predicted_positive = prediction.predicted != no_relation
    gold_positive = prediction.gold != no_relation
    if predicted_positive and gold_positive and prediction.predicted == prediction.gold:
        counts.tp += 1
        return
    if predicted_positive:
        counts.fp += 1
    if gold_positive:
        counts.fn += 1


def score(predictions: Iterable[PairPrediction], no_relation: int = 1, exclusions: Optional[Set[PredictionKey]] = None) -> Metrics:
    """Micro-averaged counts over overall, intra- and inter-sentence pairs.

    Args:
        predictions (Iterable[PairPrediction]): One prediction per generated pair.
        no_relation (int): Index of the negative class.
        exclusions (Optional[Set[PredictionKey]]): (doc_id, head KB ID, tail KB ID) triples left out of the counts.

    Returns:
        Metrics: Counts with precision, recall and F1 per split.

    Raises:
        DuplicatePredictionError: If the same (doc_id, head, tail) triple occurs twice.
    """
    metrics = Metrics()
    seen: Set[PredictionKey] = set()
    skipped = 0
    for prediction in predictions:
        key = (prediction.doc_id, prediction.head_id, prediction.tail_id)
        if key in seen:
            logger.error(f"Duplicate prediction for {key}")
            raise DuplicatePredictionError(f"duplicate prediction for document {key[0]}, pair {key[1]} -> {key[2]}")
        seen.add(key)
        if exclusions and key in exclusions:
            skipped += 1
            continue
        _count(metrics.overall, prediction, no_relation)
        _count(metrics.intra if prediction.intra else metrics.inter, prediction, no_relation)
    if skipped:
        logger.info(f"Excluded {skipped} pairs from scoring")
    return metrics


def distance_breakdown(predictions: Iterable[PairPrediction], no_relation: int = 1) -> List[DistanceScore]:
    """Micro counts of the inter-sentence predictions per sentence distance, in increasing distance order."""
    by_distance: Dict[int, PRF] = defaultdict(PRF)
    for prediction in predictions:
        if prediction.intra:
            continue
        _count(by_distance[prediction.distance], prediction, no_relation)
    return [DistanceScore(distance=distance, counts=counts) for distance, counts in sorted(by_distance.items())]


def format_metrics(metrics: Metrics) -> str:
    """Tab-separated summary with one row per split."""
    lines = ["split\tP\tR\tF1\tTP\tFP\tFN"]
    for split in ("overall", "intra", "inter"):
        counts: PRF = getattr(metrics, split)
        lines.append(f"{split}\t{counts.precision:.4f}\t{counts.recall:.4f}\t{counts.f1:.4f}\t{counts.tp}\t{counts.fp}\t{counts.fn}")
    return "\n".join(lines) + "\n"


def format_distance_breakdown(scores: Sequence[DistanceScore]) -> str:
    """Plot-ready tab-separated table of F1 per sentence distance."""
    lines = ["distance\tP\tR\tF1\tTP\tFP\tFN"]
    for entry in scores:
        c = entry.counts
        lines.append(f"{entry.distance}\t{c.precision:.4f}\t{c.recall:.4f}\t{c.f1:.4f}\t{c.tp}\t{c.fp}\t{c.fn}")
    return "\n".join(lines) + "\n"
