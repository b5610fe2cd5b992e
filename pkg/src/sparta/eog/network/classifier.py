#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""classifier.py: Relation classification of entity pair representations and the training loss."""
import logging
from typing import Dict, Hashable, Iterable, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from sparta.eog.autodiff.tensor import Array, Tensor, add, dropout, linear, log, mean_all, mul, pick, scale, softmax, sum_all

logger = logging.getLogger(__name__)


def classify_pair(
    representations: Tensor, weight: Tensor, bias: Tensor, rng: np.random.Generator, dropout_rate: float = 0.0, train_mode: bool = False
) -> Tensor:
    """Softmax class distribution of one (d,) or many (m, d) pair representations.

    Args:
        representations (Tensor): Final entity-to-entity edges, zero vectors for pairs left unconnected.
        weight (Tensor): (r, d) classifier matrix.
        bias (Tensor): (r,) classifier bias.
        rng (np.random.Generator): Source of dropout masks.
        dropout_rate (float): Dropout applied to the representations at train time.
        train_mode (bool): Enables dropout.

    Returns:
        Tensor: Probabilities with the class axis last.
    """
    return softmax(linear(dropout(representations, dropout_rate, rng, train_mode), weight, bias))


def pair_loss(probabilities: Tensor, gold: Sequence[int], weights: Sequence[Tensor] = (), regularization: float = 0.0) -> Tensor:
    """Mean negative log-likelihood of the gold classes plus ``regularization`` times the squared norm of ``weights``."""
    loss = scale(mean_all(log(pick(probabilities, gold))), -1.0)
    if regularization > 0.0 and weights:
        penalty = sum_all(mul(weights[0], weights[0]))
        for weight in weights[1:]:
            penalty = add(penalty, sum_all(mul(weight, weight)))
        loss = add(loss, scale(penalty, regularization))
    return loss


def decide(probabilities: Array) -> NDArray[np.int64]:
    """Argmax over the last axis; ties go to the lowest class index."""
    return np.asarray(np.argmax(probabilities, axis=-1), dtype=np.int64)


def merge_instances(instances: Iterable[Tuple[Hashable, Array]], no_relation: int) -> Dict[Hashable, int]:
    """Merges mention-level predictions into one decision per entity pair.

    A pair takes the positive class of its most confident positively predicted instance and is negative when no instance is positive.

    Args:
        instances (Iterable[Tuple[Hashable, Array]]): (pair key, class probabilities) per instance.
        no_relation (int): Index of the negative class.
    """
    best: Dict[Hashable, Tuple[float, int]] = {}
    for key, probs in instances:
        predicted = int(decide(probs))
        best.setdefault(key, (-1.0, no_relation))
        if predicted != no_relation and probs[predicted] > best[key][0]:
            best[key] = (float(probs[predicted]), predicted)
    return {key: label for key, (_, label) in best.items()}
