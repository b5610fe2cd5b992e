#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""statistics.py: Dataset statistics of a filtered corpus."""
import logging
from collections import Counter
from typing import Sequence

from sparta.eog.corpus.documents import generate_pairs
from sparta.eog.evaluation.metrics import pair_locality
from sparta.eog.models.model import CorpusStatistics, Document, SemanticType

logger = logging.getLogger(__name__)


def corpus_statistics(documents: Sequence[Document], head_type: SemanticType, tail_type: SemanticType, no_relation: int) -> CorpusStatistics:
    """Counts documents, positive pairs (split into intra- and inter-sentence), negative pairs and entities and mentions per semantic type."""
    stats = CorpusStatistics(documents=len(documents))
    entities: Counter = Counter()
    mentions: Counter = Counter()
    for doc in documents:
        entities.update(entity.semantic_type.value for entity in doc.entities)
        mentions.update(mention.semantic_type.value for mention in doc.mentions)
        for pair in generate_pairs(doc, head_type, tail_type, no_relation):
            if pair.label == no_relation:
                stats.negative_pairs += 1
                continue
            stats.positive_pairs += 1
            intra, _ = pair_locality(doc, pair.head, pair.tail)
            if intra:
                stats.positive_intra += 1
            else:
                stats.positive_inter += 1
    stats.entities = dict(sorted(entities.items()))
    stats.mentions = dict(sorted(mentions.items()))
    logger.debug(f"Statistics of {stats.documents} documents: {stats.positive_pairs} positive, {stats.negative_pairs} negative pairs")
    return stats
