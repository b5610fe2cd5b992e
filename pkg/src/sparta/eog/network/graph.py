#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""graph.py: Document graph construction.

Nodes are laid out mentions first, then entities, then sentences. Edges are unordered pairs of distinct nodes; each belongs to exactly one family, fixed by
the kinds of its two nodes:

* ``MM`` mention pairs of the same sentence, with attention context and a word-distance embedding,
* ``MS`` a mention and its sentence,
* ``ME`` a mention and its entity,
* ``SS`` sentence pairs (``direct`` when adjacent, ``indirect`` otherwise) with a sentence-distance embedding,
* ``ES`` an entity and every sentence holding one of its mentions.

The fully connected variant adds every remaining node pair, including entity pairs (``EE``).

Examples:
    Build the initial edge matrix of a document::

        from sparta.eog.network.graph import construct_edges, construct_nodes, edge_layout, reduce_edges

        nodes = construct_nodes(doc, encoded, params["node_type_embeddings"])
        layout = edge_layout(doc, config)
        edges = reduce_edges(construct_edges(doc, nodes, encoded, layout, params, config), params, nodes.size)
        print(edges.mask.sum() // 2, "edges")
"""
import logging
from bisect import bisect_left
from collections import defaultdict
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from sparta.eog.autodiff.tensor import (
    Tensor,
    add,
    concat,
    embedding_lookup,
    interpolate,
    linear,
    matmul,
    scatter_pairs,
    segment_mean,
    softmax,
    stack,
    take,
)
from sparta.eog.config import TrainConfig
from sparta.eog.errors import GraphConstructionError, UnknownEdgeFamilyError
from sparta.eog.models.constants import DISTANCE_BUCKET_BOUNDS, EDGE_FAMILIES, NODE_KINDS
from sparta.eog.models.model import Document, GraphEdgeRecord
from sparta.eog.network.params import ModelParams

logger = logging.getLogger(__name__)

Span = Tuple[int, int]


def distance_bucket(distance: int) -> int:
    """Maps a non-negative distance to one of the buckets 0, 1, 2, 3-4, 5-7, 8-15, 16-31 and 32+.

    Distances 0 and 1 get separate buckets; bucket 0 holds distance 0 only.
    """
    if distance < 0:
        raise ValueError(f"distance must be non-negative, got {distance}")
    return bisect_left(DISTANCE_BUCKET_BOUNDS, distance)


def mention_distance(first: Span, second: Span) -> int:
    """Number of words strictly between two token spans; overlapping spans are at distance 0."""
    (a_start, a_end), (b_start, b_end) = sorted([first, second])
    return max(0, b_start - a_end)


class NodeSet:
    """Node representations of one document and where each node comes from."""

    def __init__(self, features: Tensor, word_parts: Tensor, num_mentions: int, num_entities: int, num_sentences: int) -> None:
        self.features = features
        self.word_parts = word_parts
        self.num_mentions = num_mentions
        self.num_entities = num_entities
        self.num_sentences = num_sentences

    @property
    def size(self) -> int:
        return self.num_mentions + self.num_entities + self.num_sentences

    def entity(self, e: int) -> int:
        return self.num_mentions + e

    def sentence(self, s: int) -> int:
        return self.num_mentions + self.num_entities + s

    def locate(self, node: int) -> Tuple[str, int]:
        """Kind of ``node`` and its mention, entity or sentence index."""
        return locate_node(node, self.num_mentions, self.num_entities)


def locate_node(node: int, num_mentions: int, num_entities: int) -> Tuple[str, int]:
    if node < num_mentions:
        return "M", node
    if node < num_mentions + num_entities:
        return "E", node - num_mentions
    return "S", node - num_mentions - num_entities


def sentence_offsets(doc: Document) -> List[int]:
    """Document position of the first token of every sentence."""
    offsets = [0]
    for sentence in doc.sentences[:-1]:
        offsets.append(offsets[-1] + len(sentence.tokens))
    return offsets


def construct_nodes(doc: Document, encoded: Sequence[Tensor], type_table: Optional[Tensor] = None) -> NodeSet:
    """Averages contextual word vectors into mention, entity and sentence nodes.

    Entity nodes average the word parts of their mentions. When ``type_table`` is given, every node gets the embedding of its kind appended.

    Args:
        doc (Document): A filtered document.
        encoded (Sequence[Tensor]): One (tokens, 2H) matrix per sentence.
        type_table (Optional[Tensor]): (3, t) node type embeddings in M, E, S order.

    Raises:
        GraphConstructionError: If ``encoded`` does not match the sentences or an entity has no mentions.
    """
    if len(encoded) != len(doc.sentences) or any(e.shape[0] != len(s.tokens) for e, s in zip(encoded, doc.sentences)):
        logger.error(f"{doc.doc_id}: encoded sentences do not match the document")
        raise GraphConstructionError(f"{doc.doc_id}: encoded sentences do not match the document")
    empty = [entity.kb_id for entity in doc.entities if not entity.mention_refs]
    if empty:
        logger.error(f"{doc.doc_id}: entities without mentions {empty}")
        raise GraphConstructionError(f"{doc.doc_id}: entities without mentions {empty}")

    words = concat(list(encoded), axis=0)
    offsets = sentence_offsets(doc)
    mention_groups = [[offsets[m.sentence_index] + t for t in range(m.token_start, m.token_end)] for m in doc.mentions]
    sentence_groups = [list(range(offsets[s], offsets[s] + len(sentence.tokens))) for s, sentence in enumerate(doc.sentences)]
    mention_parts = segment_mean(words, mention_groups)
    entity_parts = segment_mean(mention_parts, [entity.mention_refs for entity in doc.entities])
    sentence_parts = segment_mean(words, sentence_groups)
    word_parts = concat([mention_parts, entity_parts, sentence_parts], axis=0)

    features = word_parts
    if type_table is not None:
        kinds = [0] * len(doc.mentions) + [1] * len(doc.entities) + [2] * len(doc.sentences)
        features = concat([word_parts, embedding_lookup(type_table, kinds)], axis=-1)
    return NodeSet(features, word_parts, len(doc.mentions), len(doc.entities), len(doc.sentences))


def argument_attention(words: Tensor, argument: Tensor, span: Span) -> Optional[Tensor]:
    """Softmax of ``words @ argument`` over the words outside ``span``; None when no word is eligible."""
    eligible = np.ones(words.shape[0], dtype=bool)
    eligible[span[0] : span[1]] = False
    if not eligible.any():
        return None
    return softmax(matmul(words, argument), eligible)


def context_weights(words: Tensor, first: Tensor, second: Tensor, first_span: Span, second_span: Span) -> Optional[Tensor]:
    """Average of the two per-argument attention distributions over the words of a sentence."""
    first_weights = argument_attention(words, first, first_span)
    second_weights = argument_attention(words, second, second_span)
    if first_weights is None or second_weights is None:
        return None
    return interpolate(0.5, first_weights, second_weights)


def mm_context(words: Tensor, first: Tensor, second: Tensor, first_span: Span, second_span: Span) -> Tensor:
    """Attention-weighted sum of the sentence's contextual vectors for a mention pair.

    Args:
        words (Tensor): (tokens, 2H) contextual vectors of the sentence holding both mentions.
        first (Tensor): Word part of the first mention node.
        second (Tensor): Word part of the second mention node.
        first_span (Span): Token span of the first mention.
        second_span (Span): Token span of the second mention.

    Returns:
        Tensor: A (2H,) context vector, zero when either argument has no eligible word.
    """
    weights = context_weights(words, first, second, first_span, second_span)
    if weights is None:
        return Tensor.zeros((words.shape[1],))
    return matmul(weights, words)


class EdgeSpec(NamedTuple):
    family: str
    source: int
    target: int
    distance: int = 0


def _family(kind_a: str, kind_b: str) -> str:
    return "".join(sorted((kind_a, kind_b), key=NODE_KINDS.index))


def edge_layout(doc: Document, config: TrainConfig, full: bool = False) -> List[EdgeSpec]:
    """Lists the initial edges of a document with their family and distance.

    Args:
        doc (Document): A filtered document.
        config (TrainConfig): Supplies the edge ablation flags.
        full (bool): Connect every pair of distinct nodes.

    Returns:
        List[EdgeSpec]: Edges with ``source < target`` in node order; MM distances count words, SS distances count sentences.
    """
    nm, ne = len(doc.mentions), len(doc.entities)
    ns = len(doc.sentences)
    offsets = sentence_offsets(doc)

    def doc_span(m: int) -> Span:
        mention = doc.mentions[m]
        return offsets[mention.sentence_index] + mention.token_start, offsets[mention.sentence_index] + mention.token_end

    edges: List[EdgeSpec] = []
    if full:
        for i in range(nm + ne + ns):
            for j in range(i + 1, nm + ne + ns):
                family = _family(locate_node(i, nm, ne)[0], locate_node(j, nm, ne)[0])
                distance = 0
                if family == "MM":
                    distance = mention_distance(doc_span(i), doc_span(j))
                elif family == "SS":
                    distance = j - i
                edges.append(EdgeSpec(family, i, j, distance))
        return edges

    for m1, first in enumerate(doc.mentions):
        if config.edges_mm:
            for m2 in range(m1 + 1, nm):
                second = doc.mentions[m2]
                if second.sentence_index == first.sentence_index:
                    distance = mention_distance((first.token_start, first.token_end), (second.token_start, second.token_end))
                    edges.append(EdgeSpec("MM", m1, m2, distance))
        if config.edges_me:
            edges.append(EdgeSpec("ME", m1, nm + first.entity_ref))
        if config.edges_ms:
            edges.append(EdgeSpec("MS", m1, nm + ne + first.sentence_index))
    if config.edges_es:
        for e in range(ne):
            for s in doc.entity_sentences(e):
                edges.append(EdgeSpec("ES", nm + e, nm + ne + s))
    for s1 in range(ns):
        for s2 in range(s1 + 1, ns):
            if (s2 - s1 == 1 and config.edges_ss_direct) or (s2 - s1 > 1 and config.edges_ss_indirect):
                edges.append(EdgeSpec("SS", nm + ne + s1, nm + ne + s2, s2 - s1))
    return edges


class RawEdges(NamedTuple):
    features: Tensor
    sources: List[int]
    targets: List[int]


def construct_edges(
    doc: Document, nodes: NodeSet, encoded: Sequence[Tensor], layout: Sequence[EdgeSpec], params: ModelParams, config: TrainConfig
) -> Dict[str, RawEdges]:
    """Concatenates the raw feature of every edge, grouped by family.

    ``MM`` features are ``[n_a; n_b; context; distance]``, ``SS`` features ``[n_a; n_b; distance]`` and all others ``[n_a; n_b]``, where context and
    distance parts depend on the ``mm_context`` and ``distances`` flags. Mention pairs from different sentences (fully connected graphs only) get a zero
    context.
    """
    grouped: Dict[str, List[EdgeSpec]] = defaultdict(list)
    for edge in layout:
        grouped[edge.family].append(edge)

    raw: Dict[str, RawEdges] = {}
    for family, edges in grouped.items():
        sources = [edge.source for edge in edges]
        targets = [edge.target for edge in edges]
        parts = [take(nodes.features, sources), take(nodes.features, targets)]
        if family == "MM" and config.mm_context:
            contexts = []
            for edge in edges:
                first, second = doc.mentions[edge.source], doc.mentions[edge.target]
                if first.sentence_index != second.sentence_index:
                    contexts.append(Tensor.zeros((nodes.word_parts.shape[1],)))
                    continue
                contexts.append(
                    mm_context(
                        encoded[first.sentence_index],
                        take(nodes.word_parts, edge.source),
                        take(nodes.word_parts, edge.target),
                        (first.token_start, first.token_end),
                        (second.token_start, second.token_end),
                    )
                )
            parts.append(stack(contexts))
        if family in ("MM", "SS") and config.distances:
            table = params["mention_distance_embeddings" if family == "MM" else "sentence_distance_embeddings"]
            parts.append(embedding_lookup(table, [distance_bucket(edge.distance) for edge in edges]))
        raw[family] = RawEdges(concat(parts, axis=-1), sources, targets)
    return raw


class EdgeMatrix:
    """Symmetric (n, n, d) edge representations with their boolean existence mask."""

    def __init__(self, values: Tensor, mask: NDArray[np.bool_]) -> None:
        self.values = values
        self.mask = mask

    @property
    def size(self) -> int:
        return int(self.mask.shape[0])


def reduce_edges(raw: Dict[str, RawEdges], params: ModelParams, size: int) -> EdgeMatrix:
    """Maps each family's raw features through its own linear layer and places the results in a symmetric matrix.

    Raises:
        UnknownEdgeFamilyError: For a family without a reduction layer.
    """
    values: Optional[Tensor] = None
    mask = np.zeros((size, size), dtype=bool)
    for family, edges in raw.items():
        name = f"reduce_{family}"
        if family not in EDGE_FAMILIES or name not in params:
            logger.error(f"No reduction layer for edge family {family}")
            raise UnknownEdgeFamilyError(f"unknown edge family {family!r}")
        reduced = linear(edges.features, params[name])
        placed = scatter_pairs(reduced, edges.sources, edges.targets, size)
        values = placed if values is None else add(values, placed)
        mask[edges.sources, edges.targets] = True
        mask[edges.targets, edges.sources] = True
    if values is None:
        dimension = next(params[f"reduce_{f}"].shape[0] for f in EDGE_FAMILIES if f"reduce_{f}" in params)
        values = Tensor.zeros((size, size, dimension))
    return EdgeMatrix(values, mask)


def graph_records(doc: Document, layout: Sequence[EdgeSpec]) -> List[GraphEdgeRecord]:
    """Turns an edge layout into the line-delimited graph dump records."""
    nm, ne = len(doc.mentions), len(doc.entities)
    records = []
    for edge in layout:
        source_kind, source_index = locate_node(edge.source, nm, ne)
        target_kind, target_index = locate_node(edge.target, nm, ne)
        records.append(
            GraphEdgeRecord(
                doc_id=doc.doc_id,
                family=edge.family,
                source_kind=source_kind,
                source_index=source_index,
                target_kind=target_kind,
                target_index=target_index,
            )
        )
    return records
