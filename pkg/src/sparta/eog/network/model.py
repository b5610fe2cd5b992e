#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""model.py: The document-level relation extraction pipeline and its variants.

A forward pass encodes every sentence, builds the node set and the initial edge matrix, runs edge inference and classifies the entity-to-entity edge of
each candidate pair. The variants change one stage each:

* ``EoG`` the pipeline as described,
* ``Full`` connects every node pair before inference, entity pairs included,
* ``NoInf`` skips the graph and classifies the concatenated entity nodes through the entity-pair reduction layer,
* ``Sent`` trains on single-sentence documents and merges the sentence-level decisions of a concept pair at prediction time.

Examples:
    Predict the pairs of a document::

        import numpy as np
        from sparta.eog.network.model import EoGModel

        model = EoGModel.initialize(config, vocab, np.random.default_rng(config.seed))
        for prediction in model.predict(doc):
            print(prediction.head_id, prediction.tail_id, prediction.predicted)
"""
import logging
from collections import Counter
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from sparta.eog.autodiff.tensor import Array, Tensor, concat, gather_pairs, linear, no_grad, take
from sparta.eog.config import TrainConfig
from sparta.eog.corpus.documents import ExclusionKey, generate_pairs, split_sentences
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.evaluation.metrics import pair_locality
from sparta.eog.models.model import Document, EntityPair, PairPrediction
from sparta.eog.network.classifier import classify_pair, decide, merge_instances
from sparta.eog.network.encoder import encode_sentence
from sparta.eog.network.graph import EdgeMatrix, NodeSet, construct_edges, construct_nodes, edge_layout, reduce_edges
from sparta.eog.network.inference import InferenceParams, run_inference
from sparta.eog.network.params import ModelParams

logger = logging.getLogger(__name__)

Example = Tuple[Document, List[EntityPair]]


class EoGModel:
    """Parameters plus the configuration and vocabulary needed to run them on documents."""

    def __init__(self, config: TrainConfig, params: ModelParams, vocab: Vocabulary) -> None:
        self.config = config
        self.params = params
        self.vocab = vocab

    @classmethod
    def initialize(cls, config: TrainConfig, vocab: Vocabulary, rng: np.random.Generator, embeddings: Optional[Array] = None) -> "EoGModel":
        return cls(config, ModelParams.initialize(config, len(vocab), rng, embeddings), vocab)

    def encode(self, doc: Document, train_mode: bool, rng: np.random.Generator) -> List[Tensor]:
        return [
            encode_sentence(self.params, self.vocab.encode(sentence.tokens), train_mode, rng, self.config.dropout_word) for sentence in doc.sentences
        ]

    def build_graph(self, doc: Document, train_mode: bool, rng: np.random.Generator) -> Tuple[NodeSet, EdgeMatrix]:
        """Node set and initial edge matrix of ``doc``, before inference."""
        encoded = self.encode(doc, train_mode, rng)
        type_table = self.params["node_type_embeddings"] if self.config.node_types else None
        nodes = construct_nodes(doc, encoded, type_table)
        layout = edge_layout(doc, self.config, full=self.config.variant == "Full")
        edges = reduce_edges(construct_edges(doc, nodes, encoded, layout, self.params, self.config), self.params, nodes.size)
        return nodes, edges

    def pair_representations(self, doc: Document, pairs: Sequence[EntityPair], train_mode: bool, rng: np.random.Generator) -> Tensor:
        """(len(pairs), edge_dimension) representations of the candidate pairs."""
        if self.config.variant == "NoInf":
            encoded = self.encode(doc, train_mode, rng)
            type_table = self.params["node_type_embeddings"] if self.config.node_types else None
            nodes = construct_nodes(doc, encoded, type_table)
            heads = take(nodes.features, [nodes.entity(pair.head) for pair in pairs])
            tails = take(nodes.features, [nodes.entity(pair.tail) for pair in pairs])
            return linear(concat([heads, tails], axis=-1), self.params["reduce_EE"])

        nodes, edges = self.build_graph(doc, train_mode, rng)
        edges = run_inference(edges, InferenceParams(self.params["bilinear"], self.config.beta, self.config.iterations))
        head_nodes = [nodes.entity(pair.head) for pair in pairs]
        tail_nodes = [nodes.entity(pair.tail) for pair in pairs]
        missing = sum(1 for h, t in zip(head_nodes, tail_nodes) if not edges.mask[h, t])
        if missing:
            logger.debug(f"{doc.doc_id}: {missing} of {len(pairs)} pairs have no entity edge after inference")
        return gather_pairs(edges.values, head_nodes, tail_nodes)

    def forward(self, doc: Document, pairs: Sequence[EntityPair], train_mode: bool, rng: np.random.Generator) -> Tensor:
        """Class probabilities, one row per pair."""
        representations = self.pair_representations(doc, pairs, train_mode, rng)
        return classify_pair(
            representations, self.params["classifier_weight"], self.params["classifier_bias"], rng, self.config.dropout_classification, train_mode
        )

    def _probabilities(self, doc: Document, pairs: Sequence[EntityPair]) -> Array:
        with no_grad():
            return self.forward(doc, pairs, train_mode=False, rng=np.random.default_rng(0)).numpy()

    def predict(self, doc: Document) -> List[PairPrediction]:
        """One prediction per candidate pair of a filtered document, in :func:`generate_pairs` order."""
        config = self.config
        pairs = generate_pairs(doc, config.head_type, config.tail_type, config.no_relation)
        if not pairs:
            return []
        if config.variant == "Sent":
            instances = []
            for sentence_doc in split_sentences(doc):
                sentence_pairs = generate_pairs(sentence_doc, config.head_type, config.tail_type, config.no_relation)
                if not sentence_pairs:
                    continue
                probabilities = self._probabilities(sentence_doc, sentence_pairs)
                for pair, probs in zip(sentence_pairs, probabilities):
                    instances.append(((sentence_doc.entities[pair.head].kb_id, sentence_doc.entities[pair.tail].kb_id), probs))
            merged = merge_instances(instances, config.no_relation)
            decisions = [merged.get((doc.entities[p.head].kb_id, doc.entities[p.tail].kb_id), config.no_relation) for p in pairs]
        else:
            decisions = [int(label) for label in decide(self._probabilities(doc, pairs))]

        predictions = []
        for pair, predicted in zip(pairs, decisions):
            intra, distance = pair_locality(doc, pair.head, pair.tail)
            predictions.append(
                PairPrediction(
                    doc_id=doc.doc_id,
                    head_id=doc.entities[pair.head].kb_id,
                    tail_id=doc.entities[pair.tail].kb_id,
                    predicted=predicted,
                    gold=pair.label,
                    intra=intra,
                    distance=distance,
                )
            )
        return predictions

    def predict_all(self, documents: Sequence[Document]) -> List[PairPrediction]:
        predictions: List[PairPrediction] = []
        for doc in documents:
            predictions.extend(self.predict(doc))
        return predictions


def apply_variant(config: TrainConfig, documents: Sequence[Document]) -> List[Document]:
    """Training documents of a variant: single-sentence documents for ``Sent``, the documents themselves otherwise."""
    if config.variant != "Sent":
        return list(documents)
    sentence_docs = [sentence_doc for doc in documents for sentence_doc in split_sentences(doc)]
    logger.info(f"Split {len(documents)} documents into {len(sentence_docs)} sentence documents")
    return sentence_docs


def training_examples(config: TrainConfig, documents: Sequence[Document], exclusions: Optional[Set[ExclusionKey]] = None) -> List[Example]:
    """Documents paired with their labelled candidate pairs; documents without pairs are skipped.

    Excluded pairs are dropped only when ``config.exclude_in_training`` is set. Sentence documents are matched on the PMID before the ``#`` suffix.
    """
    examples: List[Example] = []
    for doc in apply_variant(config, documents):
        pairs = generate_pairs(doc, config.head_type, config.tail_type, config.no_relation)
        if exclusions and config.exclude_in_training:
            pmid = doc.doc_id.split("#", 1)[0]
            pairs = [p for p in pairs if (pmid, doc.entities[p.head].kb_id, doc.entities[p.tail].kb_id) not in exclusions]
        if pairs:
            examples.append((doc, pairs))
    labels = Counter(pair.label for _, pairs in examples for pair in pairs)
    logger.info(f"{len(examples)} training documents, pair labels {dict(sorted(labels.items()))}")
    return examples
