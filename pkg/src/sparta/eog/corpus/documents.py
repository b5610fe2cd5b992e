#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""documents.py: Document-level corpus operations.

This module filters ungrounded mentions, enumerates labelled concept-level entity pairs, merges splits, cuts documents into single-sentence documents and
reads/writes the line-delimited document serialization used between the ``prepare`` and ``train`` stages.

Examples:
    Prepare candidate pairs of a split::

        from sparta.eog.corpus.documents import filter_ungrounded, generate_pairs
        from sparta.eog.models.model import SemanticType

        docs = [filter_ungrounded(doc) for doc in documents]
        pairs = [generate_pairs(doc, SemanticType.CHEMICAL, SemanticType.DISEASE, no_relation=1) for doc in docs]
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from sparta.eog.errors import DuplicateDocumentError
from sparta.eog.models.constants import UNGROUNDED_KB_ID
from sparta.eog.models.model import Document, Entity, EntityPair, Mention, RelationLabel, SemanticType, Sentence

logger = logging.getLogger(__name__)

ExclusionKey = Tuple[str, str, str]


def _restrict(doc: Document, kept_mentions: Sequence[int], doc_id: Optional[str] = None, sentences: Optional[List[Sentence]] = None) -> Document:
    """Rebuilds ``doc`` around a subset of its mentions, dropping entities left without mentions and relations touching them."""
    sentence_map = {s: s for s in range(len(doc.sentences))}
    if sentences is not None:
        sentence_map = {}
        for new_index, sentence in enumerate(sentences):
            sentence_map[sentence.index] = new_index
        sentences = [sentence.model_copy(update={"index": i}) for i, sentence in enumerate(sentences)]

    referenced = {doc.mentions[m].entity_ref for m in kept_mentions}
    entity_map: Dict[int, int] = {old: new for new, old in enumerate(sorted(referenced))}
    entities = [Entity(kb_id=doc.entities[old].kb_id, semantic_type=doc.entities[old].semantic_type, mention_refs=[]) for old in sorted(referenced)]
    mentions: List[Mention] = []
    for old in kept_mentions:
        mention = doc.mentions[old]
        entity = entity_map[mention.entity_ref]
        entities[entity].mention_refs.append(len(mentions))
        mentions.append(mention.model_copy(update={"entity_ref": entity, "sentence_index": sentence_map[mention.sentence_index]}))

    relations = [
        RelationLabel(head_entity=entity_map[r.head_entity], tail_entity=entity_map[r.tail_entity], category=r.category)
        for r in doc.relations
        if r.head_entity in entity_map and r.tail_entity in entity_map
    ]
    return Document(
        doc_id=doc_id or doc.doc_id,
        title=doc.title if sentences is None else "",
        abstract=doc.abstract if sentences is None else "",
        sentences=doc.sentences if sentences is None else sentences,
        mentions=mentions,
        entities=entities,
        relations=relations,
    )


def filter_ungrounded(doc: Document) -> Document:
    """Removes mentions whose KB ID is ``-1``, then entities without mentions and relations referencing them.

    The function is idempotent; a document without ungrounded mentions is returned unchanged.
    """
    kept = [m for m, mention in enumerate(doc.mentions) if doc.entities[mention.entity_ref].kb_id != UNGROUNDED_KB_ID]
    if len(kept) == len(doc.mentions):
        return doc
    logger.debug(f"{doc.doc_id}: removing {len(doc.mentions) - len(kept)} ungrounded mentions")
    return _restrict(doc, kept)


def generate_pairs(doc: Document, head_type: SemanticType, tail_type: SemanticType, no_relation: int) -> List[EntityPair]:
    """Enumerates every ordered (head_type, tail_type) entity pair of a filtered document.

    Args:
        doc (Document): A document after :func:`filter_ungrounded`.
        head_type (SemanticType): Type of the pair head, e.g. Chemical or Gene.
        tail_type (SemanticType): Type of the pair tail, e.g. Disease.
        no_relation (int): Class index used for pairs without a relation label.

    Returns:
        List[EntityPair]: Pairs in (head index, tail index) order.
    """
    labels = {(r.head_entity, r.tail_entity): r.category for r in doc.relations}
    heads = [e for e, entity in enumerate(doc.entities) if entity.semantic_type == head_type]
    tails = [e for e, entity in enumerate(doc.entities) if entity.semantic_type == tail_type]
    return [EntityPair(head=h, tail=t, label=labels.get((h, t), no_relation)) for h in heads for t in tails if h != t]


def merge_train_dev(train: Sequence[Document], dev: Sequence[Document]) -> List[Document]:
    """Concatenates two splits.

    Raises:
        DuplicateDocumentError: If a document id occurs in both splits (or twice in one).
    """
    seen: Set[str] = set()
    for doc in list(train) + list(dev):
        if doc.doc_id in seen:
            logger.error(f"Document {doc.doc_id} occurs more than once in the merged split")
            raise DuplicateDocumentError(f"duplicate document id {doc.doc_id}")
        seen.add(doc.doc_id)
    return list(train) + list(dev)


def split_sentences(doc: Document) -> List[Document]:
    """Turns every sentence holding a mention into a single-sentence document with the mentions and entities it contains."""
    documents = []
    for sentence in doc.sentences:
        kept = [m for m, mention in enumerate(doc.mentions) if mention.sentence_index == sentence.index]
        if kept:
            documents.append(_restrict(doc, kept, doc_id=f"{doc.doc_id}#{sentence.index}", sentences=[sentence]))
    return documents


def save_documents(path: Union[str, Path], documents: Sequence[Document]) -> None:
    """Writes one JSON record per document."""
    with open(path, "w", encoding="utf-8") as f:
        for doc in documents:
            f.write(doc.model_dump_json() + "\n")
    logger.info(f"Wrote {len(documents)} documents to {path}")


def load_documents(path: Union[str, Path]) -> List[Document]:
    with open(path, encoding="utf-8") as f:
        return [Document.model_validate_json(line) for line in f if line.strip()]


def read_exclusions(text: str) -> Set[ExclusionKey]:
    """Reads ``PMID<TAB>head KB ID<TAB>tail KB ID`` lines listing pairs to ignore (hypernym filtering)."""
    exclusions = set()
    for line in text.splitlines():
        fields = line.strip().split("\t")
        if len(fields) >= 3:
            exclusions.add((fields[0], fields[1], fields[2]))
    return exclusions


def assemble_document(
    doc_id: str,
    sentences: Sequence[Sequence[str]],
    mentions: Sequence[Tuple[int, int, int, str, SemanticType]],
    relations: Sequence[Tuple[str, str, int]] = (),
) -> Document:
    """Builds a document from tokenized sentences and mention tuples.

    Sentences are joined by single spaces to form the text. Entities are created in order of first mention.

    Args:
        doc_id (str): Document identifier.
        sentences (Sequence[Sequence[str]]): Tokens of every sentence.
        mentions (Sequence[Tuple[int, int, int, str, SemanticType]]): (sentence, token start, token end, KB ID, type) per mention.
        relations (Sequence[Tuple[str, str, int]]): (head KB ID, tail KB ID, class) per related pair.
    """
    built: List[Sentence] = []
    start = 0
    for index, tokens in enumerate(sentences):
        offsets = []
        position = start
        for token in tokens:
            offsets.append((position, position + len(token)))
            position += len(token) + 1
        built.append(Sentence(index=index, tokens=list(tokens), char_start=start, char_end=position - 1, token_offsets=offsets))
        start = position

    entity_index: Dict[str, int] = {}
    entities: List[Entity] = []
    built_mentions: List[Mention] = []
    for sentence, token_start, token_end, kb_id, semantic_type in mentions:
        if kb_id not in entity_index:
            entity_index[kb_id] = len(entities)
            entities.append(Entity(kb_id=kb_id, semantic_type=semantic_type, mention_refs=[]))
        entities[entity_index[kb_id]].mention_refs.append(len(built_mentions))
        offsets = built[sentence].token_offsets
        built_mentions.append(
            Mention(
                sentence_index=sentence,
                token_start=token_start,
                token_end=token_end,
                entity_ref=entity_index[kb_id],
                semantic_type=semantic_type,
                surface=" ".join(sentences[sentence][token_start:token_end]),
                char_start=offsets[token_start][0],
                char_end=offsets[token_end - 1][1],
            )
        )
    labels = [RelationLabel(head_entity=entity_index[h], tail_entity=entity_index[t], category=c) for h, t, c in relations]
    text = " ".join(" ".join(tokens) for tokens in sentences)
    return Document(doc_id=doc_id, title=text, sentences=built, mentions=built_mentions, entities=entities, relations=labels)
