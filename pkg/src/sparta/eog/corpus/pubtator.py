#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""pubtator.py: Reading and writing PubTator annotated abstracts.

This module parses the PubTator layout (title line, abstract line, tab-separated annotation lines and relation lines, blank line between documents) into
:class:`~sparta.eog.models.model.Document` objects. Sentences come either from an external pre-tokenized file or from a naive fallback tokenizer, and
annotation offsets are mapped to the smallest covering token span.

Examples:
    Parse a PubTator file::

        from sparta.eog.corpus.pubtator import parse_pubtator

        with open("CDR_TrainingSet.PubTator.txt") as f:
            documents = parse_pubtator(f.read())
        print(len(documents))

    Use externally tokenized sentences::

        from sparta.eog.corpus.pubtator import PubTatorReader, read_tokenized

        with open("train.sentences.txt") as f:
            tokenized = read_tokenized(f.read())
        reader = PubTatorReader(relation_types=["CID"], tokenized=tokenized)
        documents = reader.read(text)
        print(reader.dropped_relations)
"""
import logging
import re
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Tuple

from sparta.eog.errors import DataError, PubTatorFormatError
from sparta.eog.models.constants import UNGROUNDED_KB_ID
from sparta.eog.models.model import Document, Entity, Mention, RelationLabel, SemanticType, Sentence

logger = logging.getLogger(__name__)

_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+(?=[A-Z0-9])")
_TITLE = re.compile(r"^([^|\t]+)\|t\|(.*)$")
_ABSTRACT = re.compile(r"^([^|\t]+)\|a\|(.*)$")

Span = Tuple[int, int]


def _split_chunk(chunk: str, offset: int) -> List[Span]:
    i, j = 0, len(chunk)
    while i < j and not chunk[i].isalnum():
        i += 1
    while j > i and not chunk[j - 1].isalnum():
        j -= 1
    spans = [(offset + k, offset + k + 1) for k in range(i)]
    if i < j:
        spans.append((offset + i, offset + j))
    spans.extend((offset + k, offset + k + 1) for k in range(j, len(chunk)))
    return spans


def _make_sentences(raw: str, token_spans: Sequence[List[Span]]) -> List[Sentence]:
    sentences = []
    for spans in token_spans:
        if not spans:
            continue
        sentences.append(
            Sentence(
                index=len(sentences),
                tokens=[raw[s:e] for s, e in spans],
                char_start=spans[0][0],
                char_end=spans[-1][1],
                token_offsets=list(spans),
            )
        )
    return sentences


def fallback_tokenize(raw: str) -> List[Sentence]:
    """Splits text into sentences and tokens with a deterministic rule.

    Sentences end at ``.``, ``!`` or ``?`` followed by whitespace and an uppercase letter or digit. Tokens are whitespace-separated chunks with leading and
    trailing punctuation detached character by character.

    Args:
        raw (str): The document text.

    Returns:
        List[Sentence]: Sentences with token character offsets.
    """
    bounds = []
    start = 0
    for match in _SENTENCE_BREAK.finditer(raw):
        bounds.append((start, match.start()))
        start = match.end()
    bounds.append((start, len(raw)))

    token_spans = []
    for s, e in bounds:
        spans: List[Span] = []
        for chunk in re.finditer(r"\S+", raw[s:e]):
            spans.extend(_split_chunk(chunk.group(), s + chunk.start()))
        token_spans.append(spans)
    return _make_sentences(raw, token_spans)


def align_tokens(raw: str, tokenized: Sequence[Sequence[str]]) -> List[Sentence]:
    """Locates externally produced tokens in the raw text, left to right.

    Raises:
        DataError: If some token cannot be found after the previous one.
    """
    cursor = 0
    token_spans = []
    for sentence in tokenized:
        spans = []
        for token in sentence:
            position = raw.find(token, cursor)
            if position < 0:
                raise DataError(f"token {token!r} not found in text after offset {cursor}")
            spans.append((position, position + len(token)))
            cursor = position + len(token)
        token_spans.append(spans)
    return _make_sentences(raw, token_spans)


def read_tokenized(text: str) -> Dict[str, List[List[str]]]:
    """Reads pre-tokenized sentences: a document id line, one sentence per line, blank line between documents."""
    documents: Dict[str, List[List[str]]] = {}
    doc_id: Optional[str] = None
    for line in text.splitlines():
        if not line.strip():
            doc_id = None
            continue
        if doc_id is None:
            doc_id = line.strip()
            documents[doc_id] = []
        else:
            documents[doc_id].append(line.split())
    return documents


def locate_span(sentences: Sequence[Sentence], start: int, end: int) -> Optional[Tuple[int, int, int]]:
    """Maps a character span to ``(sentence, token_start, token_end)``, clipped to the sentence holding ``start``.

    Returns:
        Optional[Tuple[int, int, int]]: ``None`` when no token overlaps the span.
    """
    for sentence in sentences:
        if sentence.char_end <= start:
            continue
        covered = [k for k, (s, e) in enumerate(sentence.token_offsets) if e > start and s < end]
        if not covered:
            return None
        return sentence.index, covered[0], covered[-1] + 1
    return None


class PubTatorReader:
    """Parses PubTator text and counts what had to be dropped along the way."""

    def __init__(self, relation_types: Sequence[str] = ("CID",), tokenized: Optional[Dict[str, List[List[str]]]] = None) -> None:
        self.relation_types = list(relation_types)
        self.tokenized = tokenized or {}
        self.dropped_relations = 0
        self.dropped_annotations = 0

    def read(self, text: str) -> List[Document]:
        """Parses every document block of ``text``.

        Raises:
            PubTatorFormatError: On a line matching none of the PubTator layouts, with its 1-based line number.
        """
        documents: List[Document] = []
        block: List[Tuple[int, str]] = []
        for number, line in enumerate(text.splitlines(), start=1):
            if line.strip():
                block.append((number, line.rstrip("\n")))
            elif block:
                documents.append(self._read_block(block))
                block = []
        if block:
            documents.append(self._read_block(block))
        if self.dropped_relations:
            logger.warning(f"Dropped {self.dropped_relations} relations referencing unknown KB IDs")
        return documents

    def _read_block(self, block: List[Tuple[int, str]]) -> Document:
        first_number, first_line = block[0]
        title_match = _TITLE.match(first_line)
        if not title_match:
            logger.error(f"Expected a title line at line {first_number}")
            raise PubTatorFormatError(first_number, "expected 'PMID|t|title'")
        pmid, title = title_match.group(1), title_match.group(2)
        abstract = ""
        annotations: List[Tuple[int, List[str]]] = []
        relations: List[Tuple[int, List[str]]] = []

        for number, line in block[1:]:
            abstract_match = _ABSTRACT.match(line)
            if abstract_match and abstract_match.group(1) == pmid:
                abstract = abstract_match.group(2)
                continue
            fields = line.split("\t")
            if fields[0] != pmid:
                raise PubTatorFormatError(number, f"line does not belong to document {pmid}")
            if len(fields) in (6, 7) and fields[1].isdigit() and fields[2].isdigit():
                annotations.append((number, fields))
            elif len(fields) == 4:
                relations.append((number, fields))
            else:
                logger.error(f"Malformed PubTator line {number}: {line!r}")
                raise PubTatorFormatError(number, f"malformed line {line!r}")

        raw = f"{title} {abstract}" if abstract else title
        if pmid in self.tokenized:
            sentences = align_tokens(raw, self.tokenized[pmid])
        else:
            sentences = fallback_tokenize(raw)
        return self._build(pmid, title, abstract, sentences, annotations, relations)

    def _build(
        self,
        pmid: str,
        title: str,
        abstract: str,
        sentences: List[Sentence],
        annotations: List[Tuple[int, List[str]]],
        relations: List[Tuple[int, List[str]]],
    ) -> Document:
        mentions: List[Mention] = []
        entities: List[Entity] = []
        entity_index: Dict[str, int] = {}

        for number, fields in annotations:
            start, end, surface, type_name, kb_field = int(fields[1]), int(fields[2]), fields[3], fields[4], fields[5]
            try:
                semantic_type = SemanticType(type_name)
            except ValueError:
                logger.debug(f"{pmid}: skipping annotation of type {type_name} at line {number}")
                self.dropped_annotations += 1
                continue
            location = locate_span(sentences, start, end)
            if location is None:
                logger.warning(f"{pmid}: annotation at line {number} covers no token")
                self.dropped_annotations += 1
                continue
            sentence_index, token_start, token_end = location
            for kb_id in kb_field.split("|"):
                if kb_id in entity_index and entities[entity_index[kb_id]].semantic_type != semantic_type:
                    if kb_id != UNGROUNDED_KB_ID:
                        logger.warning(f"{pmid}: {kb_id} annotated with conflicting types at line {number}")
                    self.dropped_annotations += 1
                    continue
                if kb_id not in entity_index:
                    entity_index[kb_id] = len(entities)
                    entities.append(Entity(kb_id=kb_id, semantic_type=semantic_type, mention_refs=[]))
                entity = entity_index[kb_id]
                entities[entity].mention_refs.append(len(mentions))
                mentions.append(
                    Mention(
                        sentence_index=sentence_index,
                        token_start=token_start,
                        token_end=token_end,
                        entity_ref=entity,
                        semantic_type=semantic_type,
                        surface=surface,
                        char_start=start,
                        char_end=end,
                    )
                )

        labels: List[RelationLabel] = []
        seen = set()
        for number, fields in relations:
            relation_type, head_id, tail_id = fields[1], fields[2], fields[3]
            if relation_type not in self.relation_types:
                logger.debug(f"{pmid}: ignoring relation type {relation_type} at line {number}")
                continue
            if head_id not in entity_index or tail_id not in entity_index:
                self.dropped_relations += 1
                continue
            label = RelationLabel(head_entity=entity_index[head_id], tail_entity=entity_index[tail_id], category=self.relation_types.index(relation_type))
            key = (label.head_entity, label.tail_entity)
            if key not in seen and label.head_entity != label.tail_entity:
                seen.add(key)
                labels.append(label)

        logger.debug(f"{pmid}: {len(sentences)} sentences, {len(mentions)} mentions, {len(entities)} entities, {len(labels)} relations")
        return Document(doc_id=pmid, title=title, abstract=abstract, sentences=sentences, mentions=mentions, entities=entities, relations=labels)


def parse_pubtator(text: str, relation_types: Sequence[str] = ("CID",), tokenized: Optional[Dict[str, List[List[str]]]] = None) -> List[Document]:
    """Parses PubTator text into documents.

    Args:
        text (str): PubTator content, possibly empty.
        relation_types (Sequence[str]): Relation tags to keep; the position of a tag is its class index.
        tokenized (Optional[Dict[str, List[List[str]]]]): Pre-tokenized sentences by document id; other documents use :func:`fallback_tokenize`.

    Returns:
        List[Document]: Documents in file order.

    Raises:
        PubTatorFormatError: On a malformed line.
    """
    return PubTatorReader(relation_types, tokenized).read(text)


def _annotation_key(mention: Mention) -> Tuple[int, int, str, str]:
    return mention.char_start, mention.char_end, mention.surface, mention.semantic_type.value


def write_pubtator(documents: Sequence[Document], relation_types: Sequence[str] = ("CID",)) -> str:
    """Serializes documents back to PubTator text; consecutive mentions sharing a span become one composite line."""
    lines: List[str] = []
    for doc in documents:
        lines.append(f"{doc.doc_id}|t|{doc.title}")
        lines.append(f"{doc.doc_id}|a|{doc.abstract}")
        for (start, end, surface, semantic_type), group in groupby(doc.mentions, key=_annotation_key):
            ids = "|".join(doc.entities[m.entity_ref].kb_id for m in group)
            lines.append(f"{doc.doc_id}\t{start}\t{end}\t{surface}\t{semantic_type}\t{ids}")
        for relation in doc.relations:
            head_id = doc.entities[relation.head_entity].kb_id
            tail_id = doc.entities[relation.tail_entity].kb_id
            lines.append(f"{doc.doc_id}\t{relation_types[relation.category]}\t{head_id}\t{tail_id}")
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")
