#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""model.py: Data models of annotated documents, predictions and reports.

This module defines pydantic models for the annotated document (sentences, mentions, entities, relation labels), candidate entity pairs, pair predictions,
evaluation metrics, corpus statistics, training log records, graph dumps and sweep results. Documents validate their structural invariants on construction.

Examples:
    Define a one-sentence document::

        from sparta.eog.models.model import Document, Entity, Mention, SemanticType, Sentence

        doc = Document(
            doc_id="1",
            title="Cocaine causes seizures .",
            abstract="",
            sentences=[Sentence(index=0, tokens=["Cocaine", "causes", "seizures", "."], char_start=0, char_end=25)],
            mentions=[
                Mention(sentence_index=0, token_start=0, token_end=1, entity_ref=0, semantic_type=SemanticType.CHEMICAL, surface="Cocaine"),
                Mention(sentence_index=0, token_start=2, token_end=3, entity_ref=1, semantic_type=SemanticType.DISEASE, surface="seizures"),
            ],
            entities=[
                Entity(kb_id="D003042", semantic_type=SemanticType.CHEMICAL, mention_refs=[0]),
                Entity(kb_id="D012640", semantic_type=SemanticType.DISEASE, mention_refs=[1]),
            ],
        )
"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, computed_field, model_validator


class SemanticType(str, Enum):
    CHEMICAL = "Chemical"
    DISEASE = "Disease"
    GENE = "Gene"


class Sentence(BaseModel):
    index: int = Field(..., ge=0, description="Position of the sentence in the document")
    tokens: List[str] = Field(..., min_length=1, description="Tokens of the sentence")
    char_start: int = Field(..., ge=0, description="Offset of the first character in the document text")
    char_end: int = Field(..., description="Offset one past the last character in the document text")
    token_offsets: List[Tuple[int, int]] = Field(default_factory=list, description="Character span of every token; empty when unknown")


class Mention(BaseModel):
    sentence_index: int = Field(..., ge=0, description="Sentence the mention lives in")
    token_start: int = Field(..., ge=0, description="First token of the mention")
    token_end: int = Field(..., description="Token index one past the mention")
    entity_ref: int = Field(..., ge=0, description="Index of the entity this mention is an instance of")
    semantic_type: SemanticType = Field(..., description="Semantic type, equal to the entity's type")
    surface: str = Field(..., description="Surface string as annotated")
    char_start: int = Field(0, ge=0, description="Annotated start offset in the document text")
    char_end: int = Field(0, ge=0, description="Annotated end offset in the document text")

    @model_validator(mode="after")
    def _check_span(self) -> "Mention":
        if self.token_start >= self.token_end:
            raise ValueError(f"mention {self.surface!r} has an empty token span [{self.token_start}, {self.token_end})")
        return self


class Entity(BaseModel):
    kb_id: str = Field(..., description="Knowledge-base identifier of the concept")
    semantic_type: SemanticType = Field(..., description="Semantic type of the concept")
    mention_refs: List[int] = Field(..., description="Indices of the mentions of this entity")


class RelationLabel(BaseModel):
    head_entity: int = Field(..., ge=0, description="Entity index of the relation head (Chemical or Gene)")
    tail_entity: int = Field(..., ge=0, description="Entity index of the relation tail (Disease)")
    category: int = Field(..., ge=0, description="Relation class index")


class Document(BaseModel):
    doc_id: str = Field(..., description="Document identifier, the PMID for PubMed abstracts")
    title: str = Field("", description="Title text")
    abstract: str = Field("", description="Abstract text")
    sentences: List[Sentence] = Field(default_factory=list)
    mentions: List[Mention] = Field(default_factory=list)
    entities: List[Entity] = Field(default_factory=list)
    relations: List[RelationLabel] = Field(default_factory=list)

    @property
    def text(self) -> str:
        """Title and abstract joined by a single space, the text PubTator offsets address."""
        return f"{self.title} {self.abstract}" if self.abstract else self.title

    @model_validator(mode="after")
    def _check_structure(self) -> "Document":
        previous_end = -1
        for position, sentence in enumerate(self.sentences):
            if sentence.index != position:
                raise ValueError(f"{self.doc_id}: sentence {position} carries index {sentence.index}")
            if sentence.char_start < previous_end or sentence.char_end < sentence.char_start:
                raise ValueError(f"{self.doc_id}: sentence {position} overlaps its predecessor")
            previous_end = sentence.char_end

        for m, mention in enumerate(self.mentions):
            if mention.sentence_index >= len(self.sentences):
                raise ValueError(f"{self.doc_id}: mention {m} points to missing sentence {mention.sentence_index}")
            if mention.token_end > len(self.sentences[mention.sentence_index].tokens):
                raise ValueError(f"{self.doc_id}: mention {m} exceeds its sentence")
            if mention.entity_ref >= len(self.entities):
                raise ValueError(f"{self.doc_id}: mention {m} points to missing entity {mention.entity_ref}")
            entity = self.entities[mention.entity_ref]
            if m not in entity.mention_refs:
                raise ValueError(f"{self.doc_id}: entity {entity.kb_id} does not list mention {m}")
            if entity.semantic_type != mention.semantic_type:
                raise ValueError(f"{self.doc_id}: mention {m} type differs from entity {entity.kb_id}")

        seen_ids = set()
        for e, entity in enumerate(self.entities):
            if not entity.mention_refs:
                raise ValueError(f"{self.doc_id}: entity {entity.kb_id} has no mentions")
            if entity.kb_id in seen_ids:
                raise ValueError(f"{self.doc_id}: duplicate entity {entity.kb_id}")
            seen_ids.add(entity.kb_id)
            for m in entity.mention_refs:
                if m >= len(self.mentions) or self.mentions[m].entity_ref != e:
                    raise ValueError(f"{self.doc_id}: entity {entity.kb_id} lists foreign mention {m}")

        for relation in self.relations:
            if relation.head_entity >= len(self.entities) or relation.tail_entity >= len(self.entities):
                raise ValueError(f"{self.doc_id}: relation points to a missing entity")
            if relation.head_entity == relation.tail_entity:
                raise ValueError(f"{self.doc_id}: relation connects entity {relation.head_entity} to itself")
        return self

    def entity_sentences(self, entity: int) -> List[int]:
        """Sorted indices of the sentences holding at least one mention of ``entity``."""
        return sorted({self.mentions[m].sentence_index for m in self.entities[entity].mention_refs})


class EntityPair(BaseModel):
    head: int = Field(..., description="Head entity index")
    tail: int = Field(..., description="Tail entity index")
    label: int = Field(..., description="Gold class; the last class is no-relation")


class PairPrediction(BaseModel):
    doc_id: str
    head_id: str = Field(..., description="KB identifier of the head entity")
    tail_id: str = Field(..., description="KB identifier of the tail entity")
    predicted: int
    gold: int
    intra: bool = Field(..., description="Whether some sentence mentions both entities")
    distance: int = Field(..., ge=0, description="Minimum sentence distance between any head and tail mentions")

    @model_validator(mode="after")
    def _check_locality(self) -> "PairPrediction":
        if self.intra != (self.distance == 0):
            raise ValueError(f"{self.doc_id}: intra flag {self.intra} inconsistent with distance {self.distance}")
        return self


class PRF(BaseModel):
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @computed_field  # type: ignore[prop-decorator]
    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


class Metrics(BaseModel):
    overall: PRF = Field(default_factory=PRF)
    intra: PRF = Field(default_factory=PRF)
    inter: PRF = Field(default_factory=PRF)


class DistanceScore(BaseModel):
    distance: int
    counts: PRF


class CorpusStatistics(BaseModel):
    documents: int = 0
    positive_pairs: int = 0
    positive_intra: int = 0
    positive_inter: int = 0
    negative_pairs: int = 0
    entities: Dict[str, int] = Field(default_factory=dict, description="Entity count per semantic type")
    mentions: Dict[str, int] = Field(default_factory=dict, description="Mention count per semantic type")


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    dev: Optional[Metrics] = None
    seconds: float = Field(0.0, description="Wall-clock duration; excluded from reproducibility comparisons")


class GraphEdgeRecord(BaseModel):
    doc_id: str
    family: str
    source_kind: str
    source_index: int = Field(..., description="Mention, entity or sentence index of the source node")
    target_kind: str
    target_index: int
    exists: bool = True


class SweepResult(BaseModel):
    point: int
    label: str
    overrides: Dict[str, object] = Field(default_factory=dict)
    metrics: Optional[Metrics] = None
    error: Optional[str] = None
