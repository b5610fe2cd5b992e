from pathlib import Path

import numpy as np
import pytest

from sparta.eog.corpus.documents import (
    assemble_document,
    filter_ungrounded,
    generate_pairs,
    load_documents,
    merge_train_dev,
    read_exclusions,
    save_documents,
    split_sentences,
)
from sparta.eog.corpus.pubtator import PubTatorReader, fallback_tokenize, parse_pubtator, read_tokenized, write_pubtator
from sparta.eog.corpus.vocabulary import Vocabulary, load_embeddings
from sparta.eog.errors import DuplicateDocumentError, EmbeddingFormatError, PubTatorFormatError
from sparta.eog.models.model import SemanticType

CHEMICAL, DISEASE = SemanticType.CHEMICAL, SemanticType.DISEASE

PUBTATOR = "\n".join(
    [
        "100|t|Aspirin causes headache.",
        "100|a|Nausea was seen. Aspirin again.",
        "100\t0\t7\tAspirin\tChemical\tD001",
        "100\t15\t23\theadache\tDisease\tD002",
        "100\t25\t31\tNausea\tDisease\tD003|D004",
        "100\t42\t49\tAspirin\tChemical\tD001",
        "100\tCID\tD001\tD002",
        "100\tCID\tD001\tD999",
        "",
        "200|t|Lithium and tremor.",
        "200|a|",
        "200\t0\t7\tLithium\tChemical\t-1",
        "200\t12\t18\ttremor\tDisease\tD005",
        "",
    ]
)


def test_parse_pubtator_documents() -> None:
    reader = PubTatorReader(relation_types=["CID"])
    documents = reader.read(PUBTATOR)
    assert [doc.doc_id for doc in documents] == ["100", "200"]
    doc = documents[0]
    assert len(doc.sentences) == 3
    assert doc.sentences[0].tokens == ["Aspirin", "causes", "headache", "."]
    assert [e.kb_id for e in doc.entities] == ["D001", "D002", "D003", "D004"]
    assert len(doc.mentions) == 5
    assert doc.entities[0].mention_refs == [0, 4]
    assert doc.mentions[4].sentence_index == 2
    assert len(doc.relations) == 1
    assert (doc.relations[0].head_entity, doc.relations[0].tail_entity, doc.relations[0].category) == (0, 1, 0)
    assert reader.dropped_relations == 1


def test_composite_ids_share_the_span() -> None:
    doc = parse_pubtator(PUBTATOR)[0]
    first, second = doc.mentions[2], doc.mentions[3]
    assert (first.sentence_index, first.token_start, first.token_end) == (1, 0, 1)
    assert (second.sentence_index, second.token_start, second.token_end) == (1, 0, 1)
    assert doc.entities[first.entity_ref].kb_id == "D003"
    assert doc.entities[second.entity_ref].kb_id == "D004"


def test_filter_ungrounded_is_idempotent() -> None:
    doc = parse_pubtator(PUBTATOR)[1]
    assert [e.kb_id for e in doc.entities] == ["-1", "D005"]
    filtered = filter_ungrounded(doc)
    assert [e.kb_id for e in filtered.entities] == ["D005"]
    assert filtered.entities[0].mention_refs == [0]
    assert filtered.mentions[0].entity_ref == 0
    assert filter_ungrounded(filtered) == filtered


def test_write_then_parse_keeps_documents() -> None:
    documents = parse_pubtator(PUBTATOR)
    assert parse_pubtator(write_pubtator(documents)) == documents


def test_parse_empty_text() -> None:
    assert parse_pubtator("") == []


def test_format_error_reports_line_number() -> None:
    text = "100|t|Title here.\n100|a|Abstract.\n100\tbroken\n"
    with pytest.raises(PubTatorFormatError) as info:
        parse_pubtator(text)
    assert info.value.line_number == 3


def test_missing_title_is_a_format_error() -> None:
    with pytest.raises(PubTatorFormatError) as info:
        parse_pubtator("\n\nnot a title\n")
    assert info.value.line_number == 3


def test_fallback_tokenize_detaches_punctuation() -> None:
    sentences = fallback_tokenize("Dose (10 mg) was given. It worked!")
    assert [s.tokens for s in sentences] == [["Dose", "(", "10", "mg", ")", "was", "given", "."], ["It", "worked", "!"]]
    assert sentences[1].char_start == 24


def test_fallback_tokenize_splits_after_abbreviations() -> None:
    assert [s.tokens for s in fallback_tokenize("Mr. X")] == [["Mr", "."], ["X"]]
    assert len(fallback_tokenize("A b. C d.")) == 2


def test_tokenized_sentences_override_fallback() -> None:
    tokenized = read_tokenized("100\nAspirin causes headache .\nNausea was seen .\nAspirin again .\n")
    documents = parse_pubtator(PUBTATOR, tokenized=tokenized)
    assert len(documents[0].sentences) == 3
    assert documents[0].sentences[1].tokens == ["Nausea", "was", "seen", "."]


def test_generate_pairs_orders_heads_then_tails() -> None:
    doc = parse_pubtator(PUBTATOR)[0]
    pairs = generate_pairs(doc, CHEMICAL, DISEASE, no_relation=1)
    assert [(p.head, p.tail, p.label) for p in pairs] == [(0, 1, 0), (0, 2, 1), (0, 3, 1)]


def test_split_sentences_keeps_local_mentions() -> None:
    doc = assemble_document(
        "7",
        [["a", "b"], ["c"], ["d", "e"]],
        [(0, 0, 1, "X", CHEMICAL), (0, 1, 2, "Y", DISEASE), (2, 0, 1, "X", CHEMICAL)],
        [("X", "Y", 0)],
    )
    parts = split_sentences(doc)
    assert [p.doc_id for p in parts] == ["7#0", "7#2"]
    assert len(parts[0].relations) == 1
    assert [e.kb_id for e in parts[1].entities] == ["X"]
    assert parts[1].relations == []
    assert parts[1].mentions[0].sentence_index == 0


def test_merge_train_dev_rejects_duplicates() -> None:
    documents = parse_pubtator(PUBTATOR)
    assert len(merge_train_dev(documents[:1], documents[1:])) == 2
    with pytest.raises(DuplicateDocumentError):
        merge_train_dev(documents, documents[:1])


def test_save_and_load_documents(tmp_path: Path) -> None:
    documents = parse_pubtator(PUBTATOR)
    path = tmp_path / "docs.jsonl"
    save_documents(path, documents)
    assert load_documents(path) == documents


def test_read_exclusions() -> None:
    assert read_exclusions("100\tD001\tD002\n\nshort\n") == {("100", "D001", "D002")}


def test_vocabulary_build_and_unknown() -> None:
    doc = assemble_document("1", [["The", "the", "drug"]], [(0, 2, 3, "X", CHEMICAL)])
    vocab = Vocabulary.build([doc])
    assert vocab.itos[:3] == ["<pad>", "<unk>", "the"]
    assert vocab.index("THE") == vocab.index("the")
    assert vocab.index("aspirin") == vocab.unk_index
    assert Vocabulary.build([doc], min_freq=2).regular_tokens == ["the"]


def test_vocabulary_save_and_load(tmp_path: Path) -> None:
    vocab = Vocabulary(["alpha", "beta"])
    vocab.save(tmp_path / "vocab.txt")
    loaded = Vocabulary.load(tmp_path / "vocab.txt")
    assert loaded.itos == vocab.itos
    assert loaded.index("beta") == 3


def test_load_embeddings_reports_coverage(tmp_path: Path) -> None:
    vocab = Vocabulary(["alpha", "beta", "gamma", "delta"])
    path = tmp_path / "vectors.txt"
    path.write_text("3 2\nalpha 1 2\nbeta 3 4\nunused 5 6\n")
    table, coverage = load_embeddings(path, vocab, 2, np.random.default_rng(0))
    assert coverage == pytest.approx(0.5)
    assert np.array_equal(table[vocab.index("beta")], [3.0, 4.0])
    assert np.array_equal(table[vocab.pad_index], [0.0, 0.0])


def test_load_embeddings_rejects_wrong_dimension(tmp_path: Path) -> None:
    path = tmp_path / "vectors.txt"
    path.write_text("alpha 1 2\nbeta 3\n")
    with pytest.raises(EmbeddingFormatError) as info:
        load_embeddings(path, Vocabulary(["alpha", "beta"]), 2)
    assert info.value.line_number == 2
