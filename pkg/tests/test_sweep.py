from typing import List, Sequence

import pytest

import sparta.eog.evaluation.sweep as sweep
from sparta.eog.corpus.documents import assemble_document
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.diagnostics import toy_config
from sparta.eog.errors import UsageError
from sparta.eog.evaluation.metrics import score
from sparta.eog.evaluation.sweep import ABLATIONS, ablation_sweep, expand_grid, format_sweep, parse_grid, resolve_points, run_sweep
from sparta.eog.models.model import Document, SemanticType
from sparta.eog.training.checkpoint import Checkpoint
from sparta.eog.training.trainer import Trainer


def _documents() -> List[Document]:
    chemical, disease = SemanticType.CHEMICAL, SemanticType.DISEASE
    return [
        assemble_document(
            str(i),
            [["drug", "causes" if i % 2 == 0 else "treats", "illness"], ["later", "illness", "."]],
            [(0, 0, 1, f"C{i}", chemical), (0, 2, 3, f"D{i}", disease), (1, 1, 2, f"D{i}", disease)],
            [(f"C{i}", f"D{i}", 0)] if i % 2 == 0 else [],
        )
        for i in range(4)
    ]


def test_parse_grid() -> None:
    assert parse_grid(["inference_iterations=1,2,3", "beta = 0.5"]) == {"inference_iterations": ["1", "2", "3"], "beta": ["0.5"]}
    with pytest.raises(UsageError):
        parse_grid(["beta"])
    with pytest.raises(UsageError):
        parse_grid(["beta="])


def test_expand_grid_labels() -> None:
    points = expand_grid({"inference_iterations": [1, 2], "beta": [0.5]})
    assert [label for label, _ in points] == ["inference_iterations=1 beta=0.5", "inference_iterations=2 beta=0.5"]
    assert points[1][1] == {"inference_iterations": 2, "beta": 0.5}


def test_resolve_points() -> None:
    points = resolve_points(["-SS", "-T,C,D"], {"inference_iterations": ["1"]})
    assert [label for label, _ in points] == ["-SS", "-T,C,D", "inference_iterations=1"]
    assert points[0][1] == {"edges_ss_direct": False, "edges_ss_indirect": False}
    with pytest.raises(UsageError):
        resolve_points(["-XY"])


def test_every_ablation_is_a_valid_config() -> None:
    base = toy_config()
    for overrides in ABLATIONS.values():
        toy_config(**{**base.model_dump(), **overrides})


@pytest.mark.asyncio
async def test_run_sweep_records_each_point() -> None:
    documents = _documents()
    base = toy_config(max_epochs=1)
    points = expand_grid({"inference_iterations": ["1", "2"]}) + [("broken", {"variant": "NoInf", "inference_iterations": 2})]
    results = await run_sweep(base, points, documents, documents, documents, Vocabulary.build(documents), concurrency=2)

    assert [result.point for result in results] == [0, 1, 2]
    assert [result.label for result in results] == ["inference_iterations=1", "inference_iterations=2", "broken"]
    assert all(result.metrics is not None and result.error is None for result in results[:2])
    assert results[2].metrics is None
    assert results[2].error is not None and "NoInf" in results[2].error

    table = format_sweep(results).splitlines()
    assert table[0] == "point\tlabel\toverall_f1\tintra_f1\tinter_f1\terror"
    assert table[3].startswith("2\tbroken\t-\t-\t-\t")


def test_single_point_sweep_equals_plain_run() -> None:
    documents = _documents()
    base = toy_config(max_epochs=2)
    vocab = Vocabulary.build(documents)
    (result,) = ablation_sweep(base, [("base", {})], documents, documents, documents, vocab, concurrency=1)
    checkpoint = Trainer(base, vocab).train(documents, documents)
    assert result.metrics == score(checkpoint.model().predict_all(documents))


class _OverflowingTrainer(Trainer):
    def train(self, train_documents: Sequence[Document], dev_documents: Sequence[Document] = ()) -> Checkpoint:
        if self.config.beta == 0.5:
            raise FloatingPointError("overflow encountered in exp")
        return super().train(train_documents, dev_documents)


def test_numeric_failure_does_not_stop_the_sweep(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(sweep, "Trainer", _OverflowingTrainer)
    documents = _documents()
    points = expand_grid({"beta": ["0.5", "0.8"]})
    results = ablation_sweep(toy_config(max_epochs=1), points, documents, documents, documents, Vocabulary.build(documents), concurrency=2)
    assert results[0].metrics is None
    assert results[0].error == "FloatingPointError: overflow encountered in exp"
    assert results[1].error is None and results[1].metrics is not None
