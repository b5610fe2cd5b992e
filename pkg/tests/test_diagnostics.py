import pytest

from sparta.eog.diagnostics import GRADCHECK_TOLERANCE, run_gradcheck, toy_config, toy_document


def test_toy_document_layout() -> None:
    doc = toy_document()
    assert (len(doc.mentions), len(doc.entities), len(doc.sentences)) == (6, 4, 3)
    assert [len(sentence.tokens) for sentence in doc.sentences] == [5, 5, 7]
    assert toy_config().iterations == 2


@pytest.mark.parametrize("seed", [0, 7])
def test_every_gradient_suite_passes(seed: int) -> None:
    errors = run_gradcheck(seed)
    assert set(errors) == {"encoder", "attention", "graph", "inference", "classifier", "model", "model-full", "model-noinf"}
    for name, error in errors.items():
        assert error < GRADCHECK_TOLERANCE, name
