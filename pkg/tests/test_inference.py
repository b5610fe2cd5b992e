import numpy as np
import pytest

from sparta.eog.autodiff.tensor import Tensor
from sparta.eog.corpus.documents import assemble_document
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.diagnostics import toy_config, toy_document
from sparta.eog.models.model import Document, SemanticType
from sparta.eog.network.graph import EdgeMatrix
from sparta.eog.network.inference import InferenceParams, combine_pair, inference_step, run_inference
from sparta.eog.network.model import EoGModel

CHEMICAL, DISEASE = SemanticType.CHEMICAL, SemanticType.DISEASE


def _reachable(mask: np.ndarray, iterations: int) -> np.ndarray:
    n = mask.shape[0]
    hops = mask.astype(int)
    walk = np.eye(n, dtype=int)
    reach = np.zeros((n, n), dtype=bool)
    for _ in range(2**iterations):
        walk = np.minimum(walk @ hops, 1)
        reach |= walk.astype(bool)
    np.fill_diagonal(reach, False)
    return reach


def _random_mask(rng: np.random.Generator, n: int) -> np.ndarray:
    upper = np.triu(rng.random((n, n)) < rng.uniform(0.05, 0.4), k=1)
    return upper | upper.T


def test_combine_pair_by_hand() -> None:
    out = combine_pair(Tensor([0.5]), Tensor([0.5]), Tensor([[1.0]]))
    assert out.data[0] == pytest.approx(0.5622, abs=1e-4)
    assert combine_pair(Tensor([0.0, 0.0]), Tensor([3.0, -1.0]), Tensor(np.eye(2))).data.tolist() == [0.5, 0.5]


def test_combine_pair_is_bounded() -> None:
    rng = np.random.default_rng(0)
    out = combine_pair(Tensor(rng.normal(size=5)), Tensor(rng.normal(size=5)), Tensor(rng.normal(size=(5, 5)))).data
    assert np.all((out > 0.0) & (out < 1.0))


def test_inference_step_by_hand() -> None:
    values = np.zeros((3, 3, 1))
    mask = np.zeros((3, 3), dtype=bool)
    for i, j, v in [(0, 2, 0.2), (0, 1, 0.5), (1, 2, 0.5)]:
        values[i, j] = values[j, i] = v
        mask[i, j] = mask[j, i] = True
    out = inference_step(EdgeMatrix(Tensor(values), mask), InferenceParams(Tensor([[1.0]]), beta=0.8, iterations=1))
    assert out.values.data[0, 2, 0] == pytest.approx(0.2724, abs=1e-4)
    assert out.values.data[2, 0, 0] == out.values.data[0, 2, 0]


def test_missing_edge_interpolates_from_zero() -> None:
    values = np.zeros((3, 3, 1))
    mask = np.zeros((3, 3), dtype=bool)
    for i, j in [(0, 1), (1, 2)]:
        values[i, j] = values[j, i] = 0.5
        mask[i, j] = mask[j, i] = True
    out = inference_step(EdgeMatrix(Tensor(values), mask), InferenceParams(Tensor([[1.0]]), beta=0.8, iterations=1))
    assert out.mask[0, 2] and out.mask[2, 0]
    assert out.values.data[0, 2, 0] == pytest.approx(0.2 * 0.5622, abs=1e-4)


def test_beta_one_keeps_existing_edges() -> None:
    rng = np.random.default_rng(1)
    n = 6
    values = rng.normal(size=(n, n, 2))
    values = values + values.transpose(1, 0, 2)
    mask = ~np.eye(n, dtype=bool)
    values[~mask] = 0.0
    edges = EdgeMatrix(Tensor(values), mask)
    out = run_inference(edges, InferenceParams(Tensor(rng.normal(size=(2, 2))), beta=1.0, iterations=3))
    assert np.array_equal(out.values.data, values)
    assert np.array_equal(out.mask, mask)


def test_zero_iterations_is_identity() -> None:
    edges = EdgeMatrix(Tensor(np.zeros((3, 3, 1))), np.zeros((3, 3), dtype=bool))
    assert run_inference(edges, InferenceParams(Tensor([[1.0]]), iterations=0)) is edges


def test_invalid_parameters() -> None:
    with pytest.raises(ValueError):
        InferenceParams(Tensor([[1.0]]), beta=1.5)
    with pytest.raises(ValueError):
        InferenceParams(Tensor([[1.0]]), iterations=-1)


def test_existence_matches_reachability_oracle() -> None:
    rng = np.random.default_rng(11)
    for _ in range(500):
        n = int(rng.integers(1, 13))
        iterations = int(rng.integers(0, 5))
        mask = _random_mask(rng, n)
        values = np.zeros((n, n, 2))
        values[mask] = 0.1
        out = run_inference(EdgeMatrix(Tensor(values), mask), InferenceParams(Tensor(np.eye(2)), iterations=iterations))
        assert np.array_equal(out.mask, _reachable(mask, iterations))
        assert np.array_equal(out.mask, out.mask.T)
        assert np.all(out.mask[mask])
        assert np.allclose(out.values.data, out.values.data.transpose(1, 0, 2), rtol=0, atol=1e-12)


def _entity_mask(doc: Document, iterations: int, **overrides: object) -> np.ndarray:
    config = toy_config(inference_iterations=iterations, **overrides)
    model = EoGModel.initialize(config, Vocabulary.build([doc]), np.random.default_rng(0))
    nodes, edges = model.build_graph(doc, False, np.random.default_rng(0))
    edges = run_inference(edges, InferenceParams(model.params["bilinear"], config.beta, config.iterations))
    entities = [nodes.entity(e) for e in range(len(doc.entities))]
    return edges.mask[np.ix_(entities, entities)]


def test_entity_pairs_connected_after_two_steps() -> None:
    mask = _entity_mask(toy_document(), 2)
    assert np.array_equal(mask, ~np.eye(4, dtype=bool))


def test_same_sentence_entities_connect_after_one_step() -> None:
    doc = assemble_document("1", [["aspirin", "causes", "headache"]], [(0, 0, 1, "A", CHEMICAL), (0, 2, 3, "B", DISEASE)])
    assert _entity_mask(doc, 1, edges_mm=False, edges_me=False, edges_ms=False)[0, 1]


def test_removing_sentence_edges_isolates_inter_sentence_pairs() -> None:
    doc = assemble_document(
        "2",
        [["aspirin", "."], ["then", "headache"], ["and", "nausea"]],
        [(0, 0, 1, "A", CHEMICAL), (1, 1, 2, "B", DISEASE), (2, 1, 2, "C", DISEASE)],
    )
    mask = _entity_mask(doc, 2, edges_ss_direct=False, edges_ss_indirect=False)
    assert not mask.any()
    assert _entity_mask(doc, 2).all(where=~np.eye(3, dtype=bool))
