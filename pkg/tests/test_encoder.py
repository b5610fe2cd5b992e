import numpy as np
import pytest

from sparta.eog.autodiff.tensor import Tape, Tensor, backward, sum_all, using_tape
from sparta.eog.config import build_config
from sparta.eog.errors import DataError
from sparta.eog.network.encoder import embed_tokens, encode_sentence
from sparta.eog.network.params import ModelParams


def _params(hidden: int = 3, word: int = 4, vocab: int = 10, seed: int = 0) -> ModelParams:
    config = build_config({"hidden_size": hidden, "word_dimension": word, "edge_dimension": 3})
    return ModelParams.initialize(config, vocab, np.random.default_rng(seed))


def test_output_shape() -> None:
    params = _params()
    rng = np.random.default_rng(0)
    assert encode_sentence(params, [4], False, rng).shape == (1, 6)
    assert encode_sentence(params, [4, 5, 6, 2, 3], False, rng).shape == (5, 6)


def test_zero_parameters_give_zero_states() -> None:
    params = _params()
    for name in params:
        if name.startswith("lstm_"):
            params[name].data[...] = 0.0
    out = encode_sentence(params, [2, 3, 4], False, np.random.default_rng(0))
    assert np.array_equal(out.data, np.zeros((3, 6)))


def test_reversal_swaps_directions() -> None:
    params = _params(seed=4)
    tokens = [2, 7, 3, 9, 5]
    rng = np.random.default_rng(0)
    original = encode_sentence(params, tokens, False, rng).data

    for part in ("input", "hidden", "bias"):
        forward = params[f"lstm_forward_{part}"].data.copy()
        params[f"lstm_forward_{part}"].data = params[f"lstm_backward_{part}"].data.copy()
        params[f"lstm_backward_{part}"].data = forward
    mirrored = encode_sentence(params, tokens[::-1], False, rng).data[::-1]

    assert np.allclose(mirrored[:, :3], original[:, 3:], rtol=0, atol=1e-12)
    assert np.allclose(mirrored[:, 3:], original[:, :3], rtol=0, atol=1e-12)


def test_evaluation_mode_is_deterministic() -> None:
    params = _params()
    first = encode_sentence(params, [2, 3, 4], False, np.random.default_rng(0), dropout_rate=0.5)
    second = encode_sentence(params, [2, 3, 4], False, np.random.default_rng(1), dropout_rate=0.5)
    assert np.array_equal(first.data, second.data)


def test_training_mode_applies_word_dropout() -> None:
    params = _params()
    plain = encode_sentence(params, [2, 3, 4, 5], False, np.random.default_rng(0))
    dropped = encode_sentence(params, [2, 3, 4, 5], True, np.random.default_rng(0), dropout_rate=0.5)
    assert not np.array_equal(plain.data, dropped.data)


def test_empty_sentence_is_a_data_error() -> None:
    with pytest.raises(DataError):
        encode_sentence(_params(), [], False, np.random.default_rng(0))


def test_embed_tokens_reads_rows_in_order() -> None:
    table = Tensor(np.arange(12.0).reshape(4, 3))
    assert np.array_equal(embed_tokens(table, [2, 0]).data, [[6.0, 7.0, 8.0], [0.0, 1.0, 2.0]])
    with pytest.raises(IndexError):
        embed_tokens(table, [4])


def test_pretrained_table_keeps_padding_row() -> None:
    config = build_config({"hidden_size": 2, "word_dimension": 3})
    table = np.random.default_rng(0).normal(size=(5, 3))
    table[0] = 0.0
    params = ModelParams.initialize(config, 5, np.random.default_rng(0), embeddings=table)
    assert np.array_equal(embed_tokens(params["word_embeddings"], [0]).data, [[0.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        ModelParams.initialize(config, 6, np.random.default_rng(0), embeddings=table)


def test_gradients_reach_every_lstm_tensor() -> None:
    params = _params()
    with using_tape(Tape()) as tape:
        loss = sum_all(encode_sentence(params, [2, 3, 4, 2], False, np.random.default_rng(0)))
        backward(loss, tape)
    for name in params:
        if name.startswith("lstm_") or name == "word_embeddings":
            assert params[name].grad is not None
    assert params["word_embeddings"].grad is not None
    assert np.array_equal(params["word_embeddings"].grad[0], np.zeros(4))
