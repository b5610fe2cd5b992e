#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""encoder.py: Word embeddings and the per-sentence bidirectional LSTM.

Each sentence is encoded on its own; document context only enters through the graph. Position ``t`` of the output concatenates the forward state after
reading tokens ``0..t`` with the backward state after reading tokens ``t..end``.

Examples:
    Encode one sentence in evaluation mode::

        import numpy as np
        from sparta.eog.network.encoder import encode_sentence

        vectors = encode_sentence(params, vocab.encode(sentence.tokens), train_mode=False, rng=np.random.default_rng(0))
        print(vectors.shape)  # (len(tokens), 2 * hidden_size)
"""
import logging
from typing import List, Sequence

import numpy as np

from sparta.eog.autodiff.tensor import Tensor, add, concat, dropout, embedding_lookup, linear, mul, narrow, sigmoid, stack, take, tanh
from sparta.eog.errors import DataError
from sparta.eog.network.params import ModelParams

logger = logging.getLogger(__name__)


def embed_tokens(table: Tensor, tokens: Sequence[int]) -> Tensor:
    """Looks up the rows of ``tokens`` in the embedding table.

    Raises:
        IndexError: If an index lies outside the table.
    """
    return embedding_lookup(table, tokens)


def _run_direction(projected: Tensor, hidden_weight: Tensor, reverse: bool) -> List[Tensor]:
    """Unrolls one LSTM direction over precomputed input projections (T, 4H), gate order input, forget, cell, output."""
    length = projected.shape[0]
    size = hidden_weight.shape[1]
    h = Tensor.zeros((size,))
    c = Tensor.zeros((size,))
    states: List[Tensor] = [h] * length
    order = range(length - 1, -1, -1) if reverse else range(length)
    for t in order:
        gates = add(take(projected, t), linear(h, hidden_weight))
        input_gate = sigmoid(narrow(gates, 0, size))
        forget_gate = sigmoid(narrow(gates, size, 2 * size))
        candidate = tanh(narrow(gates, 2 * size, 3 * size))
        output_gate = sigmoid(narrow(gates, 3 * size, 4 * size))
        c = add(mul(forget_gate, c), mul(input_gate, candidate))
        h = mul(output_gate, tanh(c))
        states[t] = h
    return states


def encode_sentence(params: ModelParams, tokens: Sequence[int], train_mode: bool, rng: np.random.Generator, dropout_rate: float = 0.0) -> Tensor:
    """Contextual vectors of one sentence.

    Args:
        params (ModelParams): Holds ``word_embeddings`` and the ``lstm_forward_*``/``lstm_backward_*`` tensors.
        tokens (Sequence[int]): Vocabulary indices of the sentence.
        train_mode (bool): Enables dropout on the embedded words.
        rng (np.random.Generator): Source of dropout masks.
        dropout_rate (float): Word dropout rate.

    Returns:
        Tensor: (len(tokens), 2 * hidden_size) matrix.

    Raises:
        DataError: If the sentence is empty.
    """
    if len(tokens) == 0:
        logger.error("Cannot encode an empty sentence")
        raise DataError("empty sentence")
    embedded = dropout(embed_tokens(params["word_embeddings"], tokens), dropout_rate, rng, train_mode)
    halves = []
    for direction in ("forward", "backward"):
        projected = linear(embedded, params[f"lstm_{direction}_input"], params[f"lstm_{direction}_bias"])
        states = _run_direction(projected, params[f"lstm_{direction}_hidden"], reverse=direction == "backward")
        halves.append(stack(states))
    return concat(halves, axis=-1)
