#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""params.py: All learned tensors of the model, created from a configuration."""
import logging
from typing import Dict, Iterator, List, Optional

import numpy as np

from sparta.eog.autodiff.tensor import Array, Tensor
from sparta.eog.config import TrainConfig
from sparta.eog.models.constants import DISTANCE_BUCKETS, NODE_KINDS

logger = logging.getLogger(__name__)

LSTM_GATES = 4


def _uniform_matrix(rng: np.random.Generator, rows: int, cols: int, fan_in: Optional[int] = None) -> Array:
    bound = 1.0 / np.sqrt(fan_in or cols)
    return rng.uniform(-bound, bound, size=(rows, cols))


class FeatureLayout:
    """Widths of node and edge features implied by a configuration."""

    def __init__(self, config: TrainConfig) -> None:
        self.word = 2 * config.hidden_size
        self.node = self.word + (config.node_type_dimension if config.node_types else 0)
        self.context = self.word if config.mm_context else 0
        self.distance = config.distance_dimension if config.distances else 0

    def edge_input(self, family: str) -> int:
        if family == "MM":
            return 2 * self.node + self.context + self.distance
        if family == "SS":
            return 2 * self.node + self.distance
        return 2 * self.node

    def families(self, variant: str) -> List[str]:
        if variant == "NoInf":
            return ["EE"]
        base = ["MM", "MS", "ME", "SS", "ES"]
        return base + ["EE"] if variant == "Full" else base


class ModelParams:
    """Named parameter tensors: embeddings, BiLSTM, edge reductions, bilinear matrix and classifier."""

    def __init__(self, tensors: Dict[str, Tensor]) -> None:
        self.tensors = tensors

    @classmethod
    def initialize(cls, config: TrainConfig, vocab_size: int, rng: np.random.Generator, embeddings: Optional[Array] = None) -> "ModelParams":
        """Draws fresh parameters.

        Matrices are uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases zero except the LSTM forget gate (1.0), embedding tables uniform in
        ``[-0.05, 0.05]``.

        Args:
            config (TrainConfig): Dimensions, variant and enhancement flags.
            vocab_size (int): Rows of the word embedding table.
            rng (np.random.Generator): Source of every random draw.
            embeddings (Optional[Array]): Pretrained (vocab_size, word_dimension) table to start from.
        """
        layout = FeatureLayout(config)
        H, D = config.hidden_size, config.word_dimension
        tensors: Dict[str, Array] = {}
        if embeddings is not None:
            if embeddings.shape != (vocab_size, D):
                raise ValueError(f"embedding table {embeddings.shape} does not match ({vocab_size}, {D})")
            tensors["word_embeddings"] = np.array(embeddings, dtype=np.float64)
        else:
            tensors["word_embeddings"] = rng.uniform(-0.05, 0.05, size=(vocab_size, D))
        for direction in ("forward", "backward"):
            tensors[f"lstm_{direction}_input"] = _uniform_matrix(rng, LSTM_GATES * H, D, fan_in=D + H)
            tensors[f"lstm_{direction}_hidden"] = _uniform_matrix(rng, LSTM_GATES * H, H, fan_in=D + H)
            bias = np.zeros(LSTM_GATES * H)
            bias[H : 2 * H] = 1.0
            tensors[f"lstm_{direction}_bias"] = bias
        if config.node_types:
            tensors["node_type_embeddings"] = rng.uniform(-0.05, 0.05, size=(len(NODE_KINDS), config.node_type_dimension))
        if config.distances and config.variant != "NoInf":
            tensors["mention_distance_embeddings"] = rng.uniform(-0.05, 0.05, size=(DISTANCE_BUCKETS, config.distance_dimension))
            tensors["sentence_distance_embeddings"] = rng.uniform(-0.05, 0.05, size=(DISTANCE_BUCKETS, config.distance_dimension))
        for family in layout.families(config.variant):
            tensors[f"reduce_{family}"] = _uniform_matrix(rng, config.edge_dimension, layout.edge_input(family))
        if config.variant != "NoInf":
            tensors["bilinear"] = _uniform_matrix(rng, config.edge_dimension, config.edge_dimension)
        tensors["classifier_weight"] = _uniform_matrix(rng, config.num_classes, config.edge_dimension)
        tensors["classifier_bias"] = np.zeros(config.num_classes)

        params = cls({name: Tensor(value, requires_grad=True, name=name) for name, value in tensors.items()})
        logger.debug(f"Initialised {len(params.tensors)} parameter tensors with {params.count()} entries")
        return params

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __contains__(self, name: object) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def named(self) -> Dict[str, Tensor]:
        return dict(self.tensors)

    def count(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def weight_matrices(self) -> List[Tensor]:
        """The matrices covered by L2 regularisation: every 2-d parameter except embedding tables."""
        return [t for name, t in self.tensors.items() if t.data.ndim == 2 and not name.endswith("_embeddings")]

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def fill_missing_grads(self) -> None:
        """Gives parameters unreachable from the last loss a zero gradient."""
        for tensor in self.tensors.values():
            if tensor.grad is None:
                tensor.grad = np.zeros_like(tensor.data)

    def snapshot(self) -> Dict[str, Array]:
        return {name: t.data.copy() for name, t in self.tensors.items()}

    def restore(self, snapshot: Dict[str, Array]) -> None:
        for name, value in snapshot.items():
            self.tensors[name].data = value.copy()
