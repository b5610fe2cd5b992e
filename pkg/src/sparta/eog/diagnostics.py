#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""diagnostics.py: Finite-difference gradient suites on a toy document.

Each suite perturbs the parameters of one part of the pipeline and compares central differences with the recorded gradients. All suites run at toy
dimensions (hidden size 3, edge dimension 3, two classes) with dropout disabled.

Examples:
    Run every suite::

        from sparta.eog.diagnostics import GRADCHECK_TOLERANCE, run_gradcheck

        errors = run_gradcheck(seed=0)
        assert max(errors.values()) < GRADCHECK_TOLERANCE
"""
import logging
from typing import Callable, Dict, List

import numpy as np

from sparta.eog.autodiff.gradcheck import finite_difference_check
from sparta.eog.autodiff.tensor import Tensor, mul, no_grad, sum_all, take
from sparta.eog.config import TrainConfig, build_config
from sparta.eog.corpus.documents import assemble_document, generate_pairs
from sparta.eog.corpus.vocabulary import Vocabulary
from sparta.eog.models.model import Document, SemanticType
from sparta.eog.network.classifier import classify_pair, pair_loss
from sparta.eog.network.encoder import encode_sentence
from sparta.eog.network.graph import mm_context
from sparta.eog.network.inference import InferenceParams, run_inference
from sparta.eog.network.model import EoGModel

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-3


def toy_document() -> Document:
    """Three sentences, two chemicals and two diseases; the first chemical causes the first disease."""
    chemical, disease = SemanticType.CHEMICAL, SemanticType.DISEASE
    return assemble_document(
        "toy",
        [
            ["aspirin", "induced", "severe", "headache", "."],
            ["patients", "received", "ibuprofen", "daily", "."],
            ["no", "headache", "or", "nausea", "followed", "aspirin", "."],
        ],
        [
            (0, 0, 1, "D001", chemical),
            (0, 3, 4, "D002", disease),
            (1, 2, 3, "D003", chemical),
            (2, 1, 2, "D002", disease),
            (2, 3, 4, "D004", disease),
            (2, 5, 6, "D001", chemical),
        ],
        [("D001", "D002", 0)],
    )


def toy_config(**overrides: object) -> TrainConfig:
    values: Dict[str, object] = {
        "word_dimension": 4,
        "hidden_size": 3,
        "node_type_dimension": 2,
        "distance_dimension": 2,
        "edge_dimension": 3,
        "regularization": 1e-2,
        "inference_iterations": 2,
    }
    values.update(overrides)
    return build_config(values)


def _weighted(output: Callable[[], Tensor], rng: np.random.Generator) -> Callable[[], Tensor]:
    """Turns a tensor-valued function into a scalar one through fixed random weights."""
    with no_grad():
        shape = output().shape
    weights = Tensor(rng.normal(size=shape))
    return lambda: sum_all(mul(output(), weights))


def _model(config: TrainConfig, rng: np.random.Generator) -> EoGModel:
    doc = toy_document()
    vocab = Vocabulary.build([doc], lowercase=config.lowercase)
    return EoGModel.initialize(config, vocab, rng)


def encoder_suite(rng: np.random.Generator) -> float:
    model = _model(toy_config(), rng)
    params = model.params
    tokens = model.vocab.encode(toy_document().sentences[1].tokens[:4])
    names = ["word_embeddings"] + [name for name in params if name.startswith("lstm_")]
    f = _weighted(lambda: encode_sentence(params, tokens, False, rng), rng)
    return finite_difference_check(f, [params[name] for name in names])


def attention_suite(rng: np.random.Generator) -> float:
    words = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    f = _weighted(lambda: mm_context(words, take(words, 0), take(words, 3), (0, 1), (3, 4)), rng)
    return finite_difference_check(f, [words])


def graph_suite(rng: np.random.Generator) -> float:
    model = _model(toy_config(), rng)
    doc = toy_document()
    names = [name for name in model.params if name.startswith("reduce_") or (name.endswith("_embeddings") and name != "word_embeddings")]
    f = _weighted(lambda: model.build_graph(doc, False, rng)[1].values, rng)
    return finite_difference_check(f, [model.params[name] for name in names])


def inference_suite(rng: np.random.Generator) -> float:
    model = _model(toy_config(), rng)
    doc = toy_document()
    config = model.config

    def output() -> Tensor:
        _, edges = model.build_graph(doc, False, rng)
        return run_inference(edges, InferenceParams(model.params["bilinear"], config.beta, 2)).values

    names = ["bilinear", "reduce_ES", "reduce_SS", "lstm_forward_input"]
    return finite_difference_check(_weighted(output, rng), [model.params[name] for name in names])


def classifier_suite(rng: np.random.Generator) -> float:
    representations = Tensor(rng.normal(size=(3, 4)))
    weight = Tensor(rng.uniform(-0.5, 0.5, size=(2, 4)), requires_grad=True)
    bias = Tensor(np.zeros(2), requires_grad=True)

    def f() -> Tensor:
        return pair_loss(classify_pair(representations, weight, bias, rng), [0, 1, 1], [weight], 1e-2)

    return finite_difference_check(f, [weight, bias])


def model_suite(rng: np.random.Generator, variant: str = "EoG") -> float:
    overrides: Dict[str, object] = {"variant": variant}
    if variant == "NoInf":
        overrides["inference_iterations"] = 0
    config = toy_config(**overrides)
    model = _model(config, rng)
    doc = toy_document()
    pairs = generate_pairs(doc, config.head_type, config.tail_type, config.no_relation)

    def f() -> Tensor:
        probabilities = model.forward(doc, pairs, False, rng)
        return pair_loss(probabilities, [p.label for p in pairs], model.params.weight_matrices(), config.regularization)

    used: List[Tensor] = list(model.params.named().values())
    return finite_difference_check(f, used)


def run_gradcheck(seed: int = 0) -> Dict[str, float]:
    """Maximum relative error of every suite."""
    suites: Dict[str, Callable[[np.random.Generator], float]] = {
        "encoder": encoder_suite,
        "attention": attention_suite,
        "graph": graph_suite,
        "inference": inference_suite,
        "classifier": classifier_suite,
        "model": model_suite,
        "model-full": lambda rng: model_suite(rng, "Full"),
        "model-noinf": lambda rng: model_suite(rng, "NoInf"),
    }
    errors = {}
    for offset, (name, suite) in enumerate(suites.items()):
        errors[name] = suite(np.random.default_rng([seed, offset]))
        logger.info(f"Gradient check {name}: max relative error {errors[name]:.2e}")
    return errors
