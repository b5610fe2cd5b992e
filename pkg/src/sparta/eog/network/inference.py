#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""inference.py: Iterative edge inference over the document graph.

One step combines, for every node pair ``(i, j)``, the edges ``(i, k)`` and ``(k, j)`` through every intermediate node ``k`` that is connected to both, and
interpolates the sum with the previous edge. All updates of a step read the matrix as it was before the step, so after ``N`` steps an edge exists exactly
when the initial graph has a path of length at most ``2 ** N`` between its nodes.

Examples:
    Run two steps on an edge matrix::

        from sparta.eog.network.inference import InferenceParams, run_inference

        edges = run_inference(edges, InferenceParams(params["bilinear"], beta=0.8, iterations=2))
"""
import logging

import numpy as np
from numpy.typing import NDArray

from sparta.eog.autodiff.tensor import Tensor, add, interpolate, linear, mul, pairwise_walk, sigmoid, transpose
from sparta.eog.network.graph import EdgeMatrix

logger = logging.getLogger(__name__)


class InferenceParams:
    def __init__(self, weight: Tensor, beta: float = 0.8, iterations: int = 3) -> None:
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {beta}")
        if iterations < 0:
            raise ValueError(f"iterations must be non-negative, got {iterations}")
        self.weight = weight
        self.beta = beta
        self.iterations = iterations


def combine_pair(first: Tensor, second: Tensor, weight: Tensor) -> Tensor:
    """``sigmoid(first * (weight @ second))`` for two adjacent edges sharing an intermediate node."""
    return sigmoid(mul(first, linear(second, weight)))


def walk_support(mask: NDArray[np.bool_]) -> NDArray[np.bool_]:
    """Boolean (n, n, n) array, ``[i, k, j]`` set when ``i < j`` and both ``(i, k)`` and ``(k, j)`` exist with ``k`` distinct from ``i`` and ``j``."""
    n = mask.shape[0]
    adjacency = mask & ~np.eye(n, dtype=bool)
    support = adjacency[:, :, None] & adjacency[None, :, :]
    support &= np.triu(np.ones((n, n), dtype=bool), k=1)[:, None, :]
    return support


def inference_step(edges: EdgeMatrix, params: InferenceParams) -> EdgeMatrix:
    """One synchronous update of every node pair.

    The new value of ``(i, j)`` is ``beta * e_ij + (1 - beta) * sum_k combine_pair(e_ik, e_kj)``, a missing previous edge counting as zero. Each unordered
    pair is computed once and mirrored.
    """
    support = walk_support(edges.mask)
    upper = pairwise_walk(edges.values, params.weight, support)
    aggregate = add(upper, transpose(upper, (1, 0, 2)))
    reached = support.any(axis=1)
    mask = edges.mask | reached | reached.T
    np.fill_diagonal(mask, False)
    return EdgeMatrix(interpolate(params.beta, edges.values, aggregate), mask)


def run_inference(edges: EdgeMatrix, params: InferenceParams) -> EdgeMatrix:
    """Applies :func:`inference_step` ``params.iterations`` times; zero iterations return ``edges`` unchanged."""
    for step in range(params.iterations):
        edges = inference_step(edges, params)
        logger.debug(f"Inference step {step + 1}: {int(edges.mask.sum()) // 2} edges")
    return edges
