#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""optim.py: Adam optimiser and global-norm gradient clipping.

Examples:
    One optimisation step::

        from sparta.eog.autodiff.optim import AdamState, adam_step, clip_gradients

        state = AdamState(params, learning_rate=0.002)
        clip_gradients(params.values(), max_norm=10.0)
        adam_step(state, params)
"""
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from sparta.eog.autodiff.tensor import Array, Tensor
from sparta.eog.errors import MissingGradientError

logger = logging.getLogger(__name__)


class AdamState:
    """Per-parameter first and second moments plus the step counter."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        learning_rate: float = 0.002,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.first_moment: Dict[str, Array] = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.second_moment: Dict[str, Array] = {name: np.zeros_like(p.data) for name, p in params.items()}


def adam_step(state: AdamState, params: Mapping[str, Tensor], grads: Optional[Mapping[str, Array]] = None) -> AdamState:
    """Applies one bias-corrected Adam update in place.

    Args:
        state (AdamState): Moments and step counter; mutated.
        params (Mapping[str, Tensor]): Parameters by name; their data is updated in place.
        grads (Optional[Mapping[str, Array]]): Gradients by name. Defaults to each parameter's ``grad``.

    Returns:
        AdamState: The updated state.

    Raises:
        MissingGradientError: If some parameter has no gradient. No parameter is touched in that case.
    """
    resolved: Dict[str, Array] = {}
    for name, param in params.items():
        grad = grads.get(name) if grads is not None else param.grad
        if grad is None:
            logger.error(f"Cannot apply Adam update: parameter {name} has no gradient")
            raise MissingGradientError(name)
        resolved[name] = grad

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, param in params.items():
        grad = resolved[name]
        m = state.first_moment[name] = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * grad
        v = state.second_moment[name] = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * grad * grad
        param.data -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return state


def global_norm(grads: Iterable[Array]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_global_norm(grads: Sequence[Array], max_norm: float) -> List[Array]:
    """Scales all gradients by ``max_norm / norm`` when their joint L2 norm exceeds ``max_norm``.

    Raises:
        ValueError: If ``max_norm`` is not positive.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return list(grads)
    factor = max_norm / norm
    return [g * factor for g in grads]


def clip_gradients(params: Iterable[Tensor], max_norm: float) -> float:
    """Clips the ``grad`` of every parameter in place and returns the norm before clipping."""
    with_grad = [p for p in params if p.grad is not None]
    grads = [p.grad for p in with_grad if p.grad is not None]
    norm = global_norm(grads)
    for param, clipped in zip(with_grad, clip_global_norm(grads, max_norm)):
        param.grad = clipped
    return norm
