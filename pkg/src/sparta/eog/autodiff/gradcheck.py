#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""gradcheck.py: Central finite-difference verification of recorded gradients."""
import logging
from typing import Callable, Sequence

import numpy as np

from sparta.eog.autodiff.tensor import Tape, Tensor, backward, no_grad, using_tape

logger = logging.getLogger(__name__)


def finite_difference_check(f: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-4) -> float:
    """Compares analytic gradients with central differences.

    ``f`` must be deterministic (dropout disabled) and read the current values of ``params``.

    Args:
        f (Callable[[], Tensor]): Builds the scalar objective from the current parameter values.
        params (Sequence[Tensor]): Parameters to perturb, one entry at a time.
        eps (float): Perturbation size.

    Returns:
        float: ``max |analytic - numeric| / max(1, |analytic| + |numeric|)`` over all entries.

    Raises:
        ValueError: If ``eps`` is not positive.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    for param in params:
        param.zero_grad()
    with using_tape(Tape()) as tape:
        loss = f()
        backward(loss, tape)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    worst = 0.0
    with no_grad():
        for param, grad in zip(params, analytic):
            for index in np.ndindex(*param.shape):
                original = param.data[index]
                param.data[index] = original + eps
                plus = f().item()
                param.data[index] = original - eps
                minus = f().item()
                param.data[index] = original
                numeric = (plus - minus) / (2.0 * eps)
                error = abs(grad[index] - numeric) / max(1.0, abs(grad[index]) + abs(numeric))
                worst = max(worst, float(error))
    logger.debug(f"Finite-difference check over {len(params)} parameters: max relative error {worst:.3e}")
    return worst
