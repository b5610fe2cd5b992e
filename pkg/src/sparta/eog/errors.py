#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""errors.py: Exception hierarchy of the edge-oriented graph toolchain.

The command line maps the three top-level families to exit codes: usage errors exit with 1, data errors with 2 and divergence with 3.
"""
from typing import Sequence


class EogError(Exception):
    """Base class of every error raised by this package."""


class UsageError(EogError):
    pass


class ConfigError(UsageError):
    pass


class DataError(EogError):
    pass


class PubTatorFormatError(DataError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmbeddingFormatError(DataError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateDocumentError(DataError):
    pass


class DuplicatePredictionError(DataError):
    pass


class GraphConstructionError(DataError):
    pass


class CheckpointError(DataError):
    pass


class NumericError(EogError):
    pass


class ShapeMismatchError(NumericError):
    def __init__(self, primitive: str, left: Sequence[int], right: Sequence[int]) -> None:
        super().__init__(f"{primitive}: incompatible shapes {tuple(left)} and {tuple(right)}")
        self.primitive = primitive
        self.left = tuple(left)
        self.right = tuple(right)


class MaskedSoftmaxError(NumericError):
    pass


class MissingGradientError(NumericError):
    def __init__(self, name: str) -> None:
        super().__init__(f"parameter {name!r} has no gradient")
        self.name = name


class UnknownEdgeFamilyError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch: int, batch: int, loss: float) -> None:
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
