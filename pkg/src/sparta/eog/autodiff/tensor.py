#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""tensor.py: Minimal reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Tensor` wraps a ``numpy`` array. Every primitive below computes its output eagerly and, when at least one input requires gradients and recording is
enabled, appends an :class:`Operation` with its backward rule to the active :class:`Tape`. :func:`backward` replays the tape in reverse order and writes the
gradients into the leaf tensors that require them.

Examples:
    Differentiate a tiny expression::

        from sparta.eog.autodiff.tensor import Tensor, backward, sigmoid, sum_all

        p = Tensor([0.0], requires_grad=True)
        loss = sum_all(sigmoid(p))
        backward(loss)
        print(p.grad)  # [0.25]

    Evaluate without recording::

        from sparta.eog.autodiff.tensor import no_grad

        with no_grad():
            value = sigmoid(p)
"""
import logging
import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from sparta.eog.errors import MaskedSoftmaxError, ShapeMismatchError

logger = logging.getLogger(__name__)

Array = NDArray[np.float64]
Indices = Union[int, Sequence[int], NDArray[np.int64]]
BackwardRule = Callable[[Array], Sequence[Optional[Array]]]


class Tensor:
    """Shape-carrying float64 array that may take part in a recorded computation."""

    __slots__ = ("data", "requires_grad", "grad", "name", "is_leaf")

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None) -> None:
        self.data: Array = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[Array] = None
        self.name = name
        self.is_leaf = True

    @classmethod
    def zeros(cls, shape: Sequence[int], requires_grad: bool = False, name: Optional[str] = None) -> "Tensor":
        return cls(np.zeros(tuple(shape)), requires_grad=requires_grad, name=name)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def values(self) -> Array:
        """Row-major flat copy of the data."""
        return self.data.ravel().copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> Array:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), requires_grad=False, name=self.name)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __add__(self, other: Union["Tensor", float]) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Union["Tensor", float]) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Union["Tensor", float]) -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Union["Tensor", float]) -> "Tensor":
        return mul(other, self)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


class Operation:
    __slots__ = ("name", "inputs", "output", "backward")

    def __init__(self, name: str, inputs: Sequence[Tensor], output: Tensor, backward: BackwardRule) -> None:
        self.name = name
        self.inputs = tuple(inputs)
        self.output = output
        self.backward = backward


class Tape:
    """Ordered record of operations; inputs always precede the operations that consume them."""

    def __init__(self) -> None:
        self.operations: List[Operation] = []

    def record(self, operation: Operation) -> None:
        self.operations.append(operation)

    def clear(self) -> None:
        self.operations.clear()

    def __len__(self) -> int:
        return len(self.operations)


class _State(threading.local):
    def __init__(self) -> None:
        self.tape = Tape()
        self.recording = True


_state = _State()


def current_tape() -> Tape:
    return _state.tape


@contextmanager
def using_tape(tape: Tape) -> Iterator[Tape]:
    """Records every operation of the enclosed block on ``tape``."""
    previous = _state.tape
    _state.tape = tape
    try:
        yield tape
    finally:
        _state.tape = previous


@contextmanager
def no_grad() -> Iterator[None]:
    """Disables recording; outputs never require gradients inside the block."""
    previous = _state.recording
    _state.recording = False
    try:
        yield
    finally:
        _state.recording = previous


def _as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(name: str, inputs: Sequence[Tensor], data: Array, rule: BackwardRule) -> Tensor:
    out = Tensor(data)
    if _state.recording and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.is_leaf = False
        _state.tape.record(Operation(name, inputs, out, rule))
    return out


def _unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(name: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatchError(name, a.shape, b.shape) from None


def backward(loss: Tensor, tape: Optional[Tape] = None) -> None:
    """Writes d(loss)/d(leaf) into every leaf tensor that requires gradients, then clears the tape.

    Leaf gradients accumulate onto an existing ``grad``; call :meth:`Tensor.zero_grad` between steps.

    Args:
        loss (Tensor): A single-element tensor.
        tape (Optional[Tape]): The tape to replay, the active tape by default.

    Raises:
        ValueError: If ``loss`` holds more than one element.
    """
    tape = tape if tape is not None else _state.tape
    if loss.data.size != 1:
        raise ValueError(f"backward() needs a scalar loss, got shape {loss.shape}")

    seed = np.ones_like(loss.data)
    if loss.is_leaf:
        if loss.requires_grad:
            loss.grad = seed if loss.grad is None else loss.grad + seed
        tape.clear()
        return

    pending = {id(loss): seed}
    for operation in reversed(tape.operations):
        grad = pending.pop(id(operation.output), None)
        if grad is None:
            continue
        for tensor, input_grad in zip(operation.inputs, operation.backward(grad)):
            if input_grad is None or not tensor.requires_grad:
                continue
            if tensor.is_leaf:
                tensor.grad = input_grad.copy() if tensor.grad is None else tensor.grad + input_grad
            elif id(tensor) in pending:
                pending[id(tensor)] = pending[id(tensor)] + input_grad
            else:
                pending[id(tensor)] = input_grad
    logger.debug(f"Backward pass over {len(tape)} operations")
    tape.clear()


def add(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    x, y = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("add", x, y)
    return _result("add", (x, y), x.data + y.data, lambda g: (_unbroadcast(g, x.shape), _unbroadcast(g, y.shape)))


def sub(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    x, y = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("sub", x, y)
    return _result("sub", (x, y), x.data - y.data, lambda g: (_unbroadcast(g, x.shape), _unbroadcast(-g, y.shape)))


def mul(a: Union[Tensor, float], b: Union[Tensor, float]) -> Tensor:
    """Element-wise product with numpy broadcasting."""
    x, y = _as_tensor(a), _as_tensor(b)
    _broadcast_shape("mul", x, y)
    return _result("mul", (x, y), x.data * y.data, lambda g: (_unbroadcast(g * y.data, x.shape), _unbroadcast(g * x.data, y.shape)))


def scale(x: Tensor, factor: float) -> Tensor:
    return _result("scale", (x,), x.data * factor, lambda g: (g * factor,))


def interpolate(alpha: float, x: Tensor, y: Tensor) -> Tensor:
    """Returns ``alpha * x + (1 - alpha) * y`` for a constant scalar ``alpha``."""
    if x.shape != y.shape:
        raise ShapeMismatchError("interpolate", x.shape, y.shape)
    return _result("interpolate", (x, y), alpha * x.data + (1.0 - alpha) * y.data, lambda g: (alpha * g, (1.0 - alpha) * g))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of rank-1/rank-2 operands (not both rank 1)."""
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2) or (a.data.ndim == 1 and b.data.ndim == 1) or a.shape[-1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)

    def rule(g: Array) -> Sequence[Optional[Array]]:
        if a.data.ndim == 1:
            return b.data @ g, np.outer(a.data, g)
        if b.data.ndim == 1:
            return np.outer(g, b.data), a.data.T @ g
        return g @ b.data.T, a.data.T @ g

    return _result("matmul", (a, b), a.data @ b.data, rule)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Applies ``weight`` (out x in) to the last axis of ``x``, plus an optional bias."""
    if weight.data.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise ShapeMismatchError("linear", x.shape, weight.shape)
    if bias is not None and bias.shape != (weight.shape[0],):
        raise ShapeMismatchError("linear", weight.shape, bias.shape)
    out = x.data @ weight.data.T
    if bias is not None:
        out = out + bias.data

    def rule(g: Array) -> Sequence[Optional[Array]]:
        g2 = g.reshape(-1, weight.shape[0])
        x2 = x.data.reshape(-1, weight.shape[1])
        grads: List[Optional[Array]] = [g @ weight.data, g2.T @ x2]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return grads

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return _result("linear", inputs, out, rule)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenates along ``axis`` (the last axis by default)."""
    if not tensors:
        raise ValueError("concat() needs at least one tensor")
    reference = tensors[0]
    ndim = reference.data.ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.data.ndim != ndim or any(t.shape[i] != reference.shape[i] for i in range(ndim) if i != axis):
            raise ShapeMismatchError("concat", reference.shape, t.shape)
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    return _result("concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), lambda g: np.split(g, cuts, axis=axis))


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stacks equally shaped tensors along a new leading axis."""
    if not tensors:
        raise ValueError("stack() needs at least one tensor")
    for t in tensors[1:]:
        if t.shape != tensors[0].shape:
            raise ShapeMismatchError("stack", tensors[0].shape, t.shape)
    return _result("stack", tensors, np.stack([t.data for t in tensors]), lambda g: list(g))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    return _result("reshape", (x,), x.data.reshape(tuple(shape)), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    inverse = np.argsort(axes)
    return _result("transpose", (x,), np.transpose(x.data, tuple(axes)), lambda g: (np.transpose(g, inverse),))


def narrow(x: Tensor, start: int, stop: int) -> Tensor:
    """Slices ``[start:stop]`` of the last axis."""
    if not 0 <= start < stop <= x.shape[-1]:
        raise ShapeMismatchError("narrow", x.shape, (start, stop))

    def rule(g: Array) -> Sequence[Optional[Array]]:
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return _result("narrow", (x,), x.data[..., start:stop].copy(), rule)


def take(x: Tensor, indices: Indices) -> Tensor:
    """Gathers rows of ``x`` along the first axis; an int index drops that axis."""
    index = np.asarray(indices, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= x.shape[0]):
        raise IndexError(f"take: index out of range for {x.shape[0]} rows")

    def rule(g: Array) -> Sequence[Optional[Array]]:
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _result("take", (x,), x.data[index].copy(), rule)


def embedding_lookup(table: Tensor, indices: Sequence[int]) -> Tensor:
    """Row lookup in an embedding table; gradients accumulate across repeated indices."""
    return take(table, list(indices))


def segment_mean(x: Tensor, groups: Sequence[Sequence[int]]) -> Tensor:
    """Row ``k`` of the output is the mean of the rows of ``x`` listed in ``groups[k]``."""
    if any(len(group) == 0 for group in groups):
        raise ValueError("segment_mean: empty index set")
    index_sets = [np.asarray(group, dtype=np.int64) for group in groups]
    out = np.stack([x.data[idx].mean(axis=0) for idx in index_sets]) if index_sets else np.zeros((0,) + x.shape[1:])

    def rule(g: Array) -> Sequence[Optional[Array]]:
        full = np.zeros_like(x.data)
        for k, idx in enumerate(index_sets):
            np.add.at(full, idx, g[k] / len(idx))
        return (full,)

    return _result("segment_mean", (x,), out, rule)


def gather_pairs(x: Tensor, rows: Sequence[int], cols: Sequence[int]) -> Tensor:
    """Reads cells ``x[rows[m], cols[m]]`` of an (n, n, d) matrix into an (m, d) tensor."""
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)

    def rule(g: Array) -> Sequence[Optional[Array]]:
        full = np.zeros_like(x.data)
        np.add.at(full, (r, c), g)
        return (full,)

    return _result("gather_pairs", (x,), x.data[r, c].copy(), rule)


def scatter_pairs(values: Tensor, rows: Sequence[int], cols: Sequence[int], size: int) -> Tensor:
    """Writes ``values[m]`` at both ``(rows[m], cols[m])`` and ``(cols[m], rows[m])`` of a zero (size, size, d) matrix.

    Cells must be distinct unordered pairs of distinct nodes.
    """
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    if values.data.ndim != 2 or len(r) != values.shape[0] or len(c) != values.shape[0]:
        raise ShapeMismatchError("scatter_pairs", values.shape, (len(r), len(c)))
    out = np.zeros((size, size, values.shape[1]))
    out[r, c] = values.data
    out[c, r] = values.data
    return _result("scatter_pairs", (values,), out, lambda g: (g[r, c] + g[c, r],))


def pick(x: Tensor, columns: Sequence[int]) -> Tensor:
    """Returns ``x[m, columns[m]]`` for every row ``m`` of a 2-d tensor."""
    rows = np.arange(x.shape[0])
    cols = np.asarray(columns, dtype=np.int64)
    if len(cols) != x.shape[0]:
        raise ShapeMismatchError("pick", x.shape, cols.shape)

    def rule(g: Array) -> Sequence[Optional[Array]]:
        full = np.zeros_like(x.data)
        full[rows, cols] = g
        return (full,)

    return _result("pick", (x,), x.data[rows, cols].copy(), rule)


def sum_all(x: Tensor) -> Tensor:
    return _result("sum", (x,), np.asarray(x.data.sum()), lambda g: (np.full_like(x.data, g.reshape(-1)[0]),))


def mean_all(x: Tensor) -> Tensor:
    n = max(x.size, 1)
    return _result("mean", (x,), np.asarray(x.data.mean() if x.size else 0.0), lambda g: (np.full_like(x.data, g.reshape(-1)[0] / n),))


def sigmoid(x: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _result("sigmoid", (x,), out, lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return _result("tanh", (x,), out, lambda g: (g * (1.0 - out * out),))


def log(x: Tensor) -> Tensor:
    return _result("log", (x,), np.log(x.data), lambda g: (g / x.data,))


def softmax(x: Tensor, mask: Optional[NDArray[np.bool_]] = None) -> Tensor:
    """Softmax over the last axis; positions where ``mask`` is False get probability zero.

    Raises:
        MaskedSoftmaxError: If some row has no unmasked position.
    """
    if mask is None:
        support = np.ones(x.shape, dtype=bool)
    else:
        support = np.asarray(mask, dtype=bool)
        if support.shape != x.shape:
            raise ShapeMismatchError("softmax", x.shape, support.shape)
    if not support.any(axis=-1).all():
        raise MaskedSoftmaxError(f"softmax over shape {x.shape} has a fully masked row")
    logits = np.where(support, x.data, -np.inf)
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    out = shifted / shifted.sum(axis=-1, keepdims=True)

    def rule(g: Array) -> Sequence[Optional[Array]]:
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _result("softmax", (x,), out, rule)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train_mode: bool) -> Tensor:
    """Inverted dropout: kept activations are divided by the keep-probability at train time."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not train_mode or rate == 0.0:
        return x
    keep = 1.0 - rate
    kept = (rng.random(x.shape) < keep) / keep
    return _result("dropout", (x,), x.data * kept, lambda g: (g * kept,))


def pairwise_walk(edges: Tensor, weight: Tensor, support: NDArray[np.bool_]) -> Tensor:
    """Sums two-hop walk scores over intermediate nodes.

    ``out[i, j] = sum_k support[i, k, j] * sigmoid(edges[i, k] * (weight @ edges[k, j]))``. Intermediate products are recomputed row by row in the backward
    rule, so memory stays quadratic in the node count.

    Args:
        edges (Tensor): Edge representations of shape (n, n, d).
        weight (Tensor): Bilinear matrix of shape (d, d).
        support (NDArray[np.bool_]): Boolean (n, n, n) array indexed ``[i, k, j]`` selecting admissible intermediates.

    Returns:
        Tensor: The (n, n, d) aggregate.
    """
    n = edges.shape[0]
    if edges.data.ndim != 3 or edges.shape[1] != n or weight.shape != (edges.shape[2], edges.shape[2]):
        raise ShapeMismatchError("pairwise_walk", edges.shape, weight.shape)
    if support.shape != (n, n, n):
        raise ShapeMismatchError("pairwise_walk", edges.shape, support.shape)
    projected = edges.data @ weight.data.T
    rows = [np.flatnonzero(support[i].any(axis=1)) for i in range(n)]
    out = np.zeros_like(edges.data)
    for i, ks in enumerate(rows):
        if ks.size:
            scores = 0.5 * (1.0 + np.tanh(0.5 * edges.data[i, ks, None, :] * projected[ks]))
            out[i] = np.einsum("kj,kjd->jd", support[i, ks], scores)

    def rule(g: Array) -> Sequence[Optional[Array]]:
        grad_edges = np.zeros_like(edges.data)
        grad_projected = np.zeros_like(projected)
        for i, ks in enumerate(rows):
            if not ks.size:
                continue
            left = edges.data[i, ks, None, :]
            scores = 0.5 * (1.0 + np.tanh(0.5 * left * projected[ks]))
            grad_z = support[i, ks][:, :, None] * g[i][None, :, :] * scores * (1.0 - scores)
            grad_edges[i, ks] += (grad_z * projected[ks]).sum(axis=1)
            grad_projected[ks] += grad_z * left
        grad_edges += grad_projected @ weight.data
        d = edges.shape[2]
        grad_weight = grad_projected.reshape(-1, d).T @ edges.data.reshape(-1, d)
        return grad_edges, grad_weight

    return _result("pairwise_walk", (edges, weight), out, rule)
