import numpy as np
import pytest

from sparta.eog.autodiff.gradcheck import finite_difference_check
from sparta.eog.autodiff.optim import AdamState, adam_step, clip_global_norm, clip_gradients, global_norm
from sparta.eog.autodiff.tensor import (
    Tape,
    Tensor,
    backward,
    concat,
    dropout,
    embedding_lookup,
    gather_pairs,
    linear,
    log,
    mean_all,
    mul,
    no_grad,
    pairwise_walk,
    pick,
    scatter_pairs,
    segment_mean,
    sigmoid,
    softmax,
    sum_all,
    tanh,
    using_tape,
)
from sparta.eog.errors import MaskedSoftmaxError, MissingGradientError, ShapeMismatchError


def test_sigmoid_gradient_at_zero() -> None:
    p = Tensor([0.0], requires_grad=True)
    with using_tape(Tape()) as tape:
        loss = sum_all(sigmoid(p))
        backward(loss, tape)
    assert p.grad is not None
    assert p.grad[0] == pytest.approx(0.25)


def test_gradients_accumulate_over_repeated_use() -> None:
    p = Tensor([2.0], requires_grad=True)
    with using_tape(Tape()) as tape:
        loss = sum_all(mul(p, p))
        backward(loss, tape)
    assert p.grad is not None
    assert p.grad[0] == pytest.approx(4.0)


def test_embedding_lookup_accumulates_repeated_rows() -> None:
    table = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    with using_tape(Tape()) as tape:
        rows = embedding_lookup(table, [2, 0, 2])
        backward(sum_all(rows), tape)
    assert np.array_equal(rows.data, np.array([[4.0, 5.0], [0.0, 1.0], [4.0, 5.0]]))
    assert table.grad is not None
    assert np.array_equal(table.grad, np.array([[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]]))


def test_backward_rejects_non_scalar_loss() -> None:
    p = Tensor(np.ones(3), requires_grad=True)
    with using_tape(Tape()) as tape:
        out = sigmoid(p)
        with pytest.raises(ValueError):
            backward(out, tape)


def test_no_grad_records_nothing() -> None:
    p = Tensor(np.ones(2), requires_grad=True)
    tape = Tape()
    with using_tape(tape), no_grad():
        out = tanh(p)
    assert len(tape) == 0
    assert not out.requires_grad


def test_linear_rejects_mismatched_shapes() -> None:
    with pytest.raises(ShapeMismatchError):
        linear(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_softmax_respects_mask() -> None:
    probs = softmax(Tensor([1.0, 2.0, 3.0]), np.array([True, False, True]))
    assert probs.data[1] == 0.0
    assert probs.data.sum() == pytest.approx(1.0)


def test_softmax_fully_masked_row_raises() -> None:
    with pytest.raises(MaskedSoftmaxError):
        softmax(Tensor([1.0, 2.0]), np.array([False, False]))


def test_dropout_is_identity_in_evaluation_mode() -> None:
    x = Tensor(np.ones(10))
    assert dropout(x, 0.5, np.random.default_rng(0), train_mode=False) is x


def test_dropout_rejects_invalid_rate() -> None:
    with pytest.raises(ValueError):
        dropout(Tensor(np.ones(3)), 1.0, np.random.default_rng(0), train_mode=True)


def test_dropout_scales_kept_entries() -> None:
    out = dropout(Tensor(np.ones(1000)), 0.5, np.random.default_rng(0), train_mode=True)
    assert set(np.unique(out.data)) <= {0.0, 2.0}


def test_scatter_pairs_is_symmetric() -> None:
    values = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    out = scatter_pairs(values, [0, 1], [2, 2], 3)
    assert np.array_equal(out.data, out.data.transpose(1, 0, 2))
    assert np.array_equal(out.data[0, 2], [1.0, 2.0])
    assert np.array_equal(out.data[0, 0], [0.0, 0.0])


def test_pairwise_walk_matches_explicit_sum() -> None:
    rng = np.random.default_rng(3)
    n, d = 5, 3
    edges = rng.normal(size=(n, n, d))
    weight = rng.normal(size=(d, d))
    support = rng.random((n, n, n)) < 0.5
    out = pairwise_walk(Tensor(edges), Tensor(weight), support).data

    expected = np.zeros((n, n, d))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if support[i, k, j]:
                    expected[i, j] += 1.0 / (1.0 + np.exp(-edges[i, k] * (weight @ edges[k, j])))
    assert np.allclose(out, expected)


def test_primitive_gradients_pass_finite_differences() -> None:
    rng = np.random.default_rng(0)
    x = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    w = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=2), requires_grad=True)

    def f() -> Tensor:
        hidden = tanh(linear(x, w, b))
        grouped = segment_mean(hidden, [[0, 1], [2], [1, 2, 3]])
        probs = softmax(concat([grouped, grouped], axis=-1), np.array([[True, True, False, True]] * 3))
        return mean_all(log(pick(probs, [0, 1, 3])))

    assert finite_difference_check(f, [x, w, b]) < 1e-6


def test_pairwise_walk_gradients_pass_finite_differences() -> None:
    rng = np.random.default_rng(1)
    edges = Tensor(rng.normal(size=(4, 4, 2)), requires_grad=True)
    weight = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
    support = rng.random((4, 4, 4)) < 0.6
    target = Tensor(rng.normal(size=(4, 4, 2)))

    def f() -> Tensor:
        return sum_all(mul(pairwise_walk(edges, weight, support), target))

    assert finite_difference_check(f, [edges, weight]) < 1e-6


def test_gather_pairs_gradients_pass_finite_differences() -> None:
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(3, 3, 2)), requires_grad=True)

    def f() -> Tensor:
        return sum_all(mul(gather_pairs(x, [0, 1, 0], [2, 2, 2]), gather_pairs(x, [2, 0, 1], [1, 1, 0])))

    assert finite_difference_check(f, [x]) < 1e-6


def test_finite_difference_check_rejects_bad_eps() -> None:
    with pytest.raises(ValueError):
        finite_difference_check(lambda: Tensor(0.0), [], eps=0.0)


def test_adam_moves_against_gradient() -> None:
    p = Tensor([1.0, -1.0], requires_grad=True)
    p.grad = np.array([0.5, -0.5])
    state = AdamState({"p": p}, learning_rate=0.1)
    adam_step(state, {"p": p})
    assert state.step == 1
    assert np.allclose(p.data, [0.9, -0.9])


def test_adam_refuses_missing_gradient() -> None:
    p = Tensor([1.0], requires_grad=True)
    q = Tensor([1.0], requires_grad=True)
    p.grad = np.array([1.0])
    state = AdamState({"p": p, "q": q})
    with pytest.raises(MissingGradientError):
        adam_step(state, {"p": p, "q": q})
    assert p.data[0] == 1.0


def test_clip_global_norm() -> None:
    grads = [np.array([3.0]), np.array([4.0])]
    clipped = clip_global_norm(grads, 1.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    assert clip_global_norm(grads, 10.0)[0][0] == 3.0
    with pytest.raises(ValueError):
        clip_global_norm(grads, 0.0)


def test_clip_gradients_in_place() -> None:
    p = Tensor([0.0, 0.0], requires_grad=True)
    p.grad = np.array([30.0, 40.0])
    norm = clip_gradients([p], 10.0)
    assert norm == pytest.approx(50.0)
    assert np.allclose(p.grad, [6.0, 8.0])


def test_adam_with_zero_gradients_is_identity() -> None:
    p = Tensor([[1.5, -2.0], [0.25, 3.0]], requires_grad=True)
    p.grad = np.zeros((2, 2))
    state = AdamState({"p": p}, learning_rate=0.1)
    adam_step(state, {"p": p})
    assert np.array_equal(p.data, [[1.5, -2.0], [0.25, 3.0]])
    assert not state.first_moment["p"].any()
    assert not state.second_moment["p"].any()


def test_adam_counts_steps() -> None:
    p = Tensor([1.0], requires_grad=True)
    state = AdamState({"p": p})
    for _ in range(2):
        p.grad = np.array([0.3])
        adam_step(state, {"p": p})
    assert state.step == 2


def test_clip_global_norm_is_idempotent() -> None:
    rng = np.random.default_rng(4)
    grads = [rng.normal(size=(3, 4)) * 10, rng.normal(size=5) * 10]
    once = clip_global_norm(grads, 2.0)
    twice = clip_global_norm(once, 2.0)
    for a, b in zip(once, twice):
        assert np.allclose(a, b, rtol=1e-12, atol=0)
