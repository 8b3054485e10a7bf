import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ehgnn.autodiff import (
    Adam,
    AdamState,
    Tensor,
    adam_step,
    add,
    backward,
    column_mean,
    concat_cols,
    cross_entropy,
    elementwise,
    gather_rows,
    glorot,
    gradient_check,
    matmul,
    mse_loss,
    mul,
    no_grad,
    relu,
    row_softmax,
    scale,
    scale_rows,
    scatter_aggregate,
    sigmoid,
    sub,
    sum_all,
    tanh,
    transpose,
)
from ehgnn.errors import AutodiffError, DimensionError, MissingGradientError, UnknownOpError


def param(rng, rows, cols):
    return Tensor(rng.standard_normal((rows, cols)), requires_grad=True)


class TestForward:
    def test_matmul_identity(self):
        a = Tensor([[1, 2], [3, 4]])
        np.testing.assert_array_equal(matmul(a, Tensor(np.eye(2))).data, [[1, 2], [3, 4]])
        np.testing.assert_array_equal(matmul(Tensor(np.eye(2)), Tensor([[5], [7]])).data, [[5], [7]])

    def test_matmul_hand(self):
        assert matmul(Tensor([[1, 2]]), Tensor([[3], [4]])).item() == 11

    def test_matmul_shape_error_names_shapes(self):
        with pytest.raises(DimensionError, match=r"\(1, 2\).*\(3, 1\)"):
            matmul(Tensor([[1, 2]]), Tensor([[1], [2], [3]]))

    def test_elementwise_examples(self):
        assert elementwise("tanh", Tensor([[0.0]])).item() == 0.0
        np.testing.assert_array_equal(elementwise("row_softmax", Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])
        np.testing.assert_array_equal(elementwise("add", Tensor([[1, 2]]), Tensor([[3, 4]])).data, [[4, 6]])

    def test_elementwise_errors(self):
        with pytest.raises(UnknownOpError):
            elementwise("cosh", Tensor([[0.0]]))
        with pytest.raises(DimensionError):
            elementwise("add", Tensor([[1, 2]]), Tensor([[1, 2, 3]]))

    def test_bias_row_broadcast(self):
        out = add(Tensor(np.zeros((3, 2))), Tensor([[1.0, 2.0]]))
        np.testing.assert_array_equal(out.data, [[1, 2]] * 3)

    def test_scatter_examples(self):
        out = scatter_aggregate(Tensor([[1.0], [2.0], [3.0]]), [0, 0, 1], 2, "sum")
        np.testing.assert_array_equal(out.data, [[3], [3]])
        assert scatter_aggregate(Tensor([[4.0], [6.0]]), [0, 0], 1, "mean").item() == 5.0
        np.testing.assert_array_equal(scatter_aggregate(Tensor([[1.0]]), [0], 2, "sum").data, [[1], [0]])

    def test_scatter_empty_mean_is_zero(self):
        out = scatter_aggregate(Tensor(np.zeros((0, 3))), np.zeros(0, np.int64), 2, "mean")
        np.testing.assert_array_equal(out.data, np.zeros((2, 3)))

    def test_scatter_out_of_range_reports_position(self):
        with pytest.raises(IndexError, match=r"index\[2\] = 5"):
            scatter_aggregate(Tensor(np.ones((3, 1))), [0, 1, 5], 2)

    def test_scatter_unknown_mode(self):
        with pytest.raises(UnknownOpError):
            scatter_aggregate(Tensor(np.ones((1, 1))), [0], 1, "max")

    def test_column_mean_empty(self):
        np.testing.assert_array_equal(column_mean(Tensor(np.zeros((0, 3)))).data, np.zeros((1, 3)))

    def test_tensor_must_be_2d(self):
        with pytest.raises(DimensionError):
            Tensor(np.zeros((2, 2, 2)))

    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-50, 50)))
    def test_row_softmax_rows_sum_to_one(self, x):
        out = row_softmax(Tensor(x)).data
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(np.isfinite(out))

    def test_row_softmax_large_logits_finite(self):
        out = row_softmax(Tensor([[1000.0, -1000.0]])).data
        np.testing.assert_allclose(out, [[1.0, 0.0]])


class TestBackward:
    def test_sum_of_product(self):
        w = Tensor([[1.0, 1.0]], requires_grad=True)
        backward(sum_all(matmul(w, Tensor([[2.0], [3.0]]))))
        np.testing.assert_array_equal(w.grad, [[2, 3]])

    def test_half_square(self):
        w = Tensor([[3.0]], requires_grad=True)
        backward(scale(mul(w, w), 0.5))
        assert w.grad[0, 0] == 3.0

    def test_constant_loss_has_no_path(self):
        with pytest.raises(AutodiffError, match="no gradient path"):
            backward(sum_all(Tensor([[1.0]])))

    def test_non_scalar_loss(self):
        w = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(AutodiffError, match="1x1"):
            backward(mul(w, w))

    def test_second_backward_rejected(self):
        w = Tensor([[2.0]], requires_grad=True)
        loss = sum_all(mul(w, w))
        backward(loss)
        with pytest.raises(AutodiffError, match="already"):
            backward(loss)

    def test_grad_accumulates_over_separate_graphs(self):
        w = Tensor([[2.0]], requires_grad=True)
        backward(sum_all(w))
        backward(sum_all(scale(w, 3.0)))
        assert w.grad[0, 0] == 4.0

    def test_shared_subexpression_visited_once(self):
        w = Tensor([[2.0]], requires_grad=True)
        h = mul(w, w)
        backward(sum_all(add(h, h)))
        assert w.grad[0, 0] == 8.0

    def test_no_grad_records_nothing(self):
        w = Tensor([[2.0]], requires_grad=True)
        with no_grad():
            out = mul(w, w)
        assert not out.requires_grad

    def test_no_grad_is_per_thread(self):
        entered, release = threading.Event(), threading.Event()

        def hold():
            with no_grad():
                entered.set()
                release.wait(5)

        worker = threading.Thread(target=hold)
        worker.start()
        entered.wait(5)
        w = Tensor([[2.0]], requires_grad=True)
        recorded = mul(w, w).requires_grad
        release.set()
        worker.join()
        assert recorded

    def test_deep_chain_is_iterative(self):
        w = Tensor([[1.0]], requires_grad=True)
        x = w
        for _ in range(5000):
            x = add(x, Tensor([[0.0]]))
        backward(sum_all(x))
        assert w.grad[0, 0] == 1.0


UNARY = [tanh, relu, sigmoid, row_softmax, transpose, column_mean, sum_all]


class TestGradients:
    @pytest.mark.parametrize("op", UNARY, ids=lambda f: f.__name__)
    def test_unary(self, op, rng):
        a = param(rng, 5, 4)
        a.data += 0.05 * np.sign(a.data)  # keep away from the relu kink
        assert gradient_check(lambda: op(a), [a]) < 1e-6

    @pytest.mark.parametrize("op", [add, sub, mul, matmul], ids=lambda f: f.__name__)
    def test_binary(self, op, rng):
        a = param(rng, 4, 4)
        b = param(rng, 4, 4)
        assert gradient_check(lambda: op(a, b), [a, b]) < 1e-6

    def test_bias_broadcast(self, rng):
        a, b = param(rng, 5, 3), param(rng, 1, 3)
        assert gradient_check(lambda: add(a, b), [a, b]) < 1e-6

    def test_concat_and_scale_rows(self, rng):
        a, b, w = param(rng, 4, 2), param(rng, 4, 3), param(rng, 4, 1)
        assert gradient_check(lambda: scale_rows(concat_cols(a, b), w), [a, b, w]) < 1e-6

    @pytest.mark.parametrize("mode", ["sum", "mean"])
    def test_gather_scatter_adjoint(self, mode, rng):
        a = param(rng, 6, 3)
        gather = rng.integers(0, 6, size=10)
        scatter = rng.integers(0, 4, size=10)
        assert gradient_check(lambda: scatter_aggregate(gather_rows(a, gather), scatter, 4, mode), [a]) < 1e-6

    def test_losses(self, rng):
        a = param(rng, 5, 3)
        target = rng.standard_normal((5, 3))
        labels = rng.integers(0, 3, size=5)
        assert gradient_check(lambda: mse_loss(a, target), [a]) < 1e-6
        assert gradient_check(lambda: cross_entropy(a, labels), [a]) < 1e-6

    def test_scatter_sum_adjoint_identity(self, rng):
        # <scatter(x), y> == <x, gather(y)>
        x = rng.standard_normal((7, 2))
        y = rng.standard_normal((3, 2))
        idx = rng.integers(0, 3, size=7)
        lhs = np.sum(scatter_aggregate(Tensor(x), idx, 3, "sum").data * y)
        rhs = np.sum(x * gather_rows(Tensor(y), idx).data)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Tensor([[1.0, -2.0]], requires_grad=True)
        adam_step(AdamState(learning_rate=0.1), [p], [np.zeros((1, 2))])
        np.testing.assert_array_equal(p.data, [[1.0, -2.0]])

    def test_first_step_moves_by_lr(self):
        p = Tensor([[0.0]], requires_grad=True)
        adam_step(AdamState(learning_rate=0.1), [p], [np.ones((1, 1))])
        assert p.data[0, 0] == pytest.approx(-0.1, abs=1e-8)

    def test_step_counter(self):
        p = Tensor([[0.0]], requires_grad=True)
        state = AdamState()
        for _ in range(2):
            adam_step(state, [p], [np.ones((1, 1))])
        assert state.step == 2
        assert state.first_moment[0].shape == p.shape

    def test_missing_gradient(self):
        p = Tensor([[0.0]], requires_grad=True)
        with pytest.raises(MissingGradientError):
            adam_step(AdamState(), [p], [None])

    def test_optimizer_consumes_grads(self):
        p = Tensor([[1.0]], requires_grad=True)
        opt = Adam([p], lr=0.1)
        backward(sum_all(mul(p, p)))
        opt.step()
        assert p.grad is None
        with pytest.raises(MissingGradientError):
            opt.step()

    def test_minimises_quadratic(self):
        p = Tensor([[5.0, -3.0]], requires_grad=True)
        opt = Adam([p], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            backward(sum_all(mul(p, p)))
            opt.step()
        assert np.abs(p.data).max() < 1e-2


def test_glorot_bounds_and_seed():
    a = glorot(np.random.default_rng(0), 4, 6)
    b = glorot(np.random.default_rng(0), 4, 6)
    assert np.abs(a.data).max() <= np.sqrt(6 / 10)
    np.testing.assert_array_equal(a.data, b.data)
    assert a.requires_grad
