import numpy as np
import pytest

from postpop.numeric import (ParamStore, ShapeError, conv1d_backward,
                             conv1d_forward, dense_backward, dense_forward,
                             dropout, finite_difference_grad, matmul,
                             relative_error, relu, softmax, softmax_backward)


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def naive_conv1d(x, filters, bias):
    length, _ = x.shape
    ch_out, width, ch_in = filters.shape
    out = np.zeros((length - width + 1, ch_out))
    for t in range(length - width + 1):
        for o in range(ch_out):
            acc = bias[o]
            for w in range(width):
                for c in range(ch_in):
                    acc += x[t + w, c] * filters[o, w, c]
            out[t, o] = acc
    return out


class TestMatmul:
    def test_identity(self, rng):
        a = rng.normal(size=(3, 3))
        assert np.allclose(matmul(a, np.eye(3)), a)

    def test_hand_example(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0, 6.0], [7.0, 8.0]])
        assert np.array_equal(matmul(a, b), [[19.0, 22.0], [43.0, 50.0]])

    def test_matches_naive_loop(self, rng):
        a = rng.normal(size=(3, 4))
        b = rng.normal(size=(4, 2))
        assert np.allclose(matmul(a, b), naive_matmul(a, b), atol=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            matmul(rng.normal(size=(2, 3)), rng.normal(size=(2, 3)))


class TestSoftmax:
    def test_uniform_scores(self):
        out = softmax(np.zeros(4), np.ones(4))
        assert np.allclose(out, 0.25)

    def test_exp_ratios(self):
        out = softmax(np.array([0.0, np.log(2.0)]), np.ones(2))
        assert np.allclose(out, [1.0 / 3.0, 2.0 / 3.0])

    def test_shift_invariance(self, rng):
        s = rng.normal(size=6)
        mask = np.array([1, 1, 0, 1, 0, 1.0])
        assert np.allclose(softmax(s, mask), softmax(s + 17.3, mask), atol=1e-12)

    def test_masked_positions_exactly_zero(self, rng):
        mask = np.array([1, 0, 1, 0, 1.0])
        out = softmax(rng.normal(size=5), mask)
        assert out[1] == 0.0 and out[3] == 0.0
        assert abs(out.sum() - 1.0) < 1e-12

    def test_all_masked_raises(self):
        with pytest.raises(ValueError):
            softmax(np.ones(3), np.zeros(3))

    def test_backward_matches_fd(self, rng):
        s = rng.normal(size=5)
        mask = np.array([1, 1, 0, 1, 1.0])
        r = rng.normal(size=5)

        store = ParamStore()
        store.add_array("s", s.copy())
        num = finite_difference_grad(lambda st: float(softmax(st["s"], mask) @ r), store)
        alpha = softmax(s, mask)
        ds = softmax_backward(alpha, r, mask)
        assert relative_error(ds, num["s"]) < 1e-7


class TestConv1d:
    def test_identity_filter(self, rng):
        x = rng.normal(size=(5, 1))
        filters = np.ones((1, 1, 1))
        out = conv1d_forward(x, filters, np.zeros(1))
        assert np.allclose(out, x)

    def test_width2_averaging(self):
        x = np.array([[1.0], [2.0], [3.0], [4.0]])
        filters = np.full((1, 2, 1), 0.5)
        out = conv1d_forward(x, filters, np.zeros(1))
        assert np.allclose(out[:, 0], [1.5, 2.5, 3.5])

    def test_matches_naive_loop(self, rng):
        x = rng.normal(size=(7, 3))
        filters = rng.normal(size=(4, 3, 3))
        bias = rng.normal(size=4)
        assert np.allclose(conv1d_forward(x, filters, bias),
                           naive_conv1d(x, filters, bias), atol=1e-12)

    def test_width_too_large(self, rng):
        with pytest.raises(ShapeError):
            conv1d_forward(rng.normal(size=(2, 1)), rng.normal(size=(1, 3, 1)),
                           np.zeros(1))

    def test_backward_matches_fd(self, rng):
        x = rng.normal(size=(6, 2))
        filters = rng.normal(size=(3, 2, 2))
        bias = rng.normal(size=3)
        r = rng.normal(size=(5, 3))

        store = ParamStore()
        store.add_array("f", filters.copy())
        store.add_array("b", bias.copy())
        store.add_array("x", x.copy())
        num = finite_difference_grad(
            lambda st: float(np.sum(conv1d_forward(st["x"], st["f"], st["b"]) * r)), store)
        d_x, d_f, d_b = conv1d_backward(x, filters, r)
        assert relative_error(d_f, num["f"]) < 1e-8
        assert relative_error(d_b, num["b"]) < 1e-8
        assert relative_error(d_x, num["x"]) < 1e-8


class TestDenseAndActivations:
    def test_dense_forward(self, rng):
        x = rng.normal(size=4)
        w = rng.normal(size=(4, 3))
        b = rng.normal(size=3)
        assert np.allclose(dense_forward(x, w, b), x @ w + b)

    def test_dense_backward_matches_fd(self, rng):
        x = rng.normal(size=4)
        w = rng.normal(size=(4, 3))
        b = rng.normal(size=3)
        r = rng.normal(size=3)
        store = ParamStore()
        store.add_array("w", w.copy())
        store.add_array("b", b.copy())
        store.add_array("x", x.copy())
        num = finite_difference_grad(
            lambda st: float(dense_forward(st["x"], st["w"], st["b"]) @ r), store)
        d_x, d_w, d_b = dense_backward(x, w, r)
        assert relative_error(d_w, num["w"]) < 1e-8
        assert relative_error(d_x, num["x"]) < 1e-8
        assert relative_error(d_b, num["b"]) < 1e-8

    def test_relu(self):
        assert np.array_equal(relu(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])


class TestDropout:
    def test_inference_mode_is_identity(self, rng):
        x = rng.normal(size=10)
        out, _ = dropout(x, 0.2, "infer")
        assert np.array_equal(out, x)

    def test_rate_zero_is_exact_identity(self, rng):
        x = rng.normal(size=10)
        out, _ = dropout(x, 0.0, "train", rng)
        assert np.array_equal(out, x)

    def test_seeded_reproducibility(self):
        x = np.ones(50)
        a, _ = dropout(x, 0.4, "train", np.random.default_rng(9))
        b, _ = dropout(x, 0.4, "train", np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_survivors_scaled(self):
        x = np.ones(2000)
        out, keep = dropout(x, 0.2, "train", np.random.default_rng(3))
        assert set(np.unique(out)) <= {0.0, 1.0 / 0.8}
        assert np.array_equal(out > 0, keep > 0)


class TestFiniteDifference:
    def test_quadratic(self):
        store = ParamStore()
        store.add_array("theta", np.array([3.0]))
        g = finite_difference_grad(lambda st: float(st["theta"][0] ** 2), store)
        assert abs(g["theta"][0] - 6.0) < 1e-6

    def test_constant_function(self, rng):
        store = ParamStore()
        store.add_array("theta", rng.normal(size=(2, 2)))
        g = finite_difference_grad(lambda st: 4.2, store)
        assert np.allclose(g["theta"], 0.0)


class TestParamStore:
    def test_duplicate_name_rejected(self, rng):
        store = ParamStore()
        store.add("w", (2, 2), rng)
        with pytest.raises(ValueError):
            store.add("w", (2, 2), rng)

    def test_init_range_and_scale(self, rng):
        store = ParamStore()
        arr = store.add("w", (200,), rng, scale=1.0)
        assert np.all(arr <= 1.0) and np.all(arr >= -1.0)
        small = store.add("v", (200,), rng, scale=0.1)
        assert np.max(np.abs(small)) <= 0.1

    def test_shape_fixed_after_construction(self, rng):
        store = ParamStore()
        store.add("w", (2, 2), rng)
        with pytest.raises(ShapeError):
            store["w"] = np.zeros((3, 3))
