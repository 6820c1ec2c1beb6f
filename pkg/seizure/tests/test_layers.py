import unittest

import numpy as np
import torch

from seizure.errors import ConfigError, ShapeError
from seizure.nn.layers import (
    ActivationKind,
    Lstm,
    activation_apply,
    conv1d_forward,
    conv2d_forward,
    dense_forward,
    lstm_forward,
    maxpool1d,
    maxpool2d,
    regularize,
)


class DenseConvTests(unittest.TestCase):
    def test_dense_hand_example(self) -> None:
        y = dense_forward(np.array([[1.0, 2.0]]), np.eye(2), np.ones(2))
        np.testing.assert_allclose(y.numpy(), [[2.0, 3.0]])

    def test_dense_matches_naive_loops(self) -> None:
        rng = np.random.default_rng(0)
        x, w, b = rng.standard_normal((4, 20)), rng.standard_normal((20, 512)), rng.standard_normal(512)
        naive = np.array([[sum(x[n, i] * w[i, j] for i in range(20)) + b[j] for j in range(512)] for n in range(4)])
        np.testing.assert_allclose(dense_forward(x, w, b).numpy(), naive, atol=1e-12)

    def test_dense_shape_mismatch(self) -> None:
        with self.assertRaises(ShapeError):
            dense_forward(np.zeros((1, 3)), np.zeros((2, 2)), np.zeros(2))

    def test_conv2d_delta_kernel_is_identity(self) -> None:
        x = np.random.default_rng(1).standard_normal((5, 4, 1))
        kernel = np.zeros((3, 3, 1, 1))
        kernel[1, 1, 0, 0] = 1.0
        np.testing.assert_allclose(conv2d_forward(x, kernel).numpy(), x)

    def test_conv2d_zero_padding(self) -> None:
        y = conv2d_forward(np.full((4, 4, 1), 2.0), np.ones((3, 3, 1, 1))).numpy()[..., 0]
        self.assertEqual(y[0, 0], 8.0)
        self.assertEqual(y[0, 1], 12.0)
        self.assertEqual(y[1, 1], 18.0)

    def test_conv2d_is_cross_correlation(self) -> None:
        x = np.arange(9, dtype=np.float64).reshape(3, 3, 1)
        kernel = np.zeros((3, 3, 1, 1))
        kernel[0, 0, 0, 0] = 1.0
        y = conv2d_forward(x, kernel).numpy()[..., 0]
        self.assertEqual(y[1, 1], x[0, 0, 0])
        self.assertEqual(y[2, 2], x[1, 1, 0])
        self.assertEqual(y[0, 0], 0.0)

    def test_conv2d_keeps_spatial_extent(self) -> None:
        kernels = np.zeros((3, 3, 1, 16))
        self.assertEqual(tuple(conv2d_forward(np.zeros((26, 22, 1)), kernels).shape), (26, 22, 16))

    def test_conv2d_channel_mismatch(self) -> None:
        with self.assertRaises(ShapeError):
            conv2d_forward(np.zeros((4, 4, 2)), np.zeros((3, 3, 1, 1)))

    def test_maxpool2d_floors_odd_extents(self) -> None:
        self.assertEqual(tuple(maxpool2d(np.zeros((26, 22, 16))).shape), (13, 11, 16))
        self.assertEqual(tuple(maxpool2d(np.zeros((13, 11, 32))).shape), (6, 5, 32))
        self.assertEqual(tuple(maxpool2d(np.zeros((6, 5, 64))).shape), (3, 2, 64))

    def test_maxpool2d_takes_block_maximum(self) -> None:
        x = np.array([[1.0, 5.0], [3.0, 2.0]])[..., None]
        self.assertEqual(float(maxpool2d(x)[0, 0, 0]), 5.0)

    def test_maxpool2d_needs_two_rows(self) -> None:
        with self.assertRaises(ShapeError):
            maxpool2d(np.zeros((1, 4, 1)))

    def test_conv1d_and_pool_shapes(self) -> None:
        y = conv1d_forward(np.zeros((210, 384)), np.zeros((3, 384, 16)))
        self.assertEqual(tuple(y.shape), (210, 16))
        self.assertEqual(tuple(maxpool1d(y, 8).shape), (26, 16))

    def test_conv1d_delta_kernel_is_identity(self) -> None:
        x = np.random.default_rng(2).standard_normal((9, 1))
        kernel = np.zeros((3, 1, 1))
        kernel[1, 0, 0] = 1.0
        np.testing.assert_allclose(conv1d_forward(x, kernel).numpy(), x)

    def test_maxpool1d_boundary(self) -> None:
        self.assertEqual(tuple(maxpool1d(np.zeros((8, 3)), 8).shape), (1, 3))
        with self.assertRaises(ShapeError):
            maxpool1d(np.zeros((7, 3)), 8)


def _zero_lstm_params(input_size: int, hidden: int, suffixes=("",)) -> dict[str, np.ndarray]:
    params = {}
    for s in suffixes:
        params[f"weight_ih_l0{s}"] = np.zeros((4 * hidden, input_size))
        params[f"weight_hh_l0{s}"] = np.zeros((4 * hidden, hidden))
        params[f"bias_ih_l0{s}"] = np.zeros(4 * hidden)
        params[f"bias_hh_l0{s}"] = np.zeros(4 * hidden)
    return params


class LstmTests(unittest.TestCase):
    def test_zero_parameters_keep_state_at_zero(self) -> None:
        x = np.random.default_rng(3).standard_normal((6, 4))
        out = lstm_forward(x, _zero_lstm_params(4, 3))
        np.testing.assert_array_equal(out.numpy(), np.zeros((6, 3)))

    def test_single_step_hand_gates(self) -> None:
        params = _zero_lstm_params(1, 1)
        params["weight_ih_l0"][2, 0] = 1.0
        h = float(lstm_forward(np.array([[1.0]]), params, return_sequences=False)[0])
        self.assertAlmostEqual(h, 0.5 * np.tanh(0.5 * np.tanh(1.0)), places=12)

    def test_backward_half_equals_forward_on_reversed_input(self) -> None:
        rng = np.random.default_rng(4)
        forward = {k: rng.standard_normal(v.shape) for k, v in _zero_lstm_params(3, 2).items()}
        both = dict(forward)
        both.update({f"{k}_reverse": v for k, v in forward.items()})
        x = rng.standard_normal((5, 3))
        out = lstm_forward(x, both, bidirectional=True).numpy()
        reversed_forward = lstm_forward(x[::-1].copy(), forward).numpy()
        self.assertEqual(out.shape, (5, 4))
        np.testing.assert_allclose(out[:, 2:], reversed_forward[::-1], atol=1e-12)

    def test_module_matches_explicit_equations(self) -> None:
        module = Lstm(3, 4, bidirectional=True, return_sequences=True, generator=torch.Generator().manual_seed(0))
        params = {name: p.detach() for name, p in module.lstm.named_parameters()}
        x = np.random.default_rng(5).standard_normal((2, 6, 3))
        with torch.no_grad():
            expected = lstm_forward(x, params, bidirectional=True)
            got = module(torch.as_tensor(x))
        np.testing.assert_allclose(got.numpy(), expected.numpy(), atol=1e-12)

    def test_forget_bias_starts_at_one(self) -> None:
        module = Lstm(2, 3, bidirectional=False, return_sequences=False, generator=torch.Generator().manual_seed(0))
        np.testing.assert_array_equal(module.lstm.bias_ih_l0.detach().numpy()[3:6], np.ones(3))

    def test_mismatched_input_width(self) -> None:
        with self.assertRaises(ShapeError):
            lstm_forward(np.zeros((4, 2)), _zero_lstm_params(3, 2))


class ActivationTests(unittest.TestCase):
    def test_elu(self) -> None:
        y = activation_apply("elu", np.array([-50.0, 0.0, 1.0])).numpy()
        np.testing.assert_allclose(y, [-1.0, 0.0, 1.0], atol=1e-12)

    def test_softsign(self) -> None:
        np.testing.assert_allclose(activation_apply(ActivationKind.SOFTSIGN, np.array([1.0, -1.0])).numpy(), [0.5, -0.5])

    def test_relu_matches_oracle(self) -> None:
        x = np.random.default_rng(6).standard_normal(1000)
        np.testing.assert_array_equal(activation_apply("relu", x).numpy(), np.maximum(0.0, x))

    def test_linear_sigmoid_tanh(self) -> None:
        x = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_array_equal(activation_apply("linear", x).numpy(), x)
        np.testing.assert_allclose(activation_apply("sigmoid", x).numpy(), 1.0 / (1.0 + np.exp(-x)))
        np.testing.assert_allclose(activation_apply("tanh", x).numpy(), np.tanh(x))

    def test_unknown_kind(self) -> None:
        with self.assertRaises(ConfigError):
            activation_apply("swish", np.zeros(2))


class RegularizeTests(unittest.TestCase):
    def test_inference_is_identity(self) -> None:
        x = np.random.default_rng(7).standard_normal(100)
        np.testing.assert_array_equal(regularize("dropout", x, False, 0, rate=0.5).numpy(), x)
        np.testing.assert_array_equal(regularize("gaussian_noise", x, False, 0, std=1.0).numpy(), x)

    def test_zero_rate_is_identity_in_training(self) -> None:
        x = np.random.default_rng(8).standard_normal(100)
        np.testing.assert_array_equal(regularize("dropout", x, True, 0, rate=0.0).numpy(), x)

    def test_dropout_statistics(self) -> None:
        y = regularize("dropout", np.ones(1_000_000), True, seed=0, rate=0.5).numpy()
        self.assertLess(abs(np.count_nonzero(y) / y.size - 0.5), 0.002)
        self.assertLess(abs(y.mean() - 1.0), 0.01)
        self.assertEqual(set(np.unique(y).tolist()), {0.0, 2.0})

    def test_same_seed_same_mask(self) -> None:
        x = np.ones(1000)
        a = regularize("dropout", x, True, seed=3, rate=0.3).numpy()
        b = regularize("dropout", x, True, seed=3, rate=0.3).numpy()
        np.testing.assert_array_equal(a, b)

    def test_gaussian_noise_std(self) -> None:
        y = regularize("gaussian_noise", np.zeros(200_000), True, seed=1, std=0.1).numpy()
        self.assertAlmostEqual(float(y.std()), 0.1, places=3)

    def test_rate_of_one_is_rejected(self) -> None:
        with self.assertRaises(ConfigError):
            regularize("dropout", np.ones(3), True, 0, rate=1.0)


if __name__ == "__main__":
    unittest.main()
