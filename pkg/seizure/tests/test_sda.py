import unittest

import numpy as np

from seizure.errors import ShapeError
from seizure.nn.sda import sda_classifier_specs, sda_finetune, sda_pretrain


def _data(seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    label = rng.integers(0, 2, 120)
    x = np.clip(rng.random((120, 12)) * 0.5 + label[:, None] * 0.4, 0.0, 1.0)
    y = np.column_stack([label, 1 - label]).astype(np.float64)
    return x, y


class PretrainTests(unittest.TestCase):
    def test_same_seed_same_encoders(self) -> None:
        x, _ = _data()
        a = sda_pretrain(x, (8, 4), epochs=3, batch_size=20, learning_rate=0.1, seed=3)
        b = sda_pretrain(x, (8, 4), epochs=3, batch_size=20, learning_rate=0.1, seed=3)
        for (wa, ba), (wb, bb) in zip(a.encoders, b.encoders):
            np.testing.assert_array_equal(wa, wb)
            np.testing.assert_array_equal(ba, bb)

    def test_encoder_shapes_and_traces(self) -> None:
        x, _ = _data()
        result = sda_pretrain(x, (8, 4), epochs=5, batch_size=20, learning_rate=0.1, seed=0)
        self.assertEqual([w.shape for w, _ in result.encoders], [(12, 8), (8, 4)])
        self.assertEqual([len(t) for t in result.loss_traces], [5, 5])

    def test_reconstruction_loss_decreases(self) -> None:
        x, _ = _data(1)
        result = sda_pretrain(x, (6,), epochs=40, batch_size=10, learning_rate=0.5, seed=0)
        trace = result.loss_traces[0]
        self.assertLess(trace[-1], trace[0])


class FinetuneTests(unittest.TestCase):
    def test_classifier_layout(self) -> None:
        names = [spec.name for spec in sda_classifier_specs((8, 4))]
        self.assertEqual(names, ["encoder_1", "sigmoid_1", "encoder_2", "sigmoid_2", "logistic", "output"])

    def test_finetune_starts_from_pretrained_weights(self) -> None:
        x, y = _data(2)
        pretrained = sda_pretrain(x, (8, 4), epochs=2, batch_size=20, learning_rate=0.1, seed=0)
        network, trace = sda_finetune(pretrained, x, y, learning_rate=0.0, epochs=1, batch_size=30, seed=0)
        params = network.named_layer_parameters()
        np.testing.assert_array_equal(params["encoder_1.weight"].detach().numpy(), pretrained.encoders[0][0])
        np.testing.assert_array_equal(params["encoder_2.bias"].detach().numpy(), pretrained.encoders[1][1])
        self.assertEqual(network.output_shape, (2,))
        self.assertEqual(len(trace), 1)

    def test_finetune_learns_separable_labels(self) -> None:
        x, y = _data(3)
        pretrained = sda_pretrain(x, (8,), epochs=5, batch_size=20, learning_rate=0.1, seed=0)
        network, trace = sda_finetune(pretrained, x, y, learning_rate=0.5, epochs=60, batch_size=20, seed=0)
        self.assertLess(trace[-1], trace[0])
        accuracy = np.mean(network.predict(x).argmax(axis=1) == y.argmax(axis=1))
        self.assertGreater(accuracy, 0.8)

    def test_width_mismatch(self) -> None:
        x, y = _data()
        pretrained = sda_pretrain(x, (4,), epochs=1, batch_size=60, seed=0)
        with self.assertRaises(ShapeError):
            sda_finetune(pretrained, x[:, :10], y, epochs=1)


if __name__ == "__main__":
    unittest.main()
