import tempfile
import unittest
from pathlib import Path

import numpy as np

from seizure.errors import DataError, HeaderError
from seizure.storage import file_sha256, load_bundle, save_bundle, verify_manifest, write_manifest


class BundleTests(unittest.TestCase):
    def test_round_trip_with_meta(self) -> None:
        arrays = {"w": np.arange(6, dtype=np.float64).reshape(2, 3), "labels": np.array([1, 0, 1], dtype=np.int8)}
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "sub" / "model.npz"
            save_bundle(path, "hmm", arrays, {"label": "seiz", "states": 3})
            loaded, meta = load_bundle(path, "hmm")
        self.assertEqual(set(loaded), {"w", "labels"})
        np.testing.assert_array_equal(loaded["w"], arrays["w"])
        self.assertEqual(loaded["labels"].dtype, np.int8)
        self.assertEqual(meta, {"label": "seiz", "states": 3})

    def test_identical_inputs_give_identical_bytes(self) -> None:
        arrays = {"x": np.random.default_rng(0).random(10)}
        with tempfile.TemporaryDirectory() as tmp:
            a, b = Path(tmp) / "a.npz", Path(tmp) / "b.npz"
            save_bundle(a, "pca", arrays, {"n": 1})
            save_bundle(b, "pca", arrays, {"n": 1})
            self.assertEqual(file_sha256(a), file_sha256(b))

    def test_wrong_kind(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.npz"
            save_bundle(path, "pca", {"x": np.zeros(2)})
            with self.assertRaises(HeaderError):
                load_bundle(path, "network")

    def test_not_a_bundle(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "x.npz"
            path.write_bytes(b"not a zip file")
            with self.assertRaises(HeaderError):
                load_bundle(path, "pca")
            plain = Path(tmp) / "plain.npz"
            np.savez(plain, x=np.zeros(2))
            with self.assertRaises(HeaderError):
                load_bundle(plain, "pca")

    def test_missing_file(self) -> None:
        with self.assertRaises(DataError):
            load_bundle("/nonexistent/bundle.npz", "pca")


class ManifestTests(unittest.TestCase):
    def test_detects_changes(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            (root / "a.txt").write_text("alpha")
            (root / "nested").mkdir()
            (root / "nested" / "b.txt").write_text("beta")
            write_manifest(root)
            verify_manifest(root)

            (root / "nested" / "b.txt").write_text("gamma")
            with self.assertRaises(DataError):
                verify_manifest(root)
            write_manifest(root)
            (root / "a.txt").unlink()
            with self.assertRaises(DataError):
                verify_manifest(root)

    def test_missing_manifest(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(DataError):
                verify_manifest(tmp)


if __name__ == "__main__":
    unittest.main()
