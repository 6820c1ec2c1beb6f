import io
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch

import numpy as np

from seizure.architectures.config import SystemConfig
from seizure.main import main
from seizure.models import DetCurve, DetPoint, Metrics
from seizure.nn.layers import ActivationKind
from seizure.nn.optim import OptimizerKind
from seizure.scoring.reports import read_metrics_csv
from seizure.signal.annotations import save_posteriors
from seizure.signal.tracks import PosteriorTrack

TINY_INI = """
[experiment]
name = tiny
seed = 2
train_records = 2
eval_records = 1

[synthesis]
duration_s = 30
num_channels = 4
artifact_max_channels = 2
seizure_count = 2
seizure_min_s = 4
seizure_max_s = 6

[hmm]
num_states = 2
num_mixtures = 2
iterations = 1
max_sequences_per_class = 40

[system]
kind = hmm_only
"""


def _run(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def _fields(summary: str) -> dict[str, str]:
    return dict(part.split("=", 1) for part in summary.split()[1:])


class CommandLineTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)
        self.config = self.root / "tiny.ini"
        self.config.write_text(TINY_INI)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_shapes_summary(self) -> None:
        code, stdout, _ = _run("shapes", "--system", "hmm", "--out", str(self.root / "shapes"))
        self.assertEqual(code, 0)
        self.assertEqual(len(stdout.splitlines()), 1)
        self.assertTrue(stdout.startswith("shapes system=hmm_only "))
        self.assertEqual(_fields(stdout)["consistent"], "true")
        self.assertTrue((self.root / "shapes" / "manifest.json").is_file())
        self.assertTrue((self.root / "shapes" / "experiment.ini").is_file())

    def test_config_error_exit_code(self) -> None:
        bad = self.root / "bad.ini"
        bad.write_text("[experiment]\ncolour = blue\n")
        code, stdout, stderr = _run("shapes", "--config", str(bad), "--out", str(self.root / "x"))
        self.assertEqual(code, 2)
        self.assertEqual(stdout, "")
        self.assertIn("error=config_error detail=", stderr)

    def test_invalid_jobs(self) -> None:
        code, _, stderr = _run("shapes", "--jobs", "0", "--out", str(self.root / "x"))
        self.assertEqual(code, 2)
        self.assertIn("error=config_error", stderr)

    def test_missing_model_is_a_data_error(self) -> None:
        code, _, stderr = _run("infer", "--model", str(self.root / "nothing"), "--out", str(self.root / "x"), "a.ndet")
        self.assertEqual(code, 3)
        self.assertIn("error=data_error", stderr)

    def test_score_length_mismatch(self) -> None:
        code, _, stderr = _run("score", "--hyp", "a.csv", "b.csv", "--ref", "a.csv", "--out", str(self.root / "x"))
        self.assertEqual(code, 3)
        self.assertIn("error=alignment_error", stderr)

    def test_reference_shorter_than_posteriors_is_padded_with_background(self) -> None:
        hyp, ref = self.root / "rec.posteriors.csv", self.root / "rec.csv"
        save_posteriors(PosteriorTrack(np.array([0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])), hyp)
        ref.write_text("start_s,stop_s,label\n0.0,2.0,bckg\n2.0,5.0,seiz\n")
        code, stdout, _ = _run("score", "--hyp", str(hyp), "--ref", str(ref), "--out", str(self.root / "score"))
        self.assertEqual(code, 0)
        fields = _fields(stdout)
        self.assertEqual((fields["sensitivity"], fields["specificity"]), ("1.0000", "1.0000"))

    def test_validation_errors_become_config_errors(self) -> None:
        def invalid(cfg, args) -> str:
            SystemConfig(window_s=4)
            return "unreachable"

        with patch.dict("seizure.main.COMMANDS", {"shapes": invalid}):
            code, stdout, stderr = _run("shapes", "--out", str(self.root / "x"))
        self.assertEqual(code, 2)
        self.assertEqual(stdout, "")
        last = stderr.strip().splitlines()[-1]
        self.assertTrue(last.startswith("error=config_error detail=invalid configuration:"))
        self.assertIn("window_s must be an odd number of seconds", last)

    def test_linear_algebra_failure_is_a_numeric_error(self) -> None:
        def diverging(cfg, args) -> str:
            raise np.linalg.LinAlgError("SVD did not converge")

        with patch.dict("seizure.main.COMMANDS", {"shapes": diverging}):
            code, _, stderr = _run("shapes", "--out", str(self.root / "x"))
        self.assertEqual(code, 4)
        self.assertEqual(
            stderr.strip().splitlines()[-1], "error=numeric_failure detail=LinAlgError: SVD did not converge"
        )

    def test_full_pipeline(self) -> None:
        common = ("--config", str(self.config))
        code, stdout, _ = _run("synth", *common, "--out", str(self.root / "synth"))
        self.assertEqual(code, 0)
        self.assertEqual(_fields(stdout)["records"], "3")

        code, stdout, _ = _run("train", *common, "--corpus", str(self.root / "synth" / "train"), "--out", str(self.root / "train"))
        self.assertEqual(code, 0)
        self.assertEqual(_fields(stdout)["system"], "hmm_only")

        record = self.root / "synth" / "eval" / "rec_0000.ndet"
        code, stdout, _ = _run(
            "infer", *common, "--model", str(self.root / "train" / "system"), "--out", str(self.root / "infer"), str(record)
        )
        self.assertEqual(code, 0)
        self.assertEqual(_fields(stdout)["epochs"], "30")

        scored = (
            "--hyp", str(self.root / "infer" / "rec_0000.posteriors.csv"),
            "--ref", str(self.root / "synth" / "eval" / "rec_0000.csv"),
        )
        code, stdout, _ = _run("score", *common, *scored, "--out", str(self.root / "score"))
        self.assertEqual(code, 0)
        self.assertIn("sensitivity=", stdout)
        self.assertEqual(len(read_metrics_csv(self.root / "score" / "metrics.csv")), 1)

        code, stdout, _ = _run("det", *common, *scored, "--plot", "--out", str(self.root / "det"))
        self.assertEqual(code, 0)
        self.assertEqual(_fields(stdout)["points"], "101")
        self.assertTrue((self.root / "det" / "det.png").is_file())


class AblationCommandTests(unittest.TestCase):
    def _ablate(self, axis: str) -> tuple[list, list[dict[str, str]]]:
        result = (
            Metrics(sensitivity=0.8, specificity=0.9, fa_per_24h=10.0),
            DetCurve(points=[]),
            DetPoint(threshold=0.5, sensitivity=0.8, specificity=0.9, fa_per_24h=10.0, false_positive_rate=0.1, miss_rate=0.2),
        )
        with tempfile.TemporaryDirectory() as tmp, \
                patch("seizure.main.corpora_for", return_value=([], [])), \
                patch("seizure.main.train_system", return_value=object()) as train, \
                patch("seizure.main.evaluate_system", return_value=result):
            code, stdout, _ = _run("ablate", "--axis", axis, "--system", "hmm_lstm", "--out", tmp)
            self.assertEqual(code, 0)
            self.assertEqual(_fields(stdout)["rows"], str(train.call_count))
            rows = read_metrics_csv(Path(tmp) / f"ablation_{axis}.csv")
        return [call.args[0] for call in train.call_args_list], rows

    def test_optimizer_axis(self) -> None:
        configs, rows = self._ablate("optimizer")
        self.assertEqual([c.optimizer.kind for c in configs], list(OptimizerKind))
        self.assertEqual([r["optimizer"] for r in rows], [k.value for k in OptimizerKind])
        self.assertTrue(all(c.kind.value == "hmm_lstm" for c in configs))

    def test_activation_axis(self) -> None:
        configs, rows = self._ablate("activation")
        self.assertEqual([c.activation for c in configs], list(ActivationKind))
        self.assertEqual([r["activation"] for r in rows], [k.value for k in ActivationKind])


if __name__ == "__main__":
    unittest.main()
