"""Summarize evaluation results and check the expected ordering of the systems."""

import argparse
import json
import sys
from pathlib import Path

RESULTS_DIR = Path(__file__).parent / "results"
MIN_SENSITIVITY = 0.7
MIN_SPECIFICITY = 0.7
CNN_LSTM_MIN_SENSITIVITY = 0.85


def check_system_floor(result: dict) -> bool:
    """Every system should separate the synthetic classes at its default threshold."""
    m = result["corpora"]["matched"]["at_threshold"]
    return m["sensitivity"] >= MIN_SENSITIVITY and m["specificity"] >= MIN_SPECIFICITY


def check_ordering(by_system: dict) -> dict:
    """cnn_lstm versus hmm_only at their operating points nearest the target sensitivity."""
    if "cnn_lstm" not in by_system or "hmm_only" not in by_system:
        return {"checked": False}
    cnn = by_system["cnn_lstm"]["corpora"]["matched"]
    hmm = by_system["hmm_only"]["corpora"]["matched"]
    return {
        "checked": True,
        "cnn_lstm_sensitivity": cnn["operating_point"]["sensitivity"],
        "cnn_lstm_fa": cnn["operating_point"]["fa_per_24h"],
        "hmm_only_fa": hmm["operating_point"]["fa_per_24h"],
        "cnn_lstm_sensitive": cnn["operating_point"]["sensitivity"] >= CNN_LSTM_MIN_SENSITIVITY,
        "fewer_false_alarms": cnn["operating_point"]["fa_per_24h"] < hmm["operating_point"]["fa_per_24h"],
    }


def compute_all_metrics(payload: dict) -> dict:
    results = payload.get("results", [])
    successful = [r for r in results if "error" not in r]
    if not successful:
        return {"error": "No successful results to score."}

    table = []
    for r in successful:
        row = {"system": r["system"], "train_seconds": r["train_seconds"]}
        for corpus, data in r["corpora"].items():
            m = data["at_threshold"]
            row[corpus] = {k: round(v, 4) for k, v in m.items()}
        row["floor_met"] = check_system_floor(r)
        table.append(row)

    return {
        "experiment": payload.get("experiment"),
        "n_systems": len(successful),
        "n_failed": len(results) - len(successful),
        "systems": table,
        "ordering": check_ordering({r["system"]: r for r in successful}),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--experiment", default="trend")
    args = parser.parse_args()

    results_path = RESULTS_DIR / args.experiment / "evaluation_results.json"
    if not results_path.exists():
        print(f"No results file found at {results_path}")
        print("Run run_evaluation.py first.")
        sys.exit(1)

    with open(results_path) as f:
        payload = json.load(f)

    metrics = compute_all_metrics(payload)

    metrics_path = results_path.parent / "metrics.json"
    with open(metrics_path, "w") as f:
        json.dump(metrics, f, indent=2)

    print("=" * 72)
    print(f"Seizure detection - {metrics.get('experiment')}")
    print("=" * 72)
    print(f"  {'system':<10} {'sens':>7} {'spec':>7} {'FA/24h':>9}   {'held-out sens':>13} {'spec':>7} {'FA/24h':>9}")
    for row in metrics.get("systems", []):
        m, h = row.get("matched", {}), row.get("held_out", {})
        status = "PASS" if row["floor_met"] else "FAIL"
        print(
            f"  {row['system']:<10} {m.get('sensitivity', 0):7.3f} {m.get('specificity', 0):7.3f} "
            f"{m.get('fa_per_24h', 0):9.1f}   {h.get('sensitivity', 0):13.3f} {h.get('specificity', 0):7.3f} "
            f"{h.get('fa_per_24h', 0):9.1f}  {status}"
        )

    ordering = metrics.get("ordering", {})
    if ordering.get("checked"):
        print("\n" + "-" * 72)
        print(
            f"  cnn_lstm @ sens {ordering['cnn_lstm_sensitivity']:.3f}: FA/24h {ordering['cnn_lstm_fa']:.1f} "
            f"vs hmm_only {ordering['hmm_only_fa']:.1f}  "
            f"-> {'PASS' if ordering['fewer_false_alarms'] and ordering['cnn_lstm_sensitive'] else 'FAIL'}"
        )

    print(f"\nMetrics saved to {metrics_path}")


if __name__ == "__main__":
    main()
