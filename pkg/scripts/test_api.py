import sys, os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from fastapi.testclient import TestClient

from app.main import app

client = TestClient(app)

TABLE_ONE = {
    "modalities": ["Face", "Fingerprint", "Iris"],
    "rows": [
        {"probe_id": "Subject 1", "gallery_id": "Subject 1", "scores": [None, 0.74, 1.00]},
        {"probe_id": "Subject 2", "gallery_id": "Subject 2", "scores": [0.41, 0.89, 0.47]},
        {"probe_id": "Subject 3", "gallery_id": "Subject 3", "scores": [0.27, None, 0.03]},
        {"probe_id": "Subject 4", "gallery_id": "Subject 4", "scores": [0.85, 0.00, 0.31]},
    ],
}

SMALL_SYNTH = {
    "m": 3,
    "n_genuine": 30,
    "n_imposter": 300,
    "genuine_means": [0.7, 0.65, 0.75],
    "imposter_means": [0.3, 0.35, 0.25],
    "genuine_corr": [[1.0, 0.8, 0.8], [0.8, 1.0, 0.8], [0.8, 0.8, 1.0]],
    "imposter_corr": [[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]],
    "noise_scale": [0.12, 0.12, 0.12],
    "seed": 4,
}


def test_health():
    res = client.get("/health")
    assert res.status_code == 200
    assert res.json()["status"] == "ok"


def test_dataset_summary():
    res = client.post("/datasets/summary", json=TABLE_ONE)
    assert res.status_code == 200, res.text
    body = res.json()
    assert body["summary"]["n_vectors"] == 4
    assert body["summary"]["natural_missing_pct"] == 50.0
    # labels default to probe == gallery
    assert body["summary"]["n_genuine"] == 4
    assert body["correlation"]["imposter"] is None


def test_dataset_summary_rejects_short_rows():
    bad = {"modalities": ["a", "b"], "rows": [{"probe_id": "p", "gallery_id": "p", "scores": [0.1]}]}
    res = client.post("/datasets/summary", json=bad)
    assert res.status_code == 422
    assert res.json()["detail"]["error"] == "parse_error"


def test_roc_endpoint():
    payload = {
        "scores": [0.9, 0.8, 0.4, 0.5, 0.3, 0.1],
        "labels": ["genuine", "genuine", "genuine", "imposter", "imposter", "imposter"],
        "target_fmr": 0.0,
        "include_curve": True,
    }
    res = client.post("/metrics/roc", json=payload)
    assert res.status_code == 200, res.text
    body = res.json()
    assert abs(body["tmr_at_fmr"] - 2 / 3) < 1e-12
    assert len(body["curve"]) == 7
    assert body["n_genuine"] == 3 and body["n_imposter"] == 3


def test_roc_endpoint_single_class_is_422():
    res = client.post("/metrics/roc", json={"scores": [0.1, 0.2], "labels": ["genuine", "genuine"]})
    assert res.status_code == 422
    assert res.json()["detail"]["error"] == "metric_error"


def test_experiment_run_on_synthetic_scores():
    config = {
        "synth": SMALL_SYNTH,
        "proportions": [0, 30],
        "variants": ["any"],
        "imputers": ["none", "median"],
        "trials": 2,
        "balance": "off",
        "target_fmr": 0.01,
    }
    res = client.post("/experiments/run", json={"config": config})
    assert res.status_code == 200, res.text
    body = res.json()
    assert len(body["cells"]) == 1 * 1 * 2 * 2
    assert body["n_failed"] == 0
    assert all(len(c["trial_tmr"]) == 2 for c in body["cells"])


def test_experiment_config_is_validated():
    res = client.post("/experiments/run", json={"config": {"proportions": [95]}})
    assert res.status_code == 422


def test_compare_natural_needs_missing_scores():
    res = client.post("/experiments/compare-natural", json={"config": {"synth": SMALL_SYNTH}})
    assert res.status_code == 422
    res = client.post("/experiments/compare-natural", json={"config": {}})
    assert res.status_code == 422
    assert res.json()["detail"]["error"] == "comparison_error"


def run_tests():
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"PASS: {name}")
            except AssertionError as e:
                failures += 1
                print(f"FAIL: {name} {e}")
    return failures


if __name__ == "__main__":
    sys.exit(1 if run_tests() else 0)
