import json
import os
from pathlib import Path

import jsonschema
import numpy as np
import pytest

import sma_pipeline as sp

SCHEMA = Path(os.environ.get("SMA_SCHEMA_DIR", Path(__file__).resolve().parents[2] / "schemas")) / "report.schema.json"


def naive_conv(x, w, b, d):
    n, _, t = x.shape
    o, _, k = w.shape
    y = np.tile(b[None, :, None], (n, 1, t)).astype(np.float64)
    for tap in range(k):
        shift = (k - 1 - tap) * d
        if shift >= t:
            continue
        past = np.zeros_like(x)
        past[:, :, shift:] = x[:, :, : t - shift]
        y += np.einsum("oc,nct->not", w[:, :, tap], past)
    return y


def make_subject(root, sid, seed, seconds=60):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.array([1, 2], dtype=np.int32), seconds // 2 * 700)
    t = np.arange(labels.size) / 700.0
    freq = 0.2 + 0.15 * labels
    resp = np.sin(2 * np.pi * freq * t) + 0.05 * rng.standard_normal(t.size)
    bvp_t = np.arange(seconds * 64) / 64.0
    bvp = np.sin(2 * np.pi * (0.5 + 0.3 * (bvp_t >= seconds / 2)) * bvp_t)
    sp.save_recording(
        root / sid,
        sid,
        {"chest.RESP": (700.0, resp.astype(np.float32)), "wrist.BVP": (64.0, bvp.astype(np.float32))},
        labels,
    )


@pytest.fixture(scope="module")
def data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("neutral")
    for i, sid in enumerate(["S2", "S3"]):
        make_subject(root, sid, i)
    return root


def tiny_config():
    return {
        "window_s": 10,
        "stride_s": 5,
        "folds": 2,
        "model": {"stem": {"kernel": 3, "channels": 4, "dilation": 1}, "blocks": [{"kernel": 3, "channels": 4, "dilation": 2}], "epochs": 2},
    }


def test_conv_matches_numpy_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c, o, k, d, t = rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 5), rng.integers(1, 4), rng.integers(1, 30)
        x = rng.standard_normal((2, c, t))
        w = rng.standard_normal((o, c, k))
        b = rng.standard_normal(o)
        np.testing.assert_allclose(sp.causal_conv1d(x, w, b, int(d)), naive_conv(x, w, b, d), atol=1e-10)


def test_model_round_trip_and_training(tmp_path):
    m = sp.ResTcn({"num_classes": 2, "epochs": 3})
    assert m.receptive_field == 35
    assert m.parameter_count == m.parameters().size
    assert np.unique(m.parameters()).size > m.parameter_count // 2
    x = np.zeros((8, 1, 40), dtype=np.float32)
    x[4:] = np.sin(np.arange(40) / 3.0)
    y = np.array([0] * 4 + [1] * 4, dtype=np.int32)
    curve = m.fit(x, y, seed=1)
    assert len(curve) == 3
    classes, probs = m.predict(x)
    assert probs.shape == (8, 2)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-6)
    path = tmp_path / "m.rtcn"
    m.save(path)
    again = sp.ResTcn.load(path)
    np.testing.assert_array_equal(again.parameters(), m.parameters())
    np.testing.assert_array_equal(sp.ResTcn.from_bytes(m.to_bytes()).logits(x), m.logits(x))
    with pytest.raises(sp.CorruptionError):
        sp.ResTcn.from_bytes(m.to_bytes()[:-3])


def test_neutral_format_round_trip(data_root):
    rec = sp.load_recording(data_root / "S2")
    assert rec["subject_id"] == "S2"
    rate, resp = rec["channels"]["chest.RESP"]
    assert rate == 700.0 and resp.shape == (1, rec["labels"].size)
    expected = np.repeat(np.array([1, 2], dtype=np.int32), 30 * 700)
    np.testing.assert_array_equal(rec["labels"], expected)
    assert [p.name for p in map(Path, sp.list_subjects(data_root))] == ["S2", "S3"]


def test_dataset_and_labels(data_root):
    x, y, subjects, classes = sp.build_dataset(data_root, "chest.RESP", "emotion4", tiny_config())
    assert classes == 4 and x.shape[1:] == (1, 700)
    assert set(y.tolist()) == {0, 1}
    assert set(subjects) == {"S2", "S3"}
    assert sp.map_label(2, "stress_binary") == 1
    assert sp.map_label(5, "emotion4") is None


def test_experiment_report_matches_schema(data_root):
    schema = json.loads(SCHEMA.read_text())
    doc = sp.run_experiment(data_root, {**tiny_config(), "mode": "personalized"})
    jsonschema.validate(doc, schema)
    assert doc["subjects"] == ["S2", "S3"]
    (run,) = doc["reports"]
    assert run["plan"] == "kfold" and len(run["folds"]) == 2

    suite, table = sp.run_suite(data_root, {**tiny_config(), "modalities": ["chest.RESP", "wrist.TEMP"]})
    jsonschema.validate(suite, schema)
    assert "subjects: 2" in table
    skipped = [r for r in suite["reports"] if r["skipped"]]
    assert {r["modality"] for r in skipped} == {"wrist.TEMP"}


def test_metrics_risk_and_gradcheck():
    assert sp.confusion([0, 1, 1, 1], [0, 0, 1, 1], 2).tolist() == [[1, 0], [1, 2]]
    s = sp.scores([0, 1, 1, 1], [0, 0, 1, 1], 2)
    assert s["accuracy"] == 0.75
    assert s["macro_f1"] == pytest.approx(0.7333, abs=1e-4)
    assert sp.assess_risk("low", 0.5) == "high"
    assert sp.assess_risk("low", 0.95) == "low"
    with pytest.raises(sp.ArgumentError):
        sp.assess_risk("severe", 0.5)
    assert all(e["passed"] for e in sp.gradcheck())


def test_errors_are_typed(tmp_path):
    with pytest.raises(sp.FormatError):
        sp.run_experiment(tmp_path, {"unknown_key": 1})
    with pytest.raises(sp.SmaError):
        sp.load_recording(tmp_path / "missing")
