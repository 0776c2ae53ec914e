import json
import subprocess
import sys

import numpy as np
import pytest

import topohead


def line_distances(coords):
    c = np.asarray(coords, dtype=float)
    return np.abs(c[:, None] - c[None, :])


def test_barcode_and_mst():
    d = line_distances([0, 1, 3, 7])
    assert list(topohead.h0_barcode(d)) == [1.0, 2.0, 4.0]
    assert topohead.h0_mean(d) == pytest.approx(7 / 3)
    assert topohead.mst(d) == [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 4.0)]
    assert topohead.rtd0(d, d) == 0.0
    a = np.array([[0, 1.0], [1.0, 0]])
    b = np.array([[0, 0.3], [0.3, 0]])
    assert topohead.rtd0(a, b) == pytest.approx(0.35)


def test_head_features():
    a = np.array([[0.9, 0.1], [0.4, 0.6]], dtype=np.float32)
    assert topohead.sym_adjacency(a)[0, 1] == pytest.approx(0.6)
    assert topohead.asymmetry_sum(a) == pytest.approx(0.025)
    assert topohead.h0m_sym(a) == pytest.approx(0.6)
    assert topohead.h0m_pc(a) == pytest.approx(1.0)
    assert topohead.h0m_pc(np.eye(3, dtype=np.float32)) == 2.0
    with pytest.raises(topohead.TopoheadError):
        topohead.sym_adjacency(np.full((2, 2), 1.5, dtype=np.float32))


def test_attention_block_shape():
    n = 4
    att = np.full((12, 12, n, n), 1.0 / n, dtype=np.float32)
    values = topohead.attention_features(att)
    names = topohead.attention_feature_names()
    assert values.shape == (864,) and len(names) == 864
    col = values[names.index("L05_H01_h0m_sym")]
    assert col == pytest.approx(0.75)


def test_tensor_roundtrip(tmp_path):
    x = np.arange(6, dtype=np.float32).reshape(2, 3) / 4
    topohead.write_tensor(tmp_path / "x.tten", x)
    assert (tmp_path / "x.tten").stat().st_size == 8 + 2 * 4 + 6 * 4
    np.testing.assert_array_equal(topohead.read_tensor(tmp_path / "x.tten"), x)


def test_classifier_and_metrics():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(0, 0.1, (20, 3)), rng.normal(1, 0.1, (20, 3))])
    y = ["a"] * 20 + ["b"] * 20
    model = topohead.train_l1_logreg(x, y, lam=1e-3)
    assert model.classes == ["a", "b"]
    assert topohead.accuracy(y, model.predict(x)) == 100.0
    np.testing.assert_allclose(model.predict_proba(x).sum(axis=1), 1.0, atol=1e-9)
    assert json.loads(json.dumps(model.to_json()))["n_features"] == 3
    assert topohead.eer([0.6, 0.4, 0.7, 0.3], [1, 1, 0, 0]) == pytest.approx(50.0)
    assert topohead.separation_quality([0.1, 0.3], [0.6, 1.0]) == pytest.approx(3.0)
    assert topohead.pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)


def test_rank_heads_and_barcode():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(20, 144))
    b = rng.normal(size=(20, 144))
    b[:, 17] += 10
    reports = topohead.rank_heads(a, b)
    assert len(reports) == 144
    assert (reports[0]["layer"], reports[0]["head"]) == (1, 5)
    att = np.full((3, 3), 1 / 3, dtype=np.float32)
    bars = topohead.colored_barcode(att, ["sil", "N", "N"], [0.7])
    assert len(bars["bars"]) == 2 and bars["essential"]["death"] is None


def test_cli_pipeline(tmp_path):
    data, out = tmp_path / "data", tmp_path / "out"
    assert topohead.run_cli(["synth", "--out", str(data), "--count", "8", "--frames", "5"]) == 0
    manifest = str(data / "manifest.jsonl")
    assert topohead.run_cli(["extract", "--manifest", manifest, "--out", str(out)]) == 0
    header = (out / "features.csv").read_text().splitlines()[0].split(",")
    assert header[:4] == ["id", "label", "speaker", "group"] and len(header) == 868
    emb = topohead.embedding_features(data / "s0000")
    assert emb.shape == (51,)
    assert topohead.pooled_baseline(data / "s0000", "first").shape == (9216,)
    assert topohead.run_cli(["extract", "--nope"]) == 1
