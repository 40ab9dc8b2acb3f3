import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sosgen.dataio import (
    FLAG_PREPROCESSED,
    DatasetManifest,
    FormatError,
    SampleRecord,
    config_hash,
    holdout_split,
    read_sample,
    split_dataset,
    write_sample,
)


def random_record(seed=0, shape=(192, 2048), gt_shape=(384, 384)):
    rng = np.random.default_rng(seed)
    return SampleRecord(
        rf=rng.standard_normal(shape),
        gt=rng.standard_normal(gt_shape).astype(np.float32) + 1500.0,
        flags=FLAG_PREPROCESSED,
        seed=seed,
    )


def test_round_trip_bit_exact(tmp_path):
    rec = random_record()
    path = tmp_path / "s.sosd"
    write_sample(rec, path)
    back = read_sample(path)
    assert back.rf.tobytes() == rec.rf.tobytes()
    assert back.gt.tobytes() == rec.gt.tobytes()
    assert back.flags == rec.flags
    assert back.seed == rec.seed


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 64))
def test_round_trip_any_shape(tmp_path_factory, seed, n_ch, n_s):
    tmp = tmp_path_factory.mktemp("rt")
    rec = random_record(seed, shape=(n_ch, n_s), gt_shape=(n_s, n_ch))
    path = tmp / "s.sosd"
    write_sample(rec, path)
    back = read_sample(path)
    assert back.rf.tobytes() == rec.rf.tobytes()
    assert back.gt.tobytes() == rec.gt.tobytes()


def test_empty_rf_prediction_record(tmp_path):
    rec = SampleRecord(rf=np.empty((0, 0)), gt=np.full((96, 96), 1540.0), seed=3)
    path = tmp_path / "p.sosd"
    write_sample(rec, path)
    back = read_sample(path)
    assert back.rf.shape == (0, 0)
    assert back.gt.shape == (96, 96)


def test_truncation_detected(tmp_path):
    rec = random_record(shape=(4, 64), gt_shape=(8, 8))
    path = tmp_path / "s.sosd"
    write_sample(rec, path)
    data = path.read_bytes()
    path.write_bytes(data[:-1])
    with pytest.raises(FormatError, match="size mismatch"):
        read_sample(path)


def test_bad_magic_detected(tmp_path):
    rec = random_record(shape=(2, 8), gt_shape=(2, 2))
    path = tmp_path / "s.sosd"
    write_sample(rec, path)
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="magic"):
        read_sample(path)


def test_version_bump_detected(tmp_path):
    rec = random_record(shape=(2, 8), gt_shape=(2, 2))
    path = tmp_path / "s.sosd"
    write_sample(rec, path)
    data = bytearray(path.read_bytes())
    data[4:6] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="version"):
        read_sample(path)


def test_little_endian_layout(tmp_path):
    rec = SampleRecord(rf=np.array([[1.0]]), gt=np.array([[2.0]], dtype=np.float32), seed=7)
    path = tmp_path / "s.sosd"
    write_sample(rec, path)
    data = path.read_bytes()
    assert data[:4] == b"SOSD"
    assert int.from_bytes(data[4:6], "little") == 1  # version
    assert int.from_bytes(data[6:8], "little") == 1  # n_channels
    assert int.from_bytes(data[8:12], "little") == 1  # rx_samples
    assert np.frombuffer(data[28:36], dtype="<f8")[0] == 1.0
    assert np.frombuffer(data[36:40], dtype="<f4")[0] == 2.0


# ---------------------------------------------------------------------------
# manifest and splits


def make_manifest(n):
    m = DatasetManifest(config={"generator": "ellipsoids", "scale": "desk8", "count": n})
    for i in range(n):
        m.add_sample(file=f"sample_{i:05d}.sosd", seed=1000 + i, index=i)
    return m


def test_manifest_round_trip(tmp_path):
    m = make_manifest(5)
    path = tmp_path / "manifest.json"
    m.save(path)
    back = DatasetManifest.load(path)
    assert back.config == m.config
    assert back.samples == m.samples
    assert back.hash == m.hash


def test_manifest_hash_detects_tamper(tmp_path):
    m = make_manifest(2)
    path = tmp_path / "manifest.json"
    m.save(path)
    doc = json.loads(path.read_text())
    doc["config"]["count"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError, match="hash"):
        DatasetManifest.load(path)


def test_config_hash_stable_under_key_order():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_verify_files(tmp_path):
    m = make_manifest(2)
    for entry in m.samples:
        write_sample(random_record(shape=(2, 4), gt_shape=(2, 2)), tmp_path / entry["file"])
    m.verify_files(tmp_path)
    (tmp_path / m.samples[0]["file"]).unlink()
    with pytest.raises(FormatError, match="missing"):
        m.verify_files(tmp_path)


def test_reference_split_counts():
    m = make_manifest(6150)
    train, val, test = holdout_split(m, n_test=150, val_frac=0.10, seed=1)
    assert (len(train.samples), len(val.samples), len(test.samples)) == (5400, 600, 150)


def test_split_deterministic_and_partition():
    m = make_manifest(101)
    a = split_dataset(m, 0.6, 0.2, seed=5)
    b = split_dataset(m, 0.6, 0.2, seed=5)
    for x, y in zip(a, b):
        assert x.samples == y.samples
    all_files = sorted(e["file"] for part in a for e in part.samples)
    assert all_files == sorted(e["file"] for e in m.samples)
    sets = [set(e["file"] for e in part.samples) for part in a]
    assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])


def test_split_fraction_validation():
    m = make_manifest(10)
    with pytest.raises(ValueError):
        split_dataset(m, 0.8, 0.3, seed=0)
    with pytest.raises(ValueError):
        holdout_split(m, n_test=10, seed=0)
