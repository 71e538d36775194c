"""Binary feature/checkpoint formats and the loss-history CSV."""

import numpy as np
import pytest

from racnet.errors import ValidationError
from racnet.fileio import (read_loss_history, read_racf, read_racw,
                           write_loss_history, write_racf, write_racw)


def test_racf_roundtrip_bytes(tmp_path):
    rng = np.random.default_rng(50)
    feats = rng.normal(size=(6, 2, 2, 5)).astype(np.float32)
    p1, p2 = tmp_path / "a.racf", tmp_path / "b.racf"
    write_racf(p1, feats)
    loaded = read_racf(p1)
    assert loaded.dtype == np.float32
    np.testing.assert_array_equal(loaded, feats)
    write_racf(p2, loaded)
    assert p1.read_bytes() == p2.read_bytes()


def test_racf_header_layout(tmp_path):
    feats = np.zeros((3, 1, 2, 4), dtype=np.float32)
    path = tmp_path / "h.racf"
    write_racf(path, feats)
    raw = path.read_bytes()
    assert raw[:4] == b"RACF"
    assert np.frombuffer(raw[4:24], dtype="<u4").tolist() == [1, 3, 1, 2, 4]
    assert len(raw) == 24 + 4 * feats.size


def test_racf_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.racf"
    path.write_bytes(b"XXXX" + b"\x00" * 40)
    with pytest.raises(ValidationError):
        read_racf(path)


def test_racf_rejects_truncation_and_trailing(tmp_path):
    feats = np.ones((2, 1, 1, 3), dtype=np.float32)
    path = tmp_path / "t.racf"
    write_racf(path, feats)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(ValidationError):
        read_racf(path)
    path.write_bytes(raw + b"\x00")
    with pytest.raises(ValidationError):
        read_racf(path)


def test_racf_rejects_wrong_rank():
    with pytest.raises(ValidationError):
        write_racf("ignored", np.zeros((2, 2, 2), dtype=np.float32))


def test_racw_roundtrip(tmp_path):
    rng = np.random.default_rng(51)
    tensors = {
        "encoder.conv.w": rng.normal(size=(3, 3, 3, 2, 4)).astype(np.float32),
        "pred.head.b": np.array([0.1], dtype=np.float32),
        "meta.scalar": np.float32(7.0),
    }
    p1, p2 = tmp_path / "a.racw", tmp_path / "b.racw"
    write_racw(p1, tensors)
    loaded = read_racw(p1)
    assert set(loaded) == set(tensors)
    for name in tensors:
        np.testing.assert_array_equal(loaded[name], np.asarray(tensors[name], dtype=np.float32))
    write_racw(p2, loaded)
    assert p1.read_bytes() == p2.read_bytes()


def test_racw_preserves_insertion_order(tmp_path):
    tensors = {"zz": np.zeros(2, np.float32), "aa": np.ones(3, np.float32)}
    path = tmp_path / "o.racw"
    write_racw(path, tensors)
    assert list(read_racw(path)) == ["zz", "aa"]


def test_racw_rejects_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "bad.racw"
    path.write_bytes(b"RACX" + b"\x00" * 8)
    with pytest.raises(ValidationError):
        read_racw(path)
    write_racw(path, {"w": np.ones((2, 2), np.float32)})
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(ValidationError):
        read_racw(path)


def test_loss_history_roundtrip(tmp_path):
    history = [(0, 0.5), (1, 0.1 + 0.2), (2, 3.0e-17)]
    path = tmp_path / "loss.csv"
    write_loss_history(path, history)
    assert read_loss_history(path) == history
    assert path.read_text().splitlines()[0] == "step,loss"


def test_loss_history_rejects_bad_rows(tmp_path):
    path = tmp_path / "loss.csv"
    path.write_text("step,loss\n0,abc\n")
    with pytest.raises(ValidationError):
        read_loss_history(path)
    path.write_text("wrong,header\n")
    with pytest.raises(ValidationError):
        read_loss_history(path)
