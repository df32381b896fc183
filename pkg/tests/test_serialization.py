import json
import struct
import zlib

import numpy as np
import pytest

from deeprace.frontend import Vocabulary
from deeprace.model import Hyperparams, forward, init_params, tiny_model
from deeprace.serialization import MAGIC, FormatError, dumps, load_model, loads, save_model


@pytest.fixture
def params():
    vocab = Vocabulary(("FuncDef", "For", "ID"))
    hp = Hyperparams(embed_dim=3, filters=2, window_sizes=(3, 4, 5), max_len=9, seed=7)
    return init_params(vocab, hp)


def test_round_trip(params, tmp_path):
    save_model(params, tmp_path / "m.drm")
    back = load_model(tmp_path / "m.drm")
    assert back.vocab.classes == params.vocab.classes and back.hp == params.hp
    for (name, a), (_, b) in zip(params.tensors(), back.tensors()):
        assert a.shape == b.shape and np.array_equal(a, b), name
    assert dumps(back) == dumps(params)
    assert [p.name for p in tmp_path.iterdir()] == ["m.drm"]


def test_round_trip_preserves_predictions():
    p64, sample = tiny_model(seed=4)
    p32 = p64.astype(np.float32)
    back = loads(dumps(p32))
    assert np.array_equal(forward(back, sample).S, forward(p32, sample).S)


def test_layout_read_independently(params):
    """Walk the bytes with struct and zlib only."""
    data = dumps(params)
    assert data[:4] == b"DRM1"
    (n,) = struct.unpack("<I", data[4:8])
    meta = json.loads(data[8:8 + n])
    assert meta["format_version"] == 1 and meta["vocab"] == ["FuncDef", "For", "ID"]
    assert list(data[8:8 + n].decode()) == list(json.dumps(meta, sort_keys=True))
    floats = (len(data) - 8 - n - 4) // 4
    V2, d, F = 5, 3, 2
    assert floats == V2 * d + sum(F * s * d + F for s in (3, 4, 5)) + 2 * 3 * F + 2
    E = struct.unpack_from(f"<{V2 * d}f", data, 8 + n)
    assert E[:d] == (0.0, 0.0, 0.0)
    np.testing.assert_array_equal(np.array(E).reshape(V2, d), params.E)
    assert struct.unpack("<I", data[-4:])[0] == zlib.crc32(data[4:-4])


def test_wrong_magic(params):
    with pytest.raises(FormatError, match="DRM1") as err:
        loads(b"XXXX" + dumps(params)[4:])
    assert err.value.offset == 0
    with pytest.raises(FormatError):
        loads(b"")


def test_every_truncation_is_rejected(params):
    data = dumps(params)
    for cut in range(len(data)):
        with pytest.raises(FormatError):
            loads(data[:cut])


def test_bit_flip_in_arrays_hits_checksum(params):
    data = bytearray(dumps(params))
    data[-10] ^= 0x01
    with pytest.raises(FormatError, match="checksum") as err:
        loads(bytes(data))
    assert err.value.offset == len(data) - 4
    assert "byte offset" in str(err.value)


def test_trailing_bytes(params):
    data = dumps(params)
    extended = data[:-4] + b"\0\0\0\0"
    extended += struct.pack("<I", zlib.crc32(extended[4:]))
    with pytest.raises(FormatError, match="trailing"):
        loads(extended)


def _with_meta(data, mutate):
    (n,) = struct.unpack("<I", data[4:8])
    meta = json.loads(data[8:8 + n])
    mutate(meta)
    raw = json.dumps(meta, sort_keys=True).encode()
    payload = struct.pack("<I", len(raw)) + raw + data[8 + n:-4]
    return MAGIC + payload + struct.pack("<I", zlib.crc32(payload))


def test_unknown_version(params):
    bad = _with_meta(dumps(params), lambda m: m.update(format_version=2))
    with pytest.raises(FormatError, match="version 2"):
        loads(bad)


def test_invalid_hyperparameters(params):
    bad = _with_meta(dumps(params), lambda m: m["hyperparams"].update(filters=0))
    with pytest.raises(FormatError, match="hyperparameters"):
        loads(bad)


def test_failed_save_leaves_no_temp_file(params, tmp_path):
    params.W_out = object()  # not an array; dumps fails mid-write
    with pytest.raises(Exception):
        save_model(params, tmp_path / "m.drm")
    assert list(tmp_path.iterdir()) == []
