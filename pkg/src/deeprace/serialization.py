"""Binary model files.

Layout::

    b"DRM1"
    uint32 LE   metadata length n
    n bytes     UTF-8 JSON object (format version, hyperparameters, vocabulary)
    float32 LE  E, W_s and b_s for each window size ascending, W_out, b_out
    uint32 LE   CRC-32 of every byte after the magic
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .frontend import Vocabulary
from .model import Hyperparams, ModelParams

MAGIC = b"DRM1"
FORMAT_VERSION = 1


class FormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _shapes(hp: Hyperparams, n_rows: int) -> list[tuple[int, ...]]:
    d, F = hp.embed_dim, hp.filters
    out = [(n_rows, d)]
    for s in hp.window_sizes:
        out += [(F, s, d), (F,)]
    return out + [(2, len(hp.window_sizes) * F), (2,)]


def dumps(params: ModelParams) -> bytes:
    hp = asdict(params.hp)
    hp["window_sizes"] = list(params.hp.window_sizes)
    meta = json.dumps({"format_version": FORMAT_VERSION, "hyperparams": hp,
                       "vocab": list(params.vocab.classes)}, sort_keys=True).encode("utf-8")
    body = [struct.pack("<I", len(meta)), meta]
    body += [np.ascontiguousarray(a, dtype="<f4").tobytes() for _, a in params.tensors()]
    payload = b"".join(body)
    return MAGIC + payload + struct.pack("<I", zlib.crc32(payload))


def loads(data: bytes) -> ModelParams:
    if len(data) < len(MAGIC) or data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if len(data) < 12:
        raise FormatError("file truncated in header", len(data))
    payload, (crc,) = data[4:-4], struct.unpack("<I", data[-4:])
    (n_meta,) = struct.unpack_from("<I", data, 4)
    pos = 8
    if pos + n_meta > len(data) - 4:
        raise FormatError("metadata block runs past end of file", pos)
    try:
        meta = json.loads(data[pos:pos + n_meta].decode("utf-8"))
        version = meta["format_version"]
        hp_d = meta["hyperparams"]
        vocab = Vocabulary(tuple(meta["vocab"]))
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"unreadable metadata: {exc}", pos) from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}, expected {FORMAT_VERSION}", pos)
    try:
        hp = Hyperparams(**{k: v for k, v in hp_d.items() if k in Hyperparams.field_types()})
    except (TypeError, ValueError) as exc:
        raise FormatError(f"invalid hyperparameters: {exc}", pos) from exc
    pos += n_meta
    arrays = []
    for shape in _shapes(hp, vocab.n_rows):
        nbytes = 4 * int(np.prod(shape))
        if pos + nbytes > len(data) - 4:
            raise FormatError(f"array of shape {shape} truncated", pos)
        arrays.append(np.frombuffer(data, "<f4", int(np.prod(shape)), pos)
                      .reshape(shape).astype(np.float32))
        pos += nbytes
    if pos != len(data) - 4:
        raise FormatError(f"{len(data) - 4 - pos} unexpected trailing bytes", pos)
    if zlib.crc32(payload) != crc:
        raise FormatError("checksum mismatch", len(data) - 4)
    k = len(hp.window_sizes)
    return ModelParams(arrays[0], arrays[1:1 + 2 * k:2], arrays[2:2 + 2 * k:2],
                       arrays[-2], arrays[-1], vocab, hp)


def save_model(params: ModelParams, path: str | Path) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(dumps(params))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | Path) -> ModelParams:
    return loads(Path(path).read_bytes())
