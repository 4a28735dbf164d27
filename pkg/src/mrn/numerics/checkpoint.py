"""Binary parameter checkpoints.

Layout (little-endian)::

    b"MRNC"  u32 version
    u32 config_len, utf-8 config text (flat ``key = value`` lines)
    u32 param_count
    per param: u32 name_len, utf-8 name, u32 rank, u32 extents[rank], f64 payload
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"MRNC"
VERSION = 1


def save_checkpoint(path, params: dict[str, np.ndarray], config_text: str = "") -> None:
    """Write atomically: a temp file in the target directory is renamed into place."""
    path = Path(path)
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    cfg = config_text.encode("utf-8")
    chunks += [struct.pack("<I", len(cfg)), cfg, struct.pack("<I", len(params))]
    for name, arr in params.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        chunks += [struct.pack("<I", len(raw)), raw, struct.pack("<I", arr.ndim)]
        chunks += [struct.pack(f"<{arr.ndim}I", *arr.shape), arr.tobytes()]
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(chunks))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated file while reading {what}", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def load_checkpoint(path) -> tuple[str, dict[str, np.ndarray]]:
    r = _Reader(Path(path).read_bytes())
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad checkpoint magic", 0)
    version = r.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", 4)
    config_text = r.take(r.u32("config length"), "config").decode("utf-8")
    params: dict[str, np.ndarray] = {}
    for _ in range(r.u32("parameter count")):
        name = r.take(r.u32("name length"), "name").decode("utf-8")
        rank = r.u32("rank")
        shape = struct.unpack(f"<{rank}I", r.take(4 * rank, "extents"))
        n = int(np.prod(shape)) if rank else 1
        payload = r.take(8 * n, f"payload of {name}")
        params[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    if r.pos != len(r.buf):
        raise FormatError("trailing bytes after last parameter", r.pos)
    return config_text, params
