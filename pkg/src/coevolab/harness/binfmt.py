"""Archive and checkpoint files.

Both share one container layout, all integers little-endian:

    magic        8 bytes   b"CVLARCH\\0" (archive) or b"CVLCKPT\\0" (checkpoint)
    version      u32
    digest       32 bytes  manifest sha256 (zeros in archives)
    header_len   u32
    header       UTF-8 JSON; its "blobs" list names each block: name, dtype, shape
    blobs        raw little-endian arrays in header order ('<u8' ids, '<f8' genes/values)
    trailer      32 bytes  sha256 of everything above (detects truncation)

Genes are stored as (count, gene_count) '<f8' matrices next to a '<u8'
id vector, one pair per population section.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError

ARCHIVE_MAGIC = b"CVLARCH\x00"
CHECKPOINT_MAGIC = b"CVLCKPT\x00"
FORMAT_VERSION = 1
_NO_DIGEST = bytes(32)


def write_container(path, magic: bytes, header: dict, blobs: dict, digest: bytes = _NO_DIGEST,
                    version: int = FORMAT_VERSION):
    layout, payload = [], []
    for name, arr in blobs.items():
        arr = np.asarray(arr)
        dtype = "<u8" if arr.dtype.kind in "iu" else "<f8"
        arr = np.ascontiguousarray(arr, dtype=dtype)
        layout.append({"name": name, "dtype": dtype, "shape": list(arr.shape)})
        payload.append(arr.tobytes())
    header = dict(header, blobs=layout)
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = b"".join([magic, struct.pack("<I", version), digest, struct.pack("<I", len(head)), head, *payload])
    data = body + hashlib.sha256(body).digest()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def read_container(path, magic: bytes, supported_version: int = FORMAT_VERSION):
    """Returns (header, blobs, digest)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 8 + 4 + 32 + 4 + 32 or data[:8] != magic:
        raise CheckpointError(f"{path}: not a {magic[:-1].decode()} file or truncated")
    body, trailer = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != trailer:
        raise CheckpointError(f"{path}: checksum mismatch (file truncated or corrupted)")
    (version,) = struct.unpack_from("<I", body, 8)
    if version != supported_version:
        raise CheckpointError(f"{path}: format version {version} not supported (expected {supported_version})")
    digest = body[12:44]
    (hlen,) = struct.unpack_from("<I", body, 44)
    header = json.loads(body[48:48 + hlen].decode())
    offset = 48 + hlen
    blobs = {}
    for spec in header.pop("blobs"):
        dtype = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"], dtype=np.int64))
        arr = np.frombuffer(body, dtype=dtype, count=count, offset=offset).reshape(spec["shape"])
        offset += count * dtype.itemsize
        blobs[spec["name"]] = arr.astype(dtype.newbyteorder("="))
    if offset != len(body):
        raise CheckpointError(f"{path}: trailing bytes after payload")
    return header, blobs, digest
