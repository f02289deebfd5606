"""BSAR1 on-disk container for complex sample grids.

Layout: magic b"BSAR1", a little-endian u32 JSON header length, the
UTF-8 JSON header, the payload as little-endian float64 interleaved
(Re, Im) pairs in C order of the stated shape, and a trailing
little-endian u32 CRC-32 of the payload bytes.

The header records the variant ("run" or "image"), array shape, sweep
configuration, mesh provenance and creation time.  Creation time honors
the SOURCE_DATE_EPOCH environment variable so artifact trees can be
reproduced bit-for-bit.
"""

from __future__ import annotations

import datetime
import json
import os
import struct
import zlib

import numpy as np

MAGIC = b"BSAR1"
FORMAT_VERSION = 1


class ContainerError(Exception):
    pass


class VersionError(ContainerError):
    pass


class ChecksumError(ContainerError):
    pass


class TruncationError(ContainerError):
    pass


def creation_timestamp():
    """ISO-8601 UTC timestamp; SOURCE_DATE_EPOCH overrides wall time."""
    sde = os.environ.get("SOURCE_DATE_EPOCH")
    if sde is not None:
        dt = datetime.datetime.fromtimestamp(int(sde), datetime.timezone.utc)
    else:
        dt = datetime.datetime.now(datetime.timezone.utc)
    return dt.replace(microsecond=0).isoformat()


def write_container(path, header, payload):
    """Write a complex array with its JSON header to a BSAR1 file."""
    payload = np.ascontiguousarray(payload, dtype=np.complex128)
    header = dict(header)
    header.setdefault("format_version", FORMAT_VERSION)
    header.setdefault("created", creation_timestamp())
    header["shape"] = list(payload.shape)
    header["dtype"] = "complex128-le"
    raw = payload.astype("<c16").tobytes()
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hjson)))
        f.write(hjson)
        f.write(raw)
        f.write(struct.pack("<I", zlib.crc32(raw) & 0xFFFFFFFF))
    return header


def read_header(path):
    """Read just the JSON header (payload untouched)."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise VersionError(f"bad magic {magic!r}; not a BSAR1 file")
        ln = f.read(4)
        if len(ln) < 4:
            raise TruncationError("truncated header length")
        (n,) = struct.unpack("<I", ln)
        hjson = f.read(n)
        if len(hjson) < n:
            raise TruncationError("truncated JSON header")
        try:
            header = json.loads(hjson.decode("utf-8"))
        except ValueError as e:
            raise ContainerError(f"malformed JSON header: {e}")
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"unsupported format_version {header.get('format_version')!r}")
    return header


def read_container(path):
    """Read header and payload, verifying the trailing CRC-32."""
    header = read_header(path)
    with open(path, "rb") as f:
        f.seek(len(MAGIC))
        (n,) = struct.unpack("<I", f.read(4))
        f.seek(n, os.SEEK_CUR)
        shape = tuple(header["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = f.read(count * 16)
        if len(raw) < count * 16:
            raise TruncationError("truncated payload")
        tail = f.read(4)
        if len(tail) < 4:
            raise TruncationError("missing CRC-32 trailer")
        (crc_stored,) = struct.unpack("<I", tail)
    if zlib.crc32(raw) & 0xFFFFFFFF != crc_stored:
        raise ChecksumError("payload CRC-32 mismatch")
    payload = np.frombuffer(raw, dtype="<c16").astype(np.complex128).reshape(shape)
    return header, payload
