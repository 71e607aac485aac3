"""Versioned binary codec for state snapshots.

Layout: a 4-byte magic, a little-endian u16 format version, one encoded
value (normally a dict), and a trailing CRC32 of everything before it.
Values are type-tagged; dict keys act as field tags, so snapshots remain
decodable by field name even if optional fields come and go.  Floats are
stored as raw IEEE doubles, which makes round-trips bit-exact.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import DecodeError

MAGIC = b"TSMS"
VERSION = 1

_NONE = 0x00
_BOOL = 0x01
_INT = 0x02
_FLOAT = 0x03
_STR = 0x04
_LIST = 0x05
_DICT = 0x06
_ARRAY_F64 = 0x07
_ARRAY_I64 = 0x08


def _encode_value(out: bytearray, value) -> None:
    if value is None:
        out.append(_NONE)
    elif isinstance(value, bool):
        out.append(_BOOL)
        out.append(1 if value else 0)
    elif isinstance(value, (int, np.integer)):
        out.append(_INT)
        out += struct.pack("<q", int(value))
    elif isinstance(value, (float, np.floating)):
        out.append(_FLOAT)
        out += struct.pack("<d", float(value))
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out.append(_STR)
        out += struct.pack("<I", len(raw))
        out += raw
    elif isinstance(value, np.ndarray):
        if value.dtype == np.float64:
            out.append(_ARRAY_F64)
        elif value.dtype == np.int64:
            out.append(_ARRAY_I64)
        else:
            raise TypeError(f"unsupported array dtype: {value.dtype}")
        out.append(value.ndim)
        for dim in value.shape:
            out += struct.pack("<I", dim)
        out += np.ascontiguousarray(value).astype(value.dtype, copy=False).tobytes()
    elif isinstance(value, (list, tuple)):
        out.append(_LIST)
        out += struct.pack("<I", len(value))
        for item in value:
            _encode_value(out, item)
    elif isinstance(value, dict):
        out.append(_DICT)
        out += struct.pack("<I", len(value))
        for key, item in value.items():
            raw = key.encode("utf-8")
            out += struct.pack("<H", len(raw))
            out += raw
            _encode_value(out, item)
    else:
        raise TypeError(f"cannot encode {type(value).__name__}")


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DecodeError("snapshot truncated")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0]


def _decode_value(r: _Reader):
    tag = r.take(1)[0]
    if tag == _NONE:
        return None
    if tag == _BOOL:
        return r.take(1)[0] != 0
    if tag == _INT:
        return r.unpack("<q")
    if tag == _FLOAT:
        return r.unpack("<d")
    if tag == _STR:
        return r.take(r.unpack("<I")).decode("utf-8")
    if tag in (_ARRAY_F64, _ARRAY_I64):
        ndim = r.take(1)[0]
        shape = tuple(r.unpack("<I") for _ in range(ndim))
        dtype = np.float64 if tag == _ARRAY_F64 else np.int64
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(count * 8)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    if tag == _LIST:
        return [_decode_value(r) for _ in range(r.unpack("<I"))]
    if tag == _DICT:
        out = {}
        for _ in range(r.unpack("<I")):
            key = r.take(r.unpack("<H")).decode("utf-8")
            out[key] = _decode_value(r)
        return out
    raise DecodeError(f"unknown type tag 0x{tag:02x}")


def dumps(value) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    _encode_value(out, value)
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def loads(blob: bytes):
    if len(blob) < len(MAGIC) + 6:
        raise DecodeError("snapshot too short")
    if blob[:4] != MAGIC:
        raise DecodeError("bad snapshot magic")
    body, crc = blob[:-4], struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(body) != crc:
        raise DecodeError("snapshot checksum mismatch")
    r = _Reader(body)
    r.take(4)
    version = r.unpack("<H")
    if version != VERSION:
        raise DecodeError(f"unsupported snapshot version {version}")
    value = _decode_value(r)
    if r.pos != len(body):
        raise DecodeError("trailing bytes after snapshot payload")
    return value
