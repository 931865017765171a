"""Canonical binary encoding.

Every multi-field structure is a sequence of fields, each prefixed by its
length as a 4-byte big-endian integer. Nested sequences are encoded first and
then embedded as a single field. The encoding doubles as the hashing preimage.
"""
from __future__ import annotations

import struct
from collections.abc import Sequence
from typing import Union

Field = Union[bytes, bytearray, int, str, bool, Sequence]

_LEN = struct.Struct(">I")


def encode_int(n: int) -> bytes:
    return n.to_bytes(max(1, (n.bit_length() + 8) // 8), "big", signed=True)


def decode_int(b: bytes) -> int:
    return int.from_bytes(b, "big", signed=True)


def _field_bytes(value: Field) -> bytes:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, bool):
        return b"\x01" if value else b"\x00"
    if isinstance(value, int):
        return encode_int(value)
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, Sequence):
        return encode(*value)
    raise TypeError(f"cannot encode {type(value).__name__}")


def encode(*fields: Field) -> bytes:
    out = bytearray()
    for f in fields:
        b = _field_bytes(f)
        out += _LEN.pack(len(b))
        out += b
    return bytes(out)


def decode(buf: bytes) -> list[bytes]:
    """Split an encoded sequence back into raw field bytes."""
    fields = []
    pos = 0
    view = memoryview(buf)
    while pos < len(buf):
        if pos + 4 > len(buf):
            raise ValueError("truncated length prefix")
        (n,) = _LEN.unpack_from(buf, pos)
        pos += 4
        if pos + n > len(buf):
            raise ValueError("truncated field")
        fields.append(bytes(view[pos:pos + n]))
        pos += n
    return fields


def decode_bool(b: bytes) -> bool:
    if b not in (b"\x00", b"\x01"):
        raise ValueError("bad boolean encoding")
    return b == b"\x01"
