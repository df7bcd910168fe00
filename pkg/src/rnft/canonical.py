"""Order-stable binary encoding used for signatures, block hashes and state roots.

Layout: a one-byte type tag, then
  int    8-byte big-endian signed
  float  8-byte IEEE-754 big-endian
  bytes  4-byte length + raw
  str    4-byte length + UTF-8
  list   4-byte count + items
  dict   4-byte count + (key, value) pairs, keys sorted lexicographically
"""
import hashlib
import struct

_INT = struct.Struct(">q")
_FLOAT = struct.Struct(">d")
_LEN = struct.Struct(">I")


def encode(value) -> bytes:
    out = bytearray()
    _encode(value, out)
    return bytes(out)


def _encode_int(value, out):
    out += b"i"
    out += _INT.pack(value)


def _encode_bool(value, out):
    out += b"T" if value else b"F"


def _encode_float(value, out):
    out += b"f"
    out += _FLOAT.pack(value)


def _encode_bytes(value, out):
    out += b"b"
    out += _LEN.pack(len(value))
    out += value


def _encode_str(value, out):
    raw = value.encode("utf-8")
    out += b"s"
    out += _LEN.pack(len(raw))
    out += raw


def _encode_list(value, out):
    out += b"l"
    out += _LEN.pack(len(value))
    for item in value:
        _encode(item, out)


def _encode_dict(value, out):
    out += b"d"
    out += _LEN.pack(len(value))
    for key in sorted(value):
        if type(key) is not str:
            raise TypeError(f"dict keys must be str, got {type(key).__name__}")
        _encode_str(key, out)
        _encode(value[key], out)


def _encode_none(value, out):
    out += b"N"


_ENCODERS = {
    type(None): _encode_none,
    bool: _encode_bool,
    int: _encode_int,
    float: _encode_float,
    bytes: _encode_bytes,
    bytearray: _encode_bytes,
    str: _encode_str,
    list: _encode_list,
    tuple: _encode_list,
    dict: _encode_dict,
}


def _encode(value, out: bytearray) -> None:
    enc = _ENCODERS.get(type(value))
    if enc is None:
        # subclasses (IntEnum, OrderedDict, ...) fall back to their base type
        for base, fn in _ENCODERS.items():
            if base is not bool and isinstance(value, base):
                enc = fn
                break
        else:
            raise TypeError(f"cannot canonically encode {type(value).__name__}")
    enc(value, out)


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hash_value(value) -> bytes:
    return digest(encode(value))
