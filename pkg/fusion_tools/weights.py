"""Binary weight files of named float32 tensors.

Layout, all integers little-endian u32:

    b"FMCF" | version | entry count | entries...
    entry: name length | name (UTF-8) | rank | dims x rank | float32 LE values
"""

import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from .errors import InputError, WeightFormatError
from .models import FusionConfig
from .params import FusionParams, named_tensors, params_from_named

logger = logging.getLogger(__name__)

MAGIC = b"FMCF"
VERSION = 1
_U32 = struct.Struct("<I")
_VALUE = np.dtype("<f4")


def encode_weights(tensors: Dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, _U32.pack(VERSION), _U32.pack(len(tensors))]
    for name, tensor in tensors.items():
        encoded = name.encode("utf-8")
        array = np.asarray(tensor, dtype=_VALUE, order="C")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(dim) for dim in array.shape)
        chunks.append(array.tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise WeightFormatError(
                f"file truncated while reading {what}: need {size} bytes, "
                f"{len(self.data) - self.offset} left",
                self.offset,
            )
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(_U32.size, what))[0]


def decode_weights(data: bytes) -> Dict[str, np.ndarray]:
    """Parse a weight file image into named arrays.

    Raises:
        WeightFormatError: bad magic or version, truncation, trailing bytes,
            undecodable or duplicate names. The message carries the byte offset.
    """
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise WeightFormatError(f"bad magic, expected {MAGIC!r}", 0)
    version_offset = reader.offset
    version = reader.u32("version")
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}, expected {VERSION}", version_offset)
    count = reader.u32("entry count")

    tensors: Dict[str, np.ndarray] = {}
    for index in range(count):
        name_offset = reader.offset
        raw_name = reader.take(reader.u32(f"name length of entry {index}"), f"name of entry {index}")
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as err:
            raise WeightFormatError(f"entry {index} name is not UTF-8", name_offset) from err
        if name in tensors:
            raise WeightFormatError(f"duplicate entry {name}", name_offset)
        rank = reader.u32(f"rank of {name}")
        shape = tuple(reader.u32(f"dims of {name}") for _ in range(rank))
        count_values = int(np.prod(shape, dtype=np.int64))
        values = reader.take(count_values * _VALUE.itemsize, f"values of {name}")
        tensors[name] = np.frombuffer(values, dtype=_VALUE).reshape(shape).astype(np.float32)

    if reader.offset != len(data):
        raise WeightFormatError(f"{len(data) - reader.offset} trailing bytes after the last entry", reader.offset)
    return tensors


def save_weights(params: FusionParams, path: Union[str, Path]) -> int:
    """Write every parameter tensor to `path`; returns the number of entries."""
    tensors = named_tensors(params)
    try:
        Path(path).write_bytes(encode_weights(tensors))
    except OSError as err:
        raise InputError(f"cannot write weights to {path}: {err}") from err
    logger.info("wrote %d tensors to %s", len(tensors), path)
    return len(tensors)


def read_weight_file(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    try:
        data = Path(path).read_bytes()
    except OSError as err:
        raise InputError(f"cannot read weights from {path}: {err}") from err
    logger.debug("decoding %d bytes from %s", len(data), path)
    return decode_weights(data)


def load_weights(path: Union[str, Path], config: FusionConfig) -> FusionParams:
    """Parameters for `config` read from `path`; the entry set must match exactly."""
    tensors = read_weight_file(path)
    try:
        params = params_from_named(tensors, config)
    except WeightFormatError as err:
        raise WeightFormatError(f"{path}: {err}") from err
    logger.info("loaded %d tensors from %s", len(tensors), path)
    return params
