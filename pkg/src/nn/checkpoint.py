"""Binary checkpoint format for Network parameters.

Layout (little-endian): magic ``OR8W``, format version u32, nine u32 config
fields, then per tensor: name length u16, UTF-8 name, rank u8, dims u32 each,
float32 data.
"""
import os
import struct
from typing import Dict

import numpy as np

from src.nn.layers import ShapeError
from src.nn.network import Network, NetworkConfig, param_shapes
from src.utils.constants import CHECKPOINT_MAGIC, CHECKPOINT_VERSION

_CONFIG_FIELDS = 9


class CheckpointFormatError(Exception):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


# ----------------------------------------------------------------------
def save_checkpoint(net: Network, path: str) -> None:
    """Write *net* to *path* atomically."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    chunks = [CHECKPOINT_MAGIC,
              struct.pack('<I', CHECKPOINT_VERSION),
              struct.pack(f'<{_CONFIG_FIELDS}I', *net.config.as_ints())]
    for name, value in net.params.items():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded)) + encoded)
        chunks.append(struct.pack('<B', value.ndim) + struct.pack(f'<{value.ndim}I', *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype='<f4').tobytes())
    tmp_path = path + ".tmp"
    with open(tmp_path, 'wb') as f:
        f.write(b"".join(chunks))
    os.replace(tmp_path, path)


# ----------------------------------------------------------------------
class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        if self.offset + count > len(self.data):
            raise CheckpointFormatError(f"truncated checkpoint while reading {what}", self.offset)
        chunk = self.data[self.offset:self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    @property
    def exhausted(self) -> bool:
        return self.offset >= len(self.data)


def read_checkpoint(path: str):
    """Return (config, params) without building a Network."""
    with open(path, 'rb') as f:
        reader = _Reader(f.read())

    magic = reader.take(4, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}", 0)
    (version,) = reader.unpack('<I', "version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}", 4)
    config_offset = reader.offset
    try:
        config = NetworkConfig.from_ints(reader.unpack(f'<{_CONFIG_FIELDS}I', "config block"))
    except ValueError as exc:
        raise CheckpointFormatError(f"invalid config block: {exc}", config_offset) from None

    params: Dict[str, np.ndarray] = {}
    while not reader.exhausted:
        start = reader.offset
        (name_len,) = reader.unpack('<H', "tensor name length")
        try:
            name = reader.take(name_len, "tensor name").decode('utf-8')
        except UnicodeDecodeError:
            raise CheckpointFormatError("tensor name is not UTF-8", start) from None
        (rank,) = reader.unpack('<B', f"rank of {name}")
        dims = reader.unpack(f'<{rank}I', f"dims of {name}")
        count = int(np.prod(dims)) if rank else 1
        raw = reader.take(4 * count, f"data of {name}")
        params[name] = np.frombuffer(raw, dtype='<f4').reshape(dims).astype(np.float32)

    expected = param_shapes(config)
    missing = sorted(set(expected) - set(params))
    if missing:
        raise CheckpointFormatError(f"checkpoint is missing tensors {missing}", reader.offset)
    unexpected = sorted(set(params) - set(expected))
    if unexpected:
        raise CheckpointFormatError(f"checkpoint has unexpected tensors {unexpected}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise CheckpointFormatError(
                f"tensor {name} has shape {params[name].shape}, config implies {shape}")
    return config, params


def load_checkpoint(path: str, expected: NetworkConfig | None = None) -> Network:
    """Load a Network; with *expected*, refuse a checkpoint built for another config."""
    config, params = read_checkpoint(path)
    if expected is not None:
        check_compatible(config, expected)
    return Network(config, params)


def check_compatible(found: NetworkConfig, expected: NetworkConfig) -> None:
    """Raise ShapeError naming the first layer whose parameter shapes differ."""
    found_shapes = param_shapes(found)
    for name, shape in param_shapes(expected).items():
        if found_shapes.get(name) != shape:
            raise ShapeError(
                f"layer {name.split('.')[0]}: {name} is {found_shapes.get(name)} in checkpoint, "
                f"expected {shape}"
            )
    if found.input_size != expected.input_size:
        raise ShapeError(f"input size {found.input_size} in checkpoint, expected {expected.input_size}")
