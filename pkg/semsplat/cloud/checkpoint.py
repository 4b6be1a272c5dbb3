"""
Binary checkpoint of a trained cloud and, optionally, its decoder.

Layout (little-endian):
    b"SSPL1", uint32 N, uint32 feature_dim, uint32 sh_degree
    positions, rotations, log_scales, opacity_logits, sh_coeffs, features   (float32, C order)
    [b"DEC1", uint32 input_dim, uint32 hidden, uint32 num_classes,
     weights then biases of every layer                                      (float32, C order)]
"""
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from semsplat.cloud.gaussians import ATTRIBUTES, GaussianCloud
from semsplat.cloud.sh import num_coeffs
from semsplat.decoder.mlp import SemanticDecoder
from semsplat.exceptions import CorruptCheckpoint

logger = logging.getLogger(__name__)

CLOUD_MAGIC = b"SSPL1"
DECODER_MAGIC = b"DEC1"
_HEADER = struct.Struct("<III")
_FLOAT = np.dtype("<f4")


@dataclass
class Checkpoint:
    cloud: GaussianCloud
    decoder: Optional[SemanticDecoder] = None


def _cloud_shapes(n: int, feature_dim: int, sh_degree: int) -> List[Tuple[int, ...]]:
    return [(n, 3), (n, 4), (n, 3), (n, 1), (n, num_coeffs(sh_degree), 3), (n, feature_dim)]


def _decoder_shapes(input_dim: int, hidden: int, num_classes: int) -> List[Tuple[int, ...]]:
    dims = [input_dim, hidden, num_classes] if hidden > 0 else [input_dim, num_classes]
    layers = list(zip(dims[:-1], dims[1:]))
    return [(i, o) for i, o in layers] + [(o,) for _, o in layers]


def encode_checkpoint(cloud: GaussianCloud, decoder: Optional[SemanticDecoder] = None) -> bytes:
    parts = [CLOUD_MAGIC, _HEADER.pack(cloud.num_points, cloud.feature_dim, cloud.sh_degree)]
    parts.extend(np.ascontiguousarray(arr, dtype=_FLOAT).tobytes() for _, arr in cloud.arrays())
    if decoder is not None:
        parts.append(DECODER_MAGIC)
        parts.append(_HEADER.pack(decoder.input_dim, decoder.hidden, decoder.num_classes))
        parts.extend(np.ascontiguousarray(arr, dtype=_FLOAT).tobytes() for arr in decoder.parameters())
    return b"".join(parts)


def save_checkpoint(
        path: Union[str, Path],
        cloud: GaussianCloud,
        decoder: Optional[SemanticDecoder] = None,
) -> Path:
    """
    Write atomically: a temporary file in the target directory is renamed
    over ``path`` once fully written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = encode_checkpoint(cloud, decoder)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug("wrote checkpoint %s (%d points, %d bytes)", path, cloud.num_points, len(payload))
    return path


class _Reader:
    def __init__(self, data: bytes, path: str):
        self.data = data
        self.path = path
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, size: int, what: str) -> bytes:
        if size > self.remaining:
            raise CorruptCheckpoint(
                self.path, f"truncated while reading {what}: need {size} bytes, {self.remaining} left"
            )
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def header(self, what: str) -> Tuple[int, int, int]:
        return _HEADER.unpack(self.take(_HEADER.size, what))

    def array(self, shape: Tuple[int, ...], what: str) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(count * _FLOAT.itemsize, what)
        return np.frombuffer(raw, dtype=_FLOAT).reshape(shape).astype(np.float32)


def decode_checkpoint(data: bytes, path: str = "<memory>") -> Checkpoint:
    reader = _Reader(data, path)
    if reader.take(len(CLOUD_MAGIC), "magic") != CLOUD_MAGIC:
        raise CorruptCheckpoint(path, "bad magic, not a semsplat checkpoint")
    n, feature_dim, sh_degree = reader.header("cloud header")
    if sh_degree > 3 or feature_dim == 0:
        raise CorruptCheckpoint(path, f"implausible header: feature_dim={feature_dim}, sh_degree={sh_degree}")

    arrays = {
        name: reader.array(shape, name)
        for name, shape in zip(ATTRIBUTES, _cloud_shapes(n, feature_dim, sh_degree))
    }
    cloud = GaussianCloud(**arrays, sh_degree=sh_degree)

    decoder = None
    if reader.remaining:
        if reader.take(len(DECODER_MAGIC), "decoder magic") != DECODER_MAGIC:
            raise CorruptCheckpoint(path, "unexpected bytes after the cloud section")
        input_dim, hidden, num_classes = reader.header("decoder header")
        if input_dim != feature_dim or num_classes == 0:
            raise CorruptCheckpoint(
                path, f"decoder input {input_dim} does not match feature_dim {feature_dim}"
            )
        shapes = _decoder_shapes(input_dim, hidden, num_classes)
        params = [reader.array(shape, "decoder parameters") for shape in shapes]
        n_layers = len(shapes) // 2
        decoder = SemanticDecoder(params[:n_layers], params[n_layers:])
        if reader.remaining:
            raise CorruptCheckpoint(path, f"{reader.remaining} trailing bytes after the decoder section")
    return Checkpoint(cloud, decoder)


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Raises:
        CorruptCheckpoint: missing, truncated or malformed file
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CorruptCheckpoint(str(path), f"cannot read checkpoint: {e}") from e
    return decode_checkpoint(data, str(path))
