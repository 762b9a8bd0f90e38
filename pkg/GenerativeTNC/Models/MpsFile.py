"""
MPS persistence.

Binary container, all integers and scalars little-endian:

    magic        8 bytes  b"GTNCMPS\\x00"
    version      uint32
    L, d         uint32, uint32
    center       int32    (-1: none)
    label_site   int32    (-1: plain MPS)
    num_labels   uint32   (0: plain MPS)
    bond dims    (L + 1) x uint32
    per site     ndim uint32, shape ndim x uint32, row-major float64 data
    checksum     uint32   CRC-32 of every preceding byte

The header and bond list fix every tensor shape, so a load checks the file length
and the checksum before reading any site and then cross-checks each stored shape.

Each model file has a plain-text ``key=value`` sidecar manifest.
"""

import math
import os
import struct
import zlib
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import torch
from torch import Tensor

from GenerativeTNC.Errors import (
    ChecksumError,
    FormatError,
    TruncatedFileError,
    VersionMismatchError,
)
from GenerativeTNC.Models.LabeledMps import LabeledMps
from GenerativeTNC.Models.Mps import Mps

MPS_MAGIC = b"GTNCMPS\x00"
MPS_FORMAT_VERSION = 1


def model_path(directory: str, class_label: int) -> str:
    return os.path.join(directory, f"model_class{class_label}.mps")


def manifest_path(directory: str, class_label: int) -> str:
    return os.path.join(directory, f"model_class{class_label}.manifest")


def _encode(
    tensors: Tuple[Tensor, ...],
    bond_dims: List[int],
    local_dim: int,
    center: Optional[int],
    label_site: Optional[int],
    num_labels: int,
) -> bytes:
    parts = [
        MPS_MAGIC,
        struct.pack(
            "<IIIiiI",
            MPS_FORMAT_VERSION,
            len(tensors),
            local_dim,
            -1 if center is None else center,
            -1 if label_site is None else label_site,
            num_labels,
        ),
        struct.pack(f"<{len(bond_dims)}I", *bond_dims),
    ]
    for t in tensors:
        parts.append(struct.pack(f"<I{t.dim()}I", t.dim(), *t.shape))
        parts.append(t.detach().cpu().numpy().astype("<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, path: str) -> None:
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, count: int) -> bytes:
        if self.offset + count > len(self.data):
            raise TruncatedFileError(
                f"{self.path}: truncated at byte {self.offset} (needed {count} more)"
            )
        chunk = self.data[self.offset : self.offset + count]
        self.offset += count
        return chunk

    def unpack(self, fmt: str) -> Tuple[int, ...]:
        values: Tuple[int, ...] = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return values


def _site_shapes(
    bond_dims: Tuple[int, ...],
    local_dim: int,
    label_site: int,
    num_labels: int,
) -> List[Tuple[int, ...]]:
    """Tensor shapes the header promises, site by site."""
    shapes: List[Tuple[int, ...]] = []
    for site in range(len(bond_dims) - 1):
        left, right = bond_dims[site], bond_dims[site + 1]
        if site == label_site:
            shapes.append((left, local_dim, num_labels, right))
        else:
            shapes.append((left, local_dim, right))
    return shapes


def _encoded_size(header_end: int, shapes: List[Tuple[int, ...]]) -> int:
    size = header_end + 4
    for shape in shapes:
        size += 4 + 4 * len(shape) + 8 * math.prod(shape)
    return size


def _decode(
    data: bytes, path: str
) -> Tuple[List[Tensor], Optional[int], Optional[int]]:
    reader = _Reader(data, path)
    if reader.take(len(MPS_MAGIC)) != MPS_MAGIC:
        raise FormatError(f"{path}: not an MPS file (bad magic)")
    version, num_sites, local_dim, center, label_site, num_labels = reader.unpack(
        "<IIIiiI"
    )
    if version != MPS_FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format version {version}, expected {MPS_FORMAT_VERSION}"
        )
    if 4 * (num_sites + 1) > len(data) - reader.offset:
        raise TruncatedFileError(
            f"{path}: bond list of {num_sites} sites runs past the end"
        )
    bond_dims = reader.unpack(f"<{num_sites + 1}I")
    shapes = _site_shapes(bond_dims, local_dim, label_site, num_labels)
    expected = _encoded_size(reader.offset, shapes)

    # The checksum covers everything up to the trailing word; nothing past the
    # bond list is parsed until it matches.
    (stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != stored:
        if len(data) < expected:
            raise TruncatedFileError(
                f"{path}: {len(data)} bytes, header promises {expected}"
            )
        if len(data) > expected:
            raise FormatError(f"{path}: {len(data) - expected} trailing bytes")
        raise ChecksumError(f"{path}: checksum mismatch")
    if len(data) != expected:
        raise FormatError(f"{path}: {len(data)} bytes, header promises {expected}")
    if label_site >= int(num_sites) or (label_site >= 0) != (num_labels > 0):
        raise FormatError(
            f"{path}: label site {label_site} with {num_labels} labels"
            f" on {num_sites} sites"
        )

    tensors = []
    for site, promised in enumerate(shapes):
        (ndim,) = reader.unpack("<I")
        shape = reader.unpack(f"<{ndim}I")
        if tuple(shape) != promised:
            raise FormatError(
                f"{path}: site {site} has shape {tuple(shape)},"
                f" header promises {promised}"
            )
        count = int(np.prod(shape))
        raw = np.frombuffer(reader.take(8 * count), dtype="<f8").reshape(shape)
        tensors.append(torch.from_numpy(raw.astype(np.float64)))
    return (
        tensors,
        None if center < 0 else center,
        None if label_site < 0 else label_site,
    )


def _write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(payload)


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def save_mps(m: Mps, path: str) -> None:
    _write(
        path,
        _encode(m.tensors, m.bond_dims, m.local_dim, m.canonical_center, None, 0),
    )


def load_mps(path: str) -> Mps:
    tensors, center, label_site = _decode(_read(path), path)
    if label_site is not None:
        raise FormatError(f"{path}: holds a labeled MPS, not a generative one")
    return Mps(tensors, center)


def save_labeled_mps(m: LabeledMps, path: str) -> None:
    _write(
        path,
        _encode(
            m.tensors,
            m.bond_dims,
            m.local_dim,
            m.label_site,
            m.label_site,
            m.num_labels,
        ),
    )


def load_labeled_mps(path: str) -> LabeledMps:
    tensors, _center, label_site = _decode(_read(path), path)
    if label_site is None:
        raise FormatError(f"{path}: holds a plain MPS, not a labeled one")
    return LabeledMps(tensors, label_site)


ManifestValue = Union[str, int, float]


def write_manifest(path: str, entries: Mapping[str, ManifestValue]) -> None:
    """Write ``key=value`` lines in key order; floats use repr for exact round trip."""
    lines = []
    for key in sorted(entries):
        value = entries[key]
        text = repr(value) if isinstance(value, float) else str(value)
        if "\n" in text or "=" in key:
            raise FormatError(f"Manifest entry {key!r} cannot be written on one line")
        lines.append(f"{key}={text}\n")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(lines)


def read_manifest(path: str) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{number}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    return entries
