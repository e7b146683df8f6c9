"""Portable binary model persistence.

Layout: magic "ALICE", one version byte, a length-prefixed JSON config echo,
named parameter blocks (name, rows, cols, row-major float64 little-endian),
and a trailing CRC32 of everything after the magic.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .autodiff import Tensor
from .model import CommunityModel

MAGIC = b"ALICE"
VERSION = 1


class ModelIntegrityError(ValueError):
    """Raised when a model file is malformed or fails its checksum."""


def save_model(path, model, extra_config=None):
    config = {
        "struct_dim": model.struct_dim,
        "attr_dim": model.attr_dim,
        "latent_dim": model.latent_dim,
        "layers": model.layers,
        "dropout_rate": model.dropout_rate,
        "clip": model.clip,
    }
    if extra_config:
        config.update(extra_config)
    payload = bytearray()
    payload.append(VERSION)
    cfg = json.dumps(config, sort_keys=True).encode("utf-8")
    payload += struct.pack("<I", len(cfg)) + cfg
    payload += struct.pack("<I", len(model.params))
    for name, p in model.params.items():
        nb = name.encode("utf-8")
        rows, cols = p.shape
        payload += struct.pack("<H", len(nb)) + nb
        payload += struct.pack("<II", rows, cols)
        payload += p.values.astype("<f8").tobytes()
    checksum = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes(payload))
        fh.write(struct.pack("<I", checksum))


def load_model(path):
    """Load a model file; returns (CommunityModel, config dict)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 5 or blob[: len(MAGIC)] != MAGIC:
        raise ModelIntegrityError("not a model file")
    payload, (checksum,) = blob[len(MAGIC):-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != checksum:
        raise ModelIntegrityError("checksum mismatch")
    off = 0
    version = payload[off]
    off += 1
    if version != VERSION:
        raise ModelIntegrityError(f"unsupported format version {version}")
    (cfg_len,) = struct.unpack_from("<I", payload, off)
    off += 4
    config = json.loads(payload[off:off + cfg_len].decode("utf-8"))
    off += cfg_len
    (count,) = struct.unpack_from("<I", payload, off)
    off += 4
    params = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", payload, off)
        off += 2
        name = payload[off:off + name_len].decode("utf-8")
        off += name_len
        rows, cols = struct.unpack_from("<II", payload, off)
        off += 8
        nbytes = rows * cols * 8
        arr = np.frombuffer(payload, dtype="<f8", count=rows * cols,
                            offset=off).reshape(rows, cols).copy()
        off += nbytes
        params[name] = arr

    model = CommunityModel(
        struct_dim=config["struct_dim"],
        attr_dim=config["attr_dim"],
        latent_dim=config["latent_dim"],
        layers=config["layers"],
        dropout_rate=config["dropout_rate"],
        clip=config["clip"],
    )
    if set(params) != set(model.params):
        raise ModelIntegrityError("parameter block mismatch")
    for name, arr in params.items():
        if model.params[name].shape != arr.shape:
            raise ModelIntegrityError(f"shape mismatch for {name}")
        model.params[name] = Tensor(arr, requires_grad=True, name=name)
    return model, config
