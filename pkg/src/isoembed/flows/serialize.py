"""FLW1 binary persistence for flow models.

Layout (little-endian): magic "FLW1" | version u32 | arch u8 (0 additive,
1 multi-level affine) | dim u32 | architecture block | parameters as f64 in
parameter-traversal order.

Architecture blocks:
  arch 0: couplings u32 | n_hidden u32 | hidden u32[n_hidden]
  arch 1: levels u32 | depth u32 | n_hidden u32 | hidden u32[n_hidden]
          | per step (level-major): perm u32[active] | signs i8[active]
          | actnorm_initialized u8

Parameter traversal order:
  arch 0: per coupling in order: weight then bias per layer; finally the
          per-dimension log-scale vector.
  arch 1: per level, per step: actnorm shift, actnorm log-scale, LU strict
          lower, LU log-diagonal, LU strict upper, then the coupling net's
          weight/bias per layer.
Matrices are row-major; coupling mask parities are implicit (step index
modulo 2) and not stored.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import CorpusFormatError
from .glow import GlowSpec
from .nice import NiceModel, NiceSpec
from .training import FlowModel, build_model

MAGIC = b"FLW1"
FORMAT_VERSION = 1


def _arch_block(model: FlowModel) -> bytes:
    if isinstance(model, NiceModel):
        hidden = model.spec.hidden
        return struct.pack(
            f"<II{len(hidden)}I", model.spec.couplings, len(hidden), *hidden
        )
    hidden = model.spec.hidden
    parts = [
        struct.pack(
            f"<III{len(hidden)}I", model.spec.levels, model.spec.depth, len(hidden), *hidden
        )
    ]
    for steps in model.levels:
        for step in steps:
            parts.append(step.linear.permutation.astype("<u4").tobytes())
            parts.append(step.linear.signs.astype("<i1").tobytes())
            parts.append(struct.pack("<B", int(step.actnorm.initialized)))
    return b"".join(parts)


def flow_to_bytes(model: FlowModel) -> bytes:
    parts = [
        struct.pack("<4sIBI", MAGIC, FORMAT_VERSION, model.arch_tag, model.dim),
        _arch_block(model),
    ]
    for p in model.parameters():
        parts.append(p.data.astype("<f8").tobytes(order="C"))
    return b"".join(parts)


def save_flow(model: FlowModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(flow_to_bytes(model))


class _Reader:
    def __init__(self, data: bytes, label):
        self.data = data
        self.pos = 0
        self.label = label

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorpusFormatError(f"{self.label}: truncated flow file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(size))


def flow_from_bytes(data: bytes, label="<bytes>") -> FlowModel:
    reader = _Reader(data, label)
    magic, version, arch, dim = reader.unpack("<4sIBI")
    if magic != MAGIC:
        raise CorpusFormatError(f"{label}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"{label}: unsupported version {version}")
    if arch == 0:
        couplings, n_hidden = reader.unpack("<II")
        hidden = reader.unpack(f"<{n_hidden}I")
        model = build_model(dim, NiceSpec(couplings=couplings, hidden=hidden), seed=0)
    elif arch == 1:
        levels, depth, n_hidden = reader.unpack("<III")
        hidden = reader.unpack(f"<{n_hidden}I")
        model = build_model(dim, GlowSpec(levels=levels, depth=depth, hidden=hidden), seed=0)
        for steps in model.levels:
            for step in steps:
                size = step.linear.dim
                perm = np.frombuffer(reader.take(4 * size), dtype="<u4").astype(np.int64)
                signs = np.frombuffer(reader.take(size), dtype="<i1").astype(np.float64)
                step.linear.permutation = perm
                step.linear.signs = signs
                step.linear._perm_matrix = np.eye(size)[:, perm]
                (initialized,) = reader.unpack("<B")
                step.actnorm.initialized = bool(initialized)
    else:
        raise CorpusFormatError(f"{label}: unknown architecture tag {arch}")
    for p in model.parameters():
        raw = reader.take(8 * p.data.size)
        p.data = np.frombuffer(raw, dtype="<f8").reshape(p.data.shape).copy()
    if reader.pos != len(data):
        raise CorpusFormatError(f"{label}: {len(data) - reader.pos} trailing bytes")
    return model


def load_flow(path) -> FlowModel:
    with open(path, "rb") as fh:
        data = fh.read()
    return flow_from_bytes(data, label=str(path))
