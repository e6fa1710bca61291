"""Checkpoint serialization.

Byte layout (all little-endian):

    offset  size  field
    0       4     magic "NGF1"
    4       4     u32 input_dim
    8       4     u32 n_layers (affine layers, hidden + output)
    12      4*L   u32 output width of each layer (last is 1)
    12+4L   1     u8 activation id (0 = tanh)
    ...           per layer, in order: weights row-major f64
                  (out_width*in_width values), then biases f64 (out_width)

Round-trips are bit-exact.  A JSON sidecar `<path>.meta.json` carries run
metadata (problem name, interface location, seed, config hash); it is
optional and never touches the binary layout.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .params import ACTIVATIONS, MlpParams

MAGIC = b"NGF1"
_ID_TO_ACT = {v: k for k, v in ACTIVATIONS.items()}


def save_checkpoint(path: str, params: MlpParams, metadata: dict | None = None):
    """Write atomically (temp file + rename in the target directory)."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", params.input_dim, params.n_layers)
    for w in params.weights:
        blob += struct.pack("<I", w.shape[0])
    blob += struct.pack("<B", ACTIVATIONS[params.activation])
    for w, b in zip(params.weights, params.biases):
        blob += np.ascontiguousarray(w, dtype="<f8").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f8").tobytes()

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes(blob))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    if metadata is not None:
        meta_path = path + ".meta.json"
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w") as f:
            json.dump(metadata, f, indent=2, sort_keys=True)
        os.replace(tmp, meta_path)


def load_checkpoint(path: str) -> tuple[MlpParams, dict | None]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    input_dim, n_layers = struct.unpack_from("<II", blob, 4)
    widths = list(struct.unpack_from(f"<{n_layers}I", blob, 12))
    pos = 12 + 4 * n_layers
    (act_id,) = struct.unpack_from("<B", blob, pos)
    pos += 1
    if act_id not in _ID_TO_ACT:
        raise ValueError(f"{path}: unknown activation id {act_id}")
    weights, biases = [], []
    fan_in = input_dim
    for wo in widths:
        w = np.frombuffer(blob, dtype="<f8", count=wo * fan_in, offset=pos)
        pos += 8 * wo * fan_in
        b = np.frombuffer(blob, dtype="<f8", count=wo, offset=pos)
        pos += 8 * wo
        weights.append(w.reshape(wo, fan_in).copy())
        biases.append(b.copy())
        fan_in = wo
    if pos != len(blob):
        raise ValueError(f"{path}: {len(blob) - pos} trailing bytes")
    params = MlpParams(input_dim=input_dim, weights=weights, biases=biases,
                       activation=_ID_TO_ACT[act_id])
    meta = None
    meta_path = path + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as f:
            meta = json.load(f)
    return params, meta
