"""Named-tensor checkpoint archive.

Layout: one version byte, a u32 little-endian header length, a JSON header,
then the raw tensor data. The header carries the manifest (name, shape,
byte offset into the data section), both vocabularies, the full run
configuration, and the BPE merge list when one was used. Tensor data is
row-major float64 little-endian, concatenated in manifest order.

The byte stream is a pure function of its content (sorted JSON keys, no
timestamps), so identical runs produce identical files.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .autodiff import Tensor

FORMAT_VERSION = 1


def save(path, params: dict[str, Tensor], config: dict, src_vocab, tgt_vocab, bpe=None) -> None:
    manifest = []
    blobs = []
    offset = 0
    for name, tensor in params.items():
        raw = np.ascontiguousarray(tensor.values, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "config": config,
        "src_vocab": src_vocab.tokens(),
        "tgt_vocab": tgt_vocab.tokens(),
        # per-side merge lists, {"src": [...], "tgt": [...]}
        "bpe": {side: [list(m) for m in merges] for side, merges in bpe.items()} if bpe is not None else None,
        "tensors": manifest,
    }
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(bytes([FORMAT_VERSION]))
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        for raw in blobs:
            f.write(raw)


def load(path):
    """Returns (params: dict[str, Tensor], config, src_tokens, tgt_tokens, bpe)."""
    with open(path, "rb") as f:
        version = f.read(1)
        if not version or version[0] != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version!r} in {path}")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        data = f.read()
    params: dict[str, Tensor] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=start).reshape(shape)
        params[entry["name"]] = Tensor(arr.astype(np.float64), name=entry["name"])
    bpe = header["bpe"]
    if bpe is not None:
        bpe = {side: [tuple(m) for m in merges] for side, merges in bpe.items()}
    return params, header["config"], header["src_vocab"], header["tgt_vocab"], bpe
