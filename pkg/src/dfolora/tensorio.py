"""Flat binary container for named tensors.

Layout: 8-byte magic, 8-byte little-endian manifest length, JSON manifest
(names, dtypes, shapes, byte offsets), then the raw row-major tensor data.
The manifest is the textual index; the file round-trips byte-exactly for
identical inputs, so containers can be compared with a plain hash.
"""

import json

import numpy as np

MAGIC = b"DFLTNSR1"


def save_tensors(path, tensors: dict) -> None:
    """Write a {name: array} mapping; iteration order is preserved."""
    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        blob = arr.tobytes()
        entries.append({
            "name": name,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    manifest = json.dumps({"tensors": entries}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(manifest).to_bytes(8, "little"))
        fh.write(manifest)
        for blob in blobs:
            fh.write(blob)


def load_tensors(path) -> dict:
    """Read a container back into a {name: array} mapping."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path} is not a tensor container (magic {magic!r})")
        manifest_len = int.from_bytes(fh.read(8), "little")
        manifest = json.loads(fh.read(manifest_len))
        data = fh.read()
    out = {}
    for entry in manifest["tensors"]:
        start = entry["offset"]
        blob = data[start:start + entry["nbytes"]]
        arr = np.frombuffer(blob, dtype=np.dtype(entry["dtype"]))
        out[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return out
