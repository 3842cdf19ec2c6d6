"""JSON encodings of algebra elements, vectors, frames, matrices and tuples.

An element is a list of blocks; a block is an n_i x n_i array of [re, im]
pairs.  Parsers raise FormatError naming the offending position.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..cstar import AlgebraSignature, CStarElement
from ..errors import FormatError
from ..frames import FrameSystem
from ..module import ModuleMatrix, ModuleVector
from ..opscale import MatrixTuple


def encode_element(a: CStarElement) -> list:
    return [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in a.blocks]


def encode_vector(x: ModuleVector) -> list:
    return [encode_element(e) for e in x.entries]


def encode_grid(M: ModuleMatrix) -> list:
    return [[encode_element(M.entry(a, b)) for b in range(M.cols)] for a in range(M.rows)]


def encode_frame(F: FrameSystem) -> dict:
    return {
        "signature": list(F.signature.block_sizes),
        "d": F.d,
        "vectors": [encode_vector(v) for v in F.vectors],
    }


def encode_matrix(M: ModuleMatrix) -> dict:
    return {
        "signature": list(M.signature.block_sizes),
        "rows": M.rows,
        "cols": M.cols,
        "entries": encode_grid(M),
    }


def encode_tuple(T: MatrixTuple) -> dict:
    return {
        "signature": list(T.signature.block_sizes),
        "rows": T.m,
        "cols": T.n,
        "matrices": [encode_grid(v) for v in T.matrices],
    }


def _signature(doc, where="signature") -> AlgebraSignature:
    if not isinstance(doc, dict):
        raise FormatError("top level must be a JSON object")
    if "signature" not in doc:
        raise FormatError("missing key 'signature'")
    sig = doc["signature"]
    if not isinstance(sig, list) or not sig or not all(isinstance(s, int) and s >= 1 for s in sig):
        raise FormatError(f"{where}: expected a nonempty list of positive integers, got {sig!r}")
    return AlgebraSignature(tuple(sig))


def _int_key(doc, key):
    if key not in doc:
        raise FormatError(f"missing key {key!r}")
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise FormatError(f"{key}: expected a positive integer, got {v!r}")
    return v


def decode_element(sig: AlgebraSignature, data, where: str) -> CStarElement:
    if not isinstance(data, list) or len(data) != sig.num_blocks:
        raise FormatError(f"{where}: expected {sig.num_blocks} blocks")
    blocks = []
    for i, (blk, n) in enumerate(zip(data, sig.block_sizes)):
        try:
            arr = np.array(blk, dtype=float)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{where} block {i}: not a numeric array ({exc})") from None
        if arr.shape != (n, n, 2):
            raise FormatError(f"{where} block {i}: expected {n}x{n} [re, im] pairs, got shape {arr.shape}")
        blocks.append(arr[..., 0] + 1j * arr[..., 1])
    return CStarElement(sig, tuple(blocks))


def decode_vector(sig, d: int, data, where: str) -> ModuleVector:
    if not isinstance(data, list) or len(data) != d:
        raise FormatError(f"{where}: expected a list of {d} elements")
    return ModuleVector.from_entries([decode_element(sig, e, f"{where}[{j}]") for j, e in enumerate(data)])


def decode_grid(sig, rows: int, cols: int, data, where: str) -> ModuleMatrix:
    if not isinstance(data, list) or len(data) != rows:
        raise FormatError(f"{where}: expected {rows} rows")
    grid = []
    for a, row in enumerate(data):
        if not isinstance(row, list) or len(row) != cols:
            raise FormatError(f"{where}[{a}]: expected {cols} entries")
        grid.append([decode_element(sig, e, f"{where}[{a}][{b}]") for b, e in enumerate(row)])
    return ModuleMatrix.from_entries(grid)


def decode_frame(doc) -> FrameSystem:
    sig = _signature(doc)
    d = _int_key(doc, "d")
    vecs = doc.get("vectors")
    if not isinstance(vecs, list) or not vecs:
        raise FormatError("vectors: expected a nonempty list")
    rows = [decode_vector(sig, d, v, f"vectors[{j}]") for j, v in enumerate(vecs)]
    return FrameSystem(ModuleMatrix.from_rows(rows))


def decode_matrix(doc) -> ModuleMatrix:
    sig = _signature(doc)
    rows, cols = _int_key(doc, "rows"), _int_key(doc, "cols")
    return decode_grid(sig, rows, cols, doc.get("entries"), "entries")


def decode_tuple(doc) -> MatrixTuple:
    sig = _signature(doc)
    rows, cols = _int_key(doc, "rows"), _int_key(doc, "cols")
    mats = doc.get("matrices")
    if not isinstance(mats, list) or not mats:
        raise FormatError("matrices: expected a nonempty list")
    return MatrixTuple(tuple(decode_grid(sig, rows, cols, g, f"matrices[{j}]") for j, g in enumerate(mats)))


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from None


def load_frame(path) -> FrameSystem:
    return decode_frame(load_json(path))


def load_matrix(path) -> ModuleMatrix:
    return decode_matrix(load_json(path))


def load_tuple(path) -> MatrixTuple:
    return decode_tuple(load_json(path))
