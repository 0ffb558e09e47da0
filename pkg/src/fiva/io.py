"""File formats: binary embedding containers, CSV interop, and PPM images.

Embedding container layout, all integers little-endian:

    offset 0   magic bytes ``FIVAEMB1``
    offset 8   u32 count
    offset 12  u32 dim
    offset 16  count * dim IEEE-754 binary32 values, row-major
    then       optional label block: count newline-terminated UTF-8 lines

The label block is detected by its presence: bytes after the payload are
labels, a file ending at the payload has none. Round trips are bit-exact
because payloads pass through untouched single-precision values.

CSV files (suffix ``.csv``) are accepted for interop: one row per
embedding, optional leading label column, numeric cells parsed as
single-precision values.

Images travel as binary netpbm rasters with maxval 255: P6 for 3-channel,
P5 for single-channel. Reading maps byte b to b / 255; writing maps v to
round(v * 255) with ties to even.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    LabelCountMismatch,
    MissingLabels,
    NotUnitNorm,
    Truncated,
    UnsupportedFormat,
)
from .gallery import Gallery, LabeledEmbedding
from .sphere import Embedding, normalize

__all__ = [
    "MAGIC",
    "pack_container",
    "parse_container",
    "read_container",
    "write_container",
    "load_embeddings",
    "load_labeled_embeddings",
    "load_gallery",
    "write_embeddings",
    "read_image_ppm",
    "write_image_ppm",
]

MAGIC = b"FIVAEMB1"

_HEADER = struct.Struct("<8sII")

# Errors a container parse can raise; callers embedding containers inside
# larger files (tracker state) catch this to re-map them.
ContainerError = (BadMagic, Truncated, LabelCountMismatch)


def _coerce_matrix(matrix: np.ndarray, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch(
            f"embedding matrix must be 2-D, got shape {arr.shape}"
        )
    if dim is not None and arr.shape[0] == 0:
        arr = arr.reshape(0, dim)
    return np.ascontiguousarray(arr, dtype="<f4")


def pack_container(
    matrix: np.ndarray, labels: Sequence[str] | None = None, dim: int | None = None
) -> bytes:
    """Serialize a (count, dim) matrix and optional labels to bytes."""
    arr = _coerce_matrix(matrix, dim)
    count, width = arr.shape
    blob = _HEADER.pack(MAGIC, count, width) + arr.tobytes(order="C")
    if labels is not None:
        labels = list(labels)
        if len(labels) != count:
            raise LabelCountMismatch(
                f"{len(labels)} labels for {count} embeddings"
            )
        for label in labels:
            if not label or "\n" in label:
                raise LabelCountMismatch(
                    f"labels must be non-empty and newline-free, got {label!r}"
                )
        blob += "".join(f"{label}\n" for label in labels).encode("utf-8")
    return blob


def parse_container(
    buf: bytes, offset: int = 0, allow_labels: bool = True
) -> tuple[np.ndarray, list[str] | None, int]:
    """Parse one container from ``buf`` at ``offset``.

    Returns the (count, dim) float32 matrix, the labels (or ``None``), and
    the offset one past the parsed bytes. With ``allow_labels`` the label
    block is assumed to run to the end of the buffer; embedded containers
    must pass ``allow_labels=False``.
    """
    remaining = len(buf) - offset
    if remaining < len(MAGIC):
        raise Truncated(
            f"file ends after {remaining} bytes, before the {len(MAGIC)}-byte magic"
        )
    if buf[offset : offset + len(MAGIC)] != MAGIC:
        raise BadMagic(
            f"bad magic {buf[offset:offset + len(MAGIC)]!r}, expected {MAGIC!r}"
        )
    if remaining < _HEADER.size:
        raise Truncated(
            f"header needs {_HEADER.size} bytes, found {remaining}"
        )
    _, count, dim = _HEADER.unpack_from(buf, offset)
    payload_bytes = count * dim * 4
    body = offset + _HEADER.size
    if len(buf) - body < payload_bytes:
        raise Truncated(
            f"payload needs {payload_bytes} bytes for {count}x{dim} values, "
            f"found {len(buf) - body}"
        )
    matrix = (
        np.frombuffer(buf, dtype="<f4", count=count * dim, offset=body)
        .reshape(count, dim)
        .copy()
    )
    end = body + payload_bytes
    labels: list[str] | None = None
    if allow_labels and end < len(buf):
        labels = _parse_label_block(buf[end:], count)
        end = len(buf)
    return matrix, labels, end


def _parse_label_block(block: bytes, count: int) -> list[str]:
    try:
        text = block.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LabelCountMismatch(f"label block is not valid UTF-8: {exc}") from exc
    if not text.endswith("\n"):
        raise LabelCountMismatch("label block must end with a newline")
    lines = text.split("\n")[:-1]
    if len(lines) != count:
        raise LabelCountMismatch(
            f"label block has {len(lines)} lines for {count} embeddings"
        )
    return lines


def _read_bytes(source: str | Path | BinaryIO) -> bytes:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_bytes()


def _write_bytes(destination: str | Path | BinaryIO, blob: bytes) -> None:
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        Path(destination).write_bytes(blob)


def _looks_like_csv(source: str | Path | BinaryIO, data: bytes) -> bool:
    if data[: len(MAGIC)] == MAGIC:
        return False
    name = getattr(source, "name", source)
    try:
        return str(name).lower().endswith(".csv")
    except Exception:
        return False


def _parse_csv(data: bytes) -> tuple[np.ndarray, list[str] | None]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedFormat(f"CSV payload is not valid UTF-8: {exc}") from exc
    rows: list[list[float]] = []
    labels: list[str] = []
    labeled: bool | None = None
    for line_no, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row:
            continue
        try:
            float(row[0])
            has_label = False
        except ValueError:
            has_label = True
        if labeled is None:
            labeled = has_label
        elif labeled != has_label:
            raise UnsupportedFormat(
                f"line {line_no}: mixed labeled and unlabeled CSV rows"
            )
        cells = row[1:] if has_label else row
        if has_label:
            labels.append(row[0])
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise UnsupportedFormat(f"line {line_no}: non-numeric cell: {exc}") from exc
        if len(rows[-1]) != len(rows[0]):
            raise UnsupportedFormat(
                f"line {line_no}: {len(rows[-1])} values, expected {len(rows[0])}"
            )
    if not rows:
        raise UnsupportedFormat("CSV file contains no embedding rows")
    matrix = np.asarray(rows, dtype="<f4")
    return matrix, (labels if labeled else None)


def read_container(
    source: str | Path | BinaryIO,
) -> tuple[np.ndarray, list[str] | None]:
    """Read one embedding file (binary container or interop CSV).

    Returns the raw (count, dim) float32 matrix and labels (or ``None``).
    """
    data = _read_bytes(source)
    if _looks_like_csv(source, data):
        return _parse_csv(data)
    matrix, labels, end = parse_container(data, 0, allow_labels=True)
    if end != len(data):
        raise Truncated(f"{len(data) - end} undecodable bytes after payload")
    return matrix, labels


def write_container(
    destination: str | Path | BinaryIO,
    matrix: np.ndarray,
    labels: Sequence[str] | None = None,
) -> None:
    """Write a (count, dim) matrix and optional labels.

    A ``.csv`` destination gets interop CSV (single-precision values
    rendered exactly); anything else gets the binary container.
    """
    name = getattr(destination, "name", destination)
    if str(name).lower().endswith(".csv"):
        arr = _coerce_matrix(matrix)
        if labels is not None and len(labels) != arr.shape[0]:
            raise LabelCountMismatch(
                f"{len(labels)} labels for {arr.shape[0]} embeddings"
            )
        lines = []
        for i, row in enumerate(arr):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.insert(0, labels[i])
            lines.append(",".join(cells))
        blob = ("\n".join(lines) + "\n").encode("utf-8")
    else:
        blob = pack_container(matrix, labels)
    _write_bytes(destination, blob)


def _rows_to_embeddings(matrix: np.ndarray, renorm: bool) -> list[Embedding]:
    out = []
    for i, row in enumerate(matrix):
        vec = row.astype(np.float64)
        if renorm:
            out.append(normalize(vec))
        else:
            emb = Embedding(vec)
            if not emb.is_unit:
                raise NotUnitNorm(
                    f"row {i} has norm {emb.norm:.8f}; pass normalize=True to "
                    "project raw rows onto the sphere"
                )
            out.append(emb)
    return out


def load_embeddings(
    source: str | Path | BinaryIO, renormalize: bool = False
) -> list[Embedding]:
    """Read an embedding file as unit embeddings, ignoring labels."""
    matrix, _ = read_container(source)
    return _rows_to_embeddings(matrix, renormalize)


def load_labeled_embeddings(
    source: str | Path | BinaryIO, renormalize: bool = False
) -> list[LabeledEmbedding]:
    """Read an embedding file that must carry a label per row."""
    matrix, labels = read_container(source)
    if labels is None:
        raise MissingLabels(
            f"{getattr(source, 'name', source)} has no label block"
        )
    embeddings = _rows_to_embeddings(matrix, renormalize)
    return [
        LabeledEmbedding(label, emb) for label, emb in zip(labels, embeddings)
    ]


def load_gallery(
    source: str | Path | BinaryIO, renormalize: bool = False
) -> Gallery:
    """Read a labeled embedding file as a retrieval gallery."""
    return Gallery(tuple(load_labeled_embeddings(source, renormalize)))


def write_embeddings(
    destination: str | Path | BinaryIO,
    embeddings: Iterable[Embedding],
    labels: Sequence[str] | None = None,
) -> None:
    """Write a list of embeddings (and optional labels) to one file."""
    rows = [e.values for e in embeddings]
    if not rows:
        matrix = np.empty((0, 0), dtype=np.float64)
    else:
        matrix = np.stack(rows)
    write_container(destination, matrix, labels)


# --- netpbm images ---------------------------------------------------------


def read_image_ppm(source: str | Path | BinaryIO) -> np.ndarray:
    """Read a binary netpbm image as an (H, W, C) float array in [0, 1].

    P6 yields C = 3, P5 yields C = 1. Only maxval 255 is supported; plain
    (ASCII) variants and other maxvals raise :class:`UnsupportedFormat`.
    """
    data = _read_bytes(source)
    if len(data) < 2:
        raise Truncated("file too short for a netpbm magic")
    magic = data[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise UnsupportedFormat(
            f"unsupported netpbm magic {magic!r}; only binary P5/P6 are readable"
        )
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise Truncated("header ends before width, height, and maxval")
        byte = data[pos : pos + 1]
        if byte.isspace():
            pos += 1
        elif byte == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        elif byte.isdigit():
            start = pos
            while pos < len(data) and data[pos : pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise UnsupportedFormat(
                f"unexpected header byte {byte!r} at offset {pos}"
            )
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise UnsupportedFormat(f"bad raster size {width}x{height}")
    # Exactly one whitespace byte separates maxval from the raster.
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise Truncated("missing whitespace between header and raster")
    pos += 1
    need = width * height * channels
    raster = data[pos:]
    if len(raster) < need:
        raise Truncated(f"raster needs {need} bytes, found {len(raster)}")
    if len(raster) > need:
        raise UnsupportedFormat(f"{len(raster) - need} trailing bytes after raster")
    values = np.frombuffer(raster, dtype=np.uint8).astype(np.float64) / 255.0
    return values.reshape(height, width, channels)


def write_image_ppm(destination: str | Path | BinaryIO, image: np.ndarray) -> None:
    """Write an (H, W, C) float image in [0, 1] as binary P6 (or P5 if C=1)."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise DimensionMismatch(
            f"image must be (H, W, C) with C in {{1, 3}}, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all() or arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must be finite and within [0, 1]")
    height, width, channels = arr.shape
    magic = b"P6" if channels == 3 else b"P5"
    header = magic + f"\n{width} {height}\n255\n".encode("ascii")
    raster = np.rint(arr * 255.0).astype(np.uint8).tobytes(order="C")
    _write_bytes(destination, header + raster)
