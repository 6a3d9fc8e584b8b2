"""Reading and writing corpus records and binary phrase-embedding tables.

Corpus lines are JSON objects::

    {"id": "a", "width": 224, "height": 224, "captions": ["a dog"],
     "detections": [{"box": [10, 10, 30, 40], "tag": "dog", "confidence": 0.9}],
     "block_embeddings": [[...], ...]}

``detections``, ``confidence`` and ``block_embeddings`` are optional. Boxes are
``[x, y, w, h]`` with ``(x, y)`` the top-left corner.

The embedding table layout (all integers little-endian)::

    b"PTPE" | version u16 | M u32 | D u32
    M x (length u32 | UTF-8 bytes)
    M*D float32, row-major
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from .config import TEMPLATE_IDS, PipelineConfig
from .errors import (
    DuplicatePhraseError,
    EncodingError,
    FormatError,
    GeometryError,
    IngestError,
    SchemaError,
    TruncationError,
)
from .geometry import Box

MAGIC = b"PTPE"
VERSION = 1
_HEADER = struct.Struct("<4sHII")
_U32 = struct.Struct("<I")


class DetectedObject(NamedTuple):
    box: Box
    tag: str
    confidence: float = 1.0


@dataclass(frozen=True)
class ImageRecord:
    id: str
    width: int
    height: int
    captions: tuple[str, ...]
    detections: tuple[DetectedObject, ...] = ()
    block_embeddings: Optional[tuple[tuple[float, ...], ...]] = None


class EmbeddingMatrix:
    """``M`` distinct phrases with one ``D``-dimensional float32 row each."""

    __slots__ = ("phrases", "vectors", "_index", "_f64")

    def __init__(self, phrases: Sequence[str], vectors):
        phrases = tuple(phrases)
        vectors = np.array(vectors, dtype="<f4", copy=True)
        if vectors.ndim != 2:
            raise FormatError(f"vectors must be 2-D, got shape {vectors.shape}")
        m, d = vectors.shape
        if m < 1 or d < 1:
            raise FormatError(f"embedding table must have M >= 1 and D >= 1, got {m}x{d}")
        if len(phrases) != m:
            raise FormatError(f"{len(phrases)} phrases for {m} rows")
        index = {}
        for i, p in enumerate(phrases):
            if p in index:
                raise DuplicatePhraseError(f"duplicate phrase {p!r}", field=f"phrases[{i}]")
            index[p] = i
        vectors.setflags(write=False)
        self.phrases = phrases
        self.vectors = vectors
        self._index = index
        self._f64 = None

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def float64(self) -> np.ndarray:
        """Rows widened to float64 (cached), for scoring."""
        if self._f64 is None:
            f64 = self.vectors.astype(np.float64)
            f64.setflags(write=False)
            self._f64 = f64
        return self._f64

    def __getstate__(self):
        return (self.phrases, self.vectors)

    def __setstate__(self, state):
        phrases, vectors = state
        self.phrases = phrases
        self.vectors = vectors
        self._index = {p: i for i, p in enumerate(phrases)}
        self._f64 = None

    def index_of(self, phrase: str) -> int:
        return self._index[phrase]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.phrases == other.phrases
            and self.vectors.shape == other.vectors.shape
            and self.vectors.tobytes() == other.vectors.tobytes()
        )

    def __repr__(self):
        return f"EmbeddingMatrix(M={self.m}, D={self.d})"


# ---------------------------------------------------------------- records


def _reject_constant(name):
    raise ValueError(f"non-finite number {name}")


def _pairs(pairs):
    out = dict(pairs)
    if len(out) != len(pairs):
        seen = set()
        for k, _ in pairs:
            if k in seen:
                raise _Duplicate(k)
            seen.add(k)
    return out


class _Duplicate(Exception):
    def __init__(self, key):
        self.key = key


_decoder = json.JSONDecoder(object_pairs_hook=_pairs, parse_constant=_reject_constant)


_BIG = 2**1000


def _is_number(v) -> bool:
    return (type(v) is float and math.isfinite(v)) or (type(v) is int and -_BIG < v < _BIG)


def _check_text(s: str, offset: int, path: str) -> None:
    # JSON escapes can smuggle lone surrogates into an otherwise valid line
    if not s.isascii():
        try:
            s.encode("utf-8")
        except UnicodeEncodeError as e:
            raise EncodingError(f"unencodable text: {e.reason}", offset, path) from None


_NUMBER_TYPES = (int, float)
_INF = float("inf")
_isfinite = math.isfinite


def _parse_detection(obj, offset: int, index: int) -> DetectedObject:
    if type(obj) is dict:
        box = obj.get("box")
        tag = obj.get("tag")
        conf = obj.get("confidence", 1.0)
        # fast path for the common, well-formed case
        if type(box) is list and len(box) == 4 and type(tag) is str and type(conf) is float and tag.isascii():
            x, y, w, h = box
            if type(x) in _NUMBER_TYPES and type(y) in _NUMBER_TYPES and type(w) in _NUMBER_TYPES and type(h) in _NUMBER_TYPES:
                try:
                    x, y, w, h = float(x), float(y), float(w), float(h)
                except OverflowError:
                    pass
                else:
                    if (
                        _isfinite(x) and _isfinite(y) and 0.0 <= w < _INF and 0.0 <= h < _INF
                        and 0.0 <= conf <= 1.0 and tag.strip()
                    ):
                        return DetectedObject(Box(x, y, w, h), tag, conf)
    return _parse_detection_slow(obj, offset, f"detections[{index}]")


def _parse_detection_slow(obj, offset: int, path: str) -> DetectedObject:
    if type(obj) is not dict:
        raise SchemaError("detection must be an object", offset, path)
    box = obj.get("box")
    if box is None:
        raise SchemaError("missing field", offset, path + ".box")
    try:
        if type(box) is not list or len(box) != 4:
            raise TypeError
        x, y, w, h = box
        if not (
            type(x) in _NUMBER_TYPES and type(y) in _NUMBER_TYPES
            and type(w) in _NUMBER_TYPES and type(h) in _NUMBER_TYPES
        ):
            raise TypeError
        x, y, w, h = float(x), float(y), float(w), float(h)
        if not (_isfinite(x) and _isfinite(y) and _isfinite(w) and _isfinite(h)):
            raise TypeError
    except (TypeError, OverflowError):
        raise SchemaError("box must be a list of 4 finite numbers", offset, path + ".box") from None
    if w < 0 or h < 0:
        raise GeometryError("box width and height must be >= 0", offset, path + ".box")
    tag = obj.get("tag")
    if tag is None:
        raise SchemaError("missing field", offset, path + ".tag")
    if type(tag) is not str:
        raise SchemaError("tag must be a string", offset, path + ".tag")
    if not tag.strip():
        raise SchemaError("tag must not be blank", offset, path + ".tag")
    if not tag.isascii():
        _check_text(tag, offset, path + ".tag")
    conf = obj.get("confidence", 1.0)
    if type(conf) is not float:
        if not _is_number(conf):
            raise SchemaError("confidence must be a finite number", offset, path + ".confidence")
        conf = float(conf)
    if not 0.0 <= conf <= 1.0:
        raise SchemaError("confidence must lie in [0, 1]", offset, path + ".confidence")
    return DetectedObject(Box(x, y, w, h), tag, conf)


def record_from_dict(obj, offset: int = 0) -> ImageRecord:
    """Validate a decoded JSON object and build an :class:`ImageRecord`."""
    if type(obj) is not dict:
        raise SchemaError("record must be a JSON object", offset)
    for name in ("id", "width", "height", "captions"):
        if name not in obj:
            raise SchemaError("missing field", offset, name)
    rid = obj["id"]
    if type(rid) is not str or not rid:
        raise SchemaError("id must be a non-empty string", offset, "id")
    _check_text(rid, offset, "id")
    width, height = obj["width"], obj["height"]
    for name, v in (("width", width), ("height", height)):
        if type(v) is not int:
            raise SchemaError("must be an integer", offset, name)
        if v < 1:
            raise GeometryError("must be >= 1", offset, name)
    caps = obj["captions"]
    if type(caps) is not list or not caps:
        raise SchemaError("captions must be a non-empty list", offset, "captions")
    for i, c in enumerate(caps):
        if type(c) is not str or not c:
            raise SchemaError("caption must be a non-empty string", offset, f"captions[{i}]")
        _check_text(c, offset, f"captions[{i}]")
    dets = obj.get("detections", [])
    if type(dets) is not list:
        raise SchemaError("detections must be a list", offset, "detections")
    detections = tuple([_parse_detection(d, offset, i) for i, d in enumerate(dets)])
    emb = obj.get("block_embeddings")
    block_embeddings = None
    if emb is not None:
        if type(emb) is not list:
            raise SchemaError("block_embeddings must be a list", offset, "block_embeddings")
        rows = []
        dim = None
        for i, row in enumerate(emb):
            path = f"block_embeddings[{i}]"
            if type(row) is not list or not row or not all(_is_number(v) for v in row):
                raise SchemaError("must be a non-empty list of finite numbers", offset, path)
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise SchemaError(f"vector dimension {len(row)} != {dim}", offset, path)
            rows.append(tuple(float(v) for v in row))
        block_embeddings = tuple(rows)
    return ImageRecord(rid, width, height, tuple(caps), detections, block_embeddings)


def parse_record(line: Union[str, bytes], offset: int = 0) -> ImageRecord:
    """Parse one corpus line.

    ``offset`` is the byte offset of the line within its file and is carried
    by any raised :class:`~ptpgen.errors.IngestError`.
    """
    if isinstance(line, (bytes, bytearray, memoryview)):
        try:
            line = bytes(line).decode("utf-8")
        except UnicodeDecodeError as e:
            raise EncodingError(f"invalid UTF-8: {e.reason}", offset + e.start) from None
    try:
        obj = _decoder.decode(line)
    except _Duplicate as e:
        raise SchemaError("duplicated field", offset, str(e.key)) from None
    except json.JSONDecodeError as e:
        pos = len(line[: e.pos].encode("utf-8", "surrogatepass"))
        raise SchemaError(f"malformed JSON: {e.msg}", offset + pos) from None
    except (ValueError, RecursionError) as e:
        raise SchemaError(f"malformed JSON: {e}", offset) from None
    return record_from_dict(obj, offset)


def record_to_dict(rec: ImageRecord) -> dict:
    out = {
        "id": rec.id,
        "width": rec.width,
        "height": rec.height,
        "captions": list(rec.captions),
        "detections": [
            {"box": list(d.box), "tag": d.tag, "confidence": d.confidence} for d in rec.detections
        ],
    }
    if rec.block_embeddings is not None:
        out["block_embeddings"] = [list(v) for v in rec.block_embeddings]
    return out


def serialize_record(rec: ImageRecord) -> str:
    """One JSON line (without the trailing newline) that parses back to ``rec``."""
    return json.dumps(record_to_dict(rec), ensure_ascii=False, separators=(",", ":"))


def iter_lines(stream) -> Iterator[tuple[int, bytes]]:
    """Yield ``(byte_offset, line)`` for every non-blank line of a binary stream."""
    offset = 0
    for raw in stream:
        start = offset
        offset += len(raw)
        if raw.strip():
            yield start, raw


def read_corpus(path) -> Iterator[ImageRecord]:
    with open(path, "rb") as fh:
        for offset, raw in iter_lines(fh):
            yield parse_record(raw, offset)


def write_corpus(path, records: Iterable[ImageRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(serialize_record(rec))
            fh.write("\n")


# --------------------------------------------------------- embedding table


def parse_embedding_table(data: bytes) -> EmbeddingMatrix:
    """Decode a binary embedding table, preserving every float bit pattern."""
    data = bytes(data)
    if len(data) < _HEADER.size:
        if data[: len(MAGIC)] != MAGIC[: len(data)]:
            raise FormatError("bad magic", 0)
        raise TruncationError("stream shorter than header", len(data))
    magic, version, m, d = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    if m < 1 or d < 1:
        raise FormatError(f"M and D must be >= 1, got M={m}, D={d}", 6)
    pos = _HEADER.size
    phrases = []
    for i in range(m):
        if pos + 4 > len(data):
            raise TruncationError(f"phrase {i} length missing", pos, f"phrases[{i}]")
        (n,) = _U32.unpack_from(data, pos)
        pos += 4
        if pos + n > len(data):
            raise TruncationError(f"phrase {i} cut short", pos, f"phrases[{i}]")
        try:
            phrases.append(data[pos : pos + n].decode("utf-8"))
        except UnicodeDecodeError as e:
            raise FormatError(f"phrase is not UTF-8: {e.reason}", pos + e.start, f"phrases[{i}]") from None
        pos += n
    need = m * d * 4
    if pos + need > len(data):
        raise TruncationError(f"vector section needs {need} bytes, {len(data) - pos} left", pos, "vectors")
    if pos + need != len(data):
        raise FormatError(f"{len(data) - pos - need} trailing bytes", pos + need)
    vectors = np.frombuffer(data, dtype="<f4", count=m * d, offset=pos).reshape(m, d)
    return EmbeddingMatrix(phrases, vectors)


def write_embedding_table(matrix: EmbeddingMatrix) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, matrix.m, matrix.d)]
    for p in matrix.phrases:
        raw = p.encode("utf-8")
        parts.append(_U32.pack(len(raw)))
        parts.append(raw)
    parts.append(np.ascontiguousarray(matrix.vectors, dtype="<f4").tobytes())
    return b"".join(parts)


def load_embedding_table(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        return parse_embedding_table(fh.read())


def save_embedding_table(path, matrix: EmbeddingMatrix) -> None:
    with open(path, "wb") as fh:
        fh.write(write_embedding_table(matrix))


# -------------------------------------------------------------- validation


class Violation(NamedTuple):
    code: str
    field: str
    message: str


class ValidationReport(NamedTuple):
    violations: tuple[Violation, ...]

    @property
    def admissible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.admissible


def _exceeds(start: float, length: float, limit: int) -> bool:
    """``start + length > limit`` on the decimal values as written.

    The float sum decides unless it lands within rounding distance of the
    edge; then the shortest decimal forms are added exactly, so a box like
    ``0.2 + 146.8`` on a 147-pixel canvas stays in bounds.
    """
    end = start + length
    if abs(end - limit) > 1e-9 * max(1.0, abs(limit)):
        return end > limit
    return Decimal(repr(float(start))) + Decimal(repr(float(length))) > limit


def validate_record(
    rec: ImageRecord, config: PipelineConfig, table: Optional[EmbeddingMatrix] = None
) -> ValidationReport:
    """Collect every rule the record breaks under ``config``; never raises."""
    found = []
    if config.template_id not in TEMPLATE_IDS:
        found.append(Violation("unknown template", "template_id", f"no template {config.template_id!r}"))
    width, height = rec.width, rec.height
    # sums clear of the edge by this much need no exact check
    near_w, near_h = width - 1e-9 * max(1.0, width), height - 1e-9 * max(1.0, height)
    for i, det in enumerate(rec.detections):
        x, y, w, h = det.box
        if (
            x < 0
            or y < 0
            or (x + w > near_w and _exceeds(x, w, width))
            or (y + h > near_h and _exceeds(y, h, height))
        ):
            found.append(
                Violation("box out of bounds", f"detections[{i}].box", f"{tuple(det.box)} exceeds {rec.width}x{rec.height}")
            )
    emb = rec.block_embeddings
    if emb is not None:
        expected = config.grid_n * config.grid_n
        if len(emb) != expected:
            found.append(
                Violation("embedding count mismatch", "block_embeddings", f"{len(emb)} vectors for {expected} blocks")
            )
        if table is not None and emb and len(emb[0]) != table.d:
            found.append(
                Violation("embedding dimension mismatch", "block_embeddings", f"D={len(emb[0])}, table D={table.d}")
            )
    elif config.mode == "embedding":
        found.append(Violation("missing embeddings", "block_embeddings", "embedding mode needs block_embeddings"))
    return ValidationReport(tuple(found))


__all__ = [
    "DetectedObject",
    "ImageRecord",
    "EmbeddingMatrix",
    "IngestError",
    "parse_record",
    "serialize_record",
    "record_from_dict",
    "record_to_dict",
    "parse_embedding_table",
    "write_embedding_table",
    "load_embedding_table",
    "save_embedding_table",
    "validate_record",
    "ValidationReport",
    "Violation",
    "read_corpus",
    "write_corpus",
    "iter_lines",
]
