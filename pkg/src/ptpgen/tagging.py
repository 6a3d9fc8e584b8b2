"""Per-block object tags from detections or from block/phrase embedding similarity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingEmbeddings
from .geometry import Affine2D, BlockGrid, Box, apply_affine, block_of_point
from .ingest import DetectedObject, EmbeddingMatrix, ImageRecord

DETECTOR = "detector"
EMBEDDING = "embedding"


class BlockTag(NamedTuple):
    tag: str
    confidence: float
    source: str
    box: Optional[Box] = None


@dataclass
class BlockTagMap:
    """Tags per block index plus the objects pushed off the canvas.

    Blocks without tags are absent from ``entries``.
    """

    entries: dict[int, list[BlockTag]] = field(default_factory=dict)
    out_of_border: list[BlockTag] = field(default_factory=list)

    def __bool__(self):
        return bool(self.entries) or bool(self.out_of_border)

    def occupancy(self) -> dict[int, int]:
        return {b: len(tags) for b, tags in self.entries.items()}


def _rank_key(item):
    pos, det = item
    return (-det.confidence, det.tag, pos)


def select_top_k(detections: Sequence[DetectedObject], k: int) -> list[DetectedObject]:
    """The ``k`` most confident detections.

    Ordered by confidence descending, then tag ascending, then input position.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(enumerate(detections), key=_rank_key)
    return [det for _, det in ranked[:k]]


def assign_to_blocks(
    grid: BlockGrid,
    objects: Sequence[DetectedObject],
    transform: Optional[Affine2D] = None,
) -> BlockTagMap:
    """Place each object in the block holding its (transformed) box center."""
    entries: dict[int, list[BlockTag]] = {}
    out: list[BlockTag] = []
    n, width, height = grid
    fx, fy = n / width, n / height
    last = n - 1
    for obj in objects:
        box = obj.box if transform is None else apply_affine(transform, obj.box)
        cx = box.x + box.w / 2
        cy = box.y + box.h / 2
        tag = BlockTag(obj.tag, obj.confidence, DETECTOR, box)
        if not (0 <= cx <= width and 0 <= cy <= height):
            out.append(tag)
            continue
        qx, qy = cx * fx, cy * fy
        col, row = int(qx), int(qy)
        if qx - col < 1e-9 or col + 1 - qx < 1e-9 or qy - row < 1e-9 or row + 1 - qy < 1e-9:
            # near an edge the float estimate may be off by one; use the exact rule
            b = block_of_point(grid, cx, cy)
        else:
            b = (row if row < last else last) * n + (col if col < last else last)
        if b in entries:
            entries[b].append(tag)
        else:
            entries[b] = [tag]
    return BlockTagMap(dict(sorted(entries.items())), out)


def _scores(block_vectors, table: EmbeddingMatrix) -> np.ndarray:
    v = np.asarray(block_vectors, dtype=np.float64)
    if v.shape[-1] != table.d:
        raise DimensionMismatch(f"block vector has dimension {v.shape[-1]}, table D={table.d}")
    return v @ table.float64().T


def embed_tag(block_vector, table: EmbeddingMatrix) -> tuple[int, str]:
    """Phrase whose embedding has the largest dot product with ``block_vector``.

    The argmax of the softmax over phrases equals the argmax of the raw logits,
    so no normalisation is computed. Ties go to the lowest index. Vectors are
    not normalised; pass unit vectors if cosine similarity is wanted.
    """
    v = np.asarray(block_vector, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a single vector, got shape {v.shape}")
    i = int(np.argmax(_scores(v, table)))
    return i, table.phrases[i]


def tag_blocks_by_embedding(rec: ImageRecord, table: EmbeddingMatrix) -> BlockTagMap:
    if rec.block_embeddings is None:
        raise MissingEmbeddings(f"record {rec.id!r} has no block_embeddings")
    scores = _scores(rec.block_embeddings, table)
    best = np.argmax(scores, axis=1)
    entries = {}
    for b, i in enumerate(best.tolist()):
        entries[b] = [BlockTag(table.phrases[i], float(scores[b, i]), EMBEDDING)]
    return BlockTagMap(entries, [])
