"""Synthetic corpora for benchmarks, tests and demos."""

from __future__ import annotations

import json
import random
from typing import Iterator, Optional

import numpy as np

from .ingest import EmbeddingMatrix

TAGS = (
    "dog", "cat", "man", "woman", "tree", "sky", "car", "bus", "grass", "table",
    "chair", "cup", "plate", "shirt", "window", "building", "road", "sign", "boat", "water",
    "horse", "bike", "hat", "umbrella", "bench", "clock", "light", "pizza", "phone", "kite",
)
WORDS = (
    "a", "the", "on", "in", "with", "of", "and", "red", "small", "large", "two", "three",
    "sitting", "standing", "running", "next", "to", "near", "white", "black", "green", "old",
) + TAGS


def synthetic_record(rng: random.Random, rid: str, *, max_detections: int = 10,
                     n_captions: int = 1, p_empty: float = 0.1,
                     embedding_dim: Optional[int] = None, grid_n: int = 3) -> dict:
    """One random, admissible record as a JSON-ready dict."""
    width = rng.randint(64, 1024)
    height = rng.randint(64, 1024)
    caps = [
        " ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 12)))
        for _ in range(n_captions)
    ]
    dets = []
    if rng.random() >= p_empty:
        for _ in range(rng.randint(1, max_detections)):
            w = rng.uniform(1, width)
            h = rng.uniform(1, height)
            x = rng.uniform(0, width - w)
            y = rng.uniform(0, height - h)
            det = {"box": [round(x, 2), round(y, 2), round(w, 2), round(h, 2)], "tag": rng.choice(TAGS)}
            if rng.random() < 0.9:
                det["confidence"] = round(rng.random(), 3)
            dets.append(det)
    rec = {"id": rid, "width": width, "height": height, "captions": caps, "detections": dets}
    if embedding_dim is not None:
        rec["block_embeddings"] = [
            [round(rng.gauss(0, 1), 4) for _ in range(embedding_dim)] for _ in range(grid_n * grid_n)
        ]
    # boxes were rounded after sampling; keep them inside the canvas
    for det in dets:
        x, y, w, h = det["box"]
        det["box"] = [x, y, min(w, round(width - x, 2)), min(h, round(height - y, 2))]
    return rec


def synthetic_lines(n: int, seed: int = 0, **kwargs) -> Iterator[str]:
    rng = random.Random(seed)
    for i in range(n):
        yield json.dumps(synthetic_record(rng, f"img{i:08d}", **kwargs), separators=(",", ":"))


def write_synthetic_corpus(path, n: int, seed: int = 0, **kwargs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in synthetic_lines(n, seed, **kwargs):
            fh.write(line)
            fh.write("\n")


def synthetic_table(m: int, d: int, seed: int = 0, phrases=None) -> EmbeddingMatrix:
    rng = np.random.default_rng(seed)
    if phrases is None:
        phrases = [f"phrase{i}" for i in range(m)]
    return EmbeddingMatrix(phrases, rng.standard_normal((m, d)).astype("<f4"))
