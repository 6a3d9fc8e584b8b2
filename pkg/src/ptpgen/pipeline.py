"""Corpus compilation: records in, prompted samples and rejects out.

Records are processed in chunks by a process pool. Chunk results are written
strictly in submission order, so worker count never changes the output
bytes; every random choice is drawn from a generator seeded by
``(global_seed, record id)``.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import islice
from multiprocessing import Pool
from typing import Iterable, Iterator, Optional, Sequence

from . import augment
from .config import PipelineConfig
from .errors import (
    ConfigError,
    IoError,
    MissingEmbeddings,
    NoAnnotations,
    PTPError,
    SchemaError,
    describe,
)
from .geometry import BlockGrid
from .ingest import EmbeddingMatrix, ImageRecord, iter_lines, load_embedding_table, parse_record, validate_record
from .seeding import RecordRandom
from .prompt import PromptedSample, build_prompts, compose, record_rng
from .tagging import BlockTagMap, assign_to_blocks, select_top_k, tag_blocks_by_embedding

log = logging.getLogger(__name__)

_dumps = json.JSONEncoder(ensure_ascii=False, separators=(",", ":"), check_circular=False).encode


class ValidationFailed(PTPError, ValueError):
    def __init__(self, record_id: str, violations):
        self.violations = violations
        super().__init__(f"record {record_id!r}: " + "; ".join(f"{v.field}: {v.code}" for v in violations))


@dataclass
class DatasetStats:
    images: int = 0
    captions: int = 0
    records_with_boxes: int = 0
    prompted: int = 0
    unprompted: int = 0
    template_counts: dict = field(default_factory=dict)
    block_occupancy: list = field(default_factory=list)
    out_of_border: int = 0
    rejected: int = 0

    def merge(self, other: "DatasetStats") -> "DatasetStats":
        self.images += other.images
        self.captions += other.captions
        self.records_with_boxes += other.records_with_boxes
        self.prompted += other.prompted
        self.unprompted += other.unprompted
        for k, v in other.template_counts.items():
            self.template_counts[k] = self.template_counts.get(k, 0) + v
        self._add_occupancy(other.block_occupancy)
        self.out_of_border += other.out_of_border
        self.rejected += other.rejected
        return self

    def _add_occupancy(self, counts: Sequence[int]) -> None:
        occ = self.block_occupancy
        if len(occ) < len(counts):
            occ.extend([0] * (len(counts) - len(occ)))
        for i, c in enumerate(counts):
            occ[i] += c

    def add_sample(self, sample: PromptedSample) -> None:
        """Count one output line; image-level fields come from its first caption."""
        meta = sample.meta
        self.captions += 1
        for t in sample.sentence_templates:
            self.template_counts[t] = self.template_counts.get(t, 0) + 1
        if meta.get("caption_index", 0) != 0:
            return
        self.images += 1
        if sample.prompt:
            self.prompted += 1
        else:
            self.unprompted += 1
        if meta.get("n_detections", 0) > 0:
            self.records_with_boxes += 1
        self._add_occupancy(meta.get("occupancy", ()))
        self.out_of_border += meta.get("out_of_border", 0)

    def as_dict(self) -> dict:
        return {
            "images": self.images,
            "captions": self.captions,
            "records_with_boxes": self.records_with_boxes,
            "prompted": self.prompted,
            "unprompted": self.unprompted,
            "template_counts": dict(sorted(self.template_counts.items())),
            "block_occupancy": list(self.block_occupancy),
            "out_of_border": self.out_of_border,
            "rejected": self.rejected,
        }

    def __eq__(self, other):
        if not isinstance(other, DatasetStats):
            return NotImplemented
        a, b = self.as_dict(), other.as_dict()
        # an all-zero histogram equals an absent one
        a["block_occupancy"] = _trim(a["block_occupancy"])
        b["block_occupancy"] = _trim(b["block_occupancy"])
        return a == b


def _trim(occ):
    occ = list(occ)
    while occ and occ[-1] == 0:
        occ.pop()
    return occ


def tag_record(
    rec: ImageRecord,
    config: PipelineConfig,
    table: Optional[EmbeddingMatrix],
    rng: RecordRandom,
) -> tuple[BlockTagMap, BlockGrid]:
    n = config.grid_n
    if config.mode == "embedding":
        if table is None:
            raise MissingEmbeddings("embedding mode needs an embedding table")
        grid = BlockGrid(n, rec.width, rec.height)
        return tag_blocks_by_embedding(rec, table), grid
    aug = augment.resolve(config.augmentation, rec.width, rec.height, rng)
    if aug is None:
        grid = BlockGrid(n, rec.width, rec.height)
        transform = None
    else:
        grid = BlockGrid(n, aug.canvas_width, aug.canvas_height)
        transform = aug.transform
    if not rec.detections:
        return BlockTagMap({}, []), grid
    return assign_to_blocks(grid, select_top_k(rec.detections, config.top_k), transform), grid


def process_record(
    rec: ImageRecord, config: PipelineConfig, table: Optional[EmbeddingMatrix] = None
) -> list[PromptedSample]:
    """Prompted samples for every caption of ``rec``, in caption order.

    All captions share the record's tags; each caption draws its own objects
    (and templates, under ``MIXED``) from the record's generator in turn.
    """
    rng, seed = record_rng(config.global_seed, rec.id)
    tagmap, grid = tag_record(rec, config, table, rng)
    n_blocks = config.grid_n * config.grid_n
    occupancy = [0] * n_blocks
    for b, tags in tagmap.entries.items():
        occupancy[b] = len(tags)
    n_captions = len(rec.captions)
    n_detections = len(rec.detections)
    n_off = len(tagmap.out_of_border)
    samples = []
    for i, caption in enumerate(rec.captions):
        sentences = build_prompts(tagmap, config, rng, grid) if tagmap else []
        if not sentences and not config.partial_ok:
            raise NoAnnotations(f"record {rec.id!r} has no usable annotations")
        sample = compose(caption, sentences, id=rec.id, template_id=config.template_id, seed_used=seed)
        sample.meta.update(
            caption_index=i,
            n_captions=n_captions,
            n_detections=n_detections,
            occupancy=occupancy,
            out_of_border=n_off,
        )
        samples.append(sample)
    return samples


# ------------------------------------------------------------------ workers

_worker_config: Optional[PipelineConfig] = None
_worker_table: Optional[EmbeddingMatrix] = None


def _init_worker(config, table):
    global _worker_config, _worker_table
    _worker_config, _worker_table = config, table


def process_lines(
    lines: Iterable[tuple[int, int, bytes]],
    config: PipelineConfig,
    table: Optional[EmbeddingMatrix] = None,
) -> tuple[str, str, DatasetStats]:
    """Process ``(line_no, byte_offset, raw)`` triples.

    Returns the output text, the rejects text and the chunk's statistics.
    """
    out: list[str] = []
    rejects: list[str] = []
    stats = DatasetStats()
    for line_no, offset, raw in lines:
        rec = None
        try:
            rec = parse_record(raw, offset)
            report = validate_record(rec, config, table)
            if report.violations:
                raise ValidationFailed(rec.id, report.violations)
            samples = process_record(rec, config, table)
        except PTPError as e:
            entry = {"line": line_no, "offset": offset}
            if rec is not None:
                entry["id"] = rec.id
            entry.update(describe(e))
            if isinstance(e, ValidationFailed):
                entry["violations"] = [v._asdict() for v in e.violations]
            rejects.append(_dumps(entry))
            stats.rejected += 1
            continue
        for s in samples:
            out.append(s.to_json())
            stats.add_sample(s)
    text = "\n".join(out)
    rej = "\n".join(rejects)
    return (text + "\n" if out else ""), (rej + "\n" if rejects else ""), stats


def _process_chunk(chunk):
    return process_lines(chunk, _worker_config, _worker_table)


def _numbered(stream) -> Iterator[tuple[int, int, bytes]]:
    for line_no, (offset, raw) in enumerate(iter_lines(stream), 1):
        yield line_no, offset, raw


def _chunks(it, size):
    it = iter(it)
    while chunk := list(islice(it, size)):
        yield chunk


def _ordered_results(pool, chunks, window):
    # bounded reorder buffer: at most `window` chunks in flight, yielded in submission order
    pending: deque = deque()
    for chunk in chunks:
        pending.append(pool.apply_async(_process_chunk, (chunk,)))
        if len(pending) >= window:
            yield pending.popleft().get()
    while pending:
        yield pending.popleft().get()


def load_table(config: PipelineConfig) -> Optional[EmbeddingMatrix]:
    if config.mode != "embedding":
        return None
    if not config.embeddings_path:
        raise ConfigError("embedding mode needs an embeddings path")
    try:
        return load_embedding_table(config.embeddings_path)
    except OSError as e:
        raise IoError(f"cannot read embeddings: {e}") from e


def default_rejects_path(output_path: str) -> str:
    return output_path + ".rejects.jsonl"


def run(config: PipelineConfig, table: Optional[EmbeddingMatrix] = None) -> DatasetStats:
    """Compile ``config.input_path`` into ``config.output_path``.

    Records that fail to parse, validate or prompt go to the rejects file
    (``<output>.rejects.jsonl`` unless configured) with their error.
    """
    config.check()
    augment.check_spec(config.augmentation)
    if not config.input_path or not config.output_path:
        raise ConfigError("input and output paths are required")
    if table is None:
        table = load_table(config)
    rejects_path = config.rejects_path or default_rejects_path(config.output_path)
    stats = DatasetStats(block_occupancy=[0] * (config.grid_n * config.grid_n))
    try:
        with open(config.input_path, "rb") as src, open(
            config.output_path, "w", encoding="utf-8", newline="\n"
        ) as dst, open(rejects_path, "w", encoding="utf-8", newline="\n") as rej:
            chunks = _chunks(_numbered(src), config.chunk_size)
            if config.workers == 1:
                results = (process_lines(c, config, table) for c in chunks)
                pool = None
            else:
                pool = Pool(config.workers, initializer=_init_worker, initargs=(config, table))
                results = _ordered_results(pool, chunks, 4 * config.workers)
            try:
                for text, rejected, part in results:
                    dst.write(text)
                    rej.write(rejected)
                    stats.merge(part)
            finally:
                if pool is not None:
                    pool.terminate()
                    pool.join()
    except OSError as e:
        raise IoError(str(e)) from e
    log.info("processed %d images, %d captions, %d rejected", stats.images, stats.captions, stats.rejected)
    return stats


def compute_stats(lines: Iterable, rejects: Optional[Iterable] = None) -> DatasetStats:
    """Recount statistics from output corpus lines (str or bytes).

    Consecutive lines sharing an id belong to one image. ``meta`` fields are
    optional; without them only image, caption, prompt and template counts are
    recovered.
    """
    stats = DatasetStats()
    prev_id = None
    for line_no, line in enumerate(lines, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rid = obj["id"]
            prompt = obj["prompt"]
            meta = obj.get("meta") or {}
            templates = obj.get("sentence_templates", ())
            if not isinstance(rid, str) or not isinstance(prompt, str) or not isinstance(meta, dict):
                raise TypeError("wrong field type")
        except (ValueError, KeyError, TypeError) as e:
            raise SchemaError(f"output line {line_no}: {e}", field="") from None
        stats.captions += 1
        for t in templates:
            stats.template_counts[t] = stats.template_counts.get(t, 0) + 1
        if rid == prev_id:
            continue
        prev_id = rid
        stats.images += 1
        if prompt:
            stats.prompted += 1
        else:
            stats.unprompted += 1
        if meta.get("n_detections", 0) > 0:
            stats.records_with_boxes += 1
        stats._add_occupancy(meta.get("occupancy", ()))
        stats.out_of_border += meta.get("out_of_border", 0)
    if rejects is not None:
        stats.rejected = sum(1 for r in rejects if r.strip())
    return stats


def compute_stats_file(path, rejects_path=None) -> DatasetStats:
    with open(path, "rb") as fh:
        if rejects_path is None:
            return compute_stats(fh)
        with open(rejects_path, "rb") as rj:
            return compute_stats(fh, rj)
