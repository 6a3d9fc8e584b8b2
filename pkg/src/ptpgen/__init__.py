"""Position-guided text prompt corpus compiler.

Turns image-caption records with object detections (or per-block embeddings)
into captions extended with sentences such as "The block 4 has a dog.",
plus cloze probes and dataset statistics.
"""

from .config import PipelineConfig
from .geometry import Affine2D, BlockGrid, Box, apply_affine, block_of_point, center, compose as compose_affine
from .ingest import DetectedObject, EmbeddingMatrix, ImageRecord, parse_embedding_table, parse_record, validate_record
from .pipeline import DatasetStats, compute_stats, process_record, run
from .prompt import PromptedSample, build_prompts, compose, make_cloze, pretext_sequence, render
from .tagging import BlockTagMap, assign_to_blocks, embed_tag, select_top_k, tag_blocks_by_embedding
from .vocab import Vocabulary, build_vocabulary, extract_candidates

__version__ = "0.1.0"

__all__ = [
    "Affine2D",
    "BlockGrid",
    "BlockTagMap",
    "Box",
    "DatasetStats",
    "DetectedObject",
    "EmbeddingMatrix",
    "ImageRecord",
    "PipelineConfig",
    "PromptedSample",
    "Vocabulary",
    "apply_affine",
    "assign_to_blocks",
    "block_of_point",
    "build_prompts",
    "build_vocabulary",
    "center",
    "compose",
    "compose_affine",
    "compute_stats",
    "embed_tag",
    "extract_candidates",
    "make_cloze",
    "parse_embedding_table",
    "parse_record",
    "pretext_sequence",
    "process_record",
    "render",
    "run",
    "select_top_k",
    "tag_blocks_by_embedding",
    "validate_record",
]
