"""Run configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError

DEFAULT_GRID_N = 3
DEFAULT_TOP_K = 10
DEFAULT_VOCAB_SIZE = 3000

BASE_TEMPLATES = (
    "O_IN_BLOCK",
    "BLOCK_LOOKS_LIKE",
    "QA_WHICH_BLOCK",
    "O_LOCATED_IN",
    "COORD_HAS_O",
    "NOUN_BLOCK_HAS_O",
    "BLOCK_HAS_O",
)
EXTRA_TEMPLATES = ("MULTI_TAG", "MULTI_POS", "REGION_SYNONYM")
TEMPLATE_IDS = BASE_TEMPLATES + EXTRA_TEMPLATES + ("MIXED",)

WORKERS_ENV = "PTPGEN_WORKERS"


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {value!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for one corpus compilation run.

    ``augmentation`` is either ``None``, an :class:`~ptpgen.geometry.Affine2D`,
    or the name of a geometric policy from :mod:`ptpgen.augment`.
    """

    grid_n: int = DEFAULT_GRID_N
    top_k: int = DEFAULT_TOP_K
    mode: str = "detector"
    template_id: str = "BLOCK_HAS_O"
    vocab_size: int = DEFAULT_VOCAB_SIZE
    global_seed: int = 0
    partial_ok: bool = True
    emit_x: bool = True
    max_sentences: Optional[int] = None
    augmentation: object = None
    workers: int = 1
    chunk_size: int = 512
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    rejects_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def sentence_cap(self) -> int:
        return self.grid_n * self.grid_n if self.max_sentences is None else self.max_sentences

    def check(self) -> "PipelineConfig":
        if not isinstance(self.grid_n, int) or self.grid_n < 1:
            raise ConfigError(f"grid_n must be >= 1, got {self.grid_n!r}")
        if not isinstance(self.top_k, int) or self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k!r}")
        if not isinstance(self.vocab_size, int) or self.vocab_size < 1:
            raise ConfigError(f"vocab_size must be >= 1, got {self.vocab_size!r}")
        if self.mode not in ("detector", "embedding"):
            raise ConfigError(f"mode must be 'detector' or 'embedding', got {self.mode!r}")
        if self.template_id not in TEMPLATE_IDS:
            raise ConfigError(f"unknown template {self.template_id!r}")
        if self.template_id in ("NOUN_BLOCK_HAS_O", "MIXED") and self.grid_n != 3:
            raise ConfigError(f"template {self.template_id} needs grid_n == 3 for noun positions")
        if self.max_sentences is not None and self.max_sentences < 0:
            raise ConfigError("max_sentences must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.global_seed < 2**64:
            raise ConfigError("global_seed must fit in 64 unsigned bits")
        return self

    def with_(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)
