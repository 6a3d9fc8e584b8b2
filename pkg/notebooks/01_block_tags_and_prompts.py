"""
From detections to position-guided prompts
==========================================

One image, a handful of detector boxes, and the sentences that get
appended to its caption.
"""

import json

from ptpgen import PipelineConfig, parse_record, process_record
from ptpgen.geometry import BlockGrid, block_boundaries
from ptpgen.prompt import build_prompts, compose, pretext_sequence, record_rng
from ptpgen.tagging import assign_to_blocks, select_top_k

# A 300x240 image cut into the default 3x3 grid. Blocks are numbered
# 0..8 in reading order, starting at the upper left.
line = json.dumps({
    "id": "demo-001",
    "width": 300,
    "height": 240,
    "captions": ["a dog chasing a ball in the park"],
    "detections": [
        {"box": [20, 30, 60, 50], "tag": "dog", "confidence": 0.95},
        {"box": [130, 100, 40, 40], "tag": "ball", "confidence": 0.80},
        {"box": [140, 90, 30, 60], "tag": "dog", "confidence": 0.40},
        {"box": [0, 0, 300, 80], "tag": "tree", "confidence": 0.30},
        {"box": [250, 200, 20, 20], "tag": "bench", "confidence": 0.05},
    ],
})
rec = parse_record(line)
grid = BlockGrid(3, rec.width, rec.height)
cols, rows = block_boundaries(grid)
print("column edges:", [float(c) for c in cols])
print("row edges:   ", [float(r) for r in rows])

# Keep the K most confident boxes; ties go to the tag, then input order.
top = select_top_k(rec.detections, k=4)
print("\ntop 4:", [(d.tag, d.confidence) for d in top])

# Each box lands in the block holding its center.
tagmap = assign_to_blocks(grid, top)
for block, tags in tagmap.entries.items():
    print(f"block {block}: {[t.tag for t in tags]}")

# Block 4 holds two candidates, so the object is drawn at random. The draw
# comes from a generator seeded by (global seed, record id) and nothing else.
config = PipelineConfig(global_seed=7)
rng, seed = record_rng(config.global_seed, rec.id)
sentences = build_prompts(tagmap, config, rng, grid)
sample = compose(rec.captions[0], sentences, id=rec.id, template_id=config.template_id, seed_used=seed)
print("\ncomposed:", sample.composed)

# Every substituted value keeps its UTF-8 byte span in the composed text.
raw = sample.composed.encode()
for slot in sample.slots:
    print(f"  {slot.kind:5s} {slot.start:3d}-{slot.end:<3d} {raw[slot.start:slot.end].decode()!r}")

# Words of the prompt region are flagged for a language-modeling loss.
print("\nprompt words:", [w for w, flag in pretext_sequence(sample) if flag])

# The whole chain is also one call, with the sampling made identical.
(again,) = process_record(rec, PipelineConfig(global_seed=7, top_k=4))
print("\nprocess_record agrees:", again.composed == sample.composed)

# Other templates, same tags.
for template in ("O_IN_BLOCK", "NOUN_BLOCK_HAS_O", "COORD_HAS_O", "MULTI_TAG", "MULTI_POS", "MIXED"):
    cfg = PipelineConfig(global_seed=7, top_k=4, template_id=template)
    (s,) = process_record(rec, cfg)
    print(f"{template:17s} {s.prompt}")
