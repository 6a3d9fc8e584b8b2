"""
Vocabulary and embedding tags
=============================

Mine a phrase vocabulary from captions, embed it, and tag each block by
the phrase whose embedding scores highest against the block's embedding.
"""

import numpy as np

from ptpgen.ingest import EmbeddingMatrix, ImageRecord, parse_embedding_table, write_embedding_table
from ptpgen.tagging import embed_tag, tag_blocks_by_embedding
from ptpgen.vocab import build_vocabulary, extract_candidates

captions = [
    "A red panda sleeping on a tree branch",
    "two red pandas on a wooden platform",
    "a dog on the grass",
    "a brown dog running on the grass",
    "Red panda, eating bamboo.",
]
for c in captions[:3]:
    print(f"{c!r:45} -> {extract_candidates(c)}")

# Bigrams need two sightings to count; punctuation breaks adjacency.
vocab = build_vocabulary(captions, m=8)
for phrase, count in vocab:
    print(f"{count}  {phrase}")

# A toy embedding table: random unit vectors, one per phrase.
rng = np.random.default_rng(0)
vectors = rng.standard_normal((len(vocab), 16)).astype(np.float32)
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
table = EmbeddingMatrix(vocab.phrases, vectors)

# The binary table format round-trips bit for bit.
blob = write_embedding_table(table)
print("\ntable bytes:", len(blob), "round trip:", parse_embedding_table(blob) == table)

# Blocks whose embedding sits near a phrase vector get that phrase. The
# argmax of the softmax is the argmax of the raw dot products.
blocks = tuple(tuple(float(v) for v in vectors[i % len(vocab)] + 0.1 * rng.standard_normal(16)) for i in range(9))
rec = ImageRecord("emb-1", 224, 224, ("a red panda",), (), blocks)
tagmap = tag_blocks_by_embedding(rec, table)
for b, tags in tagmap.entries.items():
    print(f"block {b}: {tags[0].tag:12s} score {tags[0].confidence:.3f}")

i, phrase = embed_tag(np.array(blocks[0]) * 5.0, table)
print("\nscaling the query keeps the pick:", phrase == tagmap.entries[0][0].tag)
