import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptpgen import geometry as geo
from ptpgen.errors import DimensionMismatch, MissingEmbeddings
from ptpgen.geometry import BlockGrid, Box
from ptpgen.ingest import DetectedObject, EmbeddingMatrix, ImageRecord
from ptpgen.tagging import assign_to_blocks, embed_tag, select_top_k, tag_blocks_by_embedding

from oracles import brute_assign, full_sort_top_k, softmax_argmax


def det(tag, conf, box=(0, 0, 1, 1)):
    return DetectedObject(Box(*box), tag, conf)


def test_top_k_tie_break_by_tag_then_position():
    dets = [det("zebra", 0.9), det("apple", 0.9), det("apple", 0.9, (5, 5, 1, 1)), det("cat", 0.95)]
    assert select_top_k(dets, 3) == [dets[3], dets[1], dets[2]]


def test_top_k_shorter_list_returns_all():
    dets = [det("a", 0.1), det("b", 0.2)]
    assert select_top_k(dets, 10) == [dets[1], dets[0]]
    assert select_top_k([], 10) == []


def test_top_k_rejects_zero():
    with pytest.raises(ValueError):
        select_top_k([det("a", 1)], 0)


def random_detections(rng, n):
    tags = ["cat", "dog", "car", "tree", "cup"]
    confs = [0.1, 0.5, 0.5, 0.9, 1.0, rng.random()]
    return [det(rng.choice(tags), rng.choice(confs), (rng.randint(0, 99), 0, 1, 1)) for _ in range(n)]


def test_top_k_matches_full_sort_oracle():
    rng = random.Random(21)
    for _ in range(1000):
        dets = random_detections(rng, rng.randint(0, 40))
        k = rng.randint(1, 15)
        assert select_top_k(dets, k) == full_sort_top_k(dets, k)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from([0.0, 0.3, 0.7, 1.0])), max_size=25), st.integers(1, 30))
def test_top_k_prefix_and_ordering(pairs, k):
    dets = [det(t, c) for t, c in pairs]
    top = select_top_k(dets, k)
    assert len(top) == min(k, len(dets))
    assert top == select_top_k(dets, k + 1)[: len(top)]
    keys = [(-d.confidence, d.tag) for d in top]
    assert keys == sorted(keys)
    # nothing left out beats what was kept
    rest = list(dets)
    for d in top:
        rest.remove(d)
    if top and rest:
        assert max(keys) <= min((-d.confidence, d.tag) for d in rest)


def test_assign_example():
    grid = BlockGrid(3, 224, 224)
    m = assign_to_blocks(grid, [det("dog", 0.9, (10, 10, 30, 40)), det("sky", 0.5, (0, 0, 224, 224))])
    assert {b: [t.tag for t in tags] for b, tags in m.entries.items()} == {0: ["dog"], 4: ["sky"]}
    assert m.out_of_border == []


def test_assign_matches_brute_force():
    rng = random.Random(22)
    for _ in range(500):
        n = rng.randint(1, 6)
        w, h = rng.randint(1, 2000), rng.randint(1, 2000)
        objs = []
        for _ in range(rng.randint(0, 12)):
            if rng.random() < 0.3:
                # centers right on a grid line
                cx = w * rng.randint(0, n) / n
                cy = h * rng.randint(0, n) / n
                bw, bh = 2 * rng.randint(0, 5), 2 * rng.randint(0, 5)
                objs.append(det("t", 1, (cx - bw / 2, cy - bh / 2, bw, bh)))
            else:
                objs.append(det(rng.choice("abc"), 1, (rng.uniform(-50, w), rng.uniform(-50, h), rng.uniform(0, w), rng.uniform(0, h))))
        m = assign_to_blocks(BlockGrid(n, w, h), objs)
        got = {b: [t.tag for t in tags] for b, tags in m.entries.items()}
        entries, off = brute_assign(n, w, h, objs)
        assert got == entries
        assert [t.tag for t in m.out_of_border] == off


def test_assign_conserves_objects_and_keeps_order():
    rng = random.Random(23)
    for _ in range(200):
        objs = [det(f"t{i}", 1, (rng.uniform(-100, 300), rng.uniform(-100, 300), rng.uniform(0, 50), rng.uniform(0, 50))) for i in range(rng.randint(0, 20))]
        m = assign_to_blocks(BlockGrid(3, 224, 224), objs, geo.rotate(rng.uniform(-45, 45), 112, 112))
        placed = [t.tag for tags in m.entries.values() for t in tags] + [t.tag for t in m.out_of_border]
        assert sorted(placed) == sorted(o.tag for o in objs)
        for tags in m.entries.values():
            idx = [int(t.tag[1:]) for t in tags]
            assert idx == sorted(idx)
        assert list(m.entries) == sorted(m.entries)
        assert all(0 <= b < 9 for b in m.entries)


def test_flip_mirrors_columns():
    grid = BlockGrid(3, 300, 300)
    objs = [det("a", 1, (10, 10, 20, 20)), det("b", 1, (250, 120, 20, 20))]
    m = assign_to_blocks(grid, objs, geo.hflip(300))
    assert {b: [t.tag for t in v] for b, v in m.entries.items()} == {2: ["a"], 3: ["b"]}


def test_translation_off_canvas_goes_out_of_border():
    m = assign_to_blocks(BlockGrid(3, 100, 100), [det("a", 1, (80, 80, 10, 10))], geo.translate(50, 0))
    assert m.entries == {} and [t.tag for t in m.out_of_border] == ["a"]


# --------------------------------------------------------------- embeddings


def test_embed_tag_identity_rows():
    table = EmbeddingMatrix(["cat", "dog", "car"], np.eye(3))
    assert embed_tag([0.1, 0.9, 0.2], table) == (1, "dog")


def test_embed_tag_ties_go_to_lowest_index():
    table = EmbeddingMatrix(["a", "b", "c"], [[1, 0], [1, 0], [0, 1]])
    assert embed_tag([1, 0], table) == (0, "a")


def test_embed_tag_dimension_mismatch():
    table = EmbeddingMatrix(["a"], [[1, 0]])
    with pytest.raises(DimensionMismatch):
        embed_tag([1, 0, 0], table)


def random_instance(rng):
    m, d = int(rng.integers(1, 51)), int(rng.integers(1, 17))
    rows = (rng.standard_normal((m, d))).astype(np.float32)
    if rng.random() < 0.2:
        # force an exact tie with an earlier row
        j = rng.integers(0, m)
        rows[-1] = rows[j]
    table = EmbeddingMatrix([f"p{i}" for i in range(m)], rows)
    h = rng.standard_normal(d)
    return table, h


def test_embed_tag_matches_softmax_oracle():
    rng = np.random.default_rng(31)
    for _ in range(500):
        table, h = random_instance(rng)
        assert embed_tag(h, table)[0] == softmax_argmax(h, table.vectors.tolist())


def test_embed_tag_positive_scale_invariance():
    rng = np.random.default_rng(32)
    for _ in range(500):
        table, h = random_instance(rng)
        c = float(rng.choice([2.0 ** rng.integers(-8, 8), rng.uniform(0.01, 100)]))
        assert embed_tag(h * c, table)[0] == embed_tag(h, table)[0]


def test_tag_blocks_by_embedding():
    table = EmbeddingMatrix(["cat", "dog"], [[1, 0], [0, 1]])
    rec = ImageRecord("r", 10, 10, ("c",), (), tuple((float(i % 2), float(1 - i % 2)) for i in range(9)))
    m = tag_blocks_by_embedding(rec, table)
    assert [m.entries[b][0].tag for b in range(9)] == ["dog", "cat"] * 4 + ["dog"]
    assert all(t.source == "embedding" for v in m.entries.values() for t in v)


def test_tag_blocks_without_embeddings():
    with pytest.raises(MissingEmbeddings):
        tag_blocks_by_embedding(ImageRecord("r", 10, 10, ("c",)), EmbeddingMatrix(["a"], [[1]]))
