import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptpgen import geometry as geo
from ptpgen.geometry import Affine2D, BlockGrid, Box, apply_affine, block_boundaries, block_of_point, center, compose

from oracles import apply_point, cell_scan, corners_hull


def test_boundaries_224_by_3():
    cols, rows = block_boundaries(BlockGrid(3, 224, 224))
    assert cols == [0, Fraction(224, 3), Fraction(448, 3), 224]
    assert rows == cols


def test_boundaries_divisible():
    cols, _ = block_boundaries(BlockGrid(3, 9, 9))
    assert cols == [0, 3, 6, 9]


def test_boundaries_match_fraction_oracle():
    cols, rows = block_boundaries(BlockGrid(7, 1000, 613))
    assert cols == [Fraction(1000) * i / 7 for i in range(8)]
    assert rows == [Fraction(613) * i / 7 for i in range(8)]
    assert all(a < b for a, b in zip(cols, cols[1:]))


@pytest.mark.parametrize(
    "point, block",
    [((10, 10), 0), ((224, 224), 8), ((112, 112), 4), ((0, 224), 6), ((224, 0), 2)],
)
def test_block_of_point_examples(point, block):
    assert block_of_point(BlockGrid(3, 224, 224), *point) == block


def test_interior_edge_goes_to_higher_cell():
    grid = BlockGrid(3, 9, 9)
    assert block_of_point(grid, 3, 0) == 1
    assert block_of_point(grid, 2.999999, 0) == 0
    assert block_of_point(grid, 0, 6) == 6


@pytest.mark.parametrize("point", [(-0.001, 5), (5, -1e-9), (224.0001, 3), (3, 1e9)])
def test_outside_is_none(point):
    assert block_of_point(BlockGrid(3, 224, 224), *point) is None


def test_block_of_point_vs_cell_scan():
    rng = random.Random(7)
    for _ in range(2000):
        n = rng.randint(1, 8)
        w, h = rng.randint(1, 4096), rng.randint(1, 4096)
        grid = BlockGrid(n, w, h)
        kind = rng.random()
        if kind < 0.3:
            # exactly on an edge, as far as floats allow
            px = w * rng.randint(0, n) / n
            py = h * rng.randint(0, n) / n
        else:
            px, py = rng.uniform(-5, w + 5), rng.uniform(-5, h + 5)
        assert block_of_point(grid, px, py) == cell_scan(n, w, h, px, py), (grid, px, py)


@settings(max_examples=300, deadline=None)
@given(
    n=st.integers(1, 8),
    w=st.integers(1, 4096),
    h=st.integers(1, 4096),
    fx=st.fractions(0, 1),
    fy=st.fractions(0, 1),
)
def test_partition_covers_canvas(n, w, h, fx, fy):
    px, py = float(fx * w), float(fy * h)
    b = block_of_point(BlockGrid(n, w, h), px, py)
    assert b is not None and 0 <= b < n * n
    assert b == cell_scan(n, w, h, px, py)


def test_center_examples():
    assert center(Box(10, 10, 30, 40)) == (25, 30)
    assert center(Box(0, 0, 0, 0)) == (0, 0)


def test_center_random():
    rng = random.Random(1)
    for _ in range(500):
        x, y, w, h = (rng.uniform(-100, 100) for _ in range(4))
        w, h = abs(w), abs(h)
        cx, cy = center(Box(x, y, w, h))
        assert cx == x + 0.5 * w and cy == y + 0.5 * h


def test_identity_is_exact():
    rng = random.Random(2)
    for _ in range(1000):
        b = Box(rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4), rng.uniform(0, 1e4), rng.uniform(0, 1e4))
        assert apply_affine(geo.IDENTITY, b) == b


def test_quarter_turn_about_center_of_square_image():
    # OpenCV convention: (px, py) -> (py, 100 - px) for +90 degrees about (50, 50)
    t = geo.rotate(90, 50, 50)
    assert apply_affine(t, Box(0, 0, 10, 20)) == Box(0, 90, 20, 10)
    assert apply_affine(t, Box(0, 0, 10, 20)) == Box(*corners_hull(t, Box(0, 0, 10, 20)))
    assert apply_affine(geo.rotate(-90, 50, 50), Box(0, 0, 10, 20)) == Box(80, 0, 20, 10)


def test_apply_affine_matches_corner_hull():
    rng = random.Random(3)
    for _ in range(1000):
        t = Affine2D(*(rng.uniform(-3, 3) for _ in range(6)))
        b = Box(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 50), rng.uniform(0, 50))
        assert apply_affine(t, b) == pytest.approx(corners_hull(t, b), abs=1e-9)


def _axis_preserving(rng):
    return geo.compose(geo.translate(rng.uniform(-100, 100), rng.uniform(-100, 100)), geo.scale(rng.uniform(-3, 3), rng.uniform(-3, 3)))


def test_hull_composition_axis_preserving():
    rng = random.Random(4)
    for _ in range(1000):
        t1, t2 = _axis_preserving(rng), _axis_preserving(rng)
        b = Box(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 50), rng.uniform(0, 50))
        two_step = apply_affine(t2, apply_affine(t1, b))
        one_step = corners_hull(compose(t2, t1), b)
        assert two_step == pytest.approx(one_step, rel=1e-12, abs=1e-9)


def _contains(outer, inner, tol=1e-9):
    return (
        outer.x <= inner.x + tol
        and outer.y <= inner.y + tol
        and inner.x + inner.w <= outer.x + outer.w + tol
        and inner.y + inner.h <= outer.y + outer.h + tol
    )


def test_hull_of_hull_contains_composed_hull_for_rotations():
    rng = random.Random(5)
    for _ in range(500):
        t1 = geo.rotate(rng.uniform(-180, 180), rng.uniform(0, 100), rng.uniform(0, 100))
        t2 = geo.rotate(rng.uniform(-180, 180), rng.uniform(0, 100), rng.uniform(0, 100))
        b = Box(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 50))
        assert _contains(apply_affine(t2, apply_affine(t1, b)), Box(*corners_hull(compose(t2, t1), b)))


def test_hull_monotone():
    rng = random.Random(6)
    for _ in range(500):
        outer = Box(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(10, 50), rng.uniform(10, 50))
        inner = Box(outer.x + rng.uniform(0, 5), outer.y + rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5))
        t = Affine2D(*(rng.uniform(-2, 2) for _ in range(6)))
        assert _contains(apply_affine(t, outer), apply_affine(t, inner))


def test_center_commutes_with_dyadic_axis_transforms():
    # integers and power-of-two scales keep every operation exact
    rng = random.Random(8)
    for _ in range(500):
        t = Affine2D(rng.choice([-2.0, -0.5, 0.25, 1.0, 4.0]), 0.0, 0.0, rng.choice([-1.0, 0.5, 2.0]), rng.randint(-99, 99), rng.randint(-99, 99))
        b = Box(rng.randint(-99, 99), rng.randint(-99, 99), rng.randint(0, 99), rng.randint(0, 99))
        assert center(apply_affine(t, b)) == t(*center(b))


def test_compose_identity_and_translations():
    t = Affine2D(1.5, 0.2, -0.3, 0.9, 4.0, -2.0)
    assert compose(geo.IDENTITY, t) == t
    assert compose(t, geo.IDENTITY) == t
    assert compose(geo.translate(1, 2), geo.translate(3, 4)) == geo.translate(4, 6)


def test_compose_pointwise():
    rng = random.Random(9)
    for _ in range(1000):
        t1 = Affine2D(*(rng.uniform(-3, 3) for _ in range(6)))
        t2 = Affine2D(*(rng.uniform(-3, 3) for _ in range(6)))
        px, py = rng.uniform(-100, 100), rng.uniform(-100, 100)
        seq = apply_point(t2, *apply_point(t1, px, py))
        assert compose(t2, t1)(px, py) == pytest.approx(seq, abs=1e-9)


def test_block_box_tiles_grid():
    grid = BlockGrid(3, 224, 100)
    area = sum(geo.block_box(grid, b).w * geo.block_box(grid, b).h for b in range(9))
    assert math.isclose(area, 224 * 100)
    assert geo.block_box(grid, 4) == pytest.approx(Box(224 / 3, 100 / 3, 224 / 3, 100 / 3))


def test_grid_check_rejects_bad_values():
    with pytest.raises(ValueError):
        BlockGrid(0, 10, 10).check()
    with pytest.raises(ValueError):
        BlockGrid(3, 0, 10).check()
