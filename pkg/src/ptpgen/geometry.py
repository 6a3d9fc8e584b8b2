"""Block grid over the image plane, box arithmetic and affine box co-transforms."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Optional


class Box(NamedTuple):
    """Axis-aligned box, ``(x, y)`` is the top-left corner."""

    x: float
    y: float
    w: float
    h: float


class BlockGrid(NamedTuple):
    """``n x n`` even partition of a ``width x height`` canvas.

    Blocks are numbered row-major from the top-left, 0 .. n*n - 1.
    """

    n: int
    width: float
    height: float

    @property
    def size(self) -> int:
        return self.n * self.n

    def check(self) -> "BlockGrid":
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"grid n must be a positive integer, got {self.n!r}")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        return self


class Affine2D(NamedTuple):
    """Maps ``(px, py)`` to ``(a*px + b*py + tx, c*px + d*py + ty)``."""

    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0
    tx: float = 0.0
    ty: float = 0.0

    def __call__(self, px: float, py: float) -> tuple[float, float]:
        return (self.a * px + self.b * py + self.tx, self.c * px + self.d * py + self.ty)

    @property
    def is_axis_preserving(self) -> bool:
        return self.b == 0 and self.c == 0


IDENTITY = Affine2D()


def translate(tx: float, ty: float) -> Affine2D:
    return Affine2D(1.0, 0.0, 0.0, 1.0, tx, ty)


def scale(sx: float, sy: Optional[float] = None, cx: float = 0.0, cy: float = 0.0) -> Affine2D:
    """Scale by ``(sx, sy)`` about the fixed point ``(cx, cy)``."""
    if sy is None:
        sy = sx
    return Affine2D(sx, 0.0, 0.0, sy, cx - sx * cx, cy - sy * cy)


def hflip(width: float) -> Affine2D:
    return Affine2D(-1.0, 0.0, 0.0, 1.0, width, 0.0)


def vflip(height: float) -> Affine2D:
    return Affine2D(1.0, 0.0, 0.0, -1.0, 0.0, height)


def _cos_sin(degrees: float) -> tuple[float, float]:
    # quarter turns are returned exactly so right-angle rotations stay exact
    q, r = divmod(degrees, 90.0)
    if r == 0:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(q) % 4]
    rad = math.radians(degrees)
    return math.cos(rad), math.sin(rad)


def rotate(degrees: float, cx: float = 0.0, cy: float = 0.0) -> Affine2D:
    """Rotation about ``(cx, cy)`` in image coordinates (y axis pointing down).

    Positive angles turn counter-clockwise as seen on screen, the same
    convention as OpenCV's ``getRotationMatrix2D``.
    """
    cos, sin = _cos_sin(degrees)
    return Affine2D(
        cos, sin, -sin, cos,
        (1.0 - cos) * cx - sin * cy,
        sin * cx + (1.0 - cos) * cy,
    )


def shear(kx: float = 0.0, ky: float = 0.0, cx: float = 0.0, cy: float = 0.0) -> Affine2D:
    """Shear ``x += kx * (y - cy)``, ``y += ky * (x - cx)``."""
    return Affine2D(1.0, kx, ky, 1.0, -kx * cy, -ky * cx)


def compose(t2: Affine2D, t1: Affine2D) -> Affine2D:
    """Transform equivalent to applying ``t1`` first and then ``t2``."""
    return Affine2D(
        t2.a * t1.a + t2.b * t1.c,
        t2.a * t1.b + t2.b * t1.d,
        t2.c * t1.a + t2.d * t1.c,
        t2.c * t1.b + t2.d * t1.d,
        t2.a * t1.tx + t2.b * t1.ty + t2.tx,
        t2.c * t1.tx + t2.d * t1.ty + t2.ty,
    )


def center(box: Box) -> tuple[float, float]:
    return (box.x + box.w / 2, box.y + box.h / 2)


def apply_affine(t: Affine2D, box: Box) -> Box:
    """Axis-aligned hull of the four transformed corners of ``box``.

    The extreme corner along each output axis is picked from the signs of the
    coefficients, and the extent is ``|a|*w + |b|*h`` (resp. ``|c|*w + |d|*h``),
    so the identity transform reproduces the box bit for bit.
    """
    a, b, c, d, tx, ty = t
    x, y, w, h = box
    x0 = a * (x if a >= 0 else x + w) + b * (y if b >= 0 else y + h) + tx
    y0 = c * (x if c >= 0 else x + w) + d * (y if d >= 0 else y + h) + ty
    return Box(x0, y0, abs(a) * w + abs(b) * h, abs(c) * w + abs(d) * h)


def block_boundaries(grid: BlockGrid) -> tuple[list[Fraction], list[Fraction]]:
    """Exact column and row edges ``i * size / n`` for ``i = 0 .. n``."""
    n = grid.n
    width = Fraction(grid.width)
    height = Fraction(grid.height)
    return [width * i / n for i in range(n + 1)], [height * i / n for i in range(n + 1)]


def _cell(p: float, n: int, size: float) -> int:
    q = p * n / size
    i = math.floor(q)
    # rounding can only misplace points sitting next to an edge; settle those exactly
    if q - i < 1e-9 or i + 1 - q < 1e-9:
        i = math.floor(Fraction(p) * n / Fraction(size))
    return n - 1 if i >= n else i


def block_of_point(grid: BlockGrid, px: float, py: float) -> Optional[int]:
    """Row-major block index of a point, or ``None`` outside the closed canvas.

    Cells are half-open ``[lo, hi)``; a point on the far right or bottom edge
    is clamped into the last column or row.
    """
    n, width, height = grid
    if not (0 <= px <= width and 0 <= py <= height):
        return None
    return _cell(py, n, height) * n + _cell(px, n, width)


def block_box(grid: BlockGrid, block: int) -> Box:
    """Pixel rectangle covered by ``block``."""
    n, width, height = grid
    row, col = divmod(block, n)
    x0, x1 = col * width / n, (col + 1) * width / n
    y0, y1 = row * height / n, (row + 1) * height / n
    return Box(x0, y0, x1 - x0, y1 - y0)
