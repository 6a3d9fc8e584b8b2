"""Geometric augmentation policies expressed as box co-transforms.

A policy turns a record (and its seeded generator) into one
:class:`~ptpgen.geometry.Affine2D` plus the canvas the grid is laid on after
the transform. Photometric operations are drawn like any other so the random
stream matches an image pipeline, but they leave boxes untouched.

Accepted specs:

* ``None`` - no augmentation
* an ``Affine2D`` - fixed transform, canvas unchanged
* ``{"affine": [a, b, c, d, tx, ty], "canvas": [w, h]}`` - fixed transform with
  an explicit output canvas (``canvas`` optional)
* ``"hflip"``, ``"vflip"``, ``"rot90"``, ``"rot180"``, ``"rot270"`` - fixed
* ``"randaug"`` or ``"randaug:N,M"`` - N random ops at magnitude M (default 2,5)
* ``"flip+randaug[:N,M]"`` - horizontal flip with probability 0.5, then randaug
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from . import geometry as geo
from .errors import ConfigError
from .geometry import Affine2D
from .seeding import RecordRandom

# every op is applied with this probability once drawn
OP_PROB = 0.5
MAX_ROTATE = 30.0
MAX_SHEAR = 0.3
MAX_TRANSLATE = 0.1

RANDAUG_OPS = (
    "Identity",
    "AutoContrast",
    "Equalize",
    "Brightness",
    "Sharpness",
    "ShearX",
    "ShearY",
    "TranslateX",
    "TranslateY",
    "Rotate",
)


class Augmentation(NamedTuple):
    transform: Affine2D
    canvas_width: float
    canvas_height: float


def _randaug(rng, width: float, height: float, n_ops: int, magnitude: float) -> Affine2D:
    t = geo.IDENTITY
    level = magnitude / 10.0
    cx, cy = width / 2, height / 2
    for _ in range(n_ops):
        op = RANDAUG_OPS[rng.randrange(len(RANDAUG_OPS))]
        if rng.random() >= OP_PROB:
            continue
        sign = -1.0 if rng.random() < 0.5 else 1.0
        if op == "Rotate":
            step = geo.rotate(sign * MAX_ROTATE * level, cx, cy)
        elif op == "ShearX":
            step = geo.shear(kx=sign * MAX_SHEAR * level, cy=cy)
        elif op == "ShearY":
            step = geo.shear(ky=sign * MAX_SHEAR * level, cx=cx)
        elif op == "TranslateX":
            step = geo.translate(sign * MAX_TRANSLATE * level * width, 0.0)
        elif op == "TranslateY":
            step = geo.translate(0.0, sign * MAX_TRANSLATE * level * height)
        else:
            continue
        t = geo.compose(step, t)
    return t


def _parse_randaug(spec: str) -> tuple[int, float]:
    _, _, args = spec.partition(":")
    if not args:
        return 2, 5.0
    try:
        n, m = args.split(",")
        return int(n), float(m)
    except ValueError:
        raise ConfigError(f"bad randaug spec {spec!r}, expected randaug:N,M") from None


def check_spec(spec) -> None:
    """Raise :class:`ConfigError` if ``spec`` is not an accepted policy."""
    resolve(spec, 1.0, 1.0, RecordRandom(0))


def resolve(spec, width: float, height: float, rng) -> Optional[Augmentation]:
    if spec is None:
        return None
    if isinstance(spec, Affine2D):
        return Augmentation(spec, width, height)
    if isinstance(spec, dict):
        try:
            t = Affine2D(*(float(v) for v in spec["affine"]))
            cw, ch = spec.get("canvas", (width, height))
            cw, ch = float(cw), float(ch)
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"bad affine spec {spec!r}") from None
        if not (cw > 0 and ch > 0):
            raise ConfigError(f"canvas must be positive, got {cw}x{ch}")
        return Augmentation(t, cw, ch)
    if not isinstance(spec, str):
        raise ConfigError(f"unsupported augmentation spec {spec!r}")
    name = spec.strip().lower()
    fixed = {
        "hflip": lambda: geo.hflip(width),
        "vflip": lambda: geo.vflip(height),
        "rot180": lambda: geo.rotate(180, width / 2, height / 2),
    }
    if name in fixed:
        return Augmentation(fixed[name](), width, height)
    if name in ("rot90", "rot270"):
        # rotating a non-square image by a quarter turn swaps the canvas sides
        deg = 90 if name == "rot90" else 270
        t = geo.compose(geo.translate(height / 2, width / 2), geo.rotate(deg))
        t = geo.compose(t, geo.translate(-width / 2, -height / 2))
        return Augmentation(t, height, width)
    flip = False
    if name.startswith("flip+"):
        flip = True
        name = name[len("flip+"):]
    if name == "randaug" or name.startswith("randaug:"):
        n_ops, magnitude = _parse_randaug(name)
        t = geo.IDENTITY
        if flip and rng.random() < 0.5:
            t = geo.hflip(width)
        t = geo.compose(_randaug(rng, width, height, n_ops, magnitude), t)
        return Augmentation(t, width, height)
    raise ConfigError(f"unknown augmentation policy {spec!r}")
