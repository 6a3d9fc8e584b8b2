"""
Moving boxes with the image
===========================

Geometric augmentation moves every box with the pixels. A transformed
box is replaced by the upright hull of its four corners, and its block is
recomputed on the new canvas.
"""

import json

from ptpgen import PipelineConfig, parse_record, process_record
from ptpgen import geometry as geo
from ptpgen.geometry import Box, apply_affine

box = Box(0, 0, 10, 20)

# A quarter turn about the center of a 100x100 image. Positive angles turn
# counter-clockwise on screen, as in OpenCV, so the top-left corner goes
# to the bottom-left.
quarter = geo.rotate(90, 50, 50)
print("rotate +90:", apply_affine(quarter, box))
print("rotate -90:", apply_affine(geo.rotate(-90, 50, 50), box))

# Rotating about the center keeps every point at the same distance from
# it, which is a quick sanity check on any claimed result.
cx, cy = geo.center(box)
hx, hy = geo.center(apply_affine(quarter, box))
print("distance of center before/after:", round(((cx - 50) ** 2 + (cy - 50) ** 2) ** 0.5, 3),
      round(((hx - 50) ** 2 + (hy - 50) ** 2) ** 0.5, 3))

# A 30 degree turn: the hull grows to hold the tilted corners.
print("rotate 30: ", apply_affine(geo.rotate(30, 50, 50), box))

# Axis-preserving transforms compose exactly; the hull of a hull under two
# rotations can be looser than the hull under their composition.
t1, t2 = geo.rotate(20, 50, 50), geo.rotate(25, 50, 50)
print("two steps:  ", apply_affine(t2, apply_affine(t1, box)))
print("one step:   ", apply_affine(geo.compose(t2, t1), box))

# In the pipeline: flipping moves the dog from the left column to the right.
line = json.dumps({
    "id": "aug-1", "width": 224, "height": 224, "captions": ["a dog"],
    "detections": [{"box": [10, 10, 30, 40], "tag": "dog"}],
})
rec = parse_record(line)
for spec in (None, "hflip", "vflip", "rot90", {"affine": [1, 0, 0, 1, 300, 0]}):
    (s,) = process_record(rec, PipelineConfig(augmentation=spec))
    print(f"{str(spec):40s} {s.prompt}")

# Random policies draw from the record generator, so the same seed and id
# always give the same transform, whatever the worker count.
for seed in (0, 0, 1):
    (s,) = process_record(rec, PipelineConfig(augmentation="flip+randaug:2,9", global_seed=seed))
    print("seed", seed, s.prompt)
