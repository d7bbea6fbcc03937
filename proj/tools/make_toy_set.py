#!/usr/bin/env python3
"""Regenerates tests/data/toy: small RGB crops of scikit-image sample photos.

train/HR holds 10 crops, val/HR holds 3 crops taken from regions that do not
overlap any training crop.
"""
import os
import sys

import numpy as np
import skimage.data as data
from PIL import Image

TRAIN = [
    ("astronaut_a", data.astronaut, 40, 180, 160),
    ("astronaut_b", data.astronaut, 300, 300, 160),
    ("chelsea_a", data.chelsea, 60, 120, 160),
    ("chelsea_b", data.chelsea, 130, 280, 160),
    ("coffee_a", data.coffee, 20, 180, 160),
    ("coffee_b", data.coffee, 200, 380, 160),
    ("rocket_a", data.rocket, 40, 200, 160),
    ("rocket_b", data.rocket, 250, 420, 160),
    ("hubble_a", data.hubble_deep_field, 300, 300, 160),
    ("ihc_a", data.immunohistochemistry, 100, 100, 160),
]
VAL = [
    ("astronaut_v", data.astronaut, 330, 40, 128),
    ("coffee_v", data.coffee, 230, 20, 128),
    ("rocket_v", data.rocket, 260, 40, 128),
]


def write(root, items):
    os.makedirs(root, exist_ok=True)
    for name, loader, y, x, size in items:
        img = np.asarray(loader())[y:y + size, x:x + size, :3]
        assert img.shape == (size, size, 3), (name, img.shape)
        Image.fromarray(img.astype(np.uint8), "RGB").save(os.path.join(root, name + ".png"))


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "data", "toy")
    write(os.path.join(out, "train", "HR"), TRAIN)
    write(os.path.join(out, "val", "HR"), VAL)
