"""Regenerate the bundled fixture corpus from scikit-image sample data.

Sources are public-domain or CC0 images shipped with scikit-image:
astronaut (NASA), coffee, chelsea, rocket, hubble_deep_field (NASA).
"""
import pathlib

import numpy as np
import skimage.data
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"

# (source, top, left, height, width, output height, output width)
FACES = [
    ("astronaut", 20, 140, 220, 220, 128, 128),
    ("astronaut", 40, 160, 180, 180, 128, 128),
    ("astronaut", 0, 110, 280, 280, 128, 128),
    ("astronaut", 60, 180, 150, 150, 128, 128),
    ("astronaut", 30, 130, 200, 250, 128, 160),
    ("chelsea", 40, 130, 200, 200, 128, 128),
    ("chelsea", 20, 100, 240, 240, 128, 128),
    ("chelsea", 60, 150, 170, 170, 128, 128),
]

MISC = [
    ("coffee", 0, 0, 400, 400, 128, 128),
    ("coffee", 100, 200, 256, 256, 128, 128),
    ("coffee", 50, 300, 300, 300, 192, 192),
    ("rocket", 0, 200, 427, 427, 128, 128),
    ("rocket", 100, 260, 200, 200, 128, 128),
    ("rocket", 200, 0, 227, 340, 128, 192),
    ("hubble_deep_field", 0, 0, 512, 512, 128, 128),
    ("hubble_deep_field", 300, 400, 256, 256, 128, 128),
    ("astronaut", 250, 0, 262, 262, 128, 128),
    ("astronaut", 300, 250, 212, 212, 128, 128),
    ("astronaut", 0, 0, 512, 512, 256, 256),
    ("chelsea", 0, 0, 300, 451, 96, 144),
    ("chelsea", 100, 250, 200, 200, 128, 128),
    ("coffee", 200, 350, 200, 250, 128, 160),
    ("rocket", 50, 50, 300, 300, 128, 128),
    ("hubble_deep_field", 500, 600, 372, 372, 128, 128),
]


def render(entries, out_dir, prefix):
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, (name, top, left, h, w, oh, ow) in enumerate(entries):
        image = getattr(skimage.data, name)()
        crop = np.ascontiguousarray(image[top:top + h, left:left + w, :3])
        tile = Image.fromarray(crop).resize((ow, oh), Image.Resampling.LANCZOS)
        tile.save(out_dir / f"{prefix}{index:02d}.png", optimize=False)


if __name__ == "__main__":
    render(FACES, ROOT / "faces", "face")
    render(MISC, ROOT / "misc", "misc")
