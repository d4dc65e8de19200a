#!/usr/bin/env python3
"""Write the tiny IDX fixture used by the loader tests (2 images of 2x3 pixels)."""
import struct
import sys
from pathlib import Path

IMAGES = [
    [0, 255, 128, 64, 32, 1],
    [10, 20, 30, 40, 50, 60],
]
LABELS = [7, 3]

out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data")
out.mkdir(parents=True, exist_ok=True)
with open(out / "fixture-images-idx3-ubyte", "wb") as f:
    f.write(struct.pack(">IIII", 0x00000803, len(IMAGES), 2, 3))
    for img in IMAGES:
        f.write(bytes(img))
with open(out / "fixture-labels-idx1-ubyte", "wb") as f:
    f.write(struct.pack(">II", 0x00000801, len(LABELS)))
    f.write(bytes(LABELS))
