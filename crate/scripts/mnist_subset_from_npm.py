#!/usr/bin/env python3
"""Rebuild data/mnist10k/ from the `mnist` npm package (10,000 MNIST digits).

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_subset_from_npm.py package/src/digits data/mnist10k

The package stores each digit class as a flat JSON array of pixel intensities
k/255 rounded to three decimals, so round(v * 255) recovers the original byte.
Output is written as gzip-compressed IDX files, samples grouped by class.
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    pixels = bytearray()
    labels = bytearray()
    for digit in range(10):
        values = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(values) % 784 == 0
        for v in values:
            b = round(v * 255)
            assert 0 <= b <= 255 and abs(b / 255 - v) < 1e-3
            pixels.append(b)
        labels.extend([digit] * (len(values) // 784))
    count = len(labels)
    dst.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(dst / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(pixels)
    with gzip.GzipFile(dst / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels)
    print(f"wrote {count} samples to {dst}")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
