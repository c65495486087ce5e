#!/usr/bin/env python3
"""Convert a CSV of MNIST digits (784 pixel columns then a label column,
optionally gzipped) into IDX train/test files readable by `--dataset idx`.

Rows are shuffled with a fixed seed before the split so both halves are
class balanced in expectation.
"""

import argparse
import gzip
import struct
from pathlib import Path

import numpy as np


def write_idx(prefix: Path, images: np.ndarray, labels: np.ndarray) -> None:
    n = images.shape[0]
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--test", type=int, default=1000, help="rows kept for the test split")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    opener = gzip.open if args.csv.suffix == ".gz" else open
    with opener(args.csv, "rt") as f:
        table = np.loadtxt(f, delimiter=",", dtype=np.int64)
    if table.shape[1] != 785:
        raise SystemExit(f"expected 785 columns, found {table.shape[1]}")
    pixels, labels = table[:, :-1], table[:, -1]
    if pixels.min() < 0 or pixels.max() > 255 or labels.min() < 0 or labels.max() > 9:
        raise SystemExit("values out of range")

    order = np.random.default_rng(args.seed).permutation(len(labels))
    pixels, labels = pixels[order], labels[order]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    split = len(labels) - args.test
    write_idx(args.out_dir / "mnist5k-train", pixels[:split], labels[:split])
    write_idx(args.out_dir / "mnist5k-test", pixels[split:], labels[split:])
    print(f"train {split}, test {args.test}")


if __name__ == "__main__":
    main()
