#!/usr/bin/env python3
"""Build a 10k-image MNIST subset in IDX format.

The digits come from the npm `mnist` package (10,000 MNIST digits, pixel
values stored as floats in [0, 1] with three decimals). Images are
re-quantized to bytes, shuffled with a fixed seed and split into a
train/test pair of IDX files.
"""
import argparse
import io
import json
import random
import struct
import tarfile
import urllib.request
from pathlib import Path

TARBALL = "https://registry.npmjs.org/mnist/-/mnist-1.1.0.tgz"
SIDE = 28


def load_digits(tgz_bytes):
    images, labels = [], []
    with tarfile.open(fileobj=io.BytesIO(tgz_bytes), mode="r:gz") as tar:
        for digit in range(10):
            member = tar.getmember(f"package/src/digits/{digit}.json")
            raw = json.load(tar.extractfile(member))["data"]
            count = len(raw) // (SIDE * SIDE)
            for k in range(count):
                px = raw[k * SIDE * SIDE:(k + 1) * SIDE * SIDE]
                images.append(bytes(min(255, max(0, round(v * 255))) for v in px))
                labels.append(digit)
    return images, labels


def write_idx(path, images, labels):
    with open(path + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), SIDE, SIDE))
        for img in images:
            f.write(img)
    with open(path + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "mnist"))
    ap.add_argument("--tarball", help="local copy of mnist-1.1.0.tgz")
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()

    if args.tarball:
        blob = Path(args.tarball).read_bytes()
    else:
        with urllib.request.urlopen(TARBALL) as resp:
            blob = resp.read()
    images, labels = load_digits(blob)
    order = list(range(len(images)))
    random.Random(args.seed).shuffle(order)
    test_idx, train_idx = order[:args.test], order[args.test:]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(str(out / "train"), [images[i] for i in train_idx], [labels[i] for i in train_idx])
    write_idx(str(out / "t10k"), [images[i] for i in test_idx], [labels[i] for i in test_idx])
    print(f"wrote {len(train_idx)} train / {len(test_idx)} test images to {out}")


if __name__ == "__main__":
    main()
