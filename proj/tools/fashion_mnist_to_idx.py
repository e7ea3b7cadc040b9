#!/usr/bin/env python3
"""Convert the per-class JSON dump shipped in the `fashion-mnist` npm package
into standard gzip-compressed IDX files.

The npm package stores each class as a list of 784-byte images
(src/clothes/<label>.json). Per class, the first 6000 images become the train
split and the next 1000 the test split, giving the usual 60000/10000 layout.

With --pool-train/--pool-test only the first N images per class of each split
are written (class-balanced pools used by the desk-scale test suite).
"""
import argparse
import gzip
import json
import pathlib
import struct

TRAIN_PER_CLASS = 6000
TEST_PER_CLASS = 1000


def write_images(file, images):
    with gzip.GzipFile(file, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(file, labels):
    with gzip.GzipFile(file, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def interleave(per_class):
    # Round-robin over classes so every prefix is roughly balanced.
    images, labels = [], []
    n = max(len(v) for v in per_class)
    for i in range(n):
        for label, imgs in enumerate(per_class):
            if i < len(imgs):
                images.append(imgs[i])
                labels.append(label)
    return images, labels


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("clothes_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--pool-train", type=int, default=TRAIN_PER_CLASS)
    ap.add_argument("--pool-test", type=int, default=TEST_PER_CLASS)
    args = ap.parse_args()

    train, test = [], []
    for label in range(10):
        data = json.load(open(args.clothes_dir / f"{label}.json"))["data"]
        # The class-0 dump carries two empty placeholder entries.
        data = [img for img in data if img]
        if len(data) < TRAIN_PER_CLASS + TEST_PER_CLASS:
            raise SystemExit(f"class {label}: only {len(data)} images")
        for img in data:
            if len(img) != 784 or any(not 0 <= v <= 255 for v in img):
                raise SystemExit(f"class {label}: malformed image")
        train.append(data[:TRAIN_PER_CLASS][: args.pool_train])
        test.append(data[TRAIN_PER_CLASS:TRAIN_PER_CLASS + TEST_PER_CLASS][: args.pool_test])

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for split, per_class in (("train", train), ("t10k", test)):
        images, labels = interleave(per_class)
        write_images(args.out_dir / f"{split}-images-idx3-ubyte.gz", images)
        write_labels(args.out_dir / f"{split}-labels-idx1-ubyte.gz", labels)
        print(f"{split}: {len(images)} images")


if __name__ == "__main__":
    main()
