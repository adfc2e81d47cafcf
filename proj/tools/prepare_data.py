#!/usr/bin/env python3
"""Builds the bundled datasets under data/.

wdbc.data
    UCI WDBC layout (id, M/B diagnosis, 30 features) rebuilt from the copy of
    the Wisconsin diagnostic breast cancer table shipped with scikit-learn.
    The scikit-learn copy carries no patient ids, so the row number is used.

mnist-49-images-idx3-ubyte / mnist-49-labels-idx1-ubyte
    IDX files holding the MNIST 4s and 9s distributed with the npm `mnist`
    package (src/digits/{4,9}.json, pixels scaled to [0,1] with three
    decimals). Pixels are mapped back to bytes and the two digits are
    interleaved with a fixed shuffle so any prefix holds both classes.

Usage: prepare_data.py <path to unpacked npm mnist package> [out dir]
"""
import csv
import json
import os
import struct
import sys

import numpy as np
import sklearn


def write_wdbc(out_dir):
    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data",
                       "breast_cancer.csv")
    with open(src) as f:
        rows = list(csv.reader(f))[1:]
    with open(os.path.join(out_dir, "wdbc.data"), "w") as f:
        for i, row in enumerate(rows):
            diagnosis = "M" if row[-1] == "0" else "B"
            f.write(",".join([str(i + 1), diagnosis] + row[:-1]) + "\n")
    print(f"wdbc.data: {len(rows)} rows")


def write_mnist(pkg_dir, out_dir):
    images, labels = [], []
    for digit in (4, 9):
        with open(os.path.join(pkg_dir, "src", "digits", f"{digit}.json")) as f:
            data = np.asarray(json.load(f)["data"], dtype=np.float64)
        data = data.reshape(-1, 784)
        images.append(np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8))
        labels.append(np.full(len(data), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.RandomState(0).permutation(len(labels))
    images, labels = images[order], labels[order]

    with open(os.path.join(out_dir, "mnist-49-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(os.path.join(out_dir, "mnist-49-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())
    print(f"mnist: {len(labels)} images ({(labels == 4).sum()} fours, "
          f"{(labels == 9).sum()} nines)")


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    out_dir = sys.argv[2] if len(sys.argv) > 2 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    write_wdbc(out_dir)
    write_mnist(sys.argv[1], out_dir)


if __name__ == "__main__":
    main()
