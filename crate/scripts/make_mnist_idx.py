#!/usr/bin/env python3
"""Convert the 5000-image MNIST subset shipped with mlxtend into gzipped IDX files.

Usage:
    pip download --no-deps mlxtend -d /tmp/mlx
    python3 scripts/make_mnist_idx.py /tmp/mlx/mlxtend-*.whl data/mnist

The CSV inside the wheel holds 784 raw pixel values (0-255) plus the label per row.
"""
import csv
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path


def read_rows(wheel):
    with zipfile.ZipFile(wheel) as zf:
        raw = zf.read("mlxtend/data/data/mnist_5k.csv.gz")
    text = gzip.decompress(raw).decode("ascii")
    for row in csv.reader(io.StringIO(text)):
        if row:
            yield [int(float(v)) for v in row]


def write_gz(path, payload):
    # mtime=0 keeps the archive byte-identical across runs
    with open(path, "wb") as fh:
        with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, filename="") as gz:
            gz.write(payload)


def main():
    wheel, out = sys.argv[1], Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    rows = list(read_rows(wheel))
    images = bytearray(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 0x00000801, len(rows)))
    for row in rows:
        assert len(row) == 785
        images.extend(bytes(row[:784]))
        labels.append(row[784])
    write_gz(out / "mnist-5k-images-idx3-ubyte.gz", bytes(images))
    write_gz(out / "mnist-5k-labels-idx1-ubyte.gz", bytes(labels))
    print(f"wrote {len(rows)} images to {out}")


if __name__ == "__main__":
    main()
