"""Convert the digit JSON files of the npm `mnist` package into gzipped IDX.

Usage: python3 convert_npm_mnist.py <package-dir> <out-dir>

Each `src/digits/<d>.json` holds `{"data": [...]}` with 28x28 images in
[0, 1] concatenated. Images are written class by class in file order.
"""

import gzip
import json
import struct
import sys
from pathlib import Path

SIDE = 28


def main(pkg: Path, out: Path) -> None:
    pixels = bytearray()
    labels = bytearray()
    for digit in range(10):
        data = json.loads((pkg / "src" / "digits" / f"{digit}.json").read_text())["data"]
        count = len(data) // (SIDE * SIDE)
        pixels.extend(min(255, max(0, round(255 * v))) for v in data[: count * SIDE * SIDE])
        labels.extend([digit] * count)
    n = len(labels)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "digits-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, SIDE, SIDE))
        f.write(pixels)
    with gzip.GzipFile(out / "digits-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels)
    print(f"wrote {n} images")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
