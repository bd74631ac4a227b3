"""Regenerates the static test fixtures in this directory.

NPY bytes for the minimal and malformed files are assembled by hand with
struct so they do not depend on the codec under test. The CSV reference
values are parsed with numpy.loadtxt.
"""

import os
import struct

import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))


def npy_bytes(header_dict: str, payload: bytes, magic=b"\x93NUMPY", version=(1, 0)) -> bytes:
    header = header_dict.encode("latin1")
    total = len(magic) + 2 + 2 + len(header) + 1
    header += b" " * ((64 - total % 64) % 64) + b"\n"
    return magic + bytes(version) + struct.pack("<H", len(header)) + header + payload


def write(path, data: bytes):
    with open(os.path.join(HERE, path), "wb") as f:
        f.write(data)


def main():
    os.makedirs(os.path.join(HERE, "npy_malformed"), exist_ok=True)
    write("minimal_1x2.npy",
          npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }",
                    struct.pack("<2d", 1.5, -2.0)))

    good_payload = struct.pack("<4d", 1.0, 2.0, 3.0, 4.0)
    write("npy_malformed/bad_magic.npy",
          npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }", good_payload,
                    magic=b"\x93NUMPZ"))
    write("npy_malformed/fortran_order.npy",
          npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }", good_payload))
    write("npy_malformed/shape_3d.npy",
          npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 2), }", good_payload))
    write("npy_malformed/big_endian.npy",
          npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (2, 2), }",
                    struct.pack(">4d", 1.0, 2.0, 3.0, 4.0)))
    write("npy_malformed/truncated_payload.npy",
          npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }", good_payload[:-8]))

    ref = (np.arange(12, dtype=np.float64).reshape(3, 4) - 5.5) * 0.75
    np.save(os.path.join(HERE, "numpy_3x4_f8.npy"), ref)
    np.save(os.path.join(HERE, "numpy_3x4_f4.npy"), ref.astype(np.float32))

    rng = np.random.default_rng(20240611)
    values = rng.normal(scale=100.0, size=(10, 5))
    with open(os.path.join(HERE, "csv_10x5.csv"), "w", newline="\n") as f:
        f.write("id," + ",".join(f"f{j}" for j in range(5)) + "\n")
        for i, row in enumerate(values):
            f.write(f"row{i}," + ",".join(repr(float(v)) for v in row) + "\n")
    parsed = np.loadtxt(os.path.join(HERE, "csv_10x5.csv"), delimiter=",", skiprows=1,
                        usecols=range(1, 6), dtype=np.float64)
    np.save(os.path.join(HERE, "csv_10x5_expected.npy"), parsed)

    # Per-image SIFT-like descriptors: three blobs in R^8, 0..40 rows each.
    desc_dir = os.path.join(HERE, "descriptors")
    os.makedirs(desc_dir, exist_ok=True)
    centers = rng.normal(scale=20.0, size=(3, 8))
    counts = [12, 30, 0, 25, 18, 40]
    for i, m in enumerate(counts):
        which = rng.integers(0, 3, size=m)
        d = centers[which] + rng.normal(size=(m, 8))
        np.save(os.path.join(desc_dir, f"img_{i}.npy"), d.astype(np.float32).reshape(m, 8))

    # Synthetic labelled cluster set for CLI goldens: 6 classes in R^12,
    # 15 points each, rows shuffled so classes are interleaved.
    syn_dir = os.path.join(HERE, "synthetic")
    os.makedirs(syn_dir, exist_ok=True)
    syn_rng = np.random.default_rng(7)
    centers = syn_rng.normal(scale=10.0, size=(6, 12))
    rows, ids, labels = [], [], []
    for c in range(6):
        for p in range(15):
            rows.append(centers[c] + syn_rng.normal(size=12))
            ids.append(f"s{c}_{p:02d}")
            labels.append(f"class{c}")
    order = syn_rng.permutation(len(rows))
    np.save(os.path.join(syn_dir, "clusters.npy"), np.asarray(rows)[order])
    with open(os.path.join(syn_dir, "clusters.ids.txt"), "w", newline="\n") as f:
        f.write("".join(ids[i] + "\n" for i in order))
    with open(os.path.join(syn_dir, "labels.csv"), "w", newline="\n") as f:
        f.write("id,label\n" + "".join(f"{ids[i]},{labels[i]}\n" for i in order))

    img_dir = os.path.join(HERE, "images")
    os.makedirs(img_dir, exist_ok=True)
    sizes = {"a_wide": (300, 200), "b_square": (227, 227), "c_tall": (90, 140)}
    for name, (w, h) in sizes.items():
        yy, xx = np.mgrid[0:h, 0:w]
        arr = np.stack([(xx * 255 // max(w - 1, 1)), (yy * 255 // max(h - 1, 1)),
                        ((xx + yy) % 256)], axis=-1).astype(np.uint8)
        Image.fromarray(arr, "RGB").save(os.path.join(img_dir, f"{name}.png"))
    Image.fromarray(np.full((64, 48, 3), (200, 30, 90), np.uint8), "RGB").save(
        os.path.join(img_dir, "d_photo.jpg"), quality=95)
    with open(os.path.join(img_dir, "z_corrupt.png"), "wb") as f:
        f.write(b"\x89PNG\r\n\x1a\n" + b"\x00" * 40)


if __name__ == "__main__":
    main()
