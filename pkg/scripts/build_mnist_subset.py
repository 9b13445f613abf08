"""Build the bundled MNIST subset as IDX files.

Source: the 5,000-image MNIST sample (500 per digit) distributed inside the
mlxtend wheel as ``mlxtend/data/data/mnist_5k.csv.gz``.  The first 400
images of each digit form the training file, the remaining 100 the test file.

    python3 scripts/build_mnist_subset.py [--wheel PATH] [--out data/mnist]

Without ``--wheel`` the script runs ``pip download mlxtend==0.24.0``.
"""

import argparse
import gzip
import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from optostdp.data import write_idx  # noqa: E402

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
TRAIN_PER_CLASS = 400


def fetch_wheel(tmp: Path) -> Path:
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-d", str(tmp),
                    "mlxtend==0.24.0"], check=True)
    return next(tmp.glob("mlxtend-*.whl"))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--wheel", type=Path, default=None)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "mnist")
    args = ap.parse_args(argv)
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(Path(tmp))
        with zipfile.ZipFile(wheel) as zf:
            raw = gzip.decompress(zf.read(MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",", dtype=np.int64)
    pixels, labels = table[:, :-1], table[:, -1]
    if pixels.shape[1] != 784 or pixels.min() < 0 or pixels.max() > 255:
        raise SystemExit("unexpected table layout")
    train, test = [], []
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        train.extend(idx[:TRAIN_PER_CLASS])
        test.extend(idx[TRAIN_PER_CLASS:])
    args.out.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train", np.sort(train)), ("t10k", np.sort(test))):
        write_idx(pixels[idx].astype(np.uint8).reshape(-1, 28, 28), labels[idx].astype(np.uint8),
                  args.out / f"{name}-images-idx3-ubyte.gz", args.out / f"{name}-labels-idx1-ubyte.gz")
        print(f"{name}: {len(idx)} images -> {args.out}")


if __name__ == "__main__":
    main()
