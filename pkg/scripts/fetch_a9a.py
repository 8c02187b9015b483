#!/usr/bin/env python3
"""Download the a9a and mushrooms benchmark files (needs direct internet).

The optimizer CLI never fetches data itself; point a config's dataset path at
the files this script writes.  In offline environments use the built-in
synthetic generator instead (problem.dataset.kind = "synthetic").
"""

import argparse
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary"
FILES = ["a9a", "mushrooms"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        target = out / name
        if target.exists():
            print(f"{target} already present")
            continue
        url = f"{BASE}/{name}"
        print(f"fetching {url}")
        urllib.request.urlretrieve(url, target)
        print(f"wrote {target}")


if __name__ == "__main__":
    main()
