#!/usr/bin/env python3
"""Backend stub speaking the ctstack subprocess protocol.

usage: stub_backend.py MODE [VALUE] --in DIR --out DIR

MODE is one of:
  echo      probability = 1.0 where the input exceeds 0.5, else 0.0
  const     every voxel VALUE (default 0.3)
  fail      print a diagnostic and exit 1
  hang      sleep far beyond any test timeout
  badshape  return a volume one slice deeper than the input
  garbage   write a truncated voxel file
"""
import array
import json
import os
import sys
import time


def main():
    mode = sys.argv[1]
    rest = sys.argv[2:]
    value = 0.3
    if rest and not rest[0].startswith("--"):
        value = float(rest.pop(0))
    args = dict(zip(rest[0::2], rest[1::2]))
    src, dst = args["--in"], args["--out"]
    with open(os.path.join(src, "meta.json")) as f:
        meta = json.load(f)
    voxels = array.array("f")
    with open(os.path.join(src, "voxels.raw"), "rb") as f:
        voxels.frombytes(f.read())
    if sys.byteorder != "little":
        voxels.byteswap()

    if mode == "fail":
        print("stub: simulated model crash", file=sys.stderr)
        return 1
    if mode == "hang":
        time.sleep(3600)
        return 0
    if mode == "echo":
        out = array.array("f", (1.0 if v > 0.5 else 0.0 for v in voxels))
    elif mode == "const":
        out = array.array("f", [value] * len(voxels))
    elif mode == "badshape":
        meta["depth"] += 1
        out = array.array("f", [0.0] * (len(voxels) + meta["width"] * meta["height"]))
    elif mode == "garbage":
        out = array.array("f", [0.0] * max(len(voxels) - 1, 0))
    else:
        print("stub: unknown mode " + mode, file=sys.stderr)
        return 2

    os.makedirs(dst, exist_ok=True)
    meta["dtype"] = "f32"
    with open(os.path.join(dst, "meta.json"), "w") as f:
        json.dump(meta, f)
    if sys.byteorder != "little":
        out.byteswap()
    with open(os.path.join(dst, "voxels.raw"), "wb") as f:
        f.write(out.tobytes())
    return 0


if __name__ == "__main__":
    sys.exit(main())
