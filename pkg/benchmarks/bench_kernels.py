#!/usr/bin/env python3
"""Time the slot-loop kernel compiled with numba against the interpreted fallback.

The fallback is selected per process by COOPCAST_DISABLE_NUMBA, so each mode
runs in its own subprocess. Both modes must produce the same report digest.

Usage:
    python benchmarks/bench_kernels.py [--slots N] [--repeat R] [--json PATH]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, time
from coopcast._jit import NUMBA_ENABLED
from coopcast.model import NcParams, NetworkConfig
from coopcast.simulate import ProtocolKind, run

slots, repeat = int(sys.argv[1]), int(sys.argv[2])
cfg = NetworkConfig.symmetric(3, 0.3, 0.8, 0.8)
cases = {
    "A": ProtocolKind.parse("A"),
    "C": ProtocolKind.parse("C"),
    "D-faithful": ProtocolKind.parse("D", NcParams(16, 2)),
    "D-mechanistic": ProtocolKind.parse("D", NcParams(16, 2), "mechanistic"),
}
out = {"numba": NUMBA_ENABLED, "cases": {}}
for name, kind in cases.items():
    run(cfg, kind, 0.3, 1000, 0)  # compile / warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = run(cfg, kind, 0.3, slots, 1)
        best = min(best, time.perf_counter() - t0)
    digest = hashlib.sha256(json.dumps(rep.to_dict(), sort_keys=True).encode()).hexdigest()
    out["cases"][name] = {"seconds": best, "slots_per_second": slots / best, "digest": digest}
print(json.dumps(out))
"""


def measure(disable: bool, slots: int, repeat: int) -> dict:
    env = dict(os.environ, COOPCAST_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(slots), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write raw timings here")
    args = ap.parse_args()

    fast = measure(False, args.slots, args.repeat)
    slow = measure(True, args.slots, args.repeat)
    print(f"{'case':<15} {'numba s':>9} {'python s':>9} {'speedup':>8}  same")
    for name, f in fast["cases"].items():
        s = slow["cases"][name]
        print(
            f"{name:<15} {f['seconds']:9.4f} {s['seconds']:9.4f} "
            f"{s['seconds'] / f['seconds']:8.1f}  {f['digest'] == s['digest']}"
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"slots": args.slots, "numba": fast, "python": slow}, fh, indent=2)


if __name__ == "__main__":
    main()
