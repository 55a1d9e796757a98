"""Time each kernel under the numba and numpy backends, then the whole monitor.

    python benchmarks/bench_backends.py [--repeat N] [--pipeline N]

Kernel timings load both backends in-process.  The end-to-end pipeline run
selects a backend the way users do, through SIGNMON_BACKEND, in a child
process per backend.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from signmon import kernels
from signmon.ontology import SignClass
from signmon.scenegen import render_sign


def kernel_inputs():
    rng = np.random.default_rng(0)
    face = render_sign(SignClass.SH1, 160, seed=0).face
    gray = rng.integers(0, 256, (206, 206), dtype=np.uint8)
    noisy = (rng.random((206, 206)) < 0.5).astype(np.uint8)
    pts, off, _ = kernels.load_backend("numpy").find_borders(noisy)
    longest = int(np.argmax(np.diff(off)))
    poly = pts[off[longest]:off[longest + 1]]
    x0, y0 = poly.min(axis=0)
    w, h = poly.max(axis=0) - poly.min(axis=0) + 1
    return {
        "resize_bilinear": (face, 206, 206),
        "box_blur": (face, 7),
        "otsu_threshold": (gray,),
        "find_borders": (noisy,),
        "contour_measures": (pts, off, 5),
        "fill_polygon": (poly, int(x0), int(y0), int(w), int(h)),
    }


def time_kernels(repeat):
    inputs = kernel_inputs()
    rows = []
    backends = ["numpy"] + (["numba"] if kernels.numba_available() else [])
    for name in kernels.KERNELS:
        row = {"kernel": name}
        for b in backends:
            fn = getattr(kernels.load_backend(b), name)
            fn(*inputs[name])  # compile / warm caches
            n = max(1, repeat // (50 if b == "numpy" and name == "find_borders" else 1))
            row[b] = min(timeit.repeat(lambda: fn(*inputs[name]), number=n, repeat=3)) / n * 1e6
        rows.append(row)
    return rows


def time_pipeline(n):
    out = {}
    backends = ["numpy"] + (["numba"] if kernels.numba_available() else [])
    for b in backends:
        env = dict(os.environ, SIGNMON_BACKEND=b)
        p = subprocess.run(
            [sys.executable, "-m", "signmon", "bench", "--n", str(n)],
            env=env, capture_output=True, text=True, check=True,
        )
        out[b] = json.loads(p.stdout)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--pipeline", type=int, default=100, help="certificates per backend (0 skips)")
    args = ap.parse_args()

    rows = time_kernels(args.repeat)
    print(f"{'kernel':18} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for r in rows:
        nb = r.get("numba")
        speed = f"{r['numpy'] / nb:8.1f}" if nb else "       -"
        print(f"{r['kernel']:18} {r['numpy']:10.1f} {nb if nb else float('nan'):10.1f} {speed}")

    if args.pipeline:
        print()
        print(f"{'pipeline':18} {'p50 us':>10} {'p95 us':>10} {'accepted':>9}")
        for b, rep in time_pipeline(args.pipeline).items():
            lat = rep["latency_us"]
            print(f"{b:18} {lat['p50']:10d} {lat['p95']:10d} {rep['accepted']:9d}")


if __name__ == "__main__":
    main()
