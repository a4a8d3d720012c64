"""Compare the compiled jet kernels with the numpy fallback.

    python3 benchmarks/bench_jetcore.py [--repeat 5] [--json]

Kernel timings call both backends in-process on identical inputs.  The
end-to-end timing runs a classification sweep in a subprocess per backend,
since the backend is chosen once at import.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from finslerwarp import _kernels

SHAPE = (3, 7)  # the (2, 6) jet order used by the spray and curvature code
BATCHES = (1, 17, 1024)

END_TO_END = """
import time
import numpy as np
from finslerwarp._kernels import BACKEND
from finslerwarp.catalog import catalog_metric
from finslerwarp.equivalence import classify
spec = catalog_metric("randers_warp,f=exp(r),eps=0.5")
t0 = time.perf_counter()
classify(spec, "BH", np.linspace(0.6, 2.9, 9), np.linspace(-1.5, 1.5, 33))
print(BACKEND, time.perf_counter() - t0)
"""


def _inputs(batch: int, seed: int = 0):
    g = np.random.default_rng(seed)
    a = g.normal(size=SHAPE + (batch,))
    b = g.normal(size=SHAPE + (batch,))
    b[0, 0] += 4.0
    table = g.normal(size=(SHAPE[0] + SHAPE[1] - 1, batch))
    return a, b, table


def _best(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def kernel_rows(repeat: int):
    backends = {"python": _kernels.python_backend}
    if _kernels.compiled_backend is not None:
        backends["cython"] = _kernels.compiled_backend
    rows = []
    for batch in BATCHES:
        a, b, table = _inputs(batch)
        for op in ("mul", "div", "compose"):
            args = (a, table) if op == "compose" else (a, b)
            row = {"op": op, "batch": batch}
            for name, mod in backends.items():
                fn = getattr(mod, op)
                row[name] = _best(lambda: fn(*args), repeat)
            rows.append(row)
    return rows


def end_to_end():
    out = {}
    for pure in ("1", "0"):
        env = dict(os.environ, FINSLERWARP_PURE_PYTHON=pure)
        proc = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        name, seconds = proc.stdout.split()
        out[name] = float(seconds)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args(argv)

    rows = kernel_rows(args.repeat)
    e2e = end_to_end()
    if args.json:
        print(json.dumps({"kernels": rows, "classify_seconds": e2e}, indent=2))
        return
    print(f"{'op':8} {'batch':>6} {'python [us]':>12} {'cython [us]':>12} {'speedup':>8}")
    for row in rows:
        cy = row.get("cython")
        cy_text = f"{cy * 1e6:12.2f}" if cy else f"{'n/a':>12}"
        speed = f"{row['python'] / cy:8.1f}" if cy else f"{'':>8}"
        print(f"{row['op']:8} {row['batch']:6d} {row['python'] * 1e6:12.2f} {cy_text} {speed}")
    print()
    for name, seconds in e2e.items():
        print(f"classify sweep, {name:6} backend: {seconds:.3f} s")


if __name__ == "__main__":
    main()
