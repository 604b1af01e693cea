"""Benchmark the compiled kernels against the pure-Python fallback.

Times the four primitives on desk-scale matrices for every available
backend, then times one full decomposition-descent call end to end in a
subprocess per backend (import-time selection is driven by the
OPNORM_PURE_PYTHON environment variable, so the end-to-end comparison
uses exactly the code paths a user gets).

Run:  python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from opnorm._kernels import available_backends


def bench_primitives(repeats=3000):
    rng = np.random.default_rng(0)
    small = 0.4 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    wide = rng.standard_normal((6, 12)) + 1j * rng.standard_normal((6, 12))
    grad = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))

    cases = {
        "sigma_max(6x12)": lambda mod: mod.sigma_max(wide),
        "top_triple(6x12)": lambda mod: mod.top_triple(wide),
        "expm(3x3)": lambda mod: mod.expm(small),
        "dexp_adjoint(3x3)": lambda mod: mod.dexp_adjoint(small, grad),
    }
    rows = []
    backends = available_backends()
    for case, fn in cases.items():
        row = {"case": case}
        for name, mod in backends.items():
            t = timeit.timeit(lambda: fn(mod), number=repeats) / repeats
            row[name] = t * 1e6
        if "compiled" in row and "pure" in row:
            row["speedup"] = row["pure"] / row["compiled"]
        rows.append(row)
    return rows


END_TO_END = r"""
import time
import numpy as np
from opnorm import kernels
from opnorm.haagerup import HaagerupOptions, haagerup_upper
from opnorm.opspace import standard_space, tensor_element

rng = np.random.default_rng(3)
left = standard_space("full", (2, 2))
right = standard_space("rowcap", 2)
t = tensor_element(left, right,
                   rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2)))
opts = HaagerupOptions(restarts=16, iters=500)
haagerup_upper(t, opts)  # warm caches
t0 = time.perf_counter()
est = haagerup_upper(t, opts)
print(f"{kernels.backend_name()} {time.perf_counter() - t0:.4f} {est.value:.12f}")
"""


def bench_end_to_end():
    rows = []
    for env_val, label in (("0", "compiled"), ("1", "pure")):
        env = dict(os.environ, OPNORM_PURE_PYTHON=env_val)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True)
        backend, seconds, value = out.stdout.split()
        rows.append({"backend": backend, "seconds": float(seconds),
                     "value": float(value)})
    return rows


def main():
    print("primitive kernels (microseconds per call)")
    for row in bench_primitives():
        parts = [f"{row['case']:22s}"]
        for key in ("pure", "compiled"):
            if key in row:
                parts.append(f"{key} {row[key]:8.2f}us")
        if "speedup" in row:
            parts.append(f"speedup {row['speedup']:.2f}x")
        print("  " + "  ".join(parts))

    print("decomposition descent, 16 restarts x 500 iterations")
    rows = bench_end_to_end()
    for row in rows:
        print(f"  {row['backend']:9s} {row['seconds']:.3f}s  value {row['value']:.9f}")
    if len(rows) == 2 and rows[0]["backend"] != rows[1]["backend"]:
        values = sorted(rows, key=lambda r: r["backend"])
        agree = abs(values[0]["value"] - values[1]["value"])
        print(f"  backend value agreement: {agree:.2e}")


if __name__ == "__main__":
    main()
