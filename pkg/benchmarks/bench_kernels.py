"""Compare the compiled and pure-Python kernel backends.

Times each kernel on small states of the sizes a protocol run produces, then
times complete protocol runs with each backend selected through
``SQKA_PURE_PYTHON`` in a fresh interpreter.

    python benchmarks/bench_kernels.py [--repeat 5] [--runs 2000]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from sqka import _pykernels

try:
    from sqka import _ckernels
except ImportError:
    _ckernels = None

RUN_SNIPPET = """
import time
from sqka import BACKEND
from sqka.protocol import Variant, run_protocol
start = time.perf_counter()
for seed in range({runs}):
    run_protocol(Variant.{variant}, {n}, seed=seed)
print(BACKEND, (time.perf_counter() - start) / {runs})
"""


def random_state(qubits, rng):
    amps = rng.normal(size=2**qubits) + 1j * rng.normal(size=2**qubits)
    return amps / np.linalg.norm(amps)


def kernel_cases(rng):
    for qubits in (2, 4, 6):
        amps = random_state(qubits, rng)
        yield f"bell_probabilities k={qubits}", "bell_probabilities", (amps, qubits, 0, qubits - 1)
        yield f"bell_collapse k={qubits}", "bell_collapse", (amps, qubits, 0, qubits - 1, 0)
        yield f"z_probability_one k={qubits}", "z_probability_one", (amps, qubits, qubits - 1)
        yield f"z_collapse k={qubits}", "z_collapse", (amps, qubits, qubits - 1, 0)


def bench_kernels(repeat, number):
    modules = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':32s}" + "".join(f"{name:>14s}" for name, _ in modules) + f"{'speedup':>10s}")
    for label, func, args in kernel_cases(np.random.default_rng(0)):
        times = []
        for _, module in modules:
            f = getattr(module, func)
            times.append(min(timeit.repeat(lambda: f(*args), repeat=repeat, number=number)) / number)
        cells = "".join(f"{t * 1e6:12.2f}us" for t in times)
        speedup = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
        print(f"{label:32s}{cells}{speedup}")


def bench_runs(runs):
    print()
    print(f"{'protocol run':32s}{'python':>14s}{'cython':>14s}{'speedup':>10s}")
    for variant, n in (("ORIGINAL", 4), ("IMPROVED", 16)):
        per_backend = {}
        for pure in ("1", "0"):
            env = dict(os.environ, SQKA_PURE_PYTHON=pure)
            code = RUN_SNIPPET.format(runs=runs, variant=variant, n=n)
            out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            backend, seconds = out.stdout.split()
            per_backend[backend] = float(seconds)
        py = per_backend["python"]
        cy = per_backend.get("cython")
        cy_cell = f"{cy * 1e3:12.3f}ms" if cy else f"{'n/a':>14s}"
        speedup = f"{py / cy:9.1f}x" if cy else ""
        print(f"{variant.lower() + f' n={n}':32s}{py * 1e3:12.3f}ms{cy_cell}{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=2000)
    parser.add_argument("--runs", type=int, default=1000)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the pure-Python backend is timed\n")
    bench_kernels(args.repeat, args.number)
    bench_runs(args.runs)


if __name__ == "__main__":
    main()
