"""Compare the compiled kernels with the pure-Python fallback.

Each backend runs in its own interpreter (the backend is fixed at import), so
the numbers are directly comparable. Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--runs 16]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, timeit
import numpy as np
from sbsttune import _accel
from sbsttune.dynamosa import run_dynamosa
from sbsttune.mio import run_mio
from sbsttune.operators import random_testcase
from sbsttune.param_space import preset
from sbsttune.seeding import RandomSource
from sbsttune.subject import Statement, generate_subject

repeat, runs = int(sys.argv[1]), int(sys.argv[2])
subject = generate_subject(1)
rng = RandomSource(0)
tests = [random_testcase(subject, 50, rng) for _ in range(2000)]
fits = np.random.default_rng(0).random((100, 30))
stmts = list(tests[0]) * 4
make = lambda t: Statement(*t)

def fitness():
    for t in tests:
        subject.fitness_vector(t)

def fronts():
    _accel.nondominated_ranks(fits)

def refs():
    for _ in range(500):
        s = list(stmts)
        _accel.shift_refs(s, 1, 0, 1, make)
        _accel.invalid_refs(s, 0)

def full_runs():
    out = []
    for i in range(runs):
        runner, name = (run_dynamosa, "dynamosa-default") if i % 2 == 0 else (run_mio, "mio-default")
        r = runner(generate_subject(100 + i), dict(preset(name)), 2000, 16, RandomSource(i))
        out.append(r.to_json())
    return hashlib.sha256(json.dumps(out, sort_keys=True).encode()).hexdigest()

result = {"backend": _accel.BACKEND}
for name, fn in (("fitness x2000", fitness), ("nondominated 100x30", fronts), ("shift/invalid refs x500", refs)):
    result[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
result[f"{runs} full runs"] = min(timeit.repeat(full_runs, number=1, repeat=max(1, repeat // 2)))
result["fingerprint"] = full_runs()[:16]
print(json.dumps(result))
"""


def measure(pure: bool, repeat: int, runs: int) -> dict:
    env = dict(os.environ, SBSTTUNE_PURE_PYTHON="1" if pure else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat), str(runs)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--runs", type=int, default=16)
    args = parser.parse_args()
    compiled = measure(False, args.repeat, args.runs)
    python = measure(True, args.repeat, args.runs)
    if compiled["backend"] == python["backend"]:
        print("compiled kernels are not built; only the pure-Python backend is available")
    print(f"{'kernel':28s} {compiled['backend']:>10s} {python['backend']:>10s} {'speedup':>8s}")
    for key in compiled:
        if key in ("backend", "fingerprint"):
            continue
        c, p = compiled[key], python[key]
        print(f"{key:28s} {c:9.4f}s {p:9.4f}s {p / c:7.1f}x")
    same = compiled["fingerprint"] == python["fingerprint"]
    print(f"run fingerprints {'identical' if same else 'DIFFER'}: {compiled['fingerprint']} / {python['fingerprint']}")


if __name__ == "__main__":
    main()
