"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py            # kernels + end-to-end
    python3 benchmarks/bench_kernels.py --quick    # smaller sizes

Kernel timings call both variants in one process.  The end-to-end timing
runs a one-hour box-model solve in a subprocess per setting of
MPKIN_DISABLE_NUMBA, because the flag is read at import time.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mpkin import _kernels as K


def best_of(fn, repeat=5, number=3):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_table(n: int) -> list[tuple[str, float, float]]:
    rng = np.random.default_rng(0)
    radius = rng.uniform(1e-8, 1e-5, n)
    conc = rng.uniform(0.0, 1.0, (n, 2))
    qty = np.tile(np.array([1, 2], dtype=np.int64), (n, 1))
    k = rng.uniform(0.1, 1.0, n)
    idx = rng.integers(0, n // 10 + 1, 4 * n)
    vals = rng.standard_normal(4 * n)

    cases = [
        ("uptake_coefficient",
         lambda: K.uptake_coefficient_numpy(radius, 1e-5, 6.5e-8, 1.0),
         lambda: K.uptake_coefficient_numba(radius, 1e-5, 6.5e-8, 1.0)),
        ("mass_action",
         lambda: K.mass_action_numpy(conc, qty, k),
         lambda: K.mass_action_numba(conc, qty, k)),
        ("scatter_add",
         lambda: K.scatter_add_numpy(np.zeros(n // 10 + 1), idx, vals),
         lambda: K.scatter_add_numba(np.zeros(n // 10 + 1), idx, vals)),
    ]
    out = []
    for name, f_np, f_nb in cases:
        f_nb()  # compile outside the timing
        a, b = f_np(), f_nb()
        a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
        if not all(np.allclose(x, y) for x, y in zip(a, b)):
            raise AssertionError(f"{name}: numba and numpy disagree")
        out.append((name, best_of(f_np), best_of(f_nb)))
    return out


_SOLVE = """
import time
from mpkin.boxmodel import data_path, load_scenario
from mpkin.boxmodel.runner import BoxModel
from mpkin.config import load_config
from dataclasses import replace
sc = load_scenario(data_path("demo_scenario.json"))
sc = replace(sc, duration=3600.0, particles=replace(sc.particles, n_particles={n}))
m = BoxModel(load_config([data_path("demo_mechanism.json")]), sc, "particles")
m.core.solve(m.state, m.env, 60.0)  # warm-up and JIT
t = time.perf_counter()
m.run()
print(time.perf_counter() - t)
"""


def end_to_end(n_particles: int) -> dict[str, float]:
    times = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = {**os.environ, "MPKIN_DISABLE_NUMBA": flag}
        res = subprocess.run([sys.executable, "-c", _SOLVE.format(n=n_particles)],
                             env=env, capture_output=True, text=True, check=True)
        times[label] = float(res.stdout.strip().splitlines()[-1])
    return times


def main(argv=None) -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    n = 20_000 if args.quick else 200_000
    if not K.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")
    print(f"kernels, n = {n}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, t_np, t_nb in kernel_table(n):
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")
    n_part = 200 if args.quick else 2000
    t = end_to_end(n_part)
    print(f"\n1 h particle box model, {n_part} particles")
    for label, secs in t.items():
        print(f"{label:<8}{secs:8.2f} s")


if __name__ == "__main__":
    main()
