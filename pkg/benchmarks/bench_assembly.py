"""Time residual + Jacobian assembly with the numba and numpy kernels.

    python3 benchmarks/bench_assembly.py [--nx 100 --nt 100 --repeat 5]
"""
import argparse
import time

import numpy as np

from dualburgers import _accel
from dualburgers.burgers import BurgersBase, BurgersDualProblem, BurgersProblemData
from dualburgers.hj import HJBase, HJDualProblem, HJProblemData
from dualburgers.mesh import build_mesh


def _problems(nx, nt, rng):
    mesh = build_mesh(nx, nt, (0.0, 1.0), (0.0, 1e-2))
    g = (2 * nt, 2 * nx)
    b = BurgersDualProblem(mesh, BurgersBase(rng.uniform(0, 1, g), 1e6),
                           BurgersProblemData(rng.uniform(0, 1, 2 * nx), lambda t: 1.0 + 0 * t))
    h = HJDualProblem(mesh, HJBase(rng.normal(size=g), rng.normal(size=g), 1e6, 1e6),
                      HJProblemData(rng.normal(size=2 * nx), lambda t: 0 * t, nu=1e-3))
    return {"burgers": b, "hj": h}


def bench(nx, nt, repeat):
    rng = np.random.default_rng(0)
    probs = _problems(nx, nt, rng)
    states = {k: 1e-3 * rng.normal(size=p.dofs.n_free) for k, p in probs.items()}
    results = {}
    for backend in ("numba", "numpy"):
        _accel.set_backend(backend)
        for name, p in probs.items():
            z = states[name]
            p.residual(z)
            p.jacobian(z)  # warm-up (JIT compile)
            t0 = time.perf_counter()
            for _ in range(repeat):
                r = p.residual(z)
                j = p.jacobian(z)
            results[backend, name] = ((time.perf_counter() - t0) / repeat, r, j)
    print(f"nx={nx} nt={nt} repeat={repeat}")
    for name in probs:
        tn, rn, jn = results["numba", name]
        tp, rp, jp = results["numpy", name]
        diff = max(np.abs(rn - rp).max(), abs(jn - jp).max())
        print(f"{name:8s} numba {1e3 * tn:8.2f} ms  numpy {1e3 * tp:8.2f} ms  "
              f"speedup {tp / tn:5.2f}x  max|diff| {diff:.1e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=100)
    ap.add_argument("--nt", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    bench(a.nx, a.nt, a.repeat)
