"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 64 128 256] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from dnmembrane import _kernels
from dnmembrane.mesh import build_rect_mesh


def cases(n):
    mesh = build_rect_mesh(1.0, 1.0, n)
    rng = np.random.default_rng(0)
    sig = np.column_stack([1 + rng.random(len(mesh.triangles)), 0.1 * rng.random(len(mesh.triangles)),
                           1 + rng.random(len(mesh.triangles))])
    col = rng.random((len(mesh.triangles), 2))
    y = rng.random((mesh.num_nodes, 2)) * 0.98 + 0.01
    return {
        "triangle_gradients": lambda impl: _kernels.triangle_gradients(mesh.nodes, mesh.triangles, impl=impl),
        "assemble_triplets": lambda impl: _kernels.assemble_triplets(mesh.nodes, mesh.triangles, sig, impl=impl),
        "hat_residual": lambda impl: _kernels.hat_residual(mesh.nodes, mesh.triangles, col, col, mesh.num_nodes, impl=impl),
        "bump_inverse": lambda impl: _kernels.bump_inverse(y, 0.2, 1.0, 0.0, impl=impl),
    }


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--n", type=int, nargs="+", default=[64, 128, 256])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    impls = _kernels.implementations()
    print(f"backends: {', '.join(impls)}")
    print(f"{'kernel':20s} {'n':>5s} " + " ".join(f"{k + ' [ms]':>14s}" for k in impls) + f" {'speedup':>8s}")
    for n in args.n:
        for name, fn in cases(n).items():
            t = {k: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) * 1e3 for k, m in impls.items()}
            sp = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{name:20s} {n:5d} " + " ".join(f"{v:14.3f}" for v in t.values()) + f" {sp:8.2f}")


if __name__ == "__main__":
    main()
