"""Times the convolution kernels on both backends.

Usage: python3 benchmarks/bench_kernels.py [--repeats 5]

Shapes match the two places the kernels run hot: the temporal-context
encoder (3D, [B, d_f, N, S1, S2]) and the correlation-map fuse stage
(2D, [B, C_in, N, N]) at the production frame count N = 64.
"""

import argparse
import time

import numpy as np

from racnet.kernels import get_kernels, set_backend

CASES = [
    # the default preset's encoder and fuse shapes (2x2 feature grid, N=64)
    ("conv3d fwd  [16,16,64,2,2]", "conv3d_forward", (16, 16, 64, 2, 2), (32, 16, 3, 3, 3)),
    ("conv3d bwd  [16,16,64,2,2]", "conv3d_backward", (16, 16, 64, 2, 2), (32, 16, 3, 3, 3)),
    ("conv2d fwd  [16,12,64,64]", "conv2d_forward", (16, 12, 64, 64), (8, 12, 3, 3)),
    ("conv2d bwd  [16,12,64,64]", "conv2d_backward", (16, 12, 64, 64), (8, 12, 3, 3)),
    # a wide spatial grid, where the matmul formulation has more to chew on
    ("conv3d fwd  [4,16,64,7,7]", "conv3d_forward", (4, 16, 64, 7, 7), (32, 16, 3, 3, 3)),
    ("conv3d bwd  [4,16,64,7,7]", "conv3d_backward", (4, 16, 64, 7, 7), (32, 16, 3, 3, 3)),
]


def run_case(impl, fn_name, x_shape, w_shape, repeats):
    rng = np.random.default_rng(0)
    x = rng.normal(size=x_shape)
    w = rng.normal(size=w_shape)
    fn = getattr(impl, fn_name)
    if fn_name.endswith("forward"):
        b = rng.normal(size=w_shape[0])
        args = (x, w, b)
    else:
        y_shape = (x_shape[0], w_shape[0]) + x_shape[2:]
        args = (x, w, rng.normal(size=y_shape))
    fn(*args)  # warm-up (JIT compile on the numba backend)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    results = {}
    for backend in ("numpy", "numba"):
        try:
            set_backend(backend)
        except ImportError:
            print(f"{backend}: not importable, skipped")
            continue
        impl = get_kernels()
        for label, fn_name, x_shape, w_shape in CASES:
            results.setdefault(label, {})[backend] = run_case(
                impl, fn_name, x_shape, w_shape, args.repeats)

    print(f"{'case':28s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for label, by_backend in results.items():
        np_t = by_backend.get("numpy")
        nb_t = by_backend.get("numba")
        np_s = f"{np_t * 1e3:8.1f}ms" if np_t else "     n/a"
        nb_s = f"{nb_t * 1e3:8.1f}ms" if nb_t else "     n/a"
        speed = f"{np_t / nb_t:7.2f}x" if np_t and nb_t else "     n/a"
        print(f"{label:28s} {np_s:>10s} {nb_s:>10s} {speed:>8s}")


if __name__ == "__main__":
    main()
