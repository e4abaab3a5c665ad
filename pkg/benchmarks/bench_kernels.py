"""Timing comparison of the pure numpy kernels against the compiled backend.

Each hot kernel is timed on both implementations over the same inputs; the
end-to-end detection pipeline is timed once under whichever backend the
package selected at import. Run after an editable install:

    python benchmarks/bench_kernels.py --size 512 --repeats 5
"""

import argparse
import time

import numpy as np

import skinfuse
from skinfuse._kernels import _numpy

try:
    from skinfuse._kernels import _native
except ImportError:
    _native = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_workloads(size, rng):
    gray = rng.integers(0, 256, size=(size, size), dtype=np.uint8)
    mask = rng.random((size, size)) < 0.08
    a = rng.uniform(0.0, 253.0, (size, size))
    b = rng.uniform(-253.0, 253.0, (size, size))
    flat_a, flat_b = a.ravel(), b.ravel()
    counts = rng.uniform(0.0, 400.0, (64, 64))
    return [
        ("sobel_magnitude", lambda m: m.sobel_magnitude(gray)),
        ("dilate", lambda m: m.dilate(mask, 1, 2)),
        ("hist2d", lambda m: m.hist2d(flat_a, flat_b,
                                      0.0, 253.0, -253.0, 253.0, 64, 64)),
        ("hist_classify", lambda m: m.hist_classify(
            a, b, counts, 0.0, 253.0, -253.0, 253.0, 20.0)),
        ("gauss_classify", lambda m: m.gauss_classify(
            a, b, 220.0, -20.0, 2.4, 3.0, False)),
    ]


def bench_pipeline(repeats):
    scene = skinfuse.synthetic.make_scene(np.random.default_rng(11))
    return best_of(lambda: skinfuse.detect(scene.image, list(scene.eyes)),
                   repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512,
                        help="side length of the square test inputs")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions per timing; best is reported")
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    print(f"inputs {args.size}x{args.size}, best of {args.repeats}")
    if _native is None:
        print("compiled backend not importable; timing numpy only")
    header = f"{'kernel':<16}{'numpy ms':>10}{'native ms':>11}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call in kernel_workloads(args.size, rng):
        t_np = best_of(lambda: call(_numpy), args.repeats) * 1e3
        if _native is None:
            print(f"{name:<16}{t_np:>10.3f}{'-':>11}{'-':>9}")
            continue
        t_nat = best_of(lambda: call(_native), args.repeats) * 1e3
        ratio = t_np / t_nat if t_nat > 0 else float("inf")
        print(f"{name:<16}{t_np:>10.3f}{t_nat:>11.3f}{ratio:>8.1f}x")

    t_pipe = bench_pipeline(args.repeats) * 1e3
    print(f"\ndetect() on a {skinfuse.synthetic.WIDTH}x{skinfuse.synthetic.HEIGHT}"
          f" scene under the {skinfuse.backend_name()} backend: {t_pipe:.2f} ms")


if __name__ == "__main__":
    main()
