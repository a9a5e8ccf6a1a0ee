"""Throughput comparison of the kernel implementations.

Runs flood fill and inpainting over synthetic images at a few sizes with both
the compiled extension (when built) and the numpy fallback, checks the outputs
agree, and prints a timing table.
"""

from __future__ import annotations

import time

import numpy as np

from pointchat import kernels


def synthetic_image(size: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth blobby image: gradients plus quantized noise so flood fill sweeps
    a large connected area without degenerating to the whole frame."""
    yy, xx = np.mgrid[0:size, 0:size]
    base = ((xx + yy) * (96.0 / (2 * size))).astype(np.uint8)
    noise = (rng.integers(0, 3, (size, size)) * 4).astype(np.uint8)
    image = np.stack([base + noise, base, 255 - base], axis=2).astype(np.uint8)
    return np.ascontiguousarray(image)


def ring_mask(size: int) -> np.ndarray:
    mask = np.zeros((size, size), bool)
    q = size // 4
    mask[q : 3 * q, q : 3 * q] = True
    mask[q + size // 8 : 3 * q - size // 8, q + size // 8 : 3 * q - size // 8] = False
    return mask


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def run(sizes: tuple[int, ...] = (128, 256, 512), repeat: int = 3) -> list[dict]:
    impls = kernels.implementations()
    rows = []
    for size in sizes:
        rng = np.random.default_rng(7)
        image = synthetic_image(size, rng)
        mask = ring_mask(size)
        seed = (size // 2, size // 2)
        expected_fill = kernels.flood_fill(image, *seed, 48.0, module=impls["python"])
        expected_paint = kernels.inpaint(image, mask, module=impls["python"])
        for name, module in impls.items():
            fill = kernels.flood_fill(image, *seed, 48.0, module=module)
            paint = kernels.inpaint(image, mask, module=module)
            assert (fill == expected_fill).all(), f"{name} flood fill disagrees at {size}"
            assert (paint == expected_paint).all(), f"{name} inpaint disagrees at {size}"
            rows.append({
                "size": size,
                "impl": name,
                "flood_fill_s": _time(lambda: kernels.flood_fill(image, *seed, 48.0, module=module), repeat),
                "inpaint_s": _time(lambda: kernels.inpaint(image, mask, module=module), repeat),
            })
    return rows


def main(sizes: tuple[int, ...] = (128, 256, 512), repeat: int = 3) -> None:
    rows = run(sizes, repeat)
    print(f"selected backend: {kernels.BACKEND}")
    print(f"{'size':>6} {'impl':>8} {'flood_fill':>12} {'inpaint':>12}")
    for row in rows:
        print(f"{row['size']:>6} {row['impl']:>8} {row['flood_fill_s'] * 1e3:>10.2f}ms "
              f"{row['inpaint_s'] * 1e3:>10.2f}ms")
    by_size: dict[int, dict[str, dict]] = {}
    for row in rows:
        by_size.setdefault(row["size"], {})[row["impl"]] = row
    for size, impls in by_size.items():
        if "native" in impls and "python" in impls:
            fill_x = impls["python"]["flood_fill_s"] / impls["native"]["flood_fill_s"]
            paint_x = impls["python"]["inpaint_s"] / impls["native"]["inpaint_s"]
            print(f"native speedup at {size}: flood_fill x{fill_x:.1f}, inpaint x{paint_x:.1f}")


if __name__ == "__main__":
    main()
