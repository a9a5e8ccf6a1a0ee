"""Hot pixel kernels: flood-fill segmentation and onion-peel inpainting.

A compiled Cython extension (_native) is preferred; a numpy fallback
(_fallback) is selected at import time when the extension is missing.
Both expose the same contract and are cross-checked in the test suite;
benchmarks/bench_kernels.py compares their throughput.
"""

from __future__ import annotations

import numpy as np

from pointchat.kernels import _fallback

try:
    from pointchat.kernels import _native  # type: ignore[attr-defined]

    BACKEND = "native"
    _impl = _native
except ImportError:  # extension not built; pure numpy path
    BACKEND = "python"
    _impl = _fallback


def implementations() -> dict:
    """Available kernel implementations, for benchmarks and parity tests."""
    impls = {"python": _fallback}
    if BACKEND == "native":
        impls["native"] = _impl
    return impls


def _as_image(image: np.ndarray) -> np.ndarray:
    image = np.ascontiguousarray(image, dtype=np.uint8)
    if not image.flags.writeable:  # typed memoryviews reject read-only buffers
        image = image.copy()
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) uint8 image, got shape {image.shape}")
    return image


def flood_fill(image: np.ndarray, seed_x: int, seed_y: int, tolerance: float, module=None) -> np.ndarray:
    """4-connected component of pixels within `tolerance` Euclidean RGB distance
    of the seed pixel's color. Returns an (H, W) bool mask; the seed is always set.
    """
    image = _as_image(image)
    height, width = image.shape[:2]
    if not (0 <= seed_x < width and 0 <= seed_y < height):
        raise ValueError(f"seed ({seed_x}, {seed_y}) outside {width}x{height} image")
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    module = module or _impl
    mask = module.flood_fill(image, int(seed_x), int(seed_y), float(tolerance))
    return np.asarray(mask, dtype=np.uint8).astype(bool)


def inpaint(image: np.ndarray, mask: np.ndarray, module=None) -> np.ndarray:
    """Fill masked pixels layer by layer from the boundary inward.

    Each layer: every masked pixel with at least one known 4-neighbor takes the
    average of its known neighbors (rounded half up); a layer's results commit
    together before the next layer reads them. Pixels outside the mask are
    returned bit-identical to the input.
    """
    image = _as_image(image)
    mask_u8 = np.ascontiguousarray(np.asarray(mask).astype(bool), dtype=np.uint8)
    if mask_u8.shape != image.shape[:2]:
        raise ValueError(f"mask shape {mask_u8.shape} does not match image {image.shape[:2]}")
    if not mask_u8.any():
        return image.copy()
    if mask_u8.all():
        raise ValueError("mask covers the whole image; nothing known to fill from")
    module = module or _impl
    return np.asarray(module.inpaint(image, mask_u8), dtype=np.uint8)
