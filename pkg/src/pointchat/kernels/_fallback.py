"""Numpy implementations of the pixel kernels, used when the compiled
extension is unavailable. Same contract as _native; layer-at-a-time frontier
expansion keeps the Python-level loop count proportional to region depth,
not region area.
"""

from __future__ import annotations

import numpy as np


def _neighbor_or(frontier: np.ndarray) -> np.ndarray:
    """Union of 4-neighbor shifts of a boolean grid (zero-padded, no wrap)."""
    out = np.zeros_like(frontier)
    out[1:, :] |= frontier[:-1, :]
    out[:-1, :] |= frontier[1:, :]
    out[:, 1:] |= frontier[:, :-1]
    out[:, :-1] |= frontier[:, 1:]
    return out


def flood_fill(image: np.ndarray, seed_x: int, seed_y: int, tolerance: float) -> np.ndarray:
    seed_color = image[seed_y, seed_x].astype(np.int64)
    diff = image.astype(np.int64) - seed_color
    within = (diff * diff).sum(axis=2) <= tolerance * tolerance

    mask = np.zeros(image.shape[:2], dtype=bool)
    frontier = np.zeros_like(mask)
    frontier[seed_y, seed_x] = True  # seed distance is 0, always within tolerance
    while frontier.any():
        mask |= frontier
        frontier = _neighbor_or(frontier) & within & ~mask
    return mask.astype(np.uint8)


def inpaint(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = image.astype(np.int64)
    unknown = mask.astype(bool).copy()
    known = ~unknown
    while unknown.any():
        ksum = np.zeros(image.shape, dtype=np.int64)
        kcnt = np.zeros(image.shape[:2], dtype=np.int64)
        for src, dst in (
            (np.s_[:-1, :], np.s_[1:, :]),
            (np.s_[1:, :], np.s_[:-1, :]),
            (np.s_[:, :-1], np.s_[:, 1:]),
            (np.s_[:, 1:], np.s_[:, :-1]),
        ):
            contrib = known[src]
            ksum[dst] += np.where(contrib[..., None], out[src], 0)
            kcnt[dst] += contrib
        layer = unknown & (kcnt > 0)
        if not layer.any():  # unreachable for any mask with a known complement
            break
        counts = kcnt[layer][:, None]
        out[layer] = (2 * ksum[layer] + counts) // (2 * counts)  # round half up
        known |= layer
        unknown &= ~layer
    return out.astype(np.uint8)
