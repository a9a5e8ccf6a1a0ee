"""Raster helpers: PNG round-trips, the basic color table, stroke rasterization.

Images are numpy uint8 arrays of shape (H, W, 3). Masks are numpy bool arrays
of shape (H, W) and persist as single-channel PNG, 255 = selected.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

# Fixed 8-color table used by the caption and question tools. Anchors follow
# CSS basic colors; ties in nearest-name lookup break by table order.
BASIC_COLORS: list[tuple[str, tuple[int, int, int]]] = [
    ("black", (0, 0, 0)),
    ("white", (255, 255, 255)),
    ("red", (255, 0, 0)),
    ("green", (0, 128, 0)),
    ("blue", (0, 0, 255)),
    ("yellow", (255, 255, 0)),
    ("purple", (128, 0, 128)),
    ("gray", (128, 128, 128)),
]


def nearest_color_name(rgb) -> str:
    r, g, b = float(rgb[0]), float(rgb[1]), float(rgb[2])
    best_name, best_d = BASIC_COLORS[0][0], float("inf")
    for name, (ar, ag, ab) in BASIC_COLORS:
        d = (r - ar) ** 2 + (g - ag) ** 2 + (b - ab) ** 2
        if d < best_d:
            best_name, best_d = name, d
    return best_name


def decode_image(data: bytes) -> np.ndarray:
    """Decode any PIL-readable image to an (H, W, 3) uint8 array."""
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def encode_png(image: np.ndarray) -> bytes:
    """Canonical PNG bytes for an (H, W, 3) uint8 array."""
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(image), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_mask_png(bits: np.ndarray) -> bytes:
    """Mask wire/storage form: single-channel PNG, 255 selected, 0 not."""
    raster = np.where(bits, 255, 0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(raster, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_mask_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        raster = np.asarray(im.convert("L"), dtype=np.uint8)
    return raster >= 128


def norm_to_pixel(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """Map normalized [0,1] coordinates onto the pixel grid (floor, edge-clamped)."""
    px = min(width - 1, max(0, int(x * width)))
    py = min(height - 1, max(0, int(y * height)))
    return px, py


def pixel_to_norm(px: int, py: int, width: int, height: int) -> tuple[float, float]:
    """Inverse of norm_to_pixel up to half a pixel (maps to the pixel center)."""
    return (px + 0.5) / width, (py + 0.5) / height


def rasterize_strokes(
    canvas: np.ndarray,
    strokes: list[dict],
) -> np.ndarray:
    """Paint polyline strokes onto a copy of the canvas.

    Contract: a pixel is painted with the stroke color iff its center lies
    within width/2 of the polyline (disc-swept stroke). Pixel (i, j)'s center
    sits at continuous coordinates (i, j), matching the integer indices
    norm_to_pixel produces. Strokes paint in list order; later strokes
    overdraw earlier ones.
    """
    out = canvas.copy()
    height, width = out.shape[:2]
    for stroke in strokes:
        points = stroke["points"]
        if not points:
            raise ValueError("stroke has an empty polyline")
        color = np.asarray(stroke.get("color", (0, 0, 0)), dtype=np.uint8)
        radius = float(stroke.get("width", 3.0)) / 2.0
        if len(points) == 1:
            points = [points[0], points[0]]
        for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
            _paint_segment(out, float(x0), float(y0), float(x1), float(y1), radius, color)
    return out


def _paint_segment(out, x0, y0, x1, y1, radius, color):
    height, width = out.shape[:2]
    lo_x = max(0, int(np.floor(min(x0, x1) - radius - 1)))
    hi_x = min(width - 1, int(np.ceil(max(x0, x1) + radius + 1)))
    lo_y = max(0, int(np.floor(min(y0, y1) - radius - 1)))
    hi_y = min(height - 1, int(np.ceil(max(y0, y1) + radius + 1)))
    if lo_x > hi_x or lo_y > hi_y:
        return
    ys, xs = np.mgrid[lo_y : hi_y + 1, lo_x : hi_x + 1]
    # pixel centers at integer coordinates; distance to segment [p0, p1]
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)
    dx, dy = x1 - x0, y1 - y0
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0:
        dist2 = (px - x0) ** 2 + (py - y0) ** 2
    else:
        t = ((px - x0) * dx + (py - y0) * dy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        dist2 = (px - (x0 + t * dx)) ** 2 + (py - (y0 + t * dy)) ** 2
    hit = dist2 <= radius * radius
    out[lo_y : hi_y + 1, lo_x : hi_x + 1][hit] = color
