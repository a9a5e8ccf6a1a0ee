/** Overlay pixel work, kept free of canvas APIs so it runs anywhere: mask
 * tinting by alpha compositing, draft polylines scaled to the viewport, and
 * the translated ghost shown while dragging a selection. */

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

export const MASK_TINT: Rgb = { r: 64, g: 160, b: 255 };
export const TINT_ALPHA = 0.45;

/** Mask PNGs are grayscale 0/255; after a canvas draw they arrive as RGBA.
 * Any pixel brighter than half-scale counts as masked. */
export function maskBitsFromRgba(rgba: Uint8ClampedArray | Uint8Array): Uint8Array {
  const bits = new Uint8Array(rgba.length / 4);
  for (let i = 0; i < bits.length; i++) {
    bits[i] = (rgba[i * 4] ?? 0) > 127 ? 1 : 0;
  }
  return bits;
}

/** Composite a translucent tint over the masked pixels of a base RGBA buffer.
 * The base is untouched; a new buffer is returned. Unmasked pixels are
 * byte-identical to the input, which keeps the original image pristine. */
export function tintMask(
  base: Uint8ClampedArray,
  bits: Uint8Array,
  color: Rgb = MASK_TINT,
  alpha: number = TINT_ALPHA,
): Uint8ClampedArray {
  if (base.length !== bits.length * 4) {
    throw new Error(`mask size ${bits.length} does not match ${base.length / 4} pixels`);
  }
  const out = new Uint8ClampedArray(base);
  const mix = (b: number, c: number) => Math.round(b * (1 - alpha) + c * alpha);
  for (let i = 0; i < bits.length; i++) {
    if (!bits[i]) continue;
    out[i * 4] = mix(base[i * 4] ?? 0, color.r);
    out[i * 4 + 1] = mix(base[i * 4 + 1] ?? 0, color.g);
    out[i * 4 + 2] = mix(base[i * 4 + 2] ?? 0, color.b);
    out[i * 4 + 3] = 255;
  }
  return out;
}

export interface DraftStroke {
  points: Array<[number, number]>;
  color: [number, number, number];
  width: number;
}

export interface DraftDocument {
  canvas_size: [number, number];
  base_image: string | null;
  strokes: DraftStroke[];
}

export interface Polyline {
  points: Array<[number, number]>;
  color: string;
  width: number;
}

/** Scale a stored draft's strokes (in source-image pixels) to viewport
 * coordinates, ready to be replayed onto a 2D context. */
export function draftPolylines(
  draft: DraftDocument,
  viewWidth: number,
  viewHeight: number,
): Polyline[] {
  const [sourceWidth, sourceHeight] = draft.canvas_size;
  if (sourceWidth <= 0 || sourceHeight <= 0) {
    throw new Error(`degenerate draft canvas ${sourceWidth}x${sourceHeight}`);
  }
  const scaleX = viewWidth / sourceWidth;
  const scaleY = viewHeight / sourceHeight;
  return draft.strokes.map((stroke) => ({
    points: stroke.points.map(([x, y]) => [x * scaleX, y * scaleY]),
    color: `rgb(${stroke.color[0]}, ${stroke.color[1]}, ${stroke.color[2]})`,
    width: stroke.width * Math.max(scaleX, scaleY),
  }));
}

/** Translate mask bits by a pixel offset, clipping at the edges: the ghost
 * outline previewing where a dragged selection would land. */
export function dragGhost(
  bits: Uint8Array,
  width: number,
  height: number,
  dx: number,
  dy: number,
): Uint8Array {
  const out = new Uint8Array(bits.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      if (!bits[y * width + x]) continue;
      const nx = x + dx;
      const ny = y + dy;
      if (nx >= 0 && nx < width && ny >= 0 && ny < height) {
        out[ny * width + nx] = 1;
      }
    }
  }
  return out;
}
