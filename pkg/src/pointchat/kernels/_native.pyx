# cython: language_level=3
"""Compiled pixel kernels. Contract-identical to _fallback (cross-checked in
tests); exists because flood fill and inpainting are the engine's hot loops.
"""

import numpy as np

cimport numpy as cnp


def flood_fill(cnp.uint8_t[:, :, ::1] image, int seed_x, int seed_y, double tolerance):
    cdef int height = image.shape[0]
    cdef int width = image.shape[1]
    cdef double tol2 = tolerance * tolerance

    mask_arr = np.zeros((height, width), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] mask = mask_arr
    stack_x_arr = np.empty(height * width, dtype=np.int32)
    stack_y_arr = np.empty(height * width, dtype=np.int32)
    cdef cnp.int32_t[::1] stack_x = stack_x_arr
    cdef cnp.int32_t[::1] stack_y = stack_y_arr

    cdef int sr = image[seed_y, seed_x, 0]
    cdef int sg = image[seed_y, seed_x, 1]
    cdef int sb = image[seed_y, seed_x, 2]

    cdef Py_ssize_t sp = 0
    cdef int x, y, nx, ny, k, dr, dg, db
    cdef long dist2

    mask[seed_y, seed_x] = 1
    stack_x[sp] = seed_x
    stack_y[sp] = seed_y
    sp += 1

    cdef int[4] off_x = [1, -1, 0, 0]
    cdef int[4] off_y = [0, 0, 1, -1]

    while sp > 0:
        sp -= 1
        x = stack_x[sp]
        y = stack_y[sp]
        for k in range(4):
            nx = x + off_x[k]
            ny = y + off_y[k]
            if nx < 0 or nx >= width or ny < 0 or ny >= height:
                continue
            if mask[ny, nx]:
                continue
            dr = image[ny, nx, 0] - sr
            dg = image[ny, nx, 1] - sg
            db = image[ny, nx, 2] - sb
            dist2 = dr * dr + dg * dg + db * db
            if dist2 <= tol2:
                mask[ny, nx] = 1
                stack_x[sp] = nx
                stack_y[sp] = ny
                sp += 1
    return mask_arr


def inpaint(cnp.uint8_t[:, :, ::1] image, cnp.uint8_t[:, ::1] mask):
    cdef int height = image.shape[0]
    cdef int width = image.shape[1]

    out_arr = np.array(image, dtype=np.uint8, copy=True)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    state_arr = np.array(mask, dtype=np.uint8, copy=True)  # 1 = unknown
    cdef cnp.uint8_t[:, ::1] state = state_arr

    ys, xs = np.nonzero(state_arr)  # row-major: scanline order within each layer
    pend_x_arr = xs.astype(np.int32)
    pend_y_arr = ys.astype(np.int32)
    cdef cnp.int32_t[::1] pend_x = pend_x_arr
    cdef cnp.int32_t[::1] pend_y = pend_y_arr
    cdef Py_ssize_t n_pend = pend_x_arr.shape[0]

    next_x_arr = np.empty(n_pend, dtype=np.int32)
    next_y_arr = np.empty(n_pend, dtype=np.int32)
    layer_x_arr = np.empty(n_pend, dtype=np.int32)
    layer_y_arr = np.empty(n_pend, dtype=np.int32)
    layer_v_arr = np.empty((n_pend, 3), dtype=np.uint8)
    cdef cnp.int32_t[::1] next_x = next_x_arr
    cdef cnp.int32_t[::1] next_y = next_y_arr
    cdef cnp.int32_t[::1] layer_x = layer_x_arr
    cdef cnp.int32_t[::1] layer_y = layer_y_arr
    cdef cnp.uint8_t[:, ::1] layer_v = layer_v_arr

    cdef int[4] off_x = [1, -1, 0, 0]
    cdef int[4] off_y = [0, 0, 1, -1]

    cdef Py_ssize_t i, j, n_layer, n_next
    cdef int x, y, nx, ny, k, cnt
    cdef long sr, sg, sb

    while n_pend > 0:
        n_layer = 0
        n_next = 0
        for i in range(n_pend):
            x = pend_x[i]
            y = pend_y[i]
            sr = 0
            sg = 0
            sb = 0
            cnt = 0
            for k in range(4):
                nx = x + off_x[k]
                ny = y + off_y[k]
                if nx < 0 or nx >= width or ny < 0 or ny >= height:
                    continue
                if state[ny, nx] == 0:
                    sr += out[ny, nx, 0]
                    sg += out[ny, nx, 1]
                    sb += out[ny, nx, 2]
                    cnt += 1
            if cnt > 0:
                # round half up
                layer_x[n_layer] = x
                layer_y[n_layer] = y
                layer_v[n_layer, 0] = <cnp.uint8_t>((2 * sr + cnt) // (2 * cnt))
                layer_v[n_layer, 1] = <cnp.uint8_t>((2 * sg + cnt) // (2 * cnt))
                layer_v[n_layer, 2] = <cnp.uint8_t>((2 * sb + cnt) // (2 * cnt))
                n_layer += 1
            else:
                next_x[n_next] = x
                next_y[n_next] = y
                n_next += 1
        if n_layer == 0:  # unreachable when the mask has a known complement
            break
        for j in range(n_layer):
            x = layer_x[j]
            y = layer_y[j]
            out[y, x, 0] = layer_v[j, 0]
            out[y, x, 1] = layer_v[j, 1]
            out[y, x, 2] = layer_v[j, 2]
            state[y, x] = 0
        for j in range(n_next):
            pend_x[j] = next_x[j]
            pend_y[j] = next_y[j]
        n_pend = n_next
    return out_arr
