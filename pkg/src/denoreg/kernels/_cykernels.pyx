# Compiled per-pixel kernels: median filter and non-local means.
# Semantics match _pykernels exactly (replicate-padded patches, clipped
# search window); only the floating-point summation order differs.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def median_filter(x, int window):
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xin = np.ascontiguousarray(x, dtype=np.float64)
    cdef int r = window // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] padded = np.pad(xin, r, mode="edge")
    cdef int rows = xin.shape[0]
    cdef int cols = xin.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((rows, cols))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] buf = np.empty(window * window)
    cdef double[:, :] pv = padded
    cdef double[:, :] ov = out
    cdef double[:] bv = buf
    cdef int y, xx, dy, dx, n, j
    cdef double v
    cdef int mid = (window * window) // 2
    for y in range(rows):
        for xx in range(cols):
            n = 0
            for dy in range(window):
                for dx in range(window):
                    v = pv[y + dy, xx + dx]
                    # insertion sort keeps the buffer ordered
                    j = n
                    while j > 0 and bv[j - 1] > v:
                        bv[j] = bv[j - 1]
                        j -= 1
                    bv[j] = v
                    n += 1
            ov[y, xx] = bv[mid]
    return out


def nlm_filter(x, double h, int patch_radius, int search_radius):
    # Offset-major sliding-window algorithm: for each search offset the
    # patch SSD field is a box filter of the squared difference frame,
    # computed with rolling vertical and horizontal window sums.
    if patch_radius < 1 or search_radius < 1:
        raise ValueError("patch_radius and search_radius must be >= 1")
    if h <= 0:
        raise ValueError(f"bandwidth h must be positive, got {h}")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] xin = np.ascontiguousarray(x, dtype=np.float64)
    cdef int rows = xin.shape[0]
    cdef int cols = xin.shape[1]
    cdef int pr = patch_radius
    cdef int sr = search_radius
    cdef int pad = pr + sr
    cdef int side = 2 * pr + 1
    cdef int ew = cols + 2 * pr        # extended frame width
    cdef int eh = rows + 2 * pr        # extended frame height
    cdef cnp.ndarray[cnp.float64_t, ndim=2] padded = np.pad(xin, pad, mode="edge")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] diff2 = np.empty((eh, ew))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] colsum = np.empty((rows, ew))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] num = np.zeros((rows, cols))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] den = np.zeros((rows, cols))
    cdef double[:, :] pv = padded
    cdef double[:, :] iv = xin
    cdef double[:, :] dv = diff2
    cdef double[:, :] cv = colsum
    cdef double[:, :] nv = num
    cdef double[:, :] ev = den
    cdef double inv = 1.0 / (2.0 * h * h)
    cdef int dy, dx, r, c, y0, y1, x0, x1
    cdef double d, acc, w
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            # squared differences on the pr-extended frame
            for r in range(eh):
                for c in range(ew):
                    d = pv[pad - pr + r, pad - pr + c] - pv[pad - pr + r + dy, pad - pr + c + dx]
                    dv[r, c] = d * d
            # vertical window sums (length side) per column
            for c in range(ew):
                acc = 0.0
                for r in range(side):
                    acc += dv[r, c]
                cv[0, c] = acc
                for r in range(1, rows):
                    acc += dv[r + side - 1, c] - dv[r - 1, c]
                    cv[r, c] = acc
            # horizontal window sums give the patch SSD per pixel; the
            # search window is clipped at the image border
            y0 = 0 if dy >= 0 else -dy
            y1 = rows if dy <= 0 else rows - dy
            x0 = 0 if dx >= 0 else -dx
            x1 = cols if dx <= 0 else cols - dx
            for r in range(y0, y1):
                acc = 0.0
                for c in range(side):
                    acc += cv[r, c]
                if x0 == 0:
                    w = exp(-acc * inv)
                    nv[r, 0] += w * iv[r + dy, dx]
                    ev[r, 0] += w
                for c in range(1, cols):
                    acc += cv[r, c + side - 1] - cv[r, c - 1]
                    if c >= x0 and c < x1:
                        w = exp(-acc * inv)
                        nv[r, c] += w * iv[r + dy, c + dx]
                        ev[r, c] += w
    return num / den
