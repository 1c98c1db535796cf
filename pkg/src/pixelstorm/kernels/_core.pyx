# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch forward kernels (channel-last, float64, valid padding).

Padding is materialized by the Python wrapper before the call; kernels walk
fully contained windows over the whole batch in one call. Inner loops run
over the output-channel axis, where the weight row and the accumulator are
both contiguous, so the C compiler can vectorize them.
"""

import numpy as np


# output channels are accumulated in stack buffers so the hot loop never
# touches the output array; wider models fall back to direct accumulation.
# Interior output columns are processed four at a time so each streamed
# weight row feeds four accumulators.
DEF MAX_LOCAL_COUT = 512
DEF JBLOCK = 4

cdef void _conv_rows(double[:, :, :, ::1] x, double[:, :, :, ::1] weights, double[::1] bias,
                     int stride, int pad_top, int pad_left, Py_ssize_t h_out, Py_ssize_t w_out,
                     double[:, :, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t nb = x.shape[0], h = x.shape[1], w = x.shape[2], cin = x.shape[3]
    cdef Py_ssize_t kh = weights.shape[0], kw = weights.shape[1], cout = weights.shape[3]
    cdef Py_ssize_t n, i, j, jj, f, p, q, c, row0, col0, p_lo, p_hi, q_lo, q_hi
    cdef Py_ssize_t j_block_start, j_block_end, col_base
    cdef double xv, x0, x1, x2, x3, wv
    cdef double acc[MAX_LOCAL_COUT]
    cdef double acc4[JBLOCK][MAX_LOCAL_COUT]
    cdef bint small = cout <= MAX_LOCAL_COUT
    # interior columns have fully contained horizontal windows
    cdef Py_ssize_t j_int_lo = 0, j_int_hi = w_out
    if stride == 1:
        j_int_lo = pad_left
        j_int_hi = w - kw + 1 + pad_left
        if j_int_hi > w_out:
            j_int_hi = w_out
        if j_int_lo > j_int_hi:
            j_int_lo = j_int_hi
    for n in range(nb):
        for i in range(h_out):
            row0 = i * stride - pad_top
            p_lo = -row0 if row0 < 0 else 0
            p_hi = h - row0 if row0 + kh > h else kh
            j = 0
            while j < w_out:
                if (not small) or stride != 1 or j < j_int_lo or j + JBLOCK > j_int_hi:
                    # scalar path: borders, strided, or very wide layers
                    col0 = j * stride - pad_left
                    q_lo = -col0 if col0 < 0 else 0
                    q_hi = w - col0 if col0 + kw > w else kw
                    if small:
                        for f in range(cout):
                            acc[f] = bias[f]
                        for p in range(p_lo, p_hi):
                            for q in range(q_lo, q_hi):
                                for c in range(cin):
                                    xv = <double>x[n, row0 + p, col0 + q, c]
                                    for f in range(cout):
                                        acc[f] += xv * weights[p, q, c, f]
                        for f in range(cout):
                            out[n, i, j, f] = acc[f]
                    else:
                        for f in range(cout):
                            out[n, i, j, f] = bias[f]
                        for p in range(p_lo, p_hi):
                            for q in range(q_lo, q_hi):
                                for c in range(cin):
                                    xv = <double>x[n, row0 + p, col0 + q, c]
                                    for f in range(cout):
                                        out[n, i, j, f] += xv * weights[p, q, c, f]
                    j += 1
                else:
                    # blocked path: four interior columns share each weight row
                    col_base = j - pad_left
                    for jj in range(JBLOCK):
                        for f in range(cout):
                            acc4[jj][f] = bias[f]
                    for p in range(p_lo, p_hi):
                        for q in range(kw):
                            for c in range(cin):
                                x0 = <double>x[n, row0 + p, col_base + q, c]
                                x1 = <double>x[n, row0 + p, col_base + q + 1, c]
                                x2 = <double>x[n, row0 + p, col_base + q + 2, c]
                                x3 = <double>x[n, row0 + p, col_base + q + 3, c]
                                for f in range(cout):
                                    wv = weights[p, q, c, f]
                                    acc4[0][f] += x0 * wv
                                    acc4[1][f] += x1 * wv
                                    acc4[2][f] += x2 * wv
                                    acc4[3][f] += x3 * wv
                    for jj in range(JBLOCK):
                        for f in range(cout):
                            out[n, i, j + jj, f] = acc4[jj][f]
                    j += JBLOCK


def conv2d_batch(double[:, :, :, ::1] x, double[:, :, :, ::1] weights, double[::1] bias,
                 int stride, int pad_top, int pad_left, Py_ssize_t h_out, Py_ssize_t w_out):
    """Convolution with implicit zero padding: out-of-range taps contribute
    nothing, so no padded copy of the input is ever materialized."""
    out_arr = np.empty((x.shape[0], h_out, w_out, weights.shape[3]), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    with nogil:
        _conv_rows(x, weights, bias, stride, pad_top, pad_left, h_out, w_out, out)
    return out_arr


def maxpool_batch(double[:, :, :, ::1] x, int kernel, int stride):
    cdef Py_ssize_t nb = x.shape[0], h = x.shape[1], w = x.shape[2], nc = x.shape[3]
    cdef Py_ssize_t h_out = (h - kernel) // stride + 1
    cdef Py_ssize_t w_out = (w - kernel) // stride + 1
    out_arr = np.empty((nb, h_out, w_out, nc), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, i, j, c, p, q, row, col
    cdef double v
    with nogil:
        for n in range(nb):
            for i in range(h_out):
                row = i * stride
                for j in range(w_out):
                    col = j * stride
                    for c in range(nc):
                        out[n, i, j, c] = x[n, row, col, c]
                    for p in range(kernel):
                        for q in range(kernel):
                            if p == 0 and q == 0:
                                continue
                            for c in range(nc):
                                v = x[n, row + p, col + q, c]
                                if v > out[n, i, j, c]:
                                    out[n, i, j, c] = v
    return out_arr


def avgpool_batch(double[:, :, :, ::1] x, int kernel, int stride):
    cdef Py_ssize_t nb = x.shape[0], h = x.shape[1], w = x.shape[2], nc = x.shape[3]
    cdef Py_ssize_t h_out = (h - kernel) // stride + 1
    cdef Py_ssize_t w_out = (w - kernel) // stride + 1
    out_arr = np.zeros((nb, h_out, w_out, nc), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t n, i, j, c, p, q, row, col
    cdef double denom = <double>(kernel * kernel)
    with nogil:
        for n in range(nb):
            for i in range(h_out):
                row = i * stride
                for j in range(w_out):
                    col = j * stride
                    for p in range(kernel):
                        for q in range(kernel):
                            for c in range(nc):
                                out[n, i, j, c] += x[n, row + p, col + q, c]
                    for c in range(nc):
                        out[n, i, j, c] /= denom
    return out_arr


def dense_batch(double[:, ::1] x, double[:, ::1] weights, double[::1] bias):
    cdef Py_ssize_t nb = x.shape[0], n_in = weights.shape[0], m = weights.shape[1]
    cdef Py_ssize_t n, i, j
    out_arr = np.empty((nb, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double xv
    with nogil:
        for n in range(nb):
            for j in range(m):
                out[n, j] = bias[j]
            for i in range(n_in):
                xv = x[n, i]
                for j in range(m):
                    out[n, j] += xv * weights[i, j]
    return out_arr
