# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Mirrors :mod:`dcsnet._kernels_py` exactly in semantics."""
import numpy as np

from libc.math cimport sqrt


def line_consensus(double[:, :, ::1] W, Py_ssize_t radius, double xi, Py_ssize_t iterations):
    """Run ``iterations`` steps of W <- (I - xi*L) W on a disc-model line graph.

    W has shape (batch, n, m); each batch slice is an independent node-by-dimension stack.
    The neighbour sum of node k is a sliding window over [k - radius, k + radius].
    """
    cdef Py_ssize_t nb = W.shape[0], n = W.shape[1], m = W.shape[2]
    cdef Py_ssize_t b, it, k, j, lo, hi
    cdef double deg
    out_arr = np.array(W, dtype=np.float64, copy=True)
    if iterations == 0:
        return out_arr
    tmp_arr = np.empty_like(out_arr)
    win_arr = np.empty(m, dtype=np.float64)
    cdef double[:, :, ::1] cur = out_arr
    cdef double[:, :, ::1] nxt = tmp_arr
    cdef double[:, :, ::1] swap
    cdef double[::1] win = win_arr

    for it in range(iterations):
        for b in range(nb):
            for j in range(m):
                win[j] = 0.0
            hi = radius if radius < n - 1 else n - 1
            for k in range(hi + 1):
                for j in range(m):
                    win[j] += cur[b, k, j]
            for k in range(n):
                lo = k - radius if k > radius else 0
                hi = k + radius if k + radius < n - 1 else n - 1
                deg = <double>(hi - lo)
                for j in range(m):
                    nxt[b, k, j] = cur[b, k, j] - xi * ((deg + 1.0) * cur[b, k, j] - win[j])
                # slide the window from k to k + 1
                if k + radius + 1 < n:
                    for j in range(m):
                        win[j] += cur[b, k + radius + 1, j]
                if k - radius >= 0:
                    for j in range(m):
                        win[j] -= cur[b, k - radius, j]
        swap = cur
        cur = nxt
        nxt = swap
    return np.asarray(cur)


def soft_threshold(double complex[::1] z, double kappa):
    """Complex magnitude shrinkage: z * max(0, 1 - kappa/|z|)."""
    cdef Py_ssize_t i, n = z.shape[0]
    cdef double mag, scale
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    for i in range(n):
        mag = sqrt(z[i].real * z[i].real + z[i].imag * z[i].imag)
        if mag > kappa:
            scale = 1.0 - kappa / mag
            out[i] = z[i] * scale
        else:
            out[i] = 0.0
    return out_arr
