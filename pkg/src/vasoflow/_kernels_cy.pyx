# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled element assembly kernels (see _kernels_py for the contract)."""
import numpy as np

cimport numpy as cnp

BACKEND = "cython"


def element_matrices(double[::1] weights,
                     double[:, ::1] coeff,
                     double[:, ::1] phi_row,
                     double[:, ::1] phi_col,
                     double[::1] scale):
    cdef Py_ssize_t nc = coeff.shape[0]
    cdef Py_ssize_t nq = weights.shape[0]
    cdef Py_ssize_t ni = phi_row.shape[1]
    cdef Py_ssize_t nj = phi_col.shape[1]
    out_np = np.zeros((nc, ni, nj), dtype=np.float64)
    cdef double[:, :, ::1] out = out_np
    cdef Py_ssize_t c, q, i, j
    cdef double wq, s
    with nogil:
        for c in range(nc):
            for q in range(nq):
                wq = weights[q] * coeff[c, q]
                if wq == 0.0:
                    continue
                for i in range(ni):
                    s = wq * phi_row[q, i]
                    for j in range(nj):
                        out[c, i, j] += s * phi_col[q, j]
            for i in range(ni):
                for j in range(nj):
                    out[c, i, j] *= scale[c]
    return out_np


def element_vectors(double[::1] weights,
                    double[:, ::1] coeff,
                    double[:, ::1] phi,
                    double[::1] scale):
    cdef Py_ssize_t nc = coeff.shape[0]
    cdef Py_ssize_t nq = weights.shape[0]
    cdef Py_ssize_t ni = phi.shape[1]
    out_np = np.zeros((nc, ni), dtype=np.float64)
    cdef double[:, ::1] out = out_np
    cdef Py_ssize_t c, q, i
    cdef double wq
    with nogil:
        for c in range(nc):
            for q in range(nq):
                wq = weights[q] * coeff[c, q]
                if wq == 0.0:
                    continue
                for i in range(ni):
                    out[c, i] += wq * phi[q, i]
            for i in range(ni):
                out[c, i] *= scale[c]
    return out_np
