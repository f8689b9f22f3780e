# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Contracts mirror ``_pykernels``; see that module."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

BACKEND = "native"


def jaccard_pairwise(cnp.int64_t[::1] a_indptr, cnp.int32_t[::1] a_ids,
                     cnp.int64_t[::1] b_indptr, cnp.int32_t[::1] b_ids):
    cdef Py_ssize_t k = a_indptr.shape[0] - 1
    cdef Py_ssize_t n = b_indptr.shape[0] - 1
    out_arr = np.zeros((k, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t sa, ea, sb, eb, x, y
    cdef long inter, la, lb
    for i in range(k):
        sa = a_indptr[i]
        ea = a_indptr[i + 1]
        la = ea - sa
        for j in range(n):
            sb = b_indptr[j]
            eb = b_indptr[j + 1]
            lb = eb - sb
            if la == 0 and lb == 0:
                continue
            inter = 0
            x = sa
            y = sb
            while x < ea and y < eb:
                if a_ids[x] == b_ids[y]:
                    inter += 1
                    x += 1
                    y += 1
                elif a_ids[x] < b_ids[y]:
                    x += 1
                else:
                    y += 1
            out[i, j] = inter / <double>(la + lb - inter)
    return out_arr


def cosine_pairwise(cnp.int64_t[::1] a_indptr, cnp.int32_t[::1] a_idx, double[::1] a_data,
                    cnp.int64_t[::1] b_indptr, cnp.int32_t[::1] b_idx, double[::1] b_data,
                    Py_ssize_t n_cols):
    cdef Py_ssize_t k = a_indptr.shape[0] - 1
    cdef Py_ssize_t n = b_indptr.shape[0] - 1
    out_arr = np.zeros((k, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    norm_a_arr = np.zeros(k, dtype=np.float64)
    norm_b_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] norm_a = norm_a_arr
    cdef double[::1] norm_b = norm_b_arr
    cdef Py_ssize_t i, j
    cdef cnp.int64_t sa, ea, sb, eb, x, y
    cdef double acc, val
    for i in range(k):
        acc = 0.0
        for x in range(a_indptr[i], a_indptr[i + 1]):
            acc += a_data[x] * a_data[x]
        norm_a[i] = sqrt(acc)
    for j in range(n):
        acc = 0.0
        for y in range(b_indptr[j], b_indptr[j + 1]):
            acc += b_data[y] * b_data[y]
        norm_b[j] = sqrt(acc)
    for i in range(k):
        sa = a_indptr[i]
        ea = a_indptr[i + 1]
        if norm_a[i] == 0.0:
            continue
        for j in range(n):
            if norm_b[j] == 0.0:
                continue
            sb = b_indptr[j]
            eb = b_indptr[j + 1]
            acc = 0.0
            x = sa
            y = sb
            while x < ea and y < eb:
                if a_idx[x] == b_idx[y]:
                    acc += a_data[x] * b_data[y]
                    x += 1
                    y += 1
                elif a_idx[x] < b_idx[y]:
                    x += 1
                else:
                    y += 1
            val = acc / (norm_a[i] * norm_b[j])
            if val > 1.0:
                val = 1.0
            elif val < 0.0:
                val = 0.0
            out[i, j] = val
    return out_arr


def jacobi_eigh(matrix, int max_sweeps=64):
    a_arr = np.array(matrix, dtype=np.float64, copy=True, order="C")
    cdef Py_ssize_t n = a_arr.shape[0]
    v_arr = np.eye(n, dtype=np.float64)
    if n < 2:
        return np.diagonal(a_arr).copy(), v_arr
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] v = v_arr
    cdef Py_ssize_t p, q, r, sweep
    cdef double scale = 0.0, off, apq, app, aqq, tau, t, c, s
    cdef double arp, arq, vrp, vrq
    for p in range(n):
        for q in range(n):
            scale += a[p, q] * a[p, q]
    scale = sqrt(scale)
    if scale == 0.0:
        return np.zeros(n), v_arr
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        off = sqrt(2.0 * off)
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) <= 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for r in range(n):
                    if r == p or r == q:
                        continue
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[p, r] = a[r, p]
                    a[r, q] = s * arp + c * arq
                    a[q, r] = a[r, q]
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = c * vrp - s * vrq
                    v[r, q] = s * vrp + c * vrq
    w = np.diagonal(a_arr).copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(v_arr[:, order])
