# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: element-for-element twin of `_kernels_py`.

The integer sample path (forward_kernel -> capture_kernel) uses only
+,-,*,/ and sqrt on operands the caller prepared, so with FMA contraction
disabled it rounds identically to the numpy fallback. Float radiance
outputs (invert/fuse/merge) use libm pow/exp/log and may differ from the
fallback in the last couple of ulps.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, log, pow, sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline Py_ssize_t _bisect_right(const double* a, Py_ssize_t n, double x) nogil:
    # insertion point: a[i-1] <= x < a[i], matching np.searchsorted side='right'
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _forward_one(double x, const double* nlh, const double* nv,
                                Py_ssize_t n, double dark) nogil:
    cdef Py_ssize_t k
    cdef double slope
    if x < nlh[0]:
        return dark
    if x >= nlh[n - 1]:
        return nv[n - 1]
    k = _bisect_right(nlh, n, x) - 1
    slope = (nv[k + 1] - nv[k]) / (nlh[k + 1] - nlh[k])
    return nv[k] + (x - nlh[k]) * slope


cdef inline double _invert_one(double v, const double* nv, const double* nli,
                               const double* nirr, Py_ssize_t n, double dark) nogil:
    cdef Py_ssize_t k
    cdef double slope
    if v >= nv[n - 1]:
        return nirr[n - 1]
    if v <= dark:
        return 0.0
    if v < nv[0]:
        return nirr[0] * ((v - dark) / (nv[0] - dark))
    k = _bisect_right(nv, n, v) - 1
    slope = (nli[k + 1] - nli[k]) / (nv[k + 1] - nv[k])
    return pow(10.0, nli[k] + (v - nv[k]) * slope)


def forward_kernel(logh, nodes_logh, nodes_v, double dark):
    """See `_kernels_py.forward_kernel`."""
    cdef double[::1] x = np.ascontiguousarray(logh, dtype=np.float64).ravel()
    cdef double[::1] nlh = np.ascontiguousarray(nodes_logh, dtype=np.float64)
    cdef double[::1] nv = np.ascontiguousarray(nodes_v, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0], n = nlh.shape[0], i
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(m):
            out[i] = _forward_one(x[i], &nlh[0], &nv[0], n, dark)
    return out_arr.reshape(np.shape(logh))


def capture_kernel(mean_v, p_anom, double read_sigma, double shot_coeff,
                   double dark, double full_scale, u, g):
    """See `_kernels_py.capture_kernel`."""
    cdef double[::1] m = np.ascontiguousarray(mean_v, dtype=np.float64).ravel()
    cdef double[::1] p = np.ascontiguousarray(p_anom, dtype=np.float64).ravel()
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef double[::1] gg = np.ascontiguousarray(g, dtype=np.float64).ravel()
    cdef Py_ssize_t npix = m.shape[0], i
    out_arr = np.empty(npix, dtype=np.uint16)
    cdef cnp.uint16_t[::1] out = out_arr
    cdef double d, sigma, v, q
    with nogil:
        for i in range(npix):
            d = m[i] - dark
            if d < 0.0:
                d = 0.0
            sigma = read_sigma + shot_coeff * sqrt(d)
            v = m[i] + sigma * gg[i]
            q = floor(v + 0.5)
            if q < 0.0:
                q = 0.0
            elif q > full_scale:
                q = full_scale
            if uu[i] < p[i]:
                q = full_scale
            out[i] = <cnp.uint16_t> q
    return out_arr.reshape(np.shape(mean_v))


def invert_kernel(v, nodes_v, nodes_logi, nodes_irr, double dark):
    """See `_kernels_py.invert_kernel`."""
    cdef double[::1] x = np.ascontiguousarray(v, dtype=np.float64).ravel()
    cdef double[::1] nv = np.ascontiguousarray(nodes_v, dtype=np.float64)
    cdef double[::1] nli = np.ascontiguousarray(nodes_logi, dtype=np.float64)
    cdef double[::1] nirr = np.ascontiguousarray(nodes_irr, dtype=np.float64)
    cdef Py_ssize_t m = x.shape[0], n = nv.shape[0], i
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(m):
            out[i] = _invert_one(x[i], &nv[0], &nli[0], &nirr[0], n, dark)
    return out_arr.reshape(np.shape(v))


def fuse_kernel(v_stack, scales, double v_min, double v_max, nodes_v,
                nodes_logi, nodes_irr, double dark):
    """See `_kernels_py.fuse_kernel`."""
    cdef double[:, ::1] vs = np.ascontiguousarray(v_stack, dtype=np.float64)
    cdef double[::1] sc = np.ascontiguousarray(scales, dtype=np.float64)
    cdef double[::1] nv = np.ascontiguousarray(nodes_v, dtype=np.float64)
    cdef double[::1] nli = np.ascontiguousarray(nodes_logi, dtype=np.float64)
    cdef double[::1] nirr = np.ascontiguousarray(nodes_irr, dtype=np.float64)
    cdef Py_ssize_t n_images = vs.shape[0], n_pixels = vs.shape[1], n = nv.shape[0]
    cdef Py_ssize_t i, j, c
    rad_arr = np.zeros(n_pixels, dtype=np.float64)
    cnt_arr = np.zeros(n_pixels, dtype=np.int32)
    flag_arr = np.zeros(n_pixels, dtype=np.uint8)
    cdef double[::1] rad = rad_arr
    cdef cnp.int32_t[::1] cnt = cnt_arr
    cdef cnp.uint8_t[::1] flags = flag_arr
    cdef double acc, v
    with nogil:
        for i in range(n_pixels):
            acc = 0.0
            c = 0
            for j in range(n_images):
                v = vs[j, i]
                if v_min <= v <= v_max:
                    acc += _invert_one(v, &nv[0], &nli[0], &nirr[0], n, dark) * sc[j]
                    c += 1
            if c > 0:
                rad[i] = acc / c
                cnt[i] = <cnp.int32_t> c
            elif vs[0, i] > v_max:
                rad[i] = nirr[n - 1] * sc[0]
                flags[i] = 1
            else:
                flags[i] = 2
    return rad_arr, cnt_arr, flag_arr


def weighted_merge_kernel(est, weights, bint log_domain, double eps):
    """See `_kernels_py.weighted_merge_kernel`."""
    cdef double[:, ::1] e = np.ascontiguousarray(est, dtype=np.float64)
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n_images = e.shape[0], n_pixels = e.shape[1], i, j
    out_arr = np.empty(n_pixels, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double num, den, plain, x
    with nogil:
        for i in range(n_pixels):
            num = 0.0
            den = 0.0
            plain = 0.0
            for j in range(n_images):
                x = e[j, i]
                if log_domain:
                    if x < eps:
                        x = eps
                    x = log(x)
                num += w[j, i] * x
                den += w[j, i]
                plain += x
            if den != 0.0:
                x = num / den
            else:
                x = plain / n_images
            if log_domain:
                x = exp(x)
            out[i] = x
    return out_arr
