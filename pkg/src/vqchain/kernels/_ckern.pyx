# cython: language_level=3, boundscheck=False, wraparound=False
"""Thin wrapper exposing the C distance kernels with the GIL released."""

from libc.stdint cimport int64_t

cdef extern from "vq_kernels.c":
    int vq_assign_block(const float *pts, Py_ssize_t n, Py_ssize_t d,
                        const float *cent_t, const double *cent64,
                        Py_ssize_t k, int64_t *out_idx, double *out_sqd) nogil
    double vq_seed_scan(const float *pts_t, Py_ssize_t n, Py_ssize_t d,
                        const double *c, double *dmin, double *cum) nogil


def assign_chunk(const float[:, ::1] pts, const float[:, ::1] cent_t,
                 const double[:, ::1] cent64,
                 int64_t[::1] out_idx, double[::1] out_sqd):
    """Exact nearest-centroid indices and squared distances for one chunk."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    cdef Py_ssize_t k = cent64.shape[0]
    cdef int rc
    if n == 0:
        return
    with nogil:
        rc = vq_assign_block(&pts[0, 0], n, d, &cent_t[0, 0], &cent64[0, 0],
                             k, &out_idx[0], &out_sqd[0])
    if rc != 0:
        raise MemoryError("screening workspace allocation failed")


def seed_scan(const float[:, ::1] pts_t, const double[::1] c,
              double[::1] dmin, double[::1] cum):
    """Min-distance update against one centroid plus cumulative sum."""
    cdef Py_ssize_t d = pts_t.shape[0]
    cdef Py_ssize_t n = pts_t.shape[1]
    cdef double total
    if n == 0:
        return 0.0
    with nogil:
        total = vq_seed_scan(&pts_t[0, 0], n, d, &c[0], &dmin[0], &cum[0])
    return total
