# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled projection kernels.

Same contract and geometric conventions as the numpy fallback in
``_projkern_py`` (that module's docstring is the reference).  All heavy
loops run without the GIL so callers may fan out across angles with
threads and disjoint output slices.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor

BACKEND_NAME = "compiled"


cdef void _forward_major_y(const double[:, ::1] img, double c, double s,
                           Py_ssize_t n_det, double det_pitch,
                           double[::1] out) noexcept nogil:
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef double cx = w / 2.0, cy = h / 2.0
    cdef double ac = fabs(c)
    cdef double width = det_pitch / ac
    cdef double dz = 0.5 / ac
    cdef Py_ssize_t m0 = <Py_ssize_t>floor(-2.0 * cy - 1.0) + 1
    cdef Py_ssize_t m1 = <Py_ssize_t>ceil(2.0 * cy + 1.0) - 1
    cdef Py_ssize_t m, k, i, j0, ilo, ihi
    cdef double ypos, rpos, fy, sk, xi, t, acc, v0, v1

    for k in range(n_det):
        out[k] = 0.0
    for m in range(m0, m1 + 1):
        ypos = 0.5 * m
        rpos = ypos + cy - 0.5
        j0 = <Py_ssize_t>floor(rpos)
        fy = rpos - j0
        for k in range(n_det):
            sk = (k + 0.5 - n_det / 2.0) * det_pitch
            xi = (sk - ypos * s) / c + cx - 0.5
            ilo = <Py_ssize_t>ceil(xi - width)
            ihi = <Py_ssize_t>floor(xi + width)
            if ilo < 0:
                ilo = 0
            if ihi > w - 1:
                ihi = w - 1
            acc = 0.0
            for i in range(ilo, ihi + 1):
                t = 1.0 - fabs(i - xi) / width
                if t > 0.0:
                    v0 = img[j0, i] if 0 <= j0 < h else 0.0
                    v1 = img[j0 + 1, i] if 0 <= j0 + 1 < h else 0.0
                    acc += t * ((1.0 - fy) * v0 + fy * v1)
            out[k] += acc * dz / width


def joseph_forward(image, double c, double s, Py_ssize_t n_det,
                   double det_pitch, out):
    """Project one angle; writes the detector row ``out`` (length n_det)."""
    if fabs(c) < fabs(s):
        image = np.ascontiguousarray(image.T)
        c, s = s, c
    cdef const double[:, ::1] img = image
    cdef double[::1] o = out
    with nogil:
        _forward_major_y(img, c, s, n_det, det_pitch, o)


cdef void _adjoint_major_y(const double[::1] row, double c, double s,
                           double[:, ::1] out, double det_pitch) noexcept nogil:
    cdef Py_ssize_t h = out.shape[0], w = out.shape[1]
    cdef Py_ssize_t n_det = row.shape[0]
    cdef double cx = w / 2.0, cy = h / 2.0
    cdef double ac = fabs(c)
    cdef double width = det_pitch / ac
    cdef double dz = 0.5 / ac
    cdef Py_ssize_t m0 = <Py_ssize_t>floor(-2.0 * cy - 1.0) + 1
    cdef Py_ssize_t m1 = <Py_ssize_t>ceil(2.0 * cy + 1.0) - 1
    cdef Py_ssize_t m, k, i, j0, ilo, ihi
    cdef double ypos, rpos, fy, sk, xi, t, q

    for m in range(m0, m1 + 1):
        ypos = 0.5 * m
        rpos = ypos + cy - 0.5
        j0 = <Py_ssize_t>floor(rpos)
        fy = rpos - j0
        for k in range(n_det):
            q = row[k]
            if q == 0.0:
                continue
            sk = (k + 0.5 - n_det / 2.0) * det_pitch
            xi = (sk - ypos * s) / c + cx - 0.5
            ilo = <Py_ssize_t>ceil(xi - width)
            ihi = <Py_ssize_t>floor(xi + width)
            if ilo < 0:
                ilo = 0
            if ihi > w - 1:
                ihi = w - 1
            for i in range(ilo, ihi + 1):
                t = 1.0 - fabs(i - xi) / width
                if t > 0.0:
                    t = q * t * dz / width
                    if 0 <= j0 < h:
                        out[j0, i] += (1.0 - fy) * t
                    if 0 <= j0 + 1 < h:
                        out[j0 + 1, i] += fy * t


def joseph_adjoint(row, double c, double s, Py_ssize_t h, Py_ssize_t w,
                   double det_pitch, out):
    """Exact transpose of :func:`joseph_forward`; accumulates into ``out``."""
    cdef const double[::1] r = row
    cdef double[:, ::1] o
    cdef double[:, ::1] tmp_view
    if fabs(c) < fabs(s):
        tmp = np.zeros((w, h), dtype=np.float64)
        tmp_view = tmp
        with nogil:
            _adjoint_major_y(r, s, c, tmp_view, det_pitch)
        out += tmp.T
    else:
        o = out
        with nogil:
            _adjoint_major_y(r, c, s, o, det_pitch)


def backproject_linear(row, double c, double s, Py_ssize_t h, Py_ssize_t w,
                       double det_pitch, out):
    """Pixel-driven backprojection of one filtered projection; accumulates."""
    cdef const double[::1] r = row
    cdef double[:, ::1] o = out
    cdef Py_ssize_t n_det = row.shape[0]
    cdef Py_ssize_t i, j, k0
    cdef double u, v, b, f, v0, v1
    with nogil:
        for j in range(h):
            v = j + 0.5 - h / 2.0
            for i in range(w):
                u = i + 0.5 - w / 2.0
                b = (u * c + v * s) / det_pitch + n_det / 2.0 - 0.5
                k0 = <Py_ssize_t>floor(b)
                f = b - k0
                v0 = r[k0] if 0 <= k0 < n_det else 0.0
                v1 = r[k0 + 1] if 0 <= k0 + 1 < n_det else 0.0
                o[j, i] += (1.0 - f) * v0 + f * v1


def splat_bspline3(src, double m00, double m01, double m02, double m10,
                   double m11, double m12, out, double scale):
    """Cubic B-spline scatter warp (mass-preserving, 4x4 footprint)."""
    cdef const double[:, ::1] sv = src
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t ho = out.shape[0], wo = out.shape[1]
    cdef Py_ssize_t i, j, x1, y1, dx, dy, xi, yi
    cdef double xs, ys, tx, ty, t2, t3, v
    cdef double wx[4]
    cdef double wy[4]
    with nogil:
        for j in range(hs):
            for i in range(ws):
                v = sv[j, i] * scale
                if v == 0.0:
                    continue
                xs = m00 * i + m01 * j + m02
                ys = m10 * i + m11 * j + m12
                x1 = <Py_ssize_t>floor(xs)
                y1 = <Py_ssize_t>floor(ys)
                tx = xs - x1
                ty = ys - y1
                t2 = tx * tx; t3 = t2 * tx
                wx[0] = (1.0 - tx) * (1.0 - tx) * (1.0 - tx) / 6.0
                wx[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0
                wx[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * tx + 1.0) / 6.0
                wx[3] = t3 / 6.0
                t2 = ty * ty; t3 = t2 * ty
                wy[0] = (1.0 - ty) * (1.0 - ty) * (1.0 - ty) / 6.0
                wy[1] = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0
                wy[2] = (-3.0 * t3 + 3.0 * t2 + 3.0 * ty + 1.0) / 6.0
                wy[3] = t3 / 6.0
                for dy in range(4):
                    yi = y1 + dy - 1
                    if yi < 0 or yi >= ho:
                        continue
                    for dx in range(4):
                        xi = x1 + dx - 1
                        if 0 <= xi < wo:
                            ov[yi, xi] += v * wx[dx] * wy[dy]


def splat_bilinear(src, double m00, double m01, double m02, double m10,
                   double m11, double m12, out, double scale):
    """Bilinear scatter warp (mass-preserving); accumulates into ``out``."""
    cdef const double[:, ::1] sv = src
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t ho = out.shape[0], wo = out.shape[1]
    cdef Py_ssize_t i, j, x0, y0
    cdef double xs, ys, fx, fy, v
    with nogil:
        for j in range(hs):
            for i in range(ws):
                v = sv[j, i] * scale
                if v == 0.0:
                    continue
                xs = m00 * i + m01 * j + m02
                ys = m10 * i + m11 * j + m12
                x0 = <Py_ssize_t>floor(xs)
                y0 = <Py_ssize_t>floor(ys)
                fx = xs - x0
                fy = ys - y0
                if 0 <= x0 < wo and 0 <= y0 < ho:
                    ov[y0, x0] += v * (1.0 - fx) * (1.0 - fy)
                if 0 <= x0 + 1 < wo and 0 <= y0 < ho:
                    ov[y0, x0 + 1] += v * fx * (1.0 - fy)
                if 0 <= x0 < wo and 0 <= y0 + 1 < ho:
                    ov[y0 + 1, x0] += v * (1.0 - fx) * fy
                if 0 <= x0 + 1 < wo and 0 <= y0 + 1 < ho:
                    ov[y0 + 1, x0 + 1] += v * fx * fy


def warp_bilinear(src, double m00, double m01, double m02, double m10,
                  double m11, double m12, out, bint edge_clamp):
    """Bilinear gather warp; see the numpy fallback for the mapping."""
    cdef const double[:, ::1] sv = src
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t hs = src.shape[0], ws = src.shape[1]
    cdef Py_ssize_t ho = out.shape[0], wo = out.shape[1]
    cdef Py_ssize_t i, j, x0, y0
    cdef double xs, ys, fx, fy, v00, v10, v01, v11
    with nogil:
        for j in range(ho):
            for i in range(wo):
                xs = m00 * i + m01 * j + m02
                ys = m10 * i + m11 * j + m12
                if edge_clamp:
                    if xs < 0.0:
                        xs = 0.0
                    elif xs > ws - 1.0:
                        xs = ws - 1.0
                    if ys < 0.0:
                        ys = 0.0
                    elif ys > hs - 1.0:
                        ys = hs - 1.0
                x0 = <Py_ssize_t>floor(xs)
                y0 = <Py_ssize_t>floor(ys)
                fx = xs - x0
                fy = ys - y0
                v00 = sv[y0, x0] if (0 <= x0 < ws and 0 <= y0 < hs) else 0.0
                v10 = sv[y0, x0 + 1] if (0 <= x0 + 1 < ws and 0 <= y0 < hs) else 0.0
                v01 = sv[y0 + 1, x0] if (0 <= x0 < ws and 0 <= y0 + 1 < hs) else 0.0
                v11 = sv[y0 + 1, x0 + 1] if (0 <= x0 + 1 < ws and 0 <= y0 + 1 < hs) else 0.0
                ov[j, i] = (v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy)
                            + v01 * (1.0 - fx) * fy + v11 * fx * fy)
