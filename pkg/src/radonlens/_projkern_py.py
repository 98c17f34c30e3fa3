"""Pure-numpy projection kernels.

Fallback implementations with the exact same call signatures as the
compiled extension ``radonlens._projkern``. Selected automatically when
the extension is unavailable (see :mod:`radonlens.backend`).

Conventions shared by both backends:

* image array shape (h, w); pixel (row j, col i) sits at centered
  coordinates (i + 0.5 - w/2, j + 0.5 - h/2)
* detector bin k sits at s_k = (k + 0.5 - n_det/2) * det_pitch
* the line for (s, theta) is {(x, y) : x*cos(theta) + y*sin(theta) = s}

The forward projector marches along the major image axis in half-pixel
steps and spreads each ray over neighbouring pixel columns with a tent
footprint whose width equals the local ray spacing.  That footprint makes
the per-angle detector sum equal the image sum to machine precision, and
makes axis-aligned projections interpolation-free.
"""

import numpy as np

BACKEND_NAME = "numpy"


def _geometry_major_y(h, w, c, s, n_det, det_pitch):
    """Shared index/weight arrays for the |cos| >= |sin| branch."""
    cx = w / 2.0
    cy = h / 2.0
    ac = abs(c)
    width = det_pitch / ac
    dz = 0.5 / ac
    sk = (np.arange(n_det) + 0.5 - n_det / 2.0) * det_pitch
    # half-pixel major-axis samples, restricted to rows with support
    m0 = int(np.floor(-2.0 * cy - 1.0)) + 1
    m1 = int(np.ceil(2.0 * cy + 1.0)) - 1
    ypos = 0.5 * np.arange(m0, m1 + 1)
    rpos = ypos + cy - 0.5
    j0 = np.floor(rpos).astype(np.int64)
    fy = rpos - j0
    colpos = (sk[None, :] - ypos[:, None] * s) / c + cx - 0.5
    return width, dz, j0, fy, colpos


def joseph_forward(image, c, s, n_det, det_pitch, out):
    """Project one angle; writes the detector row ``out`` (length n_det)."""
    if abs(c) < abs(s):
        joseph_forward(np.ascontiguousarray(image.T), s, c, n_det, det_pitch, out)
        return
    h, w = image.shape
    width, dz, j0, fy, colpos = _geometry_major_y(h, w, c, s, n_det, det_pitch)

    pad = np.zeros((h + 2, w), dtype=np.float64)
    pad[1:-1] = image
    rowvals = (1.0 - fy)[:, None] * pad[j0 + 1] + fy[:, None] * pad[j0 + 2]

    ilo = np.ceil(colpos - width).astype(np.int64)
    noff = int(np.floor(2.0 * width)) + 1
    acc = np.zeros(n_det, dtype=np.float64)
    for off in range(noff):
        ii = ilo + off
        tw = 1.0 - np.abs(ii - colpos) / width
        np.clip(tw, 0.0, None, out=tw)
        tw /= width
        tw[(ii < 0) | (ii >= w)] = 0.0
        vals = np.take_along_axis(rowvals, np.clip(ii, 0, w - 1), axis=1)
        acc += np.einsum("mk,mk->k", vals, tw)
    out[:] = acc * dz


def joseph_adjoint(row, c, s, h, w, det_pitch, out):
    """Exact transpose of :func:`joseph_forward`; accumulates into ``out`` (h, w)."""
    if abs(c) < abs(s):
        tmp = np.zeros((w, h), dtype=np.float64)
        joseph_adjoint(row, s, c, w, h, det_pitch, tmp)
        out += tmp.T
        return
    n_det = row.shape[0]
    width, dz, j0, fy, colpos = _geometry_major_y(h, w, c, s, n_det, det_pitch)
    nm = colpos.shape[0]

    coltmp = np.zeros((nm, w + 1), dtype=np.float64)  # last column is a dump slot
    ilo = np.ceil(colpos - width).astype(np.int64)
    noff = int(np.floor(2.0 * width)) + 1
    midx = np.broadcast_to(np.arange(nm)[:, None], colpos.shape)
    for off in range(noff):
        ii = ilo + off
        tw = 1.0 - np.abs(ii - colpos) / width
        np.clip(tw, 0.0, None, out=tw)
        tw /= width
        invalid = (ii < 0) | (ii >= w)
        tw[invalid] = 0.0
        np.add.at(coltmp, (midx, np.where(invalid, w, ii)), row[None, :] * tw)

    padacc = np.zeros((h + 2, w), dtype=np.float64)
    np.add.at(padacc, j0 + 1, (1.0 - fy)[:, None] * coltmp[:, :w])
    np.add.at(padacc, j0 + 2, fy[:, None] * coltmp[:, :w])
    out += padacc[1:-1] * dz


def backproject_linear(row, c, s, h, w, det_pitch, out):
    """Pixel-driven backprojection of one filtered projection; accumulates."""
    n_det = row.shape[0]
    u = np.arange(w) + 0.5 - w / 2.0
    v = np.arange(h) + 0.5 - h / 2.0
    b = (u[None, :] * c + v[:, None] * s) / det_pitch + n_det / 2.0 - 0.5
    k0 = np.floor(b).astype(np.int64)
    f = b - k0
    v0 = np.where((k0 >= 0) & (k0 < n_det), row[np.clip(k0, 0, n_det - 1)], 0.0)
    k1 = k0 + 1
    v1 = np.where((k1 >= 0) & (k1 < n_det), row[np.clip(k1, 0, n_det - 1)], 0.0)
    out += (1.0 - f) * v0 + f * v1


def splat_bspline3(src, m00, m01, m02, m10, m11, m12, out, scale):
    """Cubic B-spline scatter warp; maps source pixel (i, j) to output coords.

    Each source value spreads over a 4x4 output neighbourhood with
    separable cubic B-spline weights.  The weights are a partition of
    unity at any fractional offset, so total mass is preserved exactly,
    and the kernel's sinc^4 spectrum suppresses the lattice-resonance
    ripple that point scattering shows at oblique rotations.
    """
    ho, wo = out.shape
    hs, ws = src.shape
    ii = np.arange(ws, dtype=np.float64)
    jj = np.arange(hs, dtype=np.float64)[:, None]
    xs = m00 * ii + m01 * jj + m02
    ys = m10 * ii + m11 * jj + m12
    x1 = np.floor(xs).astype(np.int64)
    y1 = np.floor(ys).astype(np.int64)
    tx = xs - x1
    ty = ys - y1
    vals = src * scale

    def bw(t):
        t2 = t * t
        t3 = t2 * t
        return ((1 - t) ** 3 / 6.0, (3 * t3 - 6 * t2 + 4) / 6.0,
                (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0, t3 / 6.0)

    wx = bw(tx)
    wy = bw(ty)
    for dy in range(4):
        yi = y1 + dy - 1
        for dx in range(4):
            xi = x1 + dx - 1
            valid = (xi >= 0) & (xi < wo) & (yi >= 0) & (yi < ho)
            contrib = vals * wx[dx] * wy[dy]
            np.add.at(out, (np.where(valid, yi, 0), np.where(valid, xi, 0)),
                      np.where(valid, contrib, 0.0))


def splat_bilinear(src, m00, m01, m02, m10, m11, m12, out, scale):
    """Bilinear scatter warp; maps source pixel (i, j) to output coords.

    output col = m00*i + m01*j + m02, output row = m10*i + m11*j + m12.
    Each source value is distributed over the 4 neighbouring output cells
    with bilinear weights (times ``scale``), so total mass is preserved
    whenever the footprint lands inside the output.  Accumulates into
    ``out``.
    """
    hs, ws = src.shape
    ho, wo = out.shape
    ii = np.arange(ws, dtype=np.float64)
    jj = np.arange(hs, dtype=np.float64)[:, None]
    xs = m00 * ii + m01 * jj + m02
    ys = m10 * ii + m11 * jj + m12
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    vals = src * scale

    for dx, dy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                      (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        xi = x0 + dx
        yi = y0 + dy
        valid = (xi >= 0) & (xi < wo) & (yi >= 0) & (yi < ho)
        np.add.at(out, (np.where(valid, yi, 0), np.where(valid, xi, 0)),
                  np.where(valid, vals * w, 0.0))


def warp_bilinear(src, m00, m01, m02, m10, m11, m12, out, edge_clamp):
    """Bilinear gather warp; maps output pixel (i, j) to source array coords.

    source col = m00*i + m01*j + m02, source row = m10*i + m11*j + m12.
    Out-of-support samples read 0 unless ``edge_clamp`` replicates edges.
    """
    hs, ws = src.shape
    ho, wo = out.shape
    ii = np.arange(wo, dtype=np.float64)
    jj = np.arange(ho, dtype=np.float64)[:, None]
    xs = m00 * ii + m01 * jj + m02
    ys = m10 * ii + m11 * jj + m12
    if edge_clamp:
        xs = np.clip(xs, 0.0, ws - 1.0)
        ys = np.clip(ys, 0.0, hs - 1.0)
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def corner(xi, yi):
        valid = (xi >= 0) & (xi < ws) & (yi >= 0) & (yi < hs)
        vals = src[np.clip(yi, 0, hs - 1), np.clip(xi, 0, ws - 1)]
        return np.where(valid, vals, 0.0)

    out[:, :] = (
        corner(x0, y0) * (1.0 - fx) * (1.0 - fy)
        + corner(x0 + 1, y0) * fx * (1.0 - fy)
        + corner(x0, y0 + 1) * (1.0 - fx) * fy
        + corner(x0 + 1, y0 + 1) * fx * fy
    )
