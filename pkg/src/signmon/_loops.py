"""Explicit-loop kernels.

Every function here is plain Python over numpy arrays and is written so that
``numba.njit`` accepts it unchanged.  :mod:`signmon.kernels` decides whether
the compiled or the vectorized numpy variant is bound.
"""

import math

import numpy as np

# 8-neighbourhood in (drow, dcol), clockwise on screen (rows grow downward),
# starting east.
_DR = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)
_DC = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)


def resize_bilinear(src, out_h, out_w):
    h, w, ch = src.shape
    out = np.empty((out_h, out_w, ch), dtype=np.uint8)
    xs0 = np.empty(out_w, dtype=np.int64)
    xs1 = np.empty(out_w, dtype=np.int64)
    wxs = np.empty(out_w)
    sx = w / out_w
    for j in range(out_w):
        fx = min(max((j + 0.5) * sx - 0.5, 0.0), w - 1.0)
        xs0[j] = int(math.floor(fx))
        xs1[j] = min(xs0[j] + 1, w - 1)
        wxs[j] = fx - xs0[j]
    sy = h / out_h
    for i in range(out_h):
        fy = min(max((i + 0.5) * sy - 0.5, 0.0), h - 1.0)
        y0 = int(math.floor(fy))
        y1 = min(y0 + 1, h - 1)
        wy = fy - y0
        for j in range(out_w):
            x0 = xs0[j]
            x1 = xs1[j]
            wx = wxs[j]
            for c in range(ch):
                top = src[y0, x0, c] * (1.0 - wx) + src[y0, x1, c] * wx
                bot = src[y1, x0, c] * (1.0 - wx) + src[y1, x1, c] * wx
                v = top * (1.0 - wy) + bot * wy
                out[i, j, c] = np.uint8(math.floor(v + 0.5))
    return out


def box_blur(src, k):
    # separable clamped running sums; integer totals keep the result exact
    h, w, ch = src.shape
    r = k // 2
    rows = np.empty((h, w, ch), dtype=np.int64)
    for i in range(h):
        for c in range(ch):
            acc = 0
            for dj in range(-r, r + 1):
                acc += src[i, min(max(dj, 0), w - 1), c]
            rows[i, 0, c] = acc
            for j in range(1, w):
                acc += src[i, min(j + r, w - 1), c] - src[i, max(j - r - 1, 0), c]
                rows[i, j, c] = acc
    out = np.empty_like(src)
    norm = 1.0 / (k * k)
    for j in range(w):
        for c in range(ch):
            acc = 0
            for di in range(-r, r + 1):
                acc += rows[min(max(di, 0), h - 1), j, c]
            out[0, j, c] = np.uint8(math.floor(acc * norm + 0.5))
            for i in range(1, h):
                acc += rows[min(i + r, h - 1), j, c] - rows[max(i - r - 1, 0), j, c]
                out[i, j, c] = np.uint8(math.floor(acc * norm + 0.5))
    return out


def otsu_threshold(gray):
    hist = np.zeros(256, dtype=np.int64)
    for v in gray.ravel():
        hist[v] += 1
    total = gray.size
    sum_all = 0.0
    for t in range(256):
        sum_all += t * hist[t]
    best_t = -1
    best_var = -1.0
    w0 = 0
    sum0 = 0.0
    for t in range(256):
        w0 += hist[t]
        sum0 += t * hist[t]
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            continue
        m0 = sum0 / w0
        m1 = (sum_all - sum0) / w1
        var = w0 * w1 * (m0 - m1) * (m0 - m1)
        if var > best_var:
            best_var = var
            best_t = t
    if best_t < 0:
        # single-valued histogram
        for t in range(256):
            if hist[t] > 0:
                return t
    return best_t


def _grow(pts, n):
    grown = np.empty((pts.shape[0] * 2, 2), dtype=np.int32)
    grown[:n] = pts[:n]
    return grown


def find_borders(binary):
    """Border following over a 2-D 0/1 array.

    Returns ``(points, offsets, is_hole)`` where contour ``k`` is
    ``points[offsets[k]:offsets[k + 1]]`` in (x, y) order.
    """
    h, w = binary.shape
    f = np.zeros((h + 2, w + 2), dtype=np.int32)
    for i in range(h):
        for j in range(w):
            if binary[i, j] != 0:
                f[i + 1, j + 1] = 1

    pts = np.empty((max(64, 2 * (h + w)), 2), dtype=np.int32)
    npts = 0
    offsets = np.empty(h * w + 2, dtype=np.int64)
    holes = np.empty(h * w + 1, dtype=np.uint8)
    ncont = 0
    offsets[0] = 0
    nbd = 1

    for i in range(1, h + 1):
        for j in range(1, w + 1):
            fij = f[i, j]
            if fij == 0:
                continue
            if fij == 1 and f[i, j - 1] == 0:
                hole = False
                i2 = i
                j2 = j - 1
            elif fij >= 1 and f[i, j + 1] == 0:
                hole = True
                i2 = i
                j2 = j + 1
            else:
                continue
            nbd += 1

            # direction index of (i2, j2) seen from (i, j)
            d0 = 0
            for d in range(8):
                if i + _DR[d] == i2 and j + _DC[d] == j2:
                    d0 = d
                    break
            # clockwise search for the first nonzero neighbour
            found = -1
            for s in range(8):
                d = (d0 + s) % 8
                if f[i + _DR[d], j + _DC[d]] != 0:
                    found = d
                    break
            if npts >= pts.shape[0]:
                pts = _grow(pts, npts)
            pts[npts, 0] = j - 1
            pts[npts, 1] = i - 1
            npts += 1
            if found < 0:
                f[i, j] = -nbd
            else:
                i1 = i + _DR[found]
                j1 = j + _DC[found]
                i2 = i1
                j2 = j1
                i3 = i
                j3 = j
                while True:
                    dprev = 0
                    for d in range(8):
                        if i3 + _DR[d] == i2 and j3 + _DC[d] == j2:
                            dprev = d
                            break
                    # counterclockwise from the element after (i2, j2)
                    east_zero = False
                    d4 = -1
                    for s in range(1, 9):
                        d = (dprev - s + 16) % 8
                        if f[i3 + _DR[d], j3 + _DC[d]] != 0:
                            d4 = d
                            break
                        if d == 0:
                            east_zero = True
                    i4 = i3 + _DR[d4]
                    j4 = j3 + _DC[d4]
                    if east_zero:
                        f[i3, j3] = -nbd
                    elif f[i3, j3] == 1:
                        f[i3, j3] = nbd
                    if i4 == i and j4 == j and i3 == i1 and j3 == j1:
                        break
                    i2 = i3
                    j2 = j3
                    i3 = i4
                    j3 = j4
                    if npts >= pts.shape[0]:
                        pts = _grow(pts, npts)
                    pts[npts, 0] = j3 - 1
                    pts[npts, 1] = i3 - 1
                    npts += 1
            holes[ncont] = 1 if hole else 0
            ncont += 1
            offsets[ncont] = npts

    return pts[:npts].copy(), offsets[: ncont + 1].copy(), holes[:ncont].copy()


def contour_measures(points, offsets, distinct_limit):
    """Per-contour shoelace area, second central moments, bounding box and
    distinct-point count.

    Distinct points are only counted exactly for contours shorter than
    ``4 * distinct_limit``; a traversal visits a pixel at most four times, so
    longer ones have at least ``distinct_limit`` and report their length.
    """
    n = offsets.shape[0] - 1
    area = np.zeros(n)
    cxx = np.zeros(n)
    cxy = np.zeros(n)
    cyy = np.zeros(n)
    bbox = np.zeros((n, 4), dtype=np.int64)
    distinct = np.zeros(n, dtype=np.int64)
    for k in range(n):
        a = offsets[k]
        b = offsets[k + 1]
        m = b - a
        s = 0.0
        mx = 0.0
        my = 0.0
        xmin = points[a, 0]
        xmax = xmin
        ymin = points[a, 1]
        ymax = ymin
        for p in range(a, b):
            q = p + 1 if p + 1 < b else a
            x = float(points[p, 0])
            y = float(points[p, 1])
            s += x * points[q, 1] - points[q, 0] * y
            mx += x
            my += y
            xmin = min(xmin, points[p, 0])
            xmax = max(xmax, points[p, 0])
            ymin = min(ymin, points[p, 1])
            ymax = max(ymax, points[p, 1])
        area[k] = abs(s) * 0.5
        mx /= m
        my /= m
        sxx = 0.0
        sxy = 0.0
        syy = 0.0
        for p in range(a, b):
            dx = points[p, 0] - mx
            dy = points[p, 1] - my
            sxx += dx * dx
            sxy += dx * dy
            syy += dy * dy
        cxx[k] = sxx / m
        cxy[k] = sxy / m
        cyy[k] = syy / m
        bbox[k, 0] = xmin
        bbox[k, 1] = ymin
        bbox[k, 2] = xmax
        bbox[k, 3] = ymax
        if m >= 4 * distinct_limit:
            distinct[k] = m
        else:
            d = 0
            for p in range(a, b):
                seen = False
                for q in range(a, p):
                    if points[q, 0] == points[p, 0] and points[q, 1] == points[p, 1]:
                        seen = True
                        break
                if not seen:
                    d += 1
            distinct[k] = d
    return area, cxx, cxy, cyy, bbox, distinct


def fill_polygon(points, x0, y0, w, h):
    """Even-odd scanline fill of a closed pixel polygon into a local mask.

    The mask covers columns ``x0..x0+w-1`` and rows ``y0..y0+h-1``; the
    polygon's own vertices are always set.
    """
    mask = np.zeros((h, w), dtype=np.bool_)
    n = points.shape[0]
    xs = np.empty(n, dtype=np.float64)
    for r in range(h):
        y = y0 + r
        m = 0
        for k in range(n):
            ax = points[k, 0]
            ay = points[k, 1]
            bx = points[(k + 1) % n, 0]
            by = points[(k + 1) % n, 1]
            if (ay <= y < by) or (by <= y < ay):
                xs[m] = ax + (y - ay) * (bx - ax) / (by - ay)
                m += 1
        if m >= 2:
            row = np.sort(xs[:m])
            for p in range(0, m - 1, 2):
                lo = int(math.ceil(row[p])) - x0
                hi = int(math.floor(row[p + 1])) - x0
                lo = max(lo, 0)
                hi = min(hi, w - 1)
                for c in range(lo, hi + 1):
                    mask[r, c] = True
    for k in range(n):
        mask[points[k, 1] - y0, points[k, 0] - x0] = True
    return mask
