"""Pure-numpy counterparts of the loop kernels.

Border following is inherently sequential, so the numpy backend runs the
loop version uninterpreted; everything else is array arithmetic.
"""

import numpy as np

from . import _loops

find_borders = _loops.find_borders


def _src_coords(n_in, n_out):
    f = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    f = np.clip(f, 0.0, n_in - 1.0)
    i0 = np.floor(f).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, f - i0


def resize_bilinear(src, out_h, out_w):
    h, w, _ = src.shape
    y0, y1, wy = _src_coords(h, out_h)
    x0, x1, wx = _src_coords(w, out_w)
    s = src.astype(np.float64)
    wx = wx[None, :, None]
    top = s[y0][:, x0] * (1.0 - wx) + s[y0][:, x1] * wx
    bot = s[y1][:, x0] * (1.0 - wx) + s[y1][:, x1] * wx
    wy = wy[:, None, None]
    v = top * (1.0 - wy) + bot * wy
    return np.floor(v + 0.5).astype(np.uint8)


def box_blur(src, k):
    r = k // 2
    h, w, _ = src.shape
    padded = np.pad(src.astype(np.int64), ((r, r), (r, r), (0, 0)), mode="edge")
    c = np.cumsum(np.cumsum(padded, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0), (0, 0)))
    acc = c[k:k + h, k:k + w] - c[:h, k:k + w] - c[k:k + h, :w] + c[:h, :w]
    return np.floor(acc / (k * k) + 0.5).astype(np.uint8)


def otsu_threshold(gray):
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = gray.size - w0
    s0 = np.cumsum(hist * levels)
    s1 = s0[-1] - s0
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return int(np.flatnonzero(hist)[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        var = w0 * w1 * (s0 / w0 - s1 / w1) ** 2
    var[~valid] = -1.0
    return int(np.argmax(var))


def contour_measures(points, offsets, distinct_limit):
    n = len(offsets) - 1
    starts = offsets[:-1]
    lengths = np.diff(offsets)
    ids = np.repeat(np.arange(n), lengths)
    p = points.astype(np.float64)
    x, y = p[:, 0], p[:, 1]
    nxt = np.arange(1, len(points) + 1)
    nxt[offsets[1:] - 1] = starts
    area = np.abs(np.add.reduceat(x * y[nxt] - x[nxt] * y, starts)) * 0.5

    mx = np.add.reduceat(x, starts) / lengths
    my = np.add.reduceat(y, starts) / lengths
    dx, dy = x - mx[ids], y - my[ids]
    cxx = np.add.reduceat(dx * dx, starts) / lengths
    cxy = np.add.reduceat(dx * dy, starts) / lengths
    cyy = np.add.reduceat(dy * dy, starts) / lengths

    pi = points.astype(np.int64)
    bbox = np.stack([
        np.minimum.reduceat(pi[:, 0], starts), np.minimum.reduceat(pi[:, 1], starts),
        np.maximum.reduceat(pi[:, 0], starts), np.maximum.reduceat(pi[:, 1], starts),
    ], axis=1)

    distinct = lengths.astype(np.int64)
    short = lengths[ids] < 4 * distinct_limit
    keys = np.unique((ids[short] << 42) | (pi[short, 1] << 21) | pi[short, 0])
    counts = np.bincount(keys >> 42, minlength=n)
    is_short = lengths < 4 * distinct_limit
    distinct[is_short] = counts[is_short]
    return area, cxx, cxy, cyy, bbox, distinct


def fill_polygon(points, x0, y0, w, h):
    mask = np.zeros((h, w), dtype=bool)
    p = points.astype(np.float64)
    ax, ay = p[:, 0], p[:, 1]
    bx, by = np.roll(ax, -1), np.roll(ay, -1)
    cols = np.arange(w) + x0
    for r in range(h):
        y = y0 + r
        hit = ((ay <= y) & (y < by)) | ((by <= y) & (y < ay))
        if hit.sum() < 2:
            continue
        xs = np.sort(ax[hit] + (y - ay[hit]) * (bx[hit] - ax[hit]) / (by[hit] - ay[hit]))
        # a column is inside when an odd number of crossings lie strictly left of it
        mask[r] = np.searchsorted(xs, cols, side="left") % 2 == 1
    mask[points[:, 1] - y0, points[:, 0] - x0] = True
    return mask
