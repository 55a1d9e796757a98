"""Independent reference implementations used by the tests."""

from collections import deque

import numpy as np


def component_count(binary, connectivity=8):
    """Flood-fill count of foreground components."""
    h, w = binary.shape
    seen = np.zeros_like(binary, dtype=bool)
    if connectivity == 8:
        steps = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    n = 0
    for y in range(h):
        for x in range(w):
            if binary[y, x] and not seen[y, x]:
                n += 1
                seen[y, x] = True
                q = deque([(y, x)])
                while q:
                    cy, cx = q.popleft()
                    for dy, dx in steps:
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and binary[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            q.append((ny, nx))
    return n


def hole_count(binary):
    """4-connected background components that do not touch the frame."""
    padded = np.pad(~binary.astype(bool), 1, constant_values=True)
    return component_count(padded, connectivity=4) - 1


def is_border_pixel(binary, x, y):
    h, w = binary.shape
    if not binary[y, x]:
        return False
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny, nx = y + dy, x + dx
        if not (0 <= ny < h and 0 <= nx < w) or not binary[ny, nx]:
            return True
    return False


def boundary_pixels(binary):
    ys, xs = np.nonzero(binary)
    return {(int(x), int(y)) for x, y in zip(xs, ys) if is_border_pixel(binary, x, y)}


def polygon_mask(points, w, h):
    """Per-pixel even-odd test with vertex pixels included."""
    pts = np.asarray(points, dtype=float)
    mask = np.zeros((h, w), bool)
    n = len(pts)
    for y in range(h):
        for x in range(w):
            inside = False
            for k in range(n):
                x1, y1 = pts[k]
                x2, y2 = pts[(k + 1) % n]
                if (y1 <= y < y2) or (y2 <= y < y1):
                    xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                    if xc <= x:
                        inside = not inside
            mask[y, x] = inside
    for x, y in np.asarray(points, dtype=int):
        mask[y, x] = True
    return mask


def eig_orientation(points):
    p = np.asarray(points, dtype=float)
    d = p - p.mean(axis=0)
    vals, vecs = np.linalg.eigh(d.T @ d)
    v = vecs[:, np.argmax(vals)]
    return float(np.degrees(np.arccos(min(1.0, abs(v[0]) / np.linalg.norm(v)))))


def bar_image(angle_deg, size=206, length=150, thickness=14):
    """Anti-aliasing free rotated bar, centered."""
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    c = (size - 1) / 2
    t = np.radians(angle_deg)
    # image y grows downward, so rotate with -sin to keep angles counterclockwise
    u = (xx - c) * np.cos(t) - (yy - c) * np.sin(t)
    v = (xx - c) * np.sin(t) + (yy - c) * np.cos(t)
    return (np.abs(u) <= length / 2) & (np.abs(v) <= thickness / 2)


def optimal_tp(ious, det_cls, truth_cls, threshold):
    """Maximum class-aware one-to-one matching by exhaustive search."""
    nd, nt = ious.shape
    best = 0

    def rec(i, used, count):
        nonlocal best
        if i == nd:
            best = max(best, count)
            return
        if count + (nd - i) <= best:
            return
        rec(i + 1, used, count)
        for j in range(nt):
            if j not in used and det_cls[i] == truth_cls[j] and ious[i, j] >= threshold:
                rec(i + 1, used | {j}, count + 1)

    rec(0, frozenset(), 0)
    return best


def half_disc_pair(rng, size=206):
    """Two half-discs with randomly perturbed radii and split angles."""
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    c = (size - 1) / 2
    dx, dy = xx - c, c - yy
    dist = np.hypot(dx, dy)
    base = rng.uniform(0, 90)
    out = np.zeros((size, size), bool)
    for sign in (1, -1):
        r = rng.uniform(55, 100)
        t = np.radians(base + rng.normal(0, 6))
        # normal of the split line at angle t
        side = -np.sin(t) * dx + np.cos(t) * dy
        out |= (dist < r) & (sign * side > rng.uniform(4, 12))
    return out
