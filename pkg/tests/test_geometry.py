import math

import numpy as np
import pytest

from signmon.geometry import (
    Contour,
    DegenerateContour,
    contour_area,
    detect_contours,
    fit_line,
    measure_contours,
    orientation_deg,
    regions_disjoint,
)
from oracles import bar_image, boundary_pixels, component_count, eig_orientation, hole_count, is_border_pixel, polygon_mask


def square(x0, y0, side):
    pts = [(x0 + i, y0) for i in range(side)]
    pts += [(x0 + side - 1, y0 + i) for i in range(1, side)]
    pts += [(x0 + side - 1 - i, y0 + side - 1) for i in range(1, side)]
    pts += [(x0, y0 + side - 1 - i) for i in range(1, side - 1)]
    return Contour(np.array(pts))


class TestDetect:
    def test_empty(self):
        assert detect_contours(np.zeros((8, 8), bool)) == []

    def test_filled_square(self):
        img = np.zeros((8, 8), bool)
        img[2:6, 2:6] = True
        cs = detect_contours(img)
        assert len(cs) == 1 and cs[0].kind == "outer"
        assert {tuple(p) for p in cs[0].points.tolist()} == boundary_pixels(img)

    def test_two_squares(self):
        img = np.zeros((10, 10), bool)
        img[1:4, 1:4] = True
        img[6:9, 5:8] = True
        cs = detect_contours(img)
        assert [c.kind for c in cs] == ["outer", "outer"]

    def test_ring_has_hole(self):
        img = np.zeros((9, 9), bool)
        img[1:8, 1:8] = True
        img[3:6, 3:6] = False
        kinds = sorted(c.kind for c in detect_contours(img))
        assert kinds == ["hole", "outer"]

    def test_single_pixel(self):
        img = np.zeros((5, 5), bool)
        img[2, 3] = True
        (c,) = detect_contours(img)
        assert c.points.tolist() == [[3, 2]]

    def test_chain_is_closed_8_path(self, rng):
        img = rng.random((24, 24)) < 0.5
        for c in detect_contours(img):
            p = c.points
            steps = np.abs(np.diff(np.vstack([p, p[:1]]), axis=0)).max(axis=1)
            assert len(p) == 1 or np.all(steps <= 1)

    def test_random_against_oracles(self, rng):
        for _ in range(200):
            img = rng.random((24, 24)) < rng.uniform(0.2, 0.8)
            cs = detect_contours(img)
            assert sum(c.kind == "outer" for c in cs) == component_count(img)
            assert sum(c.kind == "hole" for c in cs) == hole_count(img)
            for c in cs:
                assert all(is_border_pixel(img, x, y) for x, y in c.points.tolist())

    def test_matches_opencv(self, rng):
        cv2 = pytest.importorskip("cv2")
        for _ in range(50):
            img = rng.random((24, 24)) < 0.45
            ref, _ = cv2.findContours(img.astype(np.uint8), cv2.RETR_LIST, cv2.CHAIN_APPROX_NONE)
            ours = detect_contours(img)
            key = lambda pts: tuple(sorted(map(tuple, np.asarray(pts).reshape(-1, 2).tolist())))
            assert sorted(key(c.points) for c in ours) == sorted(key(r) for r in ref)


class TestArea:
    def test_square(self):
        assert contour_area(np.array([(0, 0), (10, 0), (10, 10), (0, 10)])) == 100

    def test_triangle(self):
        assert contour_area(np.array([(0, 0), (4, 0), (0, 3)])) == 6

    def test_point(self):
        assert contour_area(np.array([(3, 3), (3, 3), (3, 3)])) == 0

    def test_rotation_reversal_translation(self, rng):
        pts = rng.integers(0, 50, (12, 2))
        a = contour_area(pts)
        assert contour_area(np.roll(pts, 5, axis=0)) == pytest.approx(a)
        assert contour_area(pts[::-1]) == pytest.approx(a)
        assert contour_area(pts + [7, -3]) == pytest.approx(a)


class TestOrientation:
    def test_axes(self):
        xs = np.arange(20)
        assert orientation_deg(np.c_[xs, np.full(20, 4)]) == pytest.approx(0)
        assert orientation_deg(np.c_[xs, xs]) == pytest.approx(45)
        assert orientation_deg(np.c_[np.full(20, 4), xs]) == pytest.approx(90)

    def test_noisy_line(self, rng):
        t = rng.uniform(-50, 50, 200)
        pts = np.c_[t * math.cos(math.radians(30)), t * math.sin(math.radians(30))]
        pts = pts + rng.uniform(-0.5, 0.5, pts.shape)
        s = orientation_deg(pts)
        assert abs(s - 30) <= 2
        assert s == pytest.approx(eig_orientation(pts), abs=1e-6)

    def test_mirror_and_translate(self, rng):
        pts = rng.normal(size=(40, 2)) @ np.array([[3.0, 1.0], [0.0, 1.0]])
        s = orientation_deg(pts)
        assert orientation_deg(pts * [-1, 1]) == pytest.approx(s)
        assert orientation_deg(pts + [100, 3]) == pytest.approx(s)
        assert 0 <= s <= 90

    def test_degenerate(self):
        with pytest.raises(DegenerateContour):
            orientation_deg(np.array([(2, 2)] * 6))

    def test_unit_direction(self, rng):
        line = fit_line(rng.normal(size=(10, 2)))
        assert math.hypot(*line.direction) == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("angle", [0, 15, 30, 45, 60, 75, 90])
    def test_rendered_bars(self, angle):
        (c,) = detect_contours(bar_image(angle))
        assert abs(orientation_deg(c) - angle) <= 2

    def test_measure_matches_scalar(self, rng):
        img = rng.random((40, 40)) < 0.5
        cs = detect_contours(img)
        area, sigma, bbox, distinct = measure_contours(cs)
        for k, c in enumerate(cs):
            assert area[k] == pytest.approx(contour_area(c))
            assert bbox[k].tolist() == list(c.bbox)
            n = c.distinct_points()
            assert distinct[k] == n or (distinct[k] >= 20 and n >= 5)
            if n > 1 and not np.isnan(sigma[k]):
                assert sigma[k] == pytest.approx(orientation_deg(c), abs=1e-6)


class TestDisjoint:
    def test_far(self):
        assert regions_disjoint(square(0, 0, 5), square(40, 40, 5), 50, 50)

    def test_self(self):
        c = square(3, 3, 6)
        assert not regions_disjoint(c, c)

    def test_nested(self):
        assert not regions_disjoint(square(0, 0, 20), square(8, 8, 3), 20, 20)

    def test_symmetric_and_oracle(self, rng):
        img = rng.random((20, 20)) < 0.55
        cs = detect_contours(img)[:10]
        for a in cs:
            for b in cs:
                d = regions_disjoint(a, b, 20, 20)
                assert d == regions_disjoint(b, a, 20, 20)
                ref = not np.any(polygon_mask(a.points, 20, 20) & polygon_mask(b.points, 20, 20))
                assert d == ref

    def test_mask_oracle(self, rng):
        for c in detect_contours(rng.random((20, 20)) < 0.5)[:15]:
            x0, y0, x1, y1 = c.bbox
            assert np.array_equal(c.mask, polygon_mask(c.points, 20, 20)[y0 : y1 + 1, x0 : x1 + 1])

    def test_out_of_frame(self):
        with pytest.raises(ValueError):
            regions_disjoint(square(0, 0, 5), square(8, 8, 5), 10, 10)
