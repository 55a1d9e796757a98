import itertools

import numpy as np
import pytest

from signmon.geometry import Contour, detect_contours
from signmon.ontology import (
    ConfigError,
    SignClass,
    ToleranceConfig,
    check_membership,
    evaluate_pair,
    validate_config,
)
from oracles import bar_image, half_disc_pair

W = H = 206


def bar_pair(angle, offset=40):
    img = bar_image(angle, length=150, thickness=32)
    shift = np.round(offset * np.array([-np.sin(np.radians(angle)), -np.cos(np.radians(angle))])).astype(int)
    a = np.roll(img, (shift[1], shift[0]), axis=(0, 1))
    b = np.roll(img, (-shift[1], -shift[0]), axis=(0, 1))
    return detect_contours(a)[0], detect_contours(b)[0]


def brute_force(contours, cls, cfg):
    usable = [c for c in contours if c.distinct_points() >= 5]
    return any(
        evaluate_pair(a, b, cls, cfg, W, H).passed
        for a, b in itertools.permutations(usable, 2)
    )


class TestSignClass:
    def test_angles(self):
        assert [c.expected_angle_deg for c in SignClass] == [0, 45, 90]

    def test_parse(self):
        assert SignClass.parse("Wn7") is SignClass.WN7
        with pytest.raises(KeyError):
            SignClass.parse("Hp0")


class TestConfig:
    def test_defaults(self):
        cfg = validate_config(ToleranceConfig())
        assert (cfg.delta1, cfg.delta2, cfg.delta3, cfg.delta4, cfg.delta5) == (0.2, 0.2, 0.1, 0.3, 0.2)
        assert cfg.area_mode == "area-fraction" and cfg.angle_mode == "robust" and cfg.angle_floor_deg == 5

    def test_inverted_area_bounds(self):
        with pytest.raises(ConfigError, match="delta3 < delta4"):
            validate_config(ToleranceConfig(delta3=0.5, delta4=0.3))

    def test_strict_angle(self):
        validate_config(ToleranceConfig(delta5=0.088))

    def test_every_problem_named(self):
        with pytest.raises(ConfigError) as err:
            validate_config(ToleranceConfig(delta1=-1, delta5=2, area_mode="x", angle_floor_deg=-1))
        assert len(err.value.problems) == 4

    def test_from_dict_unknown(self):
        with pytest.raises(ConfigError):
            ToleranceConfig.from_dict({"delta9": 1})
        assert ToleranceConfig.from_dict({"delta1": 0.3}).delta1 == 0.3


class TestEvaluatePair:
    def test_all_pass(self):
        c1, c2 = bar_pair(0)
        r = evaluate_pair(c1, c2, SignClass.SH0, ToleranceConfig(), W, H)
        assert r.passed and r.failing == []

    def test_condition_one_arithmetic(self):
        # areas 100 vs 125: 125 > 1.2 * 100
        a = Contour(np.array([(0, 0), (10, 0), (10, 10), (0, 10)]))
        b = Contour(np.array([(50, 0), (75, 0), (75, 5), (50, 5)]))
        r = evaluate_pair(a, b, SignClass.SH0, ToleranceConfig(), W, H)
        assert r.areas == (100, 125) and 1 in r.failing

    def test_condition_six_bound(self):
        c1, c2 = bar_pair(60)
        r = evaluate_pair(c1, c2, SignClass.SH1, ToleranceConfig(), W, H)
        assert abs(r.orientations[0] - 60) < 2
        assert r.flags[5]
        assert not evaluate_pair(c1, c2, SignClass.SH1, ToleranceConfig(delta5=0.1), W, H).flags[5]

    def test_condition_five_symmetric(self, rng):
        cs = [c for c in detect_contours(rng.random((40, 40)) < 0.5) if c.distinct_points() >= 5][:8]
        cfg = ToleranceConfig()
        for a, b in itertools.permutations(cs, 2):
            assert evaluate_pair(a, b, SignClass.SH0, cfg, 40, 40).flags[4] == evaluate_pair(b, a, SignClass.SH0, cfg, 40, 40).flags[4]

    def test_literal_area_mode(self):
        c1, c2 = bar_pair(0)
        r = evaluate_pair(c1, c2, SignClass.SH0, ToleranceConfig(area_mode="literal"), W, H)
        assert not r.flags[2] and not r.flags[3]

    def test_multiplicative_angle_at_zero(self):
        c1, c2 = bar_pair(0)
        r = evaluate_pair(c1, c2, SignClass.SH0, ToleranceConfig(angle_mode="paper-literal"), W, H)
        assert r.flags[1] == (r.orientations[0] == r.orientations[1])


class TestMembership:
    def test_empty(self):
        v = check_membership([], SignClass.SH0, ToleranceConfig(), W, H)
        assert not v.accepted and v.witness is None

    def test_bars_accepted_as_sh0(self):
        cs = list(bar_pair(0))
        v = check_membership(cs, SignClass.SH0, ToleranceConfig(), W, H)
        assert v.accepted and v.witness[2].passed
        assert brute_force(cs, SignClass.SH0, ToleranceConfig())

    def test_bars_rejected_as_sh1(self):
        v = check_membership(list(bar_pair(0)), SignClass.SH1, ToleranceConfig(), W, H)
        assert not v.accepted
        assert 6 in v.best_near_miss.failing
        assert v.best_near_miss.n_passed == 5

    def test_verdict_invariant(self):
        from signmon.ontology import Verdict

        with pytest.raises(ValueError):
            Verdict(True)

    def test_small_contours_dropped(self):
        tiny = Contour(np.array([(0, 0), (1, 0), (1, 1), (0, 1)]))
        c1, c2 = bar_pair(0)
        v = check_membership([tiny, c1, c2], SignClass.SH0, ToleranceConfig(), W, H)
        assert v.accepted and v.witness[2].pair[0] >= 1

    def test_brute_force_and_permutation(self, rng):
        cfg = ToleranceConfig()
        hits = 0
        for _ in range(40):
            img = half_disc_pair(rng) | (rng.random((W, H)) < 0.002)
            cs = detect_contours(img)
            cls = SignClass(rng.choice(["Sh0", "Sh1", "Wn7"]))
            v = check_membership(cs, cls, cfg, W, H)
            assert v.accepted == brute_force(cs, cls, cfg)
            perm = [cs[i] for i in rng.permutation(len(cs))]
            assert check_membership(perm, cls, cfg, W, H).accepted == v.accepted
            hits += v.accepted
        assert hits > 0

    def test_near_miss_maximizes(self, rng):
        cfg = ToleranceConfig()
        img = half_disc_pair(rng)
        img[::23, ::19] = True
        img[5:12, 5:30] = True
        cs = [c for c in detect_contours(img) if c.distinct_points() >= 5]
        assert len(cs) >= 2
        for cls in SignClass:
            v = check_membership(cs, cls, cfg, W, H)
            if v.accepted:
                continue
            best = max(evaluate_pair(a, b, cls, cfg, W, H).n_passed for a, b in itertools.permutations(cs, 2))
            assert v.best_near_miss.n_passed == best

    def test_deterministic_witness(self, rng):
        cs = detect_contours(half_disc_pair(rng))
        a = check_membership(cs, SignClass.SH0, ToleranceConfig(delta5=1), W, H)
        b = check_membership(cs, SignClass.SH0, ToleranceConfig(delta5=1), W, H)
        assert a.accepted == b.accepted
        if a.accepted:
            assert a.witness[2] == b.witness[2]


def loosen(cfg, rng):
    """Every single-parameter loosening of ``cfg``."""
    bump = rng.uniform(0.01, 0.2)
    yield cfg.with_(delta1=cfg.delta1 + bump)
    yield cfg.with_(delta2=cfg.delta2 + bump)
    yield cfg.with_(delta4=cfg.delta4 + bump)
    yield cfg.with_(delta5=min(1.0, cfg.delta5 + bump))
    yield cfg.with_(delta3=max(0.0, cfg.delta3 - bump))


@pytest.mark.parametrize("area_mode", ["area-fraction", "literal"])
@pytest.mark.parametrize("angle_mode", ["robust", "paper-literal"])
def test_tolerance_monotonicity(area_mode, angle_mode):
    rng = np.random.default_rng(hash((area_mode, angle_mode)) % 2**32)
    accepted = 0
    for _ in range(60):
        cs = detect_contours(half_disc_pair(rng))
        cls = SignClass(rng.choice(["Sh0", "Sh1", "Wn7"]))
        base = ToleranceConfig(
            delta1=rng.uniform(0.05, 0.4), delta2=rng.uniform(0.05, 0.4),
            delta3=rng.uniform(0.0, 0.15), delta4=rng.uniform(0.2, 0.5),
            delta5=rng.uniform(0.05, 0.5), area_mode=area_mode, angle_mode=angle_mode,
        )
        if not check_membership(cs, cls, base, W, H).accepted:
            continue
        accepted += 1
        for looser in loosen(base, rng):
            assert check_membership(cs, cls, looser, W, H).accepted
    if area_mode == "area-fraction":
        assert accepted > 0
