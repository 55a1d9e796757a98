"""Contour-pair membership rules for the Sh0, Sh1 and Wn7 shunting signs.

An image belongs to a class when two of its contours have similar areas,
similar orientations, sizes inside the expected band relative to the frame,
disjoint interiors, and orientations close to the class angle.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .geometry import (
    MIN_DISTINCT_POINTS,
    Contour,
    contour_area,
    measure_contours,
    orientation_deg,
    regions_disjoint,
)

N_CONDITIONS = 6


class SignClass(enum.Enum):
    SH0 = "Sh0"
    SH1 = "Sh1"
    WN7 = "Wn7"

    @property
    def expected_angle_deg(self) -> float:
        return _ANGLES[self]

    @classmethod
    def parse(cls, name) -> SignClass:
        if isinstance(name, cls):
            return name
        for member in cls:
            if member.value == name:
                return member
        raise KeyError(name)

    def __str__(self):
        return self.value


_ANGLES = {SignClass.SH0: 0.0, SignClass.SH1: 45.0, SignClass.WN7: 90.0}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


AREA_MODES = ("literal", "area-fraction")
ANGLE_MODES = ("paper-literal", "robust")


@dataclass(frozen=True)
class ToleranceConfig:
    delta1: float = 0.2
    delta2: float = 0.2
    delta3: float = 0.1
    delta4: float = 0.3
    delta5: float = 0.2
    area_mode: str = "area-fraction"
    angle_mode: str = "robust"
    angle_floor_deg: float = 5.0

    @classmethod
    def from_dict(cls, d) -> ToleranceConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown tolerance key {k!r}" for k in sorted(unknown)])
        return validate_config(cls(**d))

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes) -> ToleranceConfig:
        return replace(self, **changes)


def validate_config(cfg: ToleranceConfig) -> ToleranceConfig:
    problems = []
    ok = set()
    for name in ("delta1", "delta2", "delta3", "delta4", "delta5"):
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v) or v < 0:
            problems.append(f"{name} must be a nonnegative number, got {v!r}")
        else:
            ok.add(name)
    if {"delta3", "delta4"} <= ok and not cfg.delta3 < cfg.delta4:
        problems.append(f"delta3 < delta4 violated ({cfg.delta3} >= {cfg.delta4})")
    if "delta5" in ok and cfg.delta5 > 1:
        problems.append(f"delta5 <= 1 violated ({cfg.delta5})")
    if cfg.area_mode not in AREA_MODES:
        problems.append(f"area_mode must be one of {AREA_MODES}, got {cfg.area_mode!r}")
    if cfg.angle_mode not in ANGLE_MODES:
        problems.append(f"angle_mode must be one of {ANGLE_MODES}, got {cfg.angle_mode!r}")
    floor = cfg.angle_floor_deg
    if not isinstance(floor, (int, float)) or not floor >= 0:
        problems.append(f"angle_floor_deg must be >= 0, got {floor!r}")
    if problems:
        raise ConfigError(problems)
    return cfg


@dataclass(frozen=True)
class ConditionReport:
    flags: tuple[bool, ...]
    areas: tuple[float, float]
    orientations: tuple[float, float]
    pair: tuple[int, int] | None = None

    @property
    def passed(self) -> bool:
        return all(self.flags)

    @property
    def n_passed(self) -> int:
        return sum(self.flags)

    @property
    def failing(self) -> list[int]:
        """1-based indices of the failed conditions."""
        return [i + 1 for i, ok in enumerate(self.flags) if not ok]

    def to_dict(self):
        return {
            "flags": list(self.flags),
            "failing": self.failing,
            "areas": list(self.areas),
            "orientations": list(self.orientations),
            "pair": list(self.pair) if self.pair is not None else None,
        }


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    witness: tuple[Contour, Contour, ConditionReport] | None = None
    best_near_miss: ConditionReport | None = field(default=None)

    def __post_init__(self):
        if self.accepted != (self.witness is not None):
            raise ValueError("a verdict is accepted exactly when it carries a witness")


def _area_flags(a, cfg, w, h):
    """Conditions 3 and 4 for an area value (or array of them)."""
    if cfg.area_mode == "literal":
        c3 = (cfg.delta3 * h <= a) & (a <= cfg.delta4 * h)
        c4 = (cfg.delta3 * w <= a) & (a <= cfg.delta4 * w)
    else:
        c3 = (cfg.delta3 * w * h <= a) & (a <= cfg.delta4 * w * h)
        c4 = c3
    return c3, c4


def _angle_similar(s1, s2, cfg):
    if cfg.angle_mode == "paper-literal":
        return ((1 - cfg.delta2) * s1 <= s2) & (s2 <= (1 + cfg.delta2) * s1)
    return np.abs(s1 - s2) <= np.maximum(cfg.delta2 * s1, cfg.angle_floor_deg)


def _class_angle_ok(s, cls, cfg):
    return np.abs(s - cls.expected_angle_deg) <= 90.0 * cfg.delta5


def _cheap_flags(a1, a2, s1, s2, cls, cfg, w, h):
    c1 = (a1 * (1 - cfg.delta1) <= a2) & (a2 <= (1 + cfg.delta1) * a1)
    c2 = _angle_similar(s1, s2, cfg)
    c3a, c4a = _area_flags(a1, cfg, w, h)
    c3b, c4b = _area_flags(a2, cfg, w, h)
    c6 = _class_angle_ok(s1, cls, cfg) & _class_angle_ok(s2, cls, cfg)
    return c1, c2, c3a & c3b, c4a & c4b, c6


def evaluate_pair(c1: Contour, c2: Contour, cls: SignClass, cfg: ToleranceConfig, w: int, h: int) -> ConditionReport:
    """Evaluate all six membership conditions for the ordered pair ``(c1, c2)``."""
    cls = SignClass.parse(cls)
    a1, a2 = contour_area(c1), contour_area(c2)
    s1, s2 = orientation_deg(c1), orientation_deg(c2)
    f1, f2, f3, f4, f6 = _cheap_flags(a1, a2, s1, s2, cls, cfg, w, h)
    f5 = regions_disjoint(c1, c2)
    flags = tuple(bool(f) for f in (f1, f2, f3, f4, f5, f6))
    return ConditionReport(flags, (a1, a2), (s1, s2))


def check_membership(contours: list[Contour], cls: SignClass, cfg: ToleranceConfig, w: int, h: int) -> Verdict:
    """Search every ordered pair of distinct contours for one meeting all six conditions.

    Pairs are scanned row-major over the eligible contours; the first passing
    pair is the witness.  On rejection the report with the most passed
    conditions is returned (first in scan order on ties).
    """
    cls = SignClass.parse(cls)
    area, sigma, bbox, distinct = measure_contours(contours)
    keep = np.flatnonzero(distinct >= MIN_DISTINCT_POINTS)
    n = len(keep)
    if n < 2:
        return Verdict(False)
    cs = [contours[i] for i in keep]
    area, sigma, bbox = area[keep], sigma[keep], bbox[keep]

    a1, a2 = area[:, None], area[None, :]
    s1, s2 = sigma[:, None], sigma[None, :]
    cheap = np.stack(np.broadcast_arrays(*_cheap_flags(a1, a2, s1, s2, cls, cfg, w, h)))
    off_diag = ~np.eye(n, dtype=bool)
    # bbox overlap decides condition 5 for free where boxes do not meet
    bx0, by0, bx1, by1 = (bbox[:, k] for k in range(4))
    touching = (
        (bx0[:, None] <= bx1[None, :]) & (bx0[None, :] <= bx1[:, None])
        & (by0[:, None] <= by1[None, :]) & (by0[None, :] <= by1[:, None])
    )

    disjoint_cache = {}

    def disjoint(i, j):
        if not touching[i, j]:
            return True
        key = (min(i, j), max(i, j))
        if key not in disjoint_cache:
            disjoint_cache[key] = regions_disjoint(cs[i], cs[j])
        return disjoint_cache[key]

    def report(i, j, c5):
        fl = cheap[:, i, j]
        flags = (bool(fl[0]), bool(fl[1]), bool(fl[2]), bool(fl[3]), bool(c5), bool(fl[4]))
        return ConditionReport(
            flags,
            (float(area[i]), float(area[j])),
            (float(sigma[i]), float(sigma[j])),
            (int(keep[i]), int(keep[j])),
        )

    n_cheap = cheap.sum(axis=0)
    n_cheap[~off_diag] = -1
    for i, j in zip(*np.nonzero(n_cheap == 5)):
        if disjoint(i, j):
            return Verdict(True, (cs[i], cs[j], report(i, j, True)))

    # condition 5 can lift a pair by one, so only the top two tiers compete
    top = int(n_cheap.max())
    total = np.where(n_cheap >= 0, n_cheap, -1).astype(np.int64)
    for i, j in zip(*np.nonzero(n_cheap >= top - 1)):
        if disjoint(i, j):
            total[i, j] += 1
    i, j = np.unravel_index(int(np.argmax(total)), total.shape)
    return Verdict(False, best_near_miss=report(i, j, disjoint(i, j)))
