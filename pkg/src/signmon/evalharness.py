"""Detection metrics with and without the monitor in the loop.

A simulated controller stands in for the object detector: it drops,
jitters and confuses ground-truth boxes and injects false boxes at a
configurable rate.  Its detections are matched to ground truth before and
after the monitor filters them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import raster
from .monitor import batch_check, make_certificate
from .ontology import SignClass, ToleranceConfig
from .scenegen import DatasetManifest, Scene, Truth, scene_seed

TRUE_POSITIVE_SIM = "true-positive-sim"
INJECTED_FP = "injected-false-positive"
CLASS_CONFUSED = "class-confused"

FP_PLACEMENT_TRIES = 50
FRAGMENT_SHIFT = 0.6


@dataclass(frozen=True)
class Detection:
    bbox: tuple[float, float, float, float]
    cls: SignClass
    source: str = TRUE_POSITIVE_SIM


@dataclass(frozen=True)
class ErrorModel:
    """Detector error rates; ``bbox_jitter`` is a std-dev relative to box size."""

    miss_rate: float = 0.0
    fp_rate: float = 0.0
    confusion_rate: float = 0.0
    bbox_jitter: float = 0.0

    def __post_init__(self):
        for name in ("miss_rate", "confusion_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.fp_rate < 0:
            raise ValueError("fp_rate must be nonnegative")
        if self.bbox_jitter < 0:
            raise ValueError("bbox_jitter must be nonnegative")

    def to_dict(self):
        return asdict(self)


# rates under which the uncorrected controller lands near 0.8 precision
DEFAULT_ERROR_MODEL = ErrorModel(miss_rate=0.1, fp_rate=0.3, confusion_rate=0.05, bbox_jitter=0.03)


def _corners(b, mode):
    x, y, w, h = b
    if mode == "center":
        return x - w / 2, y - h / 2, x + w / 2, y + h / 2
    return x, y, x + w, y + h


def iou(a, b, mode: str = "center") -> float:
    """Intersection over union of two ``(x, y, w, h)`` boxes."""
    ax0, ay0, ax1, ay1 = _corners(a, mode)
    bx0, by0, bx1, by1 = _corners(b, mode)
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def _clamp_box(cx, cy, w, h, img_w, img_h):
    """Clamp a center box to the unit square, keeping at least one pixel."""
    w = min(max(w, 1.0 / img_w), 1.0)
    h = min(max(h, 1.0 / img_h), 1.0)
    cx = min(max(cx, w / 2), 1 - w / 2)
    cy = min(max(cy, h / 2), 1 - h / 2)
    return (cx, cy, w, h)


def _other_class(rng, cls):
    others = [c for c in SignClass if c is not cls]
    return others[int(rng.integers(len(others)))]


def simulate_controller(scene: Scene, em: ErrorModel, seed: int = 0) -> list[Detection]:
    """Detections for one scene under the error model, deterministic in ``(scene_seed, seed)``."""
    rng = np.random.default_rng([scene.scene_seed, seed])
    img_h, img_w = scene.image.shape[:2]
    dets = []
    for t in scene.truths:
        if rng.random() < em.miss_rate:
            continue
        cx, cy, w, h = t.bbox
        j = em.bbox_jitter
        if j > 0:
            cx += rng.normal(0, j) * w
            cy += rng.normal(0, j) * h
            w *= math.exp(rng.normal(0, j))
            h *= math.exp(rng.normal(0, j))
        box = _clamp_box(cx, cy, w, h, img_w, img_h)
        if rng.random() < em.confusion_rate:
            dets.append(Detection(box, _other_class(rng, t.cls), CLASS_CONFUSED))
        else:
            dets.append(Detection(box, t.cls, TRUE_POSITIVE_SIM))

    for _ in range(int(rng.poisson(em.fp_rate))):
        box = None
        if rng.random() < 0.5:
            box = _background_box(rng, scene.truths, img_w, img_h)
            if box is not None:
                cls = list(SignClass)[int(rng.integers(3))]
        if box is None:
            box, cls = _fragment_box(rng, scene.truths, img_w, img_h)
        dets.append(Detection(box, cls, INJECTED_FP))
    return dets


def _background_box(rng, truths, img_w, img_h):
    """A sign-sized box that does not touch any ground-truth box."""
    sides = [t.bbox[2] * img_w for t in truths]
    lo, hi = min(sides), max(sides)
    for _ in range(FP_PLACEMENT_TRIES):
        side = rng.uniform(lo, hi)
        w, h = side / img_w, side / img_h
        if w >= 1 or h >= 1:
            continue
        cx = rng.uniform(w / 2, 1 - w / 2)
        cy = rng.uniform(h / 2, 1 - h / 2)
        if all(iou((cx, cy, w, h), t.bbox) == 0.0 for t in truths):
            return (cx, cy, w, h)
    return None


def _fragment_box(rng, truths, img_w, img_h):
    """A shifted box catching part of a sign, labelled with a wrong class."""
    t = truths[int(rng.integers(len(truths)))]
    cx, cy, w, h = t.bbox
    sx, sy = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)][int(rng.integers(8))]
    box = _clamp_box(cx + sx * FRAGMENT_SHIFT * w, cy + sy * FRAGMENT_SHIFT * h, w, h, img_w, img_h)
    return box, _other_class(rng, t.cls)


@dataclass
class MatchTable:
    pairs: list[tuple[int, int, float]]
    n_detections: int
    n_truths: int

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return self.n_detections - self.tp

    @property
    def fn(self) -> int:
        return self.n_truths - self.tp

    def matched_detections(self) -> set[int]:
        return {d for d, _, _ in self.pairs}


def match_detections(dets: list[Detection], truths: list[Truth], iou_threshold: float = 0.5) -> MatchTable:
    """Greedy one-to-one matching in descending IoU over same-class pairs."""
    if not 0 < iou_threshold <= 1:
        raise ValueError("iou_threshold must lie in (0, 1]")
    cand = []
    for i, d in enumerate(dets):
        for j, t in enumerate(truths):
            if d.cls is t.cls:
                v = iou(d.bbox, t.bbox)
                if v >= iou_threshold:
                    cand.append((-v, i, j))
    cand.sort()
    used_d, used_t, pairs = set(), set(), []
    for neg, i, j in cand:
        if i not in used_d and j not in used_t:
            used_d.add(i)
            used_t.add(j)
            pairs.append((i, j, -neg))
    return MatchTable(pairs, len(dets), len(truths))


def _round2(x: float) -> float:
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class MetricsReport:
    detected: int
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / self.detected if self.detected else 1.0

    @property
    def recall(self) -> float:
        total = self.tp + self.fn
        return self.tp / total if total else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def rounded(self) -> dict:
        """Two-decimal presentation; F1 is formed from the rounded precision and recall."""
        p, r = _round2(self.precision), _round2(self.recall)
        f1 = _round2(2 * p * r / (p + r)) if p + r > 0 else 0.0
        return {"precision": p, "recall": r, "f1": f1}

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "rounded": self.rounded(),
        }


def compute_metrics(matches=None, *, tp=None, fp=None, fn=None) -> MetricsReport:
    """Aggregate match tables, or raw ``tp``/``fp``/``fn`` counts, into a report."""
    if matches is not None:
        tp = sum(m.tp for m in matches)
        fp = sum(m.fp for m in matches)
        fn = sum(m.fn for m in matches)
    if tp is None or fp is None or fn is None:
        raise ValueError("need match tables or tp, fp and fn counts")
    return MetricsReport(tp + fp, tp, fp, fn)


@dataclass
class ExperimentResult:
    without: MetricsReport
    with_monitor: MetricsReport
    latency_us: list[int] = field(repr=False)
    scenes: int = 0
    rejected_by_reason: dict = field(default_factory=dict)
    fp_by_source: dict = field(default_factory=dict)

    @property
    def fp_removed(self) -> float:
        if self.without.fp == 0:
            return 1.0
        return (self.without.fp - self.with_monitor.fp) / self.without.fp

    @property
    def tp_retained(self) -> float:
        if self.without.tp == 0:
            return 1.0
        return self.with_monitor.tp / self.without.tp

    def latency_summary(self) -> dict | None:
        if not self.latency_us:
            return None
        lat = np.asarray(self.latency_us, dtype=np.float64)
        return {"p50": int(np.percentile(lat, 50)), "p95": int(np.percentile(lat, 95))}

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "without": self.without.to_dict(),
            "with": self.with_monitor.to_dict(),
            "latency_us": self.latency_summary() if timing else None,
            "scenes": self.scenes,
            "fp_removed": self.fp_removed,
            "tp_retained": self.tp_retained,
            "rejected_by_reason": dict(sorted(self.rejected_by_reason.items())),
            "fp_by_source": {k: dict(sorted(v.items())) for k, v in sorted(self.fp_by_source.items())},
        }

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"


def run_experiment(
    manifest: DatasetManifest,
    em: ErrorModel,
    cfg: ToleranceConfig | None = None,
    seed: int = 0,
    iou_threshold: float = 0.5,
    workers: int = 1,
) -> ExperimentResult:
    cfg = cfg or ToleranceConfig()
    if manifest.root is None:
        raise ValueError("manifest has no dataset root to read scenes from")
    raw_tables, kept_tables, latency = [], [], []
    reasons, fp_src = {}, {"without": {}, "with": {}}
    for idx, entry in enumerate(manifest.entries):
        image = raster.read_image(manifest.root / entry.image)
        scene = Scene(image, entry.truths, scene_seed(manifest.config.master_seed, idx))
        dets = simulate_controller(scene, em, seed)
        certs = [make_certificate(image, d.cls, d.bbox) for d in dets]
        verdicts = batch_check(certs, cfg, workers)
        latency.extend(v.elapsed_us for v in verdicts)
        for v in verdicts:
            if not v.accepted:
                reasons[v.reason] = reasons.get(v.reason, 0) + 1

        raw = match_detections(dets, entry.truths, iou_threshold)
        kept = [d for d, v in zip(dets, verdicts) if v.accepted]
        filt = match_detections(kept, entry.truths, iou_threshold)
        raw_tables.append(raw)
        kept_tables.append(filt)
        _count_fp_sources(fp_src["without"], dets, raw)
        _count_fp_sources(fp_src["with"], kept, filt)

    return ExperimentResult(
        compute_metrics(raw_tables),
        compute_metrics(kept_tables),
        latency,
        len(manifest.entries),
        reasons,
        fp_src,
    )


def _count_fp_sources(acc, dets, table):
    matched = table.matched_detections()
    for i, d in enumerate(dets):
        if i not in matched:
            acc[d.source] = acc.get(d.source, 0) + 1


def format_tables(result: ExperimentResult, timing: bool = True) -> str:
    """Plain-text raw counts and rounded metrics, without and with the monitor."""
    rows = [("without monitor", result.without), ("with monitor", result.with_monitor)]
    lines = [f"{'':16} {'Detected':>9} {'TP':>7} {'FP':>7} {'FN':>7}"]
    for name, m in rows:
        lines.append(f"{name:16} {m.detected:>9} {m.tp:>7} {m.fp:>7} {m.fn:>7}")
    lines.append("")
    lines.append(f"{'':16} {'Precision':>9} {'Recall':>7} {'F1':>7}")
    for name, m in rows:
        r = m.rounded()
        lines.append(f"{name:16} {r['precision']:>9.2f} {r['recall']:>7.2f} {r['f1']:>7.2f}")
    lat = result.latency_summary() if timing else None
    if lat is not None:
        lines.append("")
        lines.append(f"monitor latency: p50 {lat['p50']} us, p95 {lat['p95']} us")
    return "\n".join(lines) + "\n"
