"""Certificate front end of the runtime monitor.

The controller hands over a certificate (scene image, claimed class,
normalized bounding box).  The monitor crops the box, normalizes it to a
206x206 grayscale frame, binarizes it, extracts contours and asks the
ontology whether the claimed class is present.  Anything that goes wrong
along the way rejects the certificate.
"""

from __future__ import annotations

import base64
import binascii
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import raster
from .geometry import DegenerateContour, detect_contours
from .ontology import ConditionReport, SignClass, ToleranceConfig, check_membership

FRAME = 206

ACCEPTED = "accepted"
NO_CONTOUR_PAIR = "no-contour-pair"
CONDITION_FAILURE = "condition-failure"
PIPELINE_ERROR = "pipeline-error"


class CertificateError(ValueError):
    """Base class for certificates the monitor refuses to parse."""


class ParseError(CertificateError):
    pass


class SchemaError(CertificateError):
    pass


class BoundsError(CertificateError):
    pass


class UnknownClass(CertificateError):
    pass


@dataclass(frozen=True, eq=False)
class Certificate:
    """Claimed detection.

    ``image`` is a decoded array, PNG bytes, or a path; the latter two are
    decoded only when the certificate is checked.
    """

    image: np.ndarray | bytes | Path
    claimed_class: SignClass
    bbox: tuple[float, float, float, float]
    bbox_mode: str = "center"

    def load_image(self) -> np.ndarray:
        if isinstance(self.image, np.ndarray):
            return raster.check_image(self.image)
        if isinstance(self.image, (bytes, bytearray)):
            return raster.decode_png(bytes(self.image))
        return raster.read_image(self.image)


@dataclass(frozen=True)
class MonitorVerdict:
    accepted: bool
    reason: str
    failing_conditions: tuple[int, ...] = ()
    diagnostics: ConditionReport | None = None
    elapsed_us: int = 0
    detail: str = field(default="", compare=False)

    def to_json(self, timing: bool = True) -> dict:
        return {
            "accepted": self.accepted,
            "reason": self.reason,
            "failing_conditions": list(self.failing_conditions),
            "elapsed_us": self.elapsed_us if timing else 0,
        }


def _check_bbox(bbox):
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise SchemaError("bbox must be a list of four numbers")
    vals = []
    for v in bbox:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"bbox component {v!r} is not a number")
        v = float(v)
        if not math.isfinite(v) or not 0.0 <= v <= 1.0:
            raise BoundsError(f"bbox component {v!r} outside [0, 1]")
        vals.append(v)
    if vals[2] * vals[3] <= 0:
        raise BoundsError("bbox has zero area")
    return tuple(vals)


def make_certificate(image, claimed_class, bbox, bbox_mode="center") -> Certificate:
    try:
        cls = SignClass.parse(claimed_class)
    except KeyError:
        raise UnknownClass(f"unknown sign class {claimed_class!r}") from None
    if bbox_mode not in ("center", "corner"):
        raise SchemaError(f"bbox_mode must be 'center' or 'corner', got {bbox_mode!r}")
    return Certificate(image, cls, _check_bbox(bbox), bbox_mode)


def parse_certificate(doc: bytes | str, base_dir: str | Path | None = None) -> Certificate:
    """Parse the JSON certificate wire format.

    ``{"image": <base64 PNG> | {"path": str}, "class": str, "bbox": [x, y, w, h]}``
    with an optional ``"bbox_mode"`` of ``"center"`` (default) or ``"corner"``.
    Relative image paths resolve against ``base_dir``.
    """
    try:
        obj = json.loads(doc)
    except (ValueError, TypeError, RecursionError) as exc:
        raise ParseError(f"not a JSON document: {exc}") from None
    if not isinstance(obj, dict):
        raise SchemaError("certificate must be a JSON object")
    for key in ("image", "class", "bbox"):
        if key not in obj:
            raise SchemaError(f"missing field {key!r}")

    img = obj["image"]
    if isinstance(img, str):
        try:
            image = base64.b64decode(img, validate=True)
        except (binascii.Error, ValueError):
            raise ParseError("image is not valid base64") from None
    elif isinstance(img, dict) and isinstance(img.get("path"), str):
        image = Path(img["path"])
        if base_dir is not None and not image.is_absolute():
            image = Path(base_dir) / image
    else:
        raise SchemaError('image must be base64 PNG data or {"path": ...}')

    if not isinstance(obj["class"], str):
        raise SchemaError("class must be a string")
    return make_certificate(image, obj["class"], obj["bbox"], obj.get("bbox_mode", "center"))


def certificate_to_json(cert: Certificate, inline: bool = True) -> str:
    if isinstance(cert.image, np.ndarray):
        image = base64.b64encode(raster.encode_png(cert.image)).decode("ascii")
    elif isinstance(cert.image, (bytes, bytearray)):
        image = base64.b64encode(bytes(cert.image)).decode("ascii")
    elif inline:
        image = base64.b64encode(Path(cert.image).read_bytes()).decode("ascii")
    else:
        image = {"path": str(cert.image)}
    doc = {"image": image, "class": cert.claimed_class.value, "bbox": list(cert.bbox)}
    if cert.bbox_mode != "center":
        doc["bbox_mode"] = cert.bbox_mode
    return json.dumps(doc)


def prepare_frame(img: np.ndarray, bbox, bbox_mode: str = "center") -> np.ndarray:
    """Crop, resize to the 206x206 working frame and convert to grayscale."""
    crop = raster.crop_normalized(img, bbox, bbox_mode)
    return raster.to_grayscale(raster.resize_bilinear(crop, FRAME, FRAME))


def check_frame(gray: np.ndarray, cls: SignClass, cfg: ToleranceConfig):
    _, binary = raster.binarize_otsu(gray)
    contours = detect_contours(binary)
    h, w = gray.shape
    return check_membership(contours, cls, cfg, w, h)


def check_certificate(cert: Certificate, cfg: ToleranceConfig | None = None) -> MonitorVerdict:
    cfg = cfg or ToleranceConfig()
    t0 = time.perf_counter_ns()
    try:
        gray = prepare_frame(cert.load_image(), cert.bbox, cert.bbox_mode)
        verdict = check_frame(gray, cert.claimed_class, cfg)
    except (raster.ImageDecodeError, raster.DegenerateBox, DegenerateContour, TypeError, ValueError) as exc:
        elapsed = (time.perf_counter_ns() - t0) // 1000
        return MonitorVerdict(False, PIPELINE_ERROR, elapsed_us=elapsed, detail=str(exc))
    elapsed = (time.perf_counter_ns() - t0) // 1000

    if verdict.accepted:
        return MonitorVerdict(True, ACCEPTED, (), verdict.witness[2], elapsed)
    near = verdict.best_near_miss
    if near is None:
        return MonitorVerdict(False, NO_CONTOUR_PAIR, elapsed_us=elapsed)
    return MonitorVerdict(False, CONDITION_FAILURE, tuple(near.failing), near, elapsed)


def batch_check(certs: list[Certificate], cfg: ToleranceConfig | None = None, workers: int = 1) -> list[MonitorVerdict]:
    """Check certificates in input order; ``workers > 1`` fans out over threads."""
    if workers <= 1 or len(certs) < 2:
        return [check_certificate(c, cfg) for c in certs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: check_certificate(c, cfg), certs))
