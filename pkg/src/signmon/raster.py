"""Image handling on plain uint8 numpy arrays.

A grayscale image is an ``(h, w)`` array and a color image an ``(h, w, 3)``
RGB array; binary images are ``(h, w)`` bool arrays.  Operations never
modify their inputs.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from . import kernels

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

PERTURBATION_KINDS = ("horizontal-flip", "salt-pepper", "scale-roundtrip", "box-blur", "brightness")


class DegenerateBox(ValueError):
    """A bounding box that covers no pixel after clamping."""


class ImageDecodeError(ValueError):
    pass


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise TypeError(f"expected uint8 pixels, got {img.dtype}")
    if img.ndim == 2 or (img.ndim == 3 and img.shape[2] in (1, 3)):
        if img.shape[0] >= 1 and img.shape[1] >= 1:
            return img
    raise ValueError(f"not an image shape: {img.shape}")


def _as3(img):
    return img[:, :, None] if img.ndim == 2 else img


def _like(out3, img):
    return out3[:, :, 0] if img.ndim == 2 else out3


def to_grayscale(img: np.ndarray) -> np.ndarray:
    img = check_image(img)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    r, g, b = (img[:, :, c].astype(np.float64) for c in range(3))
    luma = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    return np.floor(luma + 0.5).astype(np.uint8)


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resampling with pixel-center alignment and edge clamping."""
    img = check_image(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be at least 1x1")
    if img.shape[1] == out_w and img.shape[0] == out_h:
        return img.copy()
    out = kernels.resize_bilinear(np.ascontiguousarray(_as3(img)), out_h, out_w)
    return _like(out, img)


def crop_bounds(shape, bbox, mode="center"):
    """Pixel bounds ``(x0, y0, x1, y1)`` (exclusive ends) of a normalized box.

    A pixel belongs to the crop when its center lies inside the box; the result
    is clamped to the image.
    """
    h, w = shape[:2]
    bx, by, bw, bh = (float(v) for v in bbox)
    if mode == "center":
        left, top = bx - bw / 2, by - bh / 2
    elif mode == "corner":
        left, top = bx, by
    else:
        raise ValueError(f"unknown bbox mode {mode!r}")
    x0 = math.ceil(left * w - 0.5)
    x1 = math.ceil((left + bw) * w - 0.5)
    y0 = math.ceil(top * h - 0.5)
    y1 = math.ceil((top + bh) * h - 0.5)
    x0, x1 = max(x0, 0), min(x1, w)
    y0, y1 = max(y0, 0), min(y1, h)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateBox(f"box {tuple(bbox)} covers no pixel of a {w}x{h} image")
    return x0, y0, x1, y1


def crop_normalized(img: np.ndarray, bbox, mode: str = "center") -> np.ndarray:
    img = check_image(img)
    x0, y0, x1, y1 = crop_bounds(img.shape, bbox, mode)
    return img[y0:y1, x0:x1].copy()


def otsu_threshold(gray: np.ndarray) -> int:
    return int(kernels.otsu_threshold(np.ascontiguousarray(gray)))


def binarize_otsu(gray: np.ndarray) -> tuple[int, np.ndarray]:
    """Otsu binarization; foreground is every sample strictly above the threshold.

    Ties between equally good thresholds go to the smallest one, and a
    single-valued image thresholds at its own value (empty foreground).
    """
    gray = check_image(gray)
    if gray.ndim != 2:
        raise ValueError("binarize_otsu expects a grayscale image")
    t = otsu_threshold(gray)
    return t, gray > t


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    value: float | None = None

    def __post_init__(self):
        k, v = self.kind, self.value
        if k not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation {k!r}")
        if k == "salt-pepper" and not (v is not None and 0 < v < 1):
            raise ValueError("salt-pepper level must lie in (0, 1)")
        if k == "scale-roundtrip" and not (v is not None and int(v) == v and v >= 1):
            raise ValueError("scale-roundtrip side must be a positive integer")
        if k == "box-blur" and not (v is not None and int(v) == v and v >= 3 and int(v) % 2 == 1):
            raise ValueError("box-blur kernel must be odd and at least 3")
        if k == "brightness" and not (v is not None and v > 0):
            raise ValueError("brightness factor must be positive")

    def to_json(self):
        return {"kind": self.kind, "value": self.value}


def flip_horizontal(img):
    return img[:, ::-1].copy()


def salt_pepper(img, level, seed):
    rng = np.random.default_rng(seed)
    h, w = img.shape[:2]
    hit = rng.random((h, w)) < level
    white = rng.random((h, w)) < 0.5
    out = img.copy()
    out[hit & white] = 255
    out[hit & ~white] = 0
    return out


def scale_roundtrip(img, side):
    h, w = img.shape[:2]
    return resize_bilinear(resize_bilinear(img, side, side), w, h)


def box_blur(img, k):
    img = check_image(img)
    return _like(kernels.box_blur(np.ascontiguousarray(_as3(img)), int(k)), img)


def adjust_brightness(img, factor):
    return np.clip(np.floor(img * float(factor) + 0.5), 0, 255).astype(np.uint8)


def apply_perturbation(img: np.ndarray, spec: PerturbationSpec, seed=None) -> np.ndarray:
    img = check_image(img)
    if spec.kind == "horizontal-flip":
        return flip_horizontal(img)
    if spec.kind == "salt-pepper":
        return salt_pepper(img, spec.value, seed)
    if spec.kind == "scale-roundtrip":
        return scale_roundtrip(img, int(spec.value))
    if spec.kind == "box-blur":
        return box_blur(img, int(spec.value))
    return adjust_brightness(img, spec.value)


def _to_pil(img):
    img = check_image(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    return PILImage.fromarray(np.ascontiguousarray(img))


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    try:
        with PILImage.open(io.BytesIO(data)) as im:
            return _from_pil(im)
    except Exception as exc:  # Pillow raises a zoo of types on bad input
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def read_image(path) -> np.ndarray:
    try:
        with PILImage.open(path) as im:
            return _from_pil(im)
    except Exception as exc:
        raise ImageDecodeError(f"cannot read image {path}: {exc}") from exc


def _from_pil(im):
    if im.mode not in ("L", "RGB"):
        im = im.convert("RGB")
    return np.array(im, dtype=np.uint8)


def write_image(path, img: np.ndarray) -> None:
    _to_pil(img).save(path, format="PNG", compress_level=1)
