"""Synthetic sign scenes with ground truth.

Sign faces are drawn to match the ontology directly: a dark disc carrying
two bright half-discs split by a gap band along a diameter at the class
angle.  Scenes paste one to four perturbed, rescaled faces onto a
procedural (or user supplied) background and record the exact boxes.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import raster
from .ontology import SignClass
from .raster import PerturbationSpec

log = logging.getLogger(__name__)

# fractions of the disc radius
INNER_RADIUS = 0.72
GAP_HALF_WIDTH = 0.10

PERTURBATION_LEVELS = {
    "horizontal-flip": (None,),
    "salt-pepper": (0.05, 0.075),
    "scale-roundtrip": (50, 100, 213, 416, 832),
    "box-blur": (3, 5, 7),
    "brightness": (0.5, 1.5),
}
PERTURBATION_ORDER = ("scale-roundtrip", "horizontal-flip", "brightness", "box-blur", "salt-pepper")

PLACEMENT_RETRIES = 200
SCENE_RETRIES = 8


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SignTemplate:
    cls: SignClass
    face: np.ndarray
    alpha: np.ndarray
    nominal_angle_deg: float


@dataclass(frozen=True, eq=False)
class Truth:
    bbox: tuple[float, float, float, float]
    cls: SignClass

    def to_json(self):
        return {"bbox": [round(v, 6) for v in self.bbox], "class": self.cls.value}

    @classmethod
    def from_json(cls, d):
        return cls(tuple(float(v) for v in d["bbox"]), SignClass.parse(d["class"]))


@dataclass(frozen=True, eq=False)
class Scene:
    image: np.ndarray
    truths: list[Truth]
    scene_seed: int
    perturbations: list[list[PerturbationSpec]] = field(default_factory=list)


@dataclass
class GenerationConfig:
    scenes: int = 100
    master_seed: int = 0
    background: str = "procedural"
    background_size: tuple[int, int] = (640, 360)
    sign_side_range: tuple[int, int] = (64, 144)
    perturbations: tuple[str, ...] = tuple(PERTURBATION_LEVELS)
    perturbation_probability: float = 0.5

    def __post_init__(self):
        self.background_size = tuple(int(v) for v in self.background_size)
        self.sign_side_range = tuple(int(v) for v in self.sign_side_range)
        self.perturbations = tuple(self.perturbations)
        unknown = set(self.perturbations) - set(PERTURBATION_LEVELS)
        if unknown:
            raise ValueError(f"unknown perturbation families: {sorted(unknown)}")
        lo, hi = self.sign_side_range
        if not 32 <= lo <= hi:
            raise ValueError("sign_side_range must satisfy 32 <= min <= max")
        if self.scenes < 0:
            raise ValueError("scenes must be nonnegative")
        bw, bh = self.background_size
        if hi >= min(bw, bh):
            raise ValueError("background must be larger than the largest sign")

    def to_dict(self):
        d = asdict(self)
        d["background_size"] = list(self.background_size)
        d["sign_side_range"] = list(self.sign_side_range)
        d["perturbations"] = list(self.perturbations)
        return d


@dataclass(frozen=True)
class ManifestEntry:
    image: str
    truths: list[Truth]


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    config: GenerationConfig
    root: Path | None = None

    @property
    def sign_count(self) -> int:
        return sum(len(e.truths) for e in self.entries)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"image": e.image, "truths": [t.to_json() for t in e.truths]})
            for e in self.entries
        ]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def load(cls, root) -> DatasetManifest:
        root = Path(root)
        cfg = GenerationConfig(**json.loads((root / "config.json").read_text()))
        entries = []
        with open(root / "manifest.jsonl") as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    entries.append(ManifestEntry(d["image"], [Truth.from_json(t) for t in d["truths"]]))
        return cls(entries, cfg, root)


def _supersampled_coverage(side, inside, ss=4):
    """Fraction of each pixel covered by ``inside(x, y)`` (coords centered on the face)."""
    r = (np.arange(side * ss) + 0.5) / ss - side / 2
    x, y = np.meshgrid(r, r)
    hit = inside(x, y).astype(np.float64)
    return hit.reshape(side, ss, side, ss).mean(axis=(1, 3))


@lru_cache(maxsize=32)
def _face_layout(cls: SignClass, side: int) -> tuple[np.ndarray, np.ndarray]:
    """Coverage of the whole disc and of the two bright half-discs."""
    radius = side / 2
    theta = math.radians(cls.expected_angle_deg)
    # image rows grow downward, so a visually rising diameter has dy < 0
    nx, ny = math.sin(theta), math.cos(theta)

    disc = _supersampled_coverage(side, lambda x, y: x * x + y * y <= radius * radius)
    inner_r = INNER_RADIUS * radius
    gap = GAP_HALF_WIDTH * radius
    halves = _supersampled_coverage(
        side,
        lambda x, y: (x * x + y * y <= inner_r * inner_r) & (np.abs(x * nx + y * ny) >= gap),
    )
    disc.setflags(write=False)
    halves.setflags(write=False)
    return disc, halves


def render_sign(cls: SignClass, side: int, seed=None) -> SignTemplate:
    """Draw a sign face of ``side`` pixels for ``cls``; the seed varies tint and contrast."""
    cls = SignClass.parse(cls)
    if side < 32:
        raise ValueError("sign side must be at least 32 pixels")
    rng = np.random.default_rng(seed)
    disc, halves = _face_layout(cls, int(side))

    dark = rng.uniform(18, 45) + rng.uniform(-6, 6, size=3)
    bright = rng.uniform(215, 250) + rng.uniform(-8, 8, size=3)
    face = dark[None, None, :] * (1 - halves[..., None]) + bright[None, None, :] * halves[..., None]
    face = np.clip(np.floor(face + 0.5), 0, 255).astype(np.uint8)
    return SignTemplate(cls, face, disc, cls.expected_angle_deg)


def procedural_background(width: int, height: int, seed=None) -> np.ndarray:
    """Sky-to-ground gradient, smooth value noise and a dark track-bed band."""
    rng = np.random.default_rng(seed)
    yy = np.linspace(0.0, 1.0, height)[:, None]
    top, bottom = rng.uniform(120, 175), rng.uniform(70, 120)
    base = top + (bottom - top) * yy + np.zeros((1, width))

    noise = np.zeros((height, width))
    for cell, amp in ((160, 28.0), (64, 14.0), (24, 6.0)):
        gh, gw = height // cell + 2, width // cell + 2
        grid = rng.uniform(-1, 1, size=(gh, gw))
        grid8 = np.clip((grid + 1) * 127.5, 0, 255).astype(np.uint8)
        up = raster.resize_bilinear(grid8, (gw - 1) * cell, (gh - 1) * cell)[:height, :width]
        noise += (up.astype(np.float64) / 127.5 - 1) * amp

    band_center = rng.uniform(0.65, 0.85) * height
    band_half = rng.uniform(0.02, 0.045) * height
    band = np.exp(-(((np.arange(height) - band_center) / band_half) ** 2))[:, None]
    gray = base + noise - 60 * band

    tint = rng.uniform(-10, 10, size=3)
    img = gray[..., None] + tint[None, None, :]
    return np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)


def sample_perturbations(rng, families=tuple(PERTURBATION_LEVELS), probability=0.5) -> list[PerturbationSpec]:
    """Independently include each family, each at one of its listed levels."""
    chosen = []
    for kind in PERTURBATION_ORDER:
        if kind not in families:
            continue
        if rng.random() < probability:
            levels = PERTURBATION_LEVELS[kind]
            chosen.append(PerturbationSpec(kind, levels[int(rng.integers(len(levels)))]))
    return chosen


def perturb_template(tpl: SignTemplate, side: int, specs, rng) -> tuple[np.ndarray, np.ndarray]:
    face = raster.resize_bilinear(tpl.face, side, side)
    alpha8 = np.clip(np.floor(tpl.alpha * 255 + 0.5), 0, 255).astype(np.uint8)
    alpha8 = raster.resize_bilinear(alpha8, side, side)
    for spec in specs:
        if spec.kind == "horizontal-flip":
            alpha8 = raster.flip_horizontal(alpha8)
        face = raster.apply_perturbation(face, spec, int(rng.integers(2**32)))
    return face, alpha8.astype(np.float64) / 255.0


def _overlaps(box, boxes):
    x0, y0, s = box
    return any(x0 < bx + bs and bx < x0 + s and y0 < by + bs and by < y0 + s for bx, by, bs in boxes)


def compose_scene(
    background: np.ndarray,
    templates: list[SignTemplate],
    count: int,
    seed=None,
    side_range=(64, 144),
    families=tuple(PERTURBATION_LEVELS),
    perturbation_probability=0.5,
) -> Scene:
    """Paste ``count`` perturbed signs at random non-overlapping positions."""
    if not 1 <= count <= 4:
        raise ValueError("count must be between 1 and 4")
    if not templates:
        raise ValueError("no templates to paste")
    rng = np.random.default_rng(seed)
    bg = raster.check_image(background)
    if bg.ndim == 2:
        bg = np.repeat(bg[:, :, None], 3, axis=2)
    h, w = bg.shape[:2]
    lo, hi = side_range
    if hi >= min(w, h):
        raise ValueError("background must be larger than the largest sign")

    out = bg.astype(np.float64)
    placed, truths, applied = [], [], []
    for _ in range(count):
        tpl = templates[int(rng.integers(len(templates)))]
        side = int(rng.integers(lo, hi + 1))
        for _attempt in range(PLACEMENT_RETRIES):
            x0 = int(rng.integers(0, w - side + 1))
            y0 = int(rng.integers(0, h - side + 1))
            if not _overlaps((x0, y0, side), placed):
                break
        else:
            raise PlacementError(f"could not place a {side}px sign without overlap")
        specs = sample_perturbations(rng, families, perturbation_probability)
        face, alpha = perturb_template(tpl, side, specs, rng)
        a = alpha[..., None]
        region = out[y0:y0 + side, x0:x0 + side]
        out[y0:y0 + side, x0:x0 + side] = region * (1 - a) + face * a
        placed.append((x0, y0, side))
        truths.append(Truth(((x0 + side / 2) / w, (y0 + side / 2) / h, side / w, side / h), tpl.cls))
        applied.append(specs)
    image = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    scene_seed = seed if isinstance(seed, int) else int(rng.integers(2**31))
    return Scene(image, truths, scene_seed, applied)


def _background_source(cfg: GenerationConfig):
    if cfg.background == "procedural":
        return None
    root = Path(cfg.background)
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
    if not files:
        raise FileNotFoundError(f"no background images in {root}")
    return files


def scene_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def make_scene(cfg: GenerationConfig, index: int, backgrounds=None) -> Scene:
    """Scene ``index`` of the dataset described by ``cfg``; retries with sub-seeds on placement failure."""
    bw, bh = cfg.background_size
    for attempt in range(SCENE_RETRIES):
        seed = scene_seed(cfg.master_seed, index if attempt == 0 else index + attempt * 1_000_003)
        rng = np.random.default_rng(seed)
        if backgrounds is None:
            bg = procedural_background(bw, bh, int(rng.integers(2**32)))
        else:
            bg = raster.read_image(backgrounds[int(rng.integers(len(backgrounds)))])
            if bg.ndim == 2:
                bg = np.repeat(bg[:, :, None], 3, axis=2)
            bg = raster.resize_bilinear(bg, bw, bh)
        templates = [render_sign(c, 160, int(rng.integers(2**32))) for c in SignClass]
        count = int(rng.integers(1, 5))
        try:
            scene = compose_scene(
                bg, templates, count, int(rng.integers(2**31)), cfg.sign_side_range,
                cfg.perturbations, cfg.perturbation_probability,
            )
        except PlacementError:
            log.debug("scene %d attempt %d: placement failed", index, attempt)
            continue
        return Scene(scene.image, scene.truths, seed, scene.perturbations)
    raise PlacementError(f"scene {index}: placement failed {SCENE_RETRIES} times")


def generate_dataset(cfg: GenerationConfig, out_dir) -> DatasetManifest:
    """Write ``scenes/NNNNNN.png``, ``manifest.jsonl`` and ``config.json`` under ``out_dir``."""
    out = Path(out_dir)
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    backgrounds = _background_source(cfg)
    entries = []
    for i in range(cfg.scenes):
        scene = make_scene(cfg, i, backgrounds)
        rel = f"scenes/{i:06d}.png"
        raster.write_image(out / rel, scene.image)
        entries.append(ManifestEntry(rel, scene.truths))
    manifest = DatasetManifest(entries, cfg, out)
    _atomic_write(out / "manifest.jsonl", manifest.to_jsonl())
    _atomic_write(out / "config.json", json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    log.info("wrote %d scenes with %d signs to %s", len(entries), manifest.sign_count, out)
    return manifest


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
