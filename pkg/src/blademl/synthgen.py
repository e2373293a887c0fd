"""Seeded synthetic blade-image corpus with injectable defect classes.

Stands in for a private drone-survey image set so the whole pipeline can be
exercised end to end.  Determinism is the core contract: every random draw
comes from SplitMix64 in a documented fixed order (background noise
row-major, then defect parameters, then defect pixels), and each image gets
its own child generator seeded as seed XOR global index, so any image can be
regenerated alone and still match the full run byte for byte.

Rendering conventions, fixed so the classes are recoverable by both the
classifiers and the clustering stage:

* crack: one random-walk polyline starting anywhere on the face, heading
  uniform, 30-60 unit steps, per-step heading perturbation within +-pi/16,
  clamped to stay on the face; the stroke tapers, 1-3 px wide per step;
  painted pixels get values uniform in [30, 60].
* erosion: 3-8 disc patches (radius 5-15) laid out as a pitting row along
  the top edge of the face (leading-edge erosion), one patch per equal
  horizontal slot with jitter, centers within the top eighth of the image;
  40% of each disc's pixels darken by uniform [40, 80].
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .raster import Raster, write_ppm
from .rng import SplitMix64

CLASS_NAMES = ("healthy", "crack", "erosion")

_BG_TOP = 180.0
_BG_BOTTOM = 120.0
_NOISE_SPAN = 10.0
_CRACK_STEPS = (30, 60)
_CRACK_WIDTH = (1, 3)
_CRACK_VALUE = (30, 60)
_CRACK_TURN = math.pi / 16.0
_EROSION_PATCHES = (3, 8)
_EROSION_RADIUS = (5, 15)
_EROSION_DENSITY = 0.4
_EROSION_DARKEN = (40, 80)
_EROSION_BAND = 0.125
_EROSION_JITTER = 0.5


@dataclass
class GenConfig:
    """Corpus recipe: per-class image counts, seed, and image size."""

    counts: tuple[int, int, int]
    seed: int = 0
    width: int = 128
    height: int = 128

    def __post_init__(self):
        self.counts = tuple(int(c) for c in self.counts)
        if len(self.counts) != len(CLASS_NAMES):
            raise ValueError("counts must list healthy, crack, erosion")
        if any(c < 0 for c in self.counts):
            raise ValueError("class counts must be nonnegative")
        if sum(self.counts) < 1:
            raise ValueError("corpus must contain at least one image")
        if self.width < 16 or self.height < 16:
            raise ValueError("image size must be at least 16x16")


def _rand_int(rng: SplitMix64, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi] from one uniform draw."""
    span = hi - lo + 1
    j = int(rng.uniform() * span)
    if j >= span:
        j = span - 1
    return lo + j


def _background(rng: SplitMix64, width: int, height: int) -> np.ndarray:
    # Vertical gradient 180 -> 120 plus per-pixel noise in [-10, 10],
    # drawn row-major; round-half-up then clamp to [0, 255].
    rows = np.arange(height, dtype=np.float64)
    base = _BG_TOP + (_BG_BOTTOM - _BG_TOP) * rows / (height - 1)
    noise = rng.uniforms(height * width).reshape(height, width)
    noise = noise * (2.0 * _NOISE_SPAN) - _NOISE_SPAN
    gray = np.floor(base[:, None] + noise + 0.5)
    return np.clip(gray, 0.0, 255.0).astype(np.int64)


def _paint_crack(gray: np.ndarray, rng: SplitMix64) -> None:
    height, width = gray.shape
    # Parameters first: start point, heading, step count, then one
    # (heading perturbation, stroke width) pair per step.
    x = rng.uniform() * width
    y = rng.uniform() * height
    angle = rng.uniform() * (2.0 * math.pi)
    steps = _rand_int(rng, *_CRACK_STEPS)
    moves = [(rng.uniform(), _rand_int(rng, *_CRACK_WIDTH)) for _ in range(steps)]

    painted: set[tuple[int, int]] = set()

    def stamp(px: float, py: float, stroke: int) -> None:
        cx = math.floor(px)
        cy = math.floor(py)
        lo = -(stroke // 2)
        for dy in range(lo, lo + stroke):
            for dx in range(lo, lo + stroke):
                row, col = cy + dy, cx + dx
                if 0 <= row < height and 0 <= col < width:
                    painted.add((row, col))

    for turn, stroke in moves:
        angle += (turn * 2.0 - 1.0) * _CRACK_TURN
        x += math.cos(angle)
        y += math.sin(angle)
        # The walk stays on the blade face.
        x = min(max(x, 0.0), width - 1.0)
        y = min(max(y, 0.0), height - 1.0)
        stamp(x, y, stroke)

    # Pixel values last, in row-major order over the painted set.
    for row, col in sorted(painted):
        gray[row, col] = _rand_int(rng, *_CRACK_VALUE)


def _paint_erosion(gray: np.ndarray, rng: SplitMix64) -> None:
    height, width = gray.shape
    # All patch parameters first: count, then per patch radius and center.
    # Patches form a pitting row along the top edge (leading-edge erosion):
    # one per equal horizontal slot, jittered within half the slot, centers
    # in the top eighth of the face.
    patches = _rand_int(rng, *_EROSION_PATCHES)
    params = []
    slot = width / patches
    for i in range(patches):
        radius = _rand_int(rng, *_EROSION_RADIUS)
        cx = (i + 0.5) * slot + (rng.uniform() - 0.5) * (slot * _EROSION_JITTER)
        cy = rng.uniform() * (height * _EROSION_BAND)
        params.append((cx, cy, radius))
    # Then per patch, row-major over the disc: a selection draw per pixel
    # and a darkening amount for the selected 40%.
    for cx, cy, radius in params:
        row_lo = max(0, math.floor(cy - radius))
        row_hi = min(height - 1, math.ceil(cy + radius))
        col_lo = max(0, math.floor(cx - radius))
        col_hi = min(width - 1, math.ceil(cx + radius))
        rr = radius * radius
        for row in range(row_lo, row_hi + 1):
            for col in range(col_lo, col_hi + 1):
                if (col - cx) ** 2 + (row - cy) ** 2 <= rr:
                    if rng.uniform() < _EROSION_DENSITY:
                        amount = _rand_int(rng, *_EROSION_DARKEN)
                        gray[row, col] = max(int(gray[row, col]) - amount, 0)


def generate_image(label: str, rng: SplitMix64, width: int, height: int) -> Raster:
    """Render one synthetic blade image of the given class.

    The returned raster is 3-channel with equal channels (gray content in
    RGB carriers, matching the PPM output format).
    """
    if label not in CLASS_NAMES:
        raise ValueError(f"unknown class label {label!r}")
    gray = _background(rng, width, height)
    if label == "crack":
        _paint_crack(gray, rng)
    elif label == "erosion":
        _paint_erosion(gray, rng)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    return Raster(width, height, rgb.reshape(-1))


def generate_dataset(cfg: GenConfig, out_dir) -> list[tuple[str, str]]:
    """Write the corpus images plus a `labels.csv` into out_dir.

    Files are named `<class>_<global index>.ppm` in P6 format.  Each image
    uses an independent child generator seeded as cfg.seed XOR its global
    index.  Returns the (file name, label) pairs in generation order.
    """
    os.makedirs(out_dir, exist_ok=True)
    total = sum(cfg.counts)
    pad = max(3, len(str(total - 1)))
    entries: list[tuple[str, str]] = []
    index = 0
    for label, count in zip(CLASS_NAMES, cfg.counts):
        for _ in range(count):
            child = SplitMix64(cfg.seed ^ index)
            raster = generate_image(label, child, cfg.width, cfg.height)
            name = f"{label}_{index:0{pad}d}.ppm"
            with open(os.path.join(out_dir, name), "wb") as handle:
                handle.write(write_ppm(raster))
            entries.append((name, label))
            index += 1
    labels_path = os.path.join(out_dir, "labels.csv")
    with open(labels_path, "w", newline="") as handle:
        handle.write(f"# counts: {','.join(str(c) for c in cfg.counts)}\n")
        handle.write(f"# seed: {cfg.seed}\n")
        handle.write(f"# size: {cfg.width}x{cfg.height}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "label"])
        writer.writerows(entries)
    return entries
