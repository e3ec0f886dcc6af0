"""Patch based convex combination: box sampling, patch mixing, 2D analog.

The mixed sample copies the sampled box from the second image into the
first; the box extent shrinks with the crop-area ratio lambda as
round(W * sqrt(1 - lambda)) per axis, and boxes are clipped to the image.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .datasets import LabeledImageSet
from .rng import RngStream
from .tensor import ImageTensor


@dataclass(frozen=True)
class CropBox:
    r_x: int
    r_y: int
    r_w: int
    r_h: int
    lam: float


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def box_extent(size: int, lam: float) -> int:
    """Box side length before clipping: round(size * sqrt(1 - lambda))."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return _round_half_up(size * np.sqrt(1.0 - lam))


def sample_box(w: int, h: int, lam: float, rng: RngStream) -> CropBox:
    """Uniform box position with lambda-controlled extent, clipped to bounds."""
    r_x = rng.integer(w)
    r_y = rng.integer(h)
    r_w = min(box_extent(w, lam), w - r_x)
    r_h = min(box_extent(h, lam), h - r_y)
    return CropBox(r_x, r_y, r_w, r_h, lam)


def apply_pbcc(x_a: ImageTensor, x_b: ImageTensor, box: CropBox) -> ImageTensor:
    """Copy the box region of x_b over x_a; everything else stays x_a."""
    if x_a.data.shape != x_b.data.shape:
        raise ValueError(
            f"image dims differ: {x_a.data.shape} vs {x_b.data.shape}"
        )
    out = x_a.data.copy()
    out[box.r_y : box.r_y + box.r_h, box.r_x : box.r_x + box.r_w] = x_b.data[
        box.r_y : box.r_y + box.r_h, box.r_x : box.r_x + box.r_w
    ]
    return ImageTensor(out)


def pbcc_2d(p1, p2, lam: float) -> np.ndarray:
    """Convex combination lam*p1 + (1-lam)*p2 of two points."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    return lam * p1 + (1.0 - lam) * p2


def label_pairs(labels) -> list:
    """Unordered pairs of distinct class labels, in sorted order."""
    present = sorted(set(int(v) for v in np.asarray(labels)))
    return list(itertools.combinations(present, 2))


def class_indices(labels) -> dict:
    """label -> array of sample indices carrying it."""
    labels = np.asarray(labels)
    return {int(v): np.flatnonzero(labels == v) for v in np.unique(labels)}


def pbcc_pairing(dataset: LabeledImageSet, lambda_range, rng: RngStream):
    """Infinite stream of PBCC samples labeled K+1.

    Cycles through the K-choose-2 label pairs; each emitted sample draws
    from its own child stream, so the stream is deterministic for a fixed
    seed and safe to generate in parallel.
    """
    pairs = label_pairs(dataset.labels)
    if not pairs:
        raise ValueError("pairing needs at least two classes with samples")
    by_class = class_indices(dataset.labels)
    lo, hi = lambda_range
    reject = dataset.class_count + 1
    for i in itertools.count():
        ya, yb = pairs[i % len(pairs)]
        r = rng.child(i)
        ia = by_class[ya][r.integer(len(by_class[ya]))]
        ib = by_class[yb][r.integer(len(by_class[yb]))]
        lam = r.uniform(lo, hi)
        img_a = dataset.images[ia]
        box = sample_box(img_a.width, img_a.height, lam, r)
        yield apply_pbcc(img_a, dataset.images[ib], box), reject
