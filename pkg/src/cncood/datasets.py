"""Toy dataset generators and CIFAR-10 binary ingestion.

Labels are 1-based everywhere; class K+1 is reserved for synthetic OOD
samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream
from .tensor import ImageTensor


@dataclass(frozen=True)
class Point2Dataset:
    """A labeled 2D point cloud."""

    points: np.ndarray  # (n, 2) float64
    labels: np.ndarray  # (n,) int64, values in {1..K} or K+1

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        labs = np.ascontiguousarray(self.labels, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must be (n, 2), got {pts.shape}")
        if labs.shape != (pts.shape[0],):
            raise ValueError("points and labels must have equal length")
        if not np.all(np.isfinite(pts)):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    def __len__(self):
        return self.points.shape[0]

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) if len(self) else 0


@dataclass(frozen=True)
class LabeledImageSet:
    """Images with 1-based class labels; class_count is K (sans reject class)."""

    images: tuple
    labels: np.ndarray
    class_count: int = field(default=0)

    def __post_init__(self):
        imgs = tuple(self.images)
        labs = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labs.shape != (len(imgs),):
            raise ValueError("images and labels must have equal length")
        k = self.class_count or (int(labs.max()) if len(imgs) else 0)
        if len(imgs) and (labs.min() < 1 or labs.max() > k + 1):
            raise ValueError(f"labels must lie in 1..{k + 1}")
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "class_count", k)

    def __len__(self):
        return len(self.images)


def two_moons(n_per_class: int, noise_sigma: float, rng: RngStream) -> Point2Dataset:
    """Two interleaved semicircle arcs with isotropic Gaussian jitter.

    Moon 1 is (cos t, sin t) and moon 2 is (1 - cos t, 1 - sin t - 0.5)
    for t evenly spaced on [0, pi]; labels are 1 and 2.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    t = np.linspace(0.0, np.pi, n_per_class)
    moon1 = np.column_stack([np.cos(t), np.sin(t)])
    moon2 = np.column_stack([1.0 - np.cos(t), 1.0 - np.sin(t) - 0.5])
    pts = np.vstack([moon1, moon2])
    if noise_sigma > 0:
        pts = pts + noise_sigma * rng.normals(2 * n_per_class * 2).reshape(-1, 2)
    labels = np.repeat([1, 2], n_per_class)
    return Point2Dataset(pts, labels)


def gaussian_clusters_2d(
    k: int, n_per_class: int, centers, sigma: float, rng: RngStream
) -> Point2Dataset:
    """n_per_class isotropic Gaussian points around each center; labels 1..k."""
    centers = np.asarray(centers, dtype=np.float64)
    if k < 2 or centers.shape != (k, 2):
        raise ValueError(f"need k >= 2 centers of shape (k, 2), got {centers.shape}")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    noise = sigma * rng.normals(k * n_per_class * 2).reshape(k, n_per_class, 2)
    pts = (centers[:, None, :] + noise).reshape(-1, 2)
    labels = np.repeat(np.arange(1, k + 1), n_per_class)
    return Point2Dataset(pts, labels)


def uniform_ring(n: int, center, radius: float, rng: RngStream) -> np.ndarray:
    """n points uniform in angle on the circle of given center and radius."""
    theta = 2.0 * np.pi * rng.uniforms(n)
    center = np.asarray(center, dtype=np.float64)
    return center + radius * np.column_stack([np.cos(theta), np.sin(theta)])


_CIFAR_RECORD = 3073  # 1 label byte + 3 * 1024 channel-planar pixel bytes


def load_cifar10_binary(path) -> LabeledImageSet:
    """Parse a CIFAR-10 binary batch file into 32x32x3 unit-range tensors."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % _CIFAR_RECORD != 0:
        raise ValueError(
            f"{path}: size {len(blob)} is not a multiple of {_CIFAR_RECORD}"
        )
    n = len(blob) // _CIFAR_RECORD
    raw = np.frombuffer(blob, dtype=np.uint8).reshape(n, _CIFAR_RECORD)
    label_bytes = raw[:, 0]
    if label_bytes.size and label_bytes.max() > 9:
        raise ValueError(f"{path}: label byte {label_bytes.max()} out of range 0..9")
    planes = raw[:, 1:].reshape(n, 3, 32, 32)
    images = tuple(
        ImageTensor(planes[i].transpose(1, 2, 0).astype(np.float32) / 255.0)
        for i in range(n)
    )
    return LabeledImageSet(images, label_bytes.astype(np.int64) + 1, class_count=10)
