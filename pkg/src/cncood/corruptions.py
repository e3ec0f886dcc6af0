"""Severity-parameterized corruption operators for images and 2D points.

Each operator takes one strength parameter indexed by severity 1..5; the
per-severity values live in ``severity_tables.json`` (key = op name,
value = 5 numbers).  Image ops work on float64 (H, W, C) arrays in
[0, 1] and their output is clamped back to [0, 1]; stochastic ops draw
all randomness from their CorruptionSpec's RngStream, so equal inputs give
bit-identical outputs.

Severity table meaning per op:
  gaussian_noise     additive noise std dev
  shot_noise         photon count (lower = noisier)
  speckle_noise      multiplicative noise std dev
  defocus_blur       disk kernel radius in pixels
  motion_blur        line kernel length in pixels (odd)
  contrast           scale factor about the per-channel mean
  fog                plasma overlay intensity
  elastic_transform  displacement amplitude in pixels
  jpeg_quantize      JPEG quality (lower = blockier)
  pixelate           block side length in pixels
  jitter             isotropic Gaussian std dev (2D points)
  scale_warp         radial scale factor about the dataset centroid
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy import ndimage

from .rng import RngStream
from .tensor import ImageTensor

IMAGE_OPS = (
    "gaussian_noise",
    "shot_noise",
    "speckle_noise",
    "defocus_blur",
    "motion_blur",
    "contrast",
    "fog",
    "elastic_transform",
    "jpeg_quantize",
    "pixelate",
)
POINT_OPS = ("jitter", "scale_warp")

_SEVERITIES = (1, 2, 3, 4, 5)


def load_severity_tables(path=None) -> dict:
    """Severity config: op name -> 5 strength values (severity 1..5)."""
    if path is None:
        text = resources.files("cncood").joinpath("severity_tables.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    tables = json.loads(text)
    for op in IMAGE_OPS + POINT_OPS:
        if op not in tables or len(tables[op]) != 5:
            raise ValueError(f"severity table for {op!r} must list 5 values")
    return tables


_DEFAULT_TABLES = load_severity_tables()


@dataclass(frozen=True)
class CorruptionSpec:
    op: str
    severity: int
    rng: RngStream

    def __post_init__(self):
        if self.severity not in _SEVERITIES:
            raise ValueError(f"severity must be in 1..5, got {self.severity}")
        if self.op not in IMAGE_OPS + POINT_OPS:
            raise KeyError(f"unregistered corruption op {self.op!r}")


def registry_list() -> list:
    """All op identifiers, image ops first, in stable documented order."""
    return list(IMAGE_OPS + POINT_OPS)


# ---------------------------------------------------------------- image ops


def _gaussian_noise(x, sigma, rng):
    return x + sigma * rng.normals(x.size).reshape(x.shape)


def _shot_noise(x, photons, rng):
    return rng.poissons(x * photons) / photons


def _speckle_noise(x, sigma, rng):
    return x + x * sigma * rng.normals(x.size).reshape(x.shape)


def _disk_kernel(radius: float, alias_blur: float = 0.5) -> np.ndarray:
    half = max(8, int(np.ceil(radius)) + 1)
    grid = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(grid, grid)
    disk = ((xx**2 + yy**2) <= radius**2).astype(np.float64)
    disk = ndimage.gaussian_filter(disk, sigma=alias_blur)
    return disk / disk.sum()


def _convolve_channels(x, kernel):
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        out[:, :, c] = ndimage.convolve(x[:, :, c], kernel, mode="reflect")
    return out


def _defocus_blur(x, radius, rng):
    return _convolve_channels(x, _disk_kernel(radius))


def _motion_blur(x, length, rng):
    angle = rng.uniform(-np.pi / 4, np.pi / 4)
    length = int(length)
    half = (length - 1) / 2.0
    kernel = np.zeros((length, length), dtype=np.float64)
    # rasterize the oriented segment with bilinear splatting
    for t in np.linspace(-half, half, 2 * length + 1):
        px = half + t * np.cos(angle)
        py = half + t * np.sin(angle)
        x0, y0 = int(np.floor(px)), int(np.floor(py))
        fx, fy = px - x0, py - y0
        for dy, wy in ((0, 1 - fy), (1, fy)):
            for dx, wx in ((0, 1 - fx), (1, fx)):
                if 0 <= y0 + dy < length and 0 <= x0 + dx < length:
                    kernel[y0 + dy, x0 + dx] += wy * wx
    kernel /= kernel.sum()
    return _convolve_channels(x, kernel)


def _contrast(x, factor, rng):
    mean = x.mean(axis=(0, 1), keepdims=True)
    return (x - mean) * factor + mean


def _plasma_fractal(mapsize: int, rng: RngStream, decay: float = 2.5) -> np.ndarray:
    """Diamond-square heightmap on a power-of-two grid, scaled to [0, 1]."""
    arr = np.zeros((mapsize, mapsize), dtype=np.float64)
    step = mapsize
    wibble = 100.0

    def wibbled(shape):
        n = int(np.prod(shape))
        return wibble * (rng.uniforms(n).reshape(shape) * 2.0 - 1.0)

    while step >= 2:
        half = step // 2
        # squares: center of each step-sized cell
        corners = arr[0:mapsize:step, 0:mapsize:step]
        acc = corners + np.roll(corners, -1, axis=0)
        acc = acc + np.roll(acc, -1, axis=1)
        arr[half:mapsize:step, half:mapsize:step] = acc / 4.0 + wibbled(acc.shape)
        # diamonds: edge midpoints, wrapping at the borders
        centers = arr[half:mapsize:step, half:mapsize:step]
        cup = centers + np.roll(centers, 1, axis=0)
        cleft = centers + np.roll(centers, 1, axis=1)
        rup = arr[0:mapsize:step, 0:mapsize:step]
        arr[half:mapsize:step, 0:mapsize:step] = (
            cleft + rup + np.roll(rup, -1, axis=0)
        ) / 4.0 + wibbled(centers.shape)
        arr[0:mapsize:step, half:mapsize:step] = (
            cup + rup + np.roll(rup, -1, axis=1)
        ) / 4.0 + wibbled(centers.shape)
        step = half
        wibble /= decay

    arr -= arr.min()
    peak = arr.max()
    return arr / peak if peak > 0 else arr


def _fog(x, intensity, rng):
    size = 1
    while size < max(x.shape[0], x.shape[1]):
        size *= 2
    size = max(size, 2)
    plasma = _plasma_fractal(size, rng)[: x.shape[0], : x.shape[1]]
    max_val = x.max()
    out = x + intensity * plasma[:, :, None]
    return out * max_val / (max_val + intensity) if max_val > 0 else out


def _elastic_transform(x, alpha, rng):
    h, w = x.shape[:2]
    sigma = max(2.0, min(h, w) / 6.0)
    dx = ndimage.gaussian_filter(
        rng.uniforms(h * w).reshape(h, w) * 2.0 - 1.0, sigma, mode="reflect"
    )
    dy = ndimage.gaussian_filter(
        rng.uniforms(h * w).reshape(h, w) * 2.0 - 1.0, sigma, mode="reflect"
    )
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = [rows + alpha * dy, cols + alpha * dx]
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        out[:, :, c] = ndimage.map_coordinates(
            x[:, :, c], coords, order=1, mode="reflect"
        )
    return out


_DCT8 = np.zeros((8, 8))
for _j in range(8):
    for _k in range(8):
        _DCT8[_j, _k] = np.sqrt((1.0 if _j == 0 else 2.0) / 8.0) * np.cos(
            (2 * _k + 1) * _j * np.pi / 16.0
        )

_Q50 = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def _jpeg_quantize(x, quality, rng):
    """8x8 blockwise DCT quantization; not a standards-compliant codec."""
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    q = np.clip(np.floor((_Q50 * scale + 50.0) / 100.0), 1.0, 255.0)
    h, w = x.shape[:2]
    ph, pw = (-h) % 8, (-w) % 8
    padded = np.pad(x, ((0, ph), (0, pw), (0, 0)), mode="edge")
    hh, ww = padded.shape[:2]
    out = np.empty_like(padded)
    for c in range(x.shape[2]):
        blocks = padded[:, :, c].reshape(hh // 8, 8, ww // 8, 8) * 255.0 - 128.0
        coeff = np.einsum("ij,ajbk,lk->aibl", _DCT8, blocks, _DCT8)
        qq = q[None, :, None, :]
        coeff = np.round(coeff / qq) * qq
        rec = np.einsum("ji,ajbk,kl->aibl", _DCT8, coeff, _DCT8)
        out[:, :, c] = (rec.reshape(hh, ww) + 128.0) / 255.0
    return out[:h, :w]


def _pixelate(x, block, rng):
    """Replace each block x block tile by its mean (edge tiles may be partial)."""
    b = int(block)
    h, w = x.shape[:2]
    out = x.copy()
    for i in range(0, h, b):
        for j in range(0, w, b):
            tile = x[i : i + b, j : j + b]
            out[i : i + b, j : j + b] = tile.mean(axis=(0, 1), keepdims=True)
    return out


_IMAGE_FUNCS = {
    "gaussian_noise": _gaussian_noise,
    "shot_noise": _shot_noise,
    "speckle_noise": _speckle_noise,
    "defocus_blur": _defocus_blur,
    "motion_blur": _motion_blur,
    "contrast": _contrast,
    "fog": _fog,
    "elastic_transform": _elastic_transform,
    "jpeg_quantize": _jpeg_quantize,
    "pixelate": _pixelate,
}


def apply_corruption(x: ImageTensor, spec: CorruptionSpec, tables=None) -> ImageTensor:
    """Corrupted copy of x with the same dims, clamped to [0, 1]."""
    if spec.op not in _IMAGE_FUNCS:
        raise KeyError(f"unregistered image corruption {spec.op!r}")
    tables = _DEFAULT_TABLES if tables is None else tables
    param = tables[spec.op][spec.severity - 1]
    raw = _IMAGE_FUNCS[spec.op](x.data.astype(np.float64), param, spec.rng)
    return ImageTensor(np.clip(raw, 0.0, 1.0))


def corrupt_point_2d(p, spec: CorruptionSpec, center=(0.0, 0.0), tables=None):
    """2D point analog: jitter around p, or scale its offset from center."""
    tables = _DEFAULT_TABLES if tables is None else tables
    p = np.asarray(p, dtype=np.float64)
    if spec.op == "jitter":
        sigma = tables["jitter"][spec.severity - 1]
        return p + sigma * spec.rng.normals(2)
    if spec.op == "scale_warp":
        factor = tables["scale_warp"][spec.severity - 1]
        center = np.asarray(center, dtype=np.float64)
        return center + factor * (p - center)
    raise KeyError(f"unregistered point corruption {spec.op!r}")
