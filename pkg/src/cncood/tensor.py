"""Image tensors with unit-interval intensities, plus raw/PPM file formats.

Raw tensor format: magic ``CNCT``, three little-endian uint32 dims
(width, height, channels), then width*height*channels little-endian
float32 values, row-major and channel-interleaved.
"""

from __future__ import annotations

import struct

import numpy as np

_RAW_MAGIC = b"CNCT"
_MAX_DIM = 2**31 - 1


class TensorFormatError(ValueError):
    """Raised on malformed raw-tensor or checkpoint files."""


class ImageTensor:
    """A width x height x channels array of intensities in [0, 1].

    Data is stored as a read-only float32 array of shape
    (height, width, channels); channels must be 1 or 3.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"expected (H, W, C) array, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {arr.shape[2]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        arr.setflags(write=False)
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def flatten(self) -> np.ndarray:
        """Row-major channel-interleaved float64 vector (MLP input layout)."""
        return self.data.reshape(-1).astype(np.float64)

    def __eq__(self, other):
        return (
            isinstance(other, ImageTensor)
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"ImageTensor({self.width}x{self.height}x{self.channels})"


def save_raw_tensor(t: ImageTensor, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_RAW_MAGIC)
        fh.write(struct.pack("<III", t.width, t.height, t.channels))
        fh.write(t.data.astype("<f4").tobytes())


def load_raw_tensor(path) -> ImageTensor:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _RAW_MAGIC:
        raise TensorFormatError(f"bad magic {blob[:4]!r} in {path}")
    if len(blob) < 16:
        raise TensorFormatError(f"truncated header in {path}")
    w, h, c = struct.unpack("<III", blob[4:16])
    if w > _MAX_DIM or h > _MAX_DIM or c > _MAX_DIM or w * h * c > 2**28:
        raise TensorFormatError(f"dimension overflow {(w, h, c)} in {path}")
    expect = 16 + 4 * w * h * c
    if len(blob) != expect:
        raise TensorFormatError(f"expected {expect} bytes, found {len(blob)} in {path}")
    values = np.frombuffer(blob, dtype="<f4", offset=16).reshape(h, w, c)
    return ImageTensor(values)


def export_ppm(t: ImageTensor, path) -> None:
    """Binary PPM (P6) for 3-channel images, PGM (P5) for 1-channel."""
    if t.channels == 3:
        header = f"P6\n{t.width} {t.height}\n255\n"
    elif t.channels == 1:
        header = f"P5\n{t.width} {t.height}\n255\n"
    else:  # unreachable for valid tensors, kept as the contract error
        raise ValueError(f"unsupported channel count {t.channels}")
    # round half-up so intensity 1.0 maps to byte 255 exactly
    payload = np.floor(t.data.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes())
