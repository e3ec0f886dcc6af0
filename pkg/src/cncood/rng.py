"""Deterministic counter-based random streams.

Every draw is a pure function of (seed, position): draw number k of a
stream is ``mix64(seed + (k+1)*GAMMA)`` where ``mix64`` is the splitmix64
finalizer.  There is no hidden state beyond the draw counter, so streams
are bit-identical across platforms and runs, can be replayed from any
position, and child streams derived from (seed, index) are statistically
independent for distinct indices.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # splitmix64 increment (odd, 2^64/phi)
_CHILD_SALT = 0x5851F42D4C957F2D
_CHILD_GAMMA = 0xD1B54A32D192ED03
_INV_2_53 = 1.0 / (1 << 53)

_U64_GAMMA = np.uint64(_GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64_int(z: int) -> int:
    """splitmix64 finalizer on a Python int (exact 64-bit wraparound)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on a uint64 array."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def _raw_block(seed: int, start: int, n: int) -> np.ndarray:
    """Draws start..start+n-1 of the stream with the given seed key."""
    positions = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(np.uint64(seed & _MASK64) + positions * _U64_GAMMA)


def child_seed(seed: int, index: int) -> int:
    """Seed key of child stream `index`; decorrelated from the parent draws."""
    return _mix64_int(((seed & _MASK64) ^ _CHILD_SALT) + (index + 1) * _CHILD_GAMMA)


def child_seed_array(seed: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized child_seed; bit-identical to the scalar version."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64((seed & _MASK64) ^ _CHILD_SALT)
        return _mix64_array(base + (idx + np.uint64(1)) * np.uint64(_CHILD_GAMMA))


def child_seed_array_from(seeds: np.ndarray, index: int) -> np.ndarray:
    """Child `index` of each of many parent seed keys at once."""
    with np.errstate(over="ignore"):
        base = np.asarray(seeds, dtype=np.uint64) ^ np.uint64(_CHILD_SALT)
        step = np.uint64(((index + 1) * _CHILD_GAMMA) & _MASK64)
        return _mix64_array(base + step)


def raw_at(seeds: np.ndarray, position: int) -> np.ndarray:
    """Draw at a fixed position of many streams at once (uint64 seeds)."""
    with np.errstate(over="ignore"):
        return _mix64_array(
            np.asarray(seeds, dtype=np.uint64)
            + np.uint64((position + 1) * _GAMMA & _MASK64)
        )


def uniform_from_raw(raw: np.ndarray) -> np.ndarray:
    """[0, 1) double from a raw draw; matches RngStream.uniform."""
    return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53


def integer_from_raw(raw: np.ndarray, n: int) -> np.ndarray:
    """{0..n-1} from a raw draw via multiply-high; matches RngStream.integer."""
    if not 1 <= n < 2**32:
        raise ValueError("integer_from_raw supports 1 <= n < 2**32")
    lo = raw & np.uint64(0xFFFFFFFF)
    hi = raw >> np.uint64(32)
    un = np.uint64(n)
    with np.errstate(over="ignore"):
        return ((hi * un + ((lo * un) >> np.uint64(32))) >> np.uint64(32)).astype(
            np.int64
        )


def normal_pair_from_raws(r0: np.ndarray, r1: np.ndarray):
    """Box-Muller pair from two raw draws; matches RngStream.normals(2)."""
    u1 = ((r0 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
    u2 = (r1 >> np.uint64(11)).astype(np.float64) * _INV_2_53
    rad = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return rad * np.cos(theta), rad * np.sin(theta)


class RngStream:
    """A replayable random stream identified by (seed, position)."""

    __slots__ = ("seed", "position")

    def __init__(self, seed: int, position: int = 0):
        self.seed = seed & _MASK64
        self.position = position

    def __repr__(self):
        return f"RngStream(seed={self.seed:#x}, position={self.position})"

    def child(self, index: int) -> "RngStream":
        return RngStream(child_seed(self.seed, index), 0)

    def next_u64(self) -> int:
        v = _mix64_int(self.seed + (self.position + 1) * _GAMMA)
        self.position += 1
        return v

    def u64_block(self, n: int) -> np.ndarray:
        block = _raw_block(self.seed, self.position, n)
        self.position += n
        return block

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * _INV_2_53
        return low + (high - low) * u

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1)."""
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def integer(self, n: int) -> int:
        """Uniform integer in {0, ..., n-1} via 128-bit multiply-high."""
        if n <= 0:
            raise ValueError("integer() needs n >= 1")
        return (self.next_u64() * n) >> 64

    def normals(self, n: int) -> np.ndarray:
        """n standard normals (Box-Muller; consumes 2*ceil(n/2) raw draws)."""
        m = (n + 1) // 2
        # shift into (0, 1] so log() is finite
        u1 = ((self.u64_block(m) >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (self.u64_block(m) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        pair = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return pair[:n]

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def poissons(self, lam: np.ndarray) -> np.ndarray:
        """Poisson draws, one per rate.

        Exact CDF inversion for rates < 30; rounded normal approximation
        above (chosen so every element consumes a fixed number of raw
        draws, keeping the stream layout independent of the rates).
        """
        lam = np.asarray(lam, dtype=np.float64)
        flat = lam.reshape(-1)
        n = flat.size
        u = self.uniforms(n)
        z = self.normals(n)
        out = np.empty(n, dtype=np.float64)

        small = flat < 30.0
        if small.any():
            ls = flat[small]
            us = u[small]
            p = np.exp(-ls)
            cdf = p.copy()
            count = (cdf < us).astype(np.int64)
            for i in range(1, 128):
                p = p * ls / i
                cdf = cdf + p
                count += cdf < us
            out[small] = count
        big = ~small
        if big.any():
            lb = flat[big]
            out[big] = np.maximum(0.0, np.floor(lb + np.sqrt(lb) * z[big] + 0.5))
        return out.reshape(lam.shape)
