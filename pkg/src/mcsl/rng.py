"""Counter-based Gaussian noise addressed by (seed, step, realization, node, ...).

Every variate is a pure function of its key, so results do not depend on call
order, chunking or thread count. A key is reduced to 64 uniform bits by
absorbing its fields through the SplitMix64 finalizer; the realization and
node indices are packed into one 64-bit counter. Normals come from the inverse
normal CDF applied to a single 52-bit uniform, one key per variate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_FINAL_SALT = 0x632BE59BD9B4E019

# stream tags keep differently-purposed draws on disjoint keys
NOISE = 0
KILL = 1
SUBSEED = 2

_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U_GAMMA = np.uint64(_GAMMA)
_U_SALT = np.uint64(_FINAL_SALT)
_S30, _S27, _S31, _S12, _S32 = (np.uint64(s) for s in (30, 27, 31, 12, 32))


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _S30)
    z = z * _U_M1
    z = z ^ (z >> _S27)
    z = z * _U_M2
    return z ^ (z >> _S31)


def stream_base(seed: int, n: int = 0, sub: int = 0, axis: int = 0, stream: int = NOISE) -> int:
    """Absorb the per-step key fields into a 64-bit base value."""
    h = _mix_int((seed & _MASK) ^ 0x5851F42D4C957F2D)
    for field in (stream, n, sub, axis):
        h = _mix_int((h + (field & _MASK) * _GAMMA + 0x2545F4914F6CDD1D) & _MASK)
    return h


def _counter(m, j) -> np.ndarray:
    m = np.asarray(m, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    return (m << _S32) | j


def bits(base: int, m, j) -> np.ndarray:
    """Uniform 64-bit words for realization index ``m`` and node index ``j`` (broadcast)."""
    c = _counter(m, j)
    with np.errstate(over="ignore"):
        z = _mix(np.uint64(base) + c * _U_GAMMA)
        return _mix(z ^ _U_SALT)


def _to_unit(z: np.ndarray) -> np.ndarray:
    # (k + 1/2) / 2^52 with k < 2^52 is exact in float64 and lies strictly inside (0, 1)
    return ((z >> _S12).astype(np.float64) + 0.5) * (2.0 ** -52)


def uniforms(base: int, m, j) -> np.ndarray:
    return _to_unit(bits(base, m, j))


def normals(base: int, m, j) -> np.ndarray:
    """Standard normal variates for the broadcast index arrays ``m`` and ``j``."""
    return ndtri(uniforms(base, m, j))


@dataclass(frozen=True)
class NoiseKey:
    """Address of one variate.

    ``m`` (realization) and ``j`` (node, or flattened 2D node) must fit in 32 bits.
    """

    seed: int
    n: int
    m: int
    j: int
    sub: int = 0
    axis: int = 0
    stream: int = NOISE

    def __post_init__(self):
        if not (0 <= self.m < 2**32 and 0 <= self.j < 2**32):
            raise ValueError("realization and node indices must lie in [0, 2**32)")

    def base(self) -> int:
        return stream_base(self.seed, self.n, self.sub, self.axis, self.stream)


def gaussian(key: NoiseKey) -> float:
    return float(normals(key.base(), key.m, key.j))


def uniform(key: NoiseKey) -> float:
    return float(uniforms(key.base(), key.m, key.j))


def brownian_increment(key: NoiseKey, dt: float) -> float:
    """Increment of the Brownian motion addressed by ``key`` over a step ``dt``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    return float(np.sqrt(dt)) * gaussian(key)


def derive_seed(seed: int, index: int, salt: int = 0) -> int:
    """Child seed for repetition ``index``; drawn from the reserved SUBSEED stream."""
    base = stream_base(seed, n=index, sub=salt, stream=SUBSEED)
    return int(bits(base, 0, 0))
