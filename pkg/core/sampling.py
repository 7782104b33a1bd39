"""
Seedable random streams and the samplers used by the Monte Carlo solver

Streams are counter-based: a stream is identified by (master seed, stream id)
and the stream id of a child is a hash of the parent id and the child's key
(role, step index, chunk index, ...). Any draw therefore depends only on
where it sits in that tree, never on the order in which work is scheduled.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional
import hashlib
import logging

import numpy as np

from core.errors import SamplingError
from core.model import BackgroundKind, BackgroundSpec, KnowledgeParams, TradeParams

logger = logging.getLogger('wealthkin.sampling')

_MASK64 = (1 << 64) - 1
_MANTISSA_BITS = 53


class StreamRole(IntEnum):
    """First component of a substream key"""
    INIT_WEALTH = 1
    INIT_KNOWLEDGE = 2
    SELECTION = 3
    BACKGROUND = 4
    KAPPA = 5
    PAIRING = 6
    ETA = 7
    PARTICLES = 8


def derive_stream_id(parent: int, *key: int) -> int:
    """Stable 64-bit id of a child stream"""
    text = ":".join(str(int(k)) for k in (parent, *key))
    digest = hashlib.blake2b(text.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big", signed=False)


@dataclass(frozen=True)
class RngStream:
    """
    Value-like handle on one random stream

    Cheap to copy and split; every call to ``generator()`` restarts the
    stream at draw index 0.
    """
    seed: int
    stream_id: int = 0

    def substream(self, *key: int) -> 'RngStream':
        """Independent child stream addressed by an integer key"""
        return RngStream(self.seed, derive_stream_id(self.stream_id, *key))

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator positioned at the start of this stream"""
        seq = np.random.SeedSequence(entropy=[self.seed & _MASK64, self.stream_id & _MASK64])
        return np.random.Generator(np.random.Philox(seq))


def open_uniform(gen: np.random.Generator, size=None) -> np.ndarray:
    """
    Uniform draws on the open interval (0, 1)

    Nonzero multiples of 2**-53 below 1: a full 53-bit mantissa, and every
    value is exact in double precision.
    """
    k = gen.integers(1, 1 << _MANTISSA_BITS, size=size, dtype=np.int64)
    return k * (2.0 ** -_MANTISSA_BITS)


def sample_background(spec: BackgroundSpec, rng: RngStream, size: Optional[int] = None):
    """
    Draws from the background law C(z)

    Uniform(a) uses inverse transform on an open uniform, so draws lie in (0, a).
    """
    if spec.kind is BackgroundKind.POINT_MASS:
        if size is None:
            return spec.parameter
        return np.full(size, spec.parameter, dtype=float)

    a = spec.parameter
    z = a * open_uniform(rng.generator(), size)
    z = np.minimum(z, np.nextafter(a, 0.0))
    if size is None:
        return float(z)
    return z


def _two_point(amplitude: float, rng: RngStream, size: Optional[int]):
    signs = 2 * rng.generator().integers(0, 2, size=size) - 1
    values = amplitude * signs.astype(float) if size is not None else amplitude * float(signs)
    return values


def sample_kappa(kp: KnowledgeParams, rng: RngStream, size: Optional[int] = None):
    """Two-point knowledge noise: +/- sqrt(delta) with probability 1/2"""
    return _two_point(kp.kappa_amplitude, rng, size)


def sample_eta(tp: TradeParams, rng: RngStream, size: Optional[int] = None):
    """Two-point trade risk: +/- r with probability 1/2"""
    return _two_point(tp.risk, rng, size)


def sample_selection(probability: float, rng: RngStream, size: int) -> np.ndarray:
    """Boolean mask of agents that interact this step"""
    if probability >= 1.0:
        return np.ones(size, dtype=bool)
    return rng.generator().random(size) < probability


def sample_disjoint_pairs(n: int, count: int, rng: RngStream,
                          exclude: Optional[int] = None) -> np.ndarray:
    """
    Draw ``count`` disjoint index pairs from range(n)

    Args:
        n: Population size
        count: Number of pairs
        rng: Stream used for the partial shuffle
        exclude: Optional index that must not be paired

    Returns:
        Integer array of shape (count, 2); no index appears twice

    Raises:
        SamplingError: if 2*count exceeds the available indices
    """
    available = n - (1 if exclude is not None else 0)
    if count < 0 or 2 * count > available:
        raise SamplingError(f"cannot draw {count} disjoint pairs from {available} agents")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)

    gen = rng.generator()
    if exclude is None:
        chosen = gen.choice(n, size=2 * count, replace=False)
    else:
        candidates = np.delete(np.arange(n, dtype=np.int64), exclude)
        chosen = gen.choice(candidates, size=2 * count, replace=False)
    return chosen.astype(np.int64).reshape(count, 2)
