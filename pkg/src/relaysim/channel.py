"""Rayleigh block-fading channels and Gaussian noise from counter-based streams.

A :class:`RandomStream` names a position in the draw space of a master
seed: ``(seed, index, offset)``. Draw ordinal ``offset + k`` of stream
``index`` is computed directly rather than by stepping a sequential
generator, so trials can be evaluated in any order, on any number of
workers, and still reproduce bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np

from . import _philox

__all__ = [
    "RandomStream",
    "UplinkChannel",
    "DownlinkChannels",
    "sample_complex_gaussian",
    "sample_uniform_symbols",
    "sample_uplink",
    "sample_downlink",
]

_U64 = 1 << 64
_MAX_ORDINAL = 1 << 32


@dataclass(frozen=True)
class RandomStream:
    """Immutable descriptor of a substream.

    `index` is usually the trial number. It may also be an integer array,
    in which case every sampler returns one row per index.
    """

    seed: int
    index: object = 0
    offset: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < _U64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        idx = np.asarray(self.index)
        if not np.issubdtype(idx.dtype, np.integer) or idx.ndim > 1:
            raise ValueError("stream index must be an integer or a 1-D integer array")
        if idx.size and (idx.min() < 0):
            raise ValueError("stream index must be non-negative")
        if self.offset < 0:
            raise ValueError("offset must be non-negative")

    def skip(self, n):
        """Stream positioned `n` draw ordinals further on."""
        return RandomStream(self.seed, self.index, self.offset + n)

    def at(self, offset):
        return RandomStream(self.seed, self.index, offset)

    @property
    def _key(self):
        s = int(self.seed)
        return np.uint64(s & 0xFFFFFFFF), np.uint64(s >> 32)

    def _indices(self):
        return np.atleast_1d(np.asarray(self.index)).astype(np.uint64)

    def _ordinals(self, n):
        if self.offset + n > _MAX_ORDINAL:
            raise ValueError("draw ordinal exceeds 2**32")
        return np.arange(self.offset, self.offset + n, dtype=np.uint64)

    def _shape(self, out):
        return out[0] if np.ndim(self.index) == 0 else out

    def gaussian_blocks(self, n):
        """`n` unit-power complex Gaussians per index, one draw ordinal each."""
        k0, k1 = self._key
        out = _philox.philox_gaussian(k0, k1, self._indices(), self._ordinals(n))
        return self._shape(out)

    def word_blocks(self, n):
        """Raw Philox output: four uint32 words per draw ordinal."""
        k0, k1 = self._key
        out = _philox.philox_words(k0, k1, self._indices(), self._ordinals(n))
        return self._shape(out)


@dataclass(frozen=True, eq=False)
class UplinkChannel:
    """Node-to-relay gains ``h_AR`` and ``h_BR``, each of length N."""

    h_AR: np.ndarray
    h_BR: np.ndarray

    @property
    def H(self):
        """The N x 2 matrix ``[h_AR h_BR]`` (leading batch axes kept)."""
        return np.stack([self.h_AR, self.h_BR], axis=-1)

    @property
    def N(self):
        return self.h_AR.shape[-1]


@dataclass(frozen=True, eq=False)
class DownlinkChannels:
    """Relay-to-node gains ``h_RA`` and ``h_RB``, each of length N."""

    h_RA: np.ndarray
    h_RB: np.ndarray

    @property
    def N(self):
        return self.h_RA.shape[-1]

    def swapped(self):
        return DownlinkChannels(self.h_RB, self.h_RA)


def sample_complex_gaussian(n, variance, stream):
    """Draw `n` i.i.d. CN(0, `variance`) values from `stream`.

    Real and imaginary parts are independent N(0, variance/2). Consumes
    draw ordinals ``stream.offset .. stream.offset + n - 1``.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return np.sqrt(variance) * stream.gaussian_blocks(n)


def sample_uniform_symbols(n, M, stream):
    """Draw `n` pairs of equiprobable symbol indices in ``[0, M)``.

    Each draw ordinal yields two indices (the top bits of words 0 and 2),
    returned with a trailing axis of length 2.
    """
    bits = M.bit_length() - 1
    if M < 2 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    words = stream.word_blocks(n)[..., [0, 2]]
    return (words >> np.uint32(32 - bits)).astype(np.int64)


def sample_uplink(N, sigma0_sq, stream):
    """Rayleigh uplink ``(h_AR, h_BR)``; consumes 2N draw ordinals."""
    if N < 1:
        raise ValueError(f"antenna count must be at least 1, got {N}")
    h = sample_complex_gaussian(2 * N, sigma0_sq, stream)
    return UplinkChannel(h[..., :N], h[..., N:])


def sample_downlink(N, sigma0_sq, stream):
    """Rayleigh downlink ``(h_RA, h_RB)``; consumes 2N draw ordinals."""
    if N < 1:
        raise ValueError(f"antenna count must be at least 1, got {N}")
    h = sample_complex_gaussian(2 * N, sigma0_sq, stream)
    return DownlinkChannels(h[..., :N], h[..., N:])
