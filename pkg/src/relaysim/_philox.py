"""Philox4x32-10 counter-based generator, vectorised over (trial, ordinal).

Counter words are ``(ordinal, index_lo, index_hi, 0)`` and the key is the
64-bit master seed split into two 32-bit words, so every output block is a
pure function of ``(seed, index, ordinal)``.
"""

import math

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_TWO_PI = 2.0 * math.pi
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(inline="always")
def _block(k0, k1, c0, c1, c2, c3):
    for r in range(10):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _S32) ^ c1 ^ k0, p1 & _MASK, (p0 >> _S32) ^ c3 ^ k1, p0 & _MASK
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True)
def philox_words(k0, k1, index, ordinal):
    """Raw 32-bit output words, shape ``(len(index), len(ordinal), 4)``."""
    out = np.empty((index.shape[0], ordinal.shape[0], 4), dtype=np.uint32)
    for i in range(index.shape[0]):
        t = index[i]
        for j in range(ordinal.shape[0]):
            w = _block(k0, k1, ordinal[j], t & _MASK, t >> _S32, np.uint64(0))
            for q in range(4):
                out[i, j, q] = w[q]
    return out


@nb.njit(cache=True, nogil=True)
def philox_gaussian(k0, k1, index, ordinal):
    """One unit-power circular complex Gaussian per block (Box-Muller).

    The two 53-bit uniforms of a block come from word pairs (0, 1) and
    (2, 3).
    """
    out = np.empty((index.shape[0], ordinal.shape[0]), dtype=np.complex128)
    for i in range(index.shape[0]):
        t = index[i]
        for j in range(ordinal.shape[0]):
            w0, w1, w2, w3 = _block(k0, k1, ordinal[j], t & _MASK, t >> _S32, np.uint64(0))
            u1 = ((w0 >> np.uint64(5)) * np.uint64(67108864) + (w1 >> np.uint64(6))) * _INV53
            u2 = ((w2 >> np.uint64(5)) * np.uint64(67108864) + (w3 >> np.uint64(6))) * _INV53
            # 1 - u1 lies in (0, 1], keeping the log finite
            r = math.sqrt(-math.log(1.0 - u1))
            out[i, j] = complex(r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2))
    return out
