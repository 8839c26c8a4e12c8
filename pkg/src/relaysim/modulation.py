"""Gray-labelled M-PSK constellations and label-level XOR network coding.

Symbols are handled as integer indices into :attr:`Constellation.points`.
Point ``k`` sits at angle ``2*pi*k/M`` and carries the binary-reflected
Gray label ``k ^ (k >> 1)``, so cyclically adjacent points differ in one
bit and bitwise XOR of labels is closed over the constellation.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Constellation",
    "build_constellation",
    "detect_nearest",
    "xor_combine",
    "xor_decode",
]

MAX_ORDER = 64


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-energy M-PSK alphabet with Gray bit labels.

    Parameters
    ----------
    M : int
        Constellation order, a power of two in ``[2, 64]``.
    points : ndarray of complex
        ``points[k] = exp(2j*pi*k/M)``.
    labels : ndarray of int
        Integer value of the Gray label carried by point ``k``.
    """

    M: int
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    index_of_label: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self):
        return self.M.bit_length() - 1

    @property
    def label_strings(self):
        """Labels as fixed-width bit strings, e.g. ``['00', '01', '11', '10']``."""
        width = self.bits_per_symbol
        return [format(int(v), f"0{width}b") for v in self.labels]

    @property
    def g_psk(self):
        """The M-PSK SEP integral constant ``sin(pi/M)**2``."""
        return np.sin(np.pi / self.M) ** 2

    @property
    def zero_index(self):
        """Index of the point whose label is all zeros."""
        return int(self.index_of_label[0])

    def modulate(self, idx):
        return self.points[np.asarray(idx)]

    def _check_index(self, idx):
        idx = np.asarray(idx)
        if not np.issubdtype(idx.dtype, np.integer):
            raise ValueError(f"symbol indices must be integers, got {idx.dtype}")
        if np.any((idx < 0) | (idx >= self.M)):
            raise ValueError(f"symbol index out of range for M={self.M}")
        return idx

    def __repr__(self):
        return f"Constellation(M={self.M})"


def build_constellation(M):
    """Build the Gray-labelled M-PSK constellation of order `M`.

    Raises
    ------
    ValueError
        If `M` is not a power of two in ``[2, 64]``.
    """
    if isinstance(M, bool) or int(M) != M:
        raise ValueError(f"constellation order must be an integer, got {M!r}")
    M = int(M)
    if M < 2 or M > MAX_ORDER or M & (M - 1):
        raise ValueError(f"constellation order must be a power of two in [2, {MAX_ORDER}], got {M}")

    k = np.arange(M)
    angle = 2.0 * np.pi * k / M
    re, im = np.cos(angle), np.sin(angle)
    # exact zeros keep QPSK points on the axes so ties are genuine ties
    re[np.abs(re) < 1e-15] = 0.0
    im[np.abs(im) < 1e-15] = 0.0
    points = re + 1j * im

    labels = k ^ (k >> 1)
    index_of_label = np.empty(M, dtype=np.int64)
    index_of_label[labels] = k
    for arr in (points, labels, index_of_label):
        arr.setflags(write=False)
    return Constellation(M=M, points=points, labels=labels, index_of_label=index_of_label)


def detect_nearest(y, c, amplitude=1.0):
    """Minimum-distance detection of ``y`` against ``amplitude * c.points``.

    Works elementwise on arrays of observations. `amplitude` may be a
    scalar or an array broadcastable against `y`. Ties go to the smallest
    index.

    Returns
    -------
    ndarray of int64 (or int for scalar input)
    """
    y = np.asarray(y, dtype=complex)
    amp = np.asarray(amplitude)
    dist = np.abs(y[..., None] - amp[..., None] * c.points)
    idx = np.argmin(dist, axis=-1)
    return int(idx) if idx.ndim == 0 else idx


def xor_combine(a, b, c):
    """Index of the point labelled ``labels[a] XOR labels[b]``."""
    a = c._check_index(a)
    b = c._check_index(b)
    out = c.index_of_label[c.labels[a] ^ c.labels[b]]
    return int(out) if np.ndim(out) == 0 else out


def xor_decode(x, own, c):
    """Recover the partner's symbol from network-coded ``x`` and ``own``.

    XOR is its own inverse, so this is :func:`xor_combine` under the name
    used at the receiving node.
    """
    return xor_combine(x, own, c)
