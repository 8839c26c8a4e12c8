"""Relay broadcast schemes and the matching receive chains at node A.

Three schemes are supported:

* ``TB``: analog network coding via maximum-ratio transmit beamforming,
  ``s_R = (v_B s_A + v_A s_B) / sqrt(2)`` with ``v_k = conj(h_Rk)/||h_Rk||``.
* ``MAXMIN_AS_BNC``: the XOR-coded symbol is sent from the single antenna
  whose weaker downlink gain is largest.
* ``STBC_BNC``: the XOR-coded symbol stream is Alamouti coded. Only N = 2
  is simulated explicitly; other N use the equivalent scalar channel with
  SNR ``||h_RA||**2 * zeta_S / N``.

All functions accept arrays with leading batch axes. Antenna indices are
zero-based.
"""

import enum

import numpy as np

from .exceptions import DegenerateChannelError
from .modulation import detect_nearest, xor_decode

__all__ = [
    "SchemeId",
    "maxmin_select",
    "maxmin_transmit",
    "tb_weights",
    "tb_precode",
    "node_receive_tb",
    "alamouti_encode",
    "alamouti_combine",
    "alamouti_decode",
    "stbc_equivalent_gain",
    "ostbc_effective_snr",
    "node_receive_bnc",
]


class SchemeId(enum.Enum):
    TB = "tb"
    MAXMIN_AS_BNC = "maxmin"
    STBC_BNC = "stbc"

    @property
    def is_bnc(self):
        return self is not SchemeId.TB

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            try:
                return cls[str(value).upper()]
            except KeyError:
                raise ValueError(f"unknown scheme {value!r}") from None


def maxmin_select(d):
    """Max-Min antenna choice ``argmax_i min(|h_iA|, |h_iB|)``.

    Ties go to the smallest index.
    """
    worst = np.minimum(np.abs(d.h_RA), np.abs(d.h_RB))
    j = np.argmax(worst, axis=-1)
    return int(j) if j.ndim == 0 else j


def maxmin_transmit(x, j, N, c, P=1.0):
    """Relay vector carrying point `x` at full power on antenna `j` only."""
    x = np.asarray(x)
    s_R = np.zeros(x.shape + (N,), dtype=complex)
    np.put_along_axis(s_R, np.asarray(j)[..., None], (np.sqrt(P) * c.points[x])[..., None], axis=-1)
    return s_R


def tb_weights(d):
    """MRT weight vectors ``(v_A, v_B)``.

    Raises
    ------
    DegenerateChannelError
        If either downlink vector has zero norm.
    """
    nA = np.linalg.norm(d.h_RA, axis=-1, keepdims=True)
    nB = np.linalg.norm(d.h_RB, axis=-1, keepdims=True)
    if np.any(nA == 0) or np.any(nB == 0):
        raise DegenerateChannelError("zero-norm downlink channel; MRT weights undefined")
    return np.conj(d.h_RA) / nA, np.conj(d.h_RB) / nB


def tb_precode(s_A, s_B, d, c, P=1.0):
    """Beamformed relay vector for detected symbols `s_A`, `s_B`.

    ``s_A`` rides on ``v_B`` (towards node B) and ``s_B`` on ``v_A``.
    """
    v_A, v_B = tb_weights(d)
    xA = np.sqrt(P) * c.points[np.asarray(s_A)][..., None]
    xB = np.sqrt(P) * c.points[np.asarray(s_B)][..., None]
    return (v_B * xA + v_A * xB) / np.sqrt(2.0)


def node_receive_tb(y_A, d, own, c, P=1.0):
    """Node A's ANC receiver: cancel the own-symbol term, then detect s_B.

    After cancellation the useful term is ``||h_RA|| sqrt(P/2) s_B``, a
    real positive gain, so detection is a plain nearest-point search.
    """
    v_A, v_B = tb_weights(d)
    self_gain = np.sum(d.h_RA * v_B, axis=-1)
    resid = np.asarray(y_A) - self_gain * np.sqrt(P / 2.0) * c.points[np.asarray(own)]
    amp = np.linalg.norm(d.h_RA, axis=-1) * np.sqrt(P / 2.0)
    return detect_nearest(resid, c, amp)


def alamouti_encode(x1, x2):
    """Alamouti code matrix, antennas on axis -2 and time slots on axis -1.

    ``[[x1, -conj(x2)], [x2, conj(x1)]]``
    """
    x1 = np.asarray(x1, dtype=complex)
    x2 = np.asarray(x2, dtype=complex)
    if x1.shape != x2.shape:
        raise ValueError("x1 and x2 must have the same shape")
    row0 = np.stack([x1, -np.conj(x2)], axis=-1)
    row1 = np.stack([x2, np.conj(x1)], axis=-1)
    return np.stack([row0, row1], axis=-2)


def _check_pair(arr, name):
    arr = np.asarray(arr)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ValueError(f"{name} must have a trailing axis of length 2, got shape {arr.shape}")
    return arr


def alamouti_combine(y, h):
    """Orthogonal combining of two received slots.

    Returns ``(z1, z2)`` with ``z_k = ||h||**2 * x_k + noise`` for the
    unscaled code; the caller accounts for any transmit scaling.
    """
    y = _check_pair(y, "y")
    h = _check_pair(h, "h")
    y1, y2 = y[..., 0], y[..., 1]
    h1, h2 = h[..., 0], h[..., 1]
    z1 = np.conj(h1) * y1 + h2 * np.conj(y2)
    z2 = np.conj(h2) * y1 - h1 * np.conj(y2)
    return z1, z2


def alamouti_decode(y, h, c, P=1.0):
    """Detect both symbols of an Alamouti block sent with 1/sqrt(2) scaling."""
    z1, z2 = alamouti_combine(y, h)
    amp = np.sum(np.abs(np.asarray(h)) ** 2, axis=-1) * np.sqrt(P / 2.0)
    return detect_nearest(z1, c, amp), detect_nearest(z2, c, amp)


def stbc_equivalent_gain(h_RA):
    """Real gain ``||h_RA|| / sqrt(N)`` of the equivalent OSTBC scalar channel."""
    h_RA = np.asarray(h_RA)
    return np.linalg.norm(h_RA, axis=-1) / np.sqrt(h_RA.shape[-1])


def ostbc_effective_snr(h, zeta_s):
    """Post-combining SNR ``||h||**2 * zeta_s / N`` of an N-antenna OSTBC."""
    h = np.asarray(h)
    return np.sum(np.abs(h) ** 2, axis=-1) * zeta_s / h.shape[-1]


def node_receive_bnc(y, scheme, d, own, c, P=1.0):
    """Node A's BNC receiver: detect ``s_XOR`` and XOR out the own symbol.

    For ``STBC_BNC`` with N = 2, `y` and `own` carry a trailing axis of
    two time slots and the result does too.
    """
    scheme = SchemeId.parse(scheme)
    if scheme is SchemeId.MAXMIN_AS_BNC:
        j = np.asarray(maxmin_select(d))
        h = np.take_along_axis(np.asarray(d.h_RA), j[..., None], axis=-1)[..., 0]
        mag = np.abs(h)
        x_hat = detect_nearest(np.asarray(y) * np.conj(h) / mag, c, mag * np.sqrt(P))
        return xor_decode(x_hat, own, c)
    if scheme is SchemeId.STBC_BNC:
        if d.N == 2:
            x1, x2 = alamouti_decode(y, d.h_RA, c, P)
            own = _check_pair(own, "own")
            return np.stack(
                [xor_decode(x1, own[..., 0], c), xor_decode(x2, own[..., 1], c)], axis=-1
            )
        x_hat = detect_nearest(y, c, stbc_equivalent_gain(d.h_RA) * np.sqrt(P))
        return xor_decode(x_hat, own, c)
    raise ValueError(f"node_receive_bnc needs a BNC scheme, got {scheme}")
