"""Joint ML detection of both users' symbols at the relay, and the
pairwise-error union bound on its symbol error probability."""

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import erfc

from .channel import UplinkChannel

__all__ = [
    "UplinkObservation",
    "ml_detect",
    "union_bound_sep",
    "union_bound_sep_average",
]


@dataclass(frozen=True, eq=False)
class UplinkObservation:
    """Relay observation ``y_R = H_up s + n_R``.

    Leading axes of `y_R` and the channel arrays are treated as a batch.
    """

    y_R: np.ndarray
    channel: UplinkChannel
    noise_var: float

    def __post_init__(self):
        if np.shape(self.y_R)[-1] != self.channel.N:
            raise ValueError("y_R length must equal the number of relay antennas")


def ml_detect(obs, c, P=1.0):
    """Exhaustive joint ML detection over all M**2 symbol pairs.

    Returns
    -------
    (s_A, s_B) : tuple of int arrays (ints for an unbatched observation)
        Ties are broken lexicographically on ``(s_A, s_B)``.
    """
    M = c.M
    amp = np.sqrt(P) * c.points
    y = np.asarray(obs.y_R, dtype=complex)
    hA = np.asarray(obs.channel.h_AR)
    hB = np.asarray(obs.channel.h_BR)
    # candidate k <-> (a, b) = divmod(k, M), so argmin's first hit is lexicographic
    cand_a = np.repeat(amp, M)
    cand_b = np.tile(amp, M)
    resid = y[..., None] - hA[..., None] * cand_a - hB[..., None] * cand_b
    metric = np.sum(resid.real**2 + resid.imag**2, axis=-2)
    k = np.argmin(metric, axis=-1)
    a, b = np.divmod(k, M)
    if a.ndim == 0:
        return int(a), int(b)
    return a, b


def _qfunc(x):
    return 0.5 * erfc(x / np.sqrt(2.0))


def _difference_grid(c):
    pts = c.points
    d = (pts[:, None] - pts[None, :]).ravel()  # entry a0*M + a is p[a0] - p[a]
    same = np.eye(c.M, dtype=bool).ravel()
    return d, same


def union_bound_sep(channel, c, noise_var, P=1.0, marginal=False):
    """Union bound on the relay's detection error for a fixed channel.

    Averages, over all M**2 equiprobable transmitted pairs ``S0``, the sum
    of pairwise error probabilities ``Q(sqrt(P*||H(S0 - S)||^2 / (2*noise_var)))``
    over competitors ``S != S0``. With ``marginal=True`` only competitors
    with a different ``s_B`` are counted, bounding ``P(s_B_hat != s_B)``.

    The result is a bound and may exceed 1.
    """
    if noise_var <= 0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    hA = np.asarray(channel.h_AR)
    hB = np.asarray(channel.h_BR)
    nA = np.sum(np.abs(hA) ** 2, axis=-1)[..., None, None]
    nB = np.sum(np.abs(hB) ** 2, axis=-1)[..., None, None]
    rho = np.sum(hA * np.conj(hB), axis=-1)[..., None, None]

    d, same = _difference_grid(c)
    dA = d[:, None]
    dB = d[None, :]
    dist2 = np.abs(dA) ** 2 * nA + np.abs(dB) ** 2 * nB + 2.0 * np.real(dA * np.conj(dB) * rho)
    dist2 = np.maximum(dist2, 0.0)

    if marginal:
        keep = ~same[None, :] & np.ones_like(same)[:, None]
    else:
        keep = ~(same[:, None] & same[None, :])
    terms = _qfunc(np.sqrt(P * dist2 / (2.0 * noise_var)))
    return np.sum(np.where(keep, terms, 0.0), axis=(-2, -1)) / c.M**2


def _rayleigh_pep(N, snr):
    """E[Q(sqrt(2*snr*X))] for X ~ Gamma(N, 1): MRC-type closed form."""
    snr = np.asarray(snr, dtype=float)
    mu = np.sqrt(snr / (1.0 + snr))
    lo = (1.0 / (1.0 + snr)) / (1.0 + mu) / 2.0  # (1 - mu)/2 without cancellation
    hi = (1.0 + mu) / 2.0
    acc = sum(comb(N - 1 + k, k) * hi**k for k in range(N))
    return lo**N * acc


def union_bound_sep_average(N, sigma0_sq, c, noise_var, P=1.0, marginal=False):
    """Union bound averaged over i.i.d. Rayleigh uplink channels.

    For a difference vector ``delta``, ``||H_up delta||**2`` is
    Gamma(N, sigma0_sq * ||delta||**2), so each pairwise term has a closed
    form. By the rotational symmetry of PSK every transmitted pair sees the
    same set of distances, so only competitors of ``S0 = (0, 0)`` are summed.
    """
    if noise_var <= 0:
        raise ValueError(f"noise variance must be positive, got {noise_var}")
    if N < 1:
        raise ValueError(f"antenna count must be at least 1, got {N}")
    d2 = np.abs(c.points[0] - c.points) ** 2
    total = 0.0
    for a in range(c.M):
        for b in range(c.M):
            if (a, b) == (0, 0) or (marginal and b == 0):
                continue
            snr = P * sigma0_sq * (d2[a] + d2[b]) / (4.0 * noise_var)
            total += _rayleigh_pep(N, snr)
    return float(total)
