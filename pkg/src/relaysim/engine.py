"""Monte Carlo orchestration for end-to-end two-way relaying.

Trial ``i`` of a run draws everything it needs from stream ``(seed, i)``
at fixed draw ordinals (see :class:`_Layout`), so a trial's outcome never
depends on which other trials ran, in what order, or on how many workers.
Error totals are integer sums over fixed-size chunks and are therefore
bit-identical across worker counts.
"""

import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, downlink, uplink
from .channel import (
    DownlinkChannels,
    RandomStream,
    sample_complex_gaussian,
    sample_downlink,
    sample_uniform_symbols,
    sample_uplink,
)
from .downlink import SchemeId
from .modulation import build_constellation, xor_combine

__all__ = [
    "Mode",
    "SimConfig",
    "SepEstimate",
    "wilson_interval",
    "simulate_trials",
    "run_trial",
    "estimate_sep",
    "analytic_sep",
    "sweep",
    "default_workers",
]

log = logging.getLogger(__name__)

CHUNK_TRIALS = 1 << 15
_WORK_ELEMENTS = 1 << 21
_Z95 = 1.959963984540054


class Mode(enum.Enum):
    END_TO_END = "end_to_end"
    DOWNLINK_ONLY = "downlink_only"
    UPLINK_ONLY = "uplink_only"
    MAXMIN_STATE1 = "maxmin_state1_conditional"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"e2e": "end_to_end", "downlink": "downlink_only", "uplink": "uplink_only",
                   "state1": "maxmin_state1_conditional"}
        value = str(value).lower()
        try:
            return cls(aliases.get(value, value))
        except ValueError:
            raise ValueError(f"unknown mode {value!r}") from None


@dataclass(frozen=True)
class SimConfig:
    scheme: SchemeId
    N: int
    M: int
    zeta_r_db: float
    zeta_s_db: float
    trials: int
    seed: int = 0
    mode: Mode = Mode.END_TO_END
    sigma0_sq: float = 1.0
    max_errors: int = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        build_constellation(self.M)
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if not (math.isfinite(self.zeta_r_db) and math.isfinite(self.zeta_s_db)):
            raise ValueError("SNR values must be finite")
        if not self.sigma0_sq > 0:
            raise ValueError("sigma0_sq must be positive")
        if self.mode is Mode.MAXMIN_STATE1 and self.scheme is not SchemeId.MAXMIN_AS_BNC:
            raise ValueError("maxmin_state1_conditional mode requires the Max-Min scheme")
        if self.max_errors is not None and self.max_errors < 1:
            raise ValueError("max_errors must be positive when given")
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def noise_var_relay(self):
        return 10.0 ** (-self.zeta_r_db / 10.0)

    @property
    def noise_var_node(self):
        return 10.0 ** (-self.zeta_s_db / 10.0)

    @property
    def explicit_alamouti(self):
        return self.scheme is SchemeId.STBC_BNC and self.N == 2


@dataclass(frozen=True)
class SepEstimate:
    errors: int
    trials: int
    sep: float
    ci_low: float
    ci_high: float
    stopped_early: bool = False

    @classmethod
    def from_counts(cls, errors, trials, stopped_early=False):
        lo, hi = wilson_interval(errors, trials)
        return cls(errors, trials, errors / trials, lo, hi, stopped_early)


def wilson_interval(errors, trials, z=_Z95):
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= errors <= trials:
        raise ValueError("need 0 <= errors <= trials and trials >= 1")
    p = errors / trials
    z2n = z * z / trials
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    # clip rounding so the bounds stay in [0, 1] and bracket p
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


class _Layout:
    """Draw-ordinal map of one trial; two symbol periods are reserved."""

    def __init__(self, N):
        self.uplink = 0
        self.downlink = 2 * N
        self.relay_noise = (4 * N, 5 * N)
        self.node_noise = (6 * N, 6 * N + 1)
        self.symbols = 6 * N + 2


def _batch_size(cfg):
    return max(256, _WORK_ELEMENTS // (cfg.N * cfg.M * cfg.M))


def simulate_trials(cfg, indices):
    """Error indicators (``s_B`` wrong at node A) for the given trial indices."""
    indices = np.asarray(indices, dtype=np.uint64)
    out = np.empty(indices.shape[0], dtype=bool)
    step = _batch_size(cfg)
    c = build_constellation(cfg.M)
    for lo in range(0, indices.shape[0], step):
        out[lo : lo + step] = _simulate_batch(cfg, c, indices[lo : lo + step])
    return out


def _simulate_batch(cfg, c, idx):
    lay = _Layout(cfg.N)
    stream = RandomStream(cfg.seed, idx)
    periods = 2 if cfg.explicit_alamouti else 1
    sym = sample_uniform_symbols(2, cfg.M, stream.at(lay.symbols))  # (B, 2 periods, 2 users)
    s_A, s_B = sym[:, :periods, 0], sym[:, :periods, 1]

    if cfg.mode in (Mode.END_TO_END, Mode.UPLINK_ONLY):
        up = sample_uplink(cfg.N, cfg.sigma0_sq, stream.at(lay.uplink))
        hat_A = np.empty_like(s_A)
        hat_B = np.empty_like(s_B)
        for p in range(periods):
            n_R = sample_complex_gaussian(cfg.N, cfg.noise_var_relay, stream.at(lay.relay_noise[p]))
            y_R = up.h_AR * c.points[s_A[:, p, None]] + up.h_BR * c.points[s_B[:, p, None]] + n_R
            obs = uplink.UplinkObservation(y_R, up, cfg.noise_var_relay)
            hat_A[:, p], hat_B[:, p] = uplink.ml_detect(obs, c)
        if cfg.mode is Mode.UPLINK_ONLY:
            return hat_B[:, 0] != s_B[:, 0]
    else:
        hat_A, hat_B = s_A, s_B

    dl = sample_downlink(cfg.N, cfg.sigma0_sq, stream.at(lay.downlink))
    n_A = sample_complex_gaussian(2, cfg.noise_var_node, stream.at(lay.node_noise[0]))

    if cfg.scheme is SchemeId.TB:
        s_R = downlink.tb_precode(hat_A[:, 0], hat_B[:, 0], dl, c)
        y_A = np.sum(dl.h_RA * s_R, axis=-1) + n_A[:, 0]
        est = downlink.node_receive_tb(y_A, dl, s_A[:, 0], c)
        return est != s_B[:, 0]

    x = xor_combine(hat_A, hat_B, c)
    if cfg.scheme is SchemeId.MAXMIN_AS_BNC:
        j = downlink.maxmin_select(dl)
        if cfg.mode is Mode.MAXMIN_STATE1:
            # swapping A and B maps State 2 onto State 1 and leaves j unchanged
            gA = np.abs(np.take_along_axis(dl.h_RA, j[:, None], axis=-1)[:, 0])
            gB = np.abs(np.take_along_axis(dl.h_RB, j[:, None], axis=-1)[:, 0])
            flip = (gA > gB)[:, None]
            dl = DownlinkChannels(np.where(flip, dl.h_RB, dl.h_RA), np.where(flip, dl.h_RA, dl.h_RB))
        s_R = downlink.maxmin_transmit(x[:, 0], j, cfg.N, c)
        y_A = np.sum(dl.h_RA * s_R, axis=-1) + n_A[:, 0]
        est = downlink.node_receive_bnc(y_A, SchemeId.MAXMIN_AS_BNC, dl, s_A[:, 0], c)
        return est != s_B[:, 0]

    if cfg.explicit_alamouti:
        code = downlink.alamouti_encode(c.points[x[:, 0]], c.points[x[:, 1]]) / np.sqrt(2.0)
        y_A = np.einsum("bn,bnt->bt", dl.h_RA, code) + n_A
        est = downlink.node_receive_bnc(y_A, SchemeId.STBC_BNC, dl, s_A, c)
        return est[:, 0] != s_B[:, 0]
    gain = downlink.stbc_equivalent_gain(dl.h_RA)
    y_A = gain * c.points[x[:, 0]] + n_A[:, 0]
    est = downlink.node_receive_bnc(y_A, SchemeId.STBC_BNC, dl, s_A[:, 0], c)
    return est != s_B[:, 0]


def run_trial(cfg, trial_index):
    """Whether trial `trial_index` of `cfg` ends with ``s_B`` wrong at node A."""
    return bool(simulate_trials(cfg, np.array([trial_index]))[0])


def default_workers():
    env = os.environ.get("RELAYSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer RELAYSIM_THREADS=%r", env)
    return os.cpu_count() or 1


def _count_chunk(cfg, lo, hi):
    idx = np.arange(lo, hi, dtype=np.uint64)
    return int(np.count_nonzero(simulate_trials(cfg, idx)))


def estimate_sep(cfg, workers=None):
    """Monte Carlo SEP of ``s_B`` at node A with a 95% Wilson interval.

    Trials are split into chunks of :data:`CHUNK_TRIALS`. With
    ``cfg.max_errors`` set, the run stops after the first chunk (in index
    order) at which the running error total reaches it, so early stopping
    is also independent of `workers`.
    """
    workers = workers or default_workers()
    bounds = [(lo, min(lo + CHUNK_TRIALS, cfg.trials)) for lo in range(0, cfg.trials, CHUNK_TRIALS)]
    errors = 0
    done = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        wave = workers if cfg.max_errors else len(bounds)
        for start in range(0, len(bounds), wave):
            part = bounds[start : start + wave]
            counts = pool.map(lambda b: _count_chunk(cfg, *b), part)
            for (lo, hi), k in zip(part, counts):
                errors += k
                done = hi
                if cfg.max_errors and errors >= cfg.max_errors:
                    stopped = done < cfg.trials
                    return SepEstimate.from_counts(errors, done, stopped_early=stopped)
    return SepEstimate.from_counts(errors, done)


def analytic_sep(cfg):
    """Analytic counterpart of what :func:`estimate_sep` measures for `cfg`.

    Max-Min downlink values are the lower bound, except in the State-1
    conditional mode whose SEP is exactly the upper bound.
    """
    c = build_constellation(cfg.M)
    if cfg.mode is Mode.UPLINK_ONLY:
        return min(1.0, _uplink_bound(cfg, c))
    spec = analysis.MgfSpec(cfg.scheme, cfg.N, 10.0 ** (cfg.zeta_s_db / 10.0), cfg.sigma0_sq)
    bound = "upper" if cfg.mode is Mode.MAXMIN_STATE1 else "lower"
    p_d = analysis.sep_downlink(spec, cfg.M, bound=bound)
    if cfg.mode is not Mode.END_TO_END:
        return p_d
    return analysis.total_sep(min(1.0, _uplink_bound(cfg, c)), p_d)


def _uplink_bound(cfg, c):
    return uplink.union_bound_sep_average(cfg.N, cfg.sigma0_sq, c, cfg.noise_var_relay, marginal=True)


def sweep(cfg, snr_db_list, relay=True, node=True, workers=None):
    """Simulate and evaluate `cfg` at each SNR in `snr_db_list`.

    Each SNR is applied to the relay and/or node SNR according to `relay`
    and `node`. Every point reuses ``cfg.seed``, so curves share random
    numbers across SNRs and across schemes.
    """
    snrs = list(snr_db_list)
    if not snrs:
        raise ValueError("snr_db_list must not be empty")
    if not (relay or node):
        raise ValueError("at least one of relay/node must follow the swept SNR")
    rows = []
    for snr in snrs:
        point = replace(
            cfg,
            zeta_r_db=float(snr) if relay else cfg.zeta_r_db,
            zeta_s_db=float(snr) if node else cfg.zeta_s_db,
        )
        est = estimate_sep(point, workers=workers)
        log.info("%s N=%d %s %.2f dB: %d/%d errors", cfg.scheme.value, cfg.N, cfg.mode.value, snr,
                 est.errors, est.trials)
        rows.append(analysis.SepCurvePoint(
            snr_db=float(snr),
            scheme=cfg.scheme,
            sep_analytic=analytic_sep(point),
            sep_simulated=est.sep,
            ci_low=est.ci_low,
            ci_high=est.ci_high,
            trials=est.trials,
            errors=est.errors,
        ))
    return rows
