"""Closed-form and quadrature results for the downlink schemes.

The downlink SEP of coherent M-PSK is computed from the MGF of the
instantaneous receive SNR,

    P_d = (1/pi) * integral_0^{pi - pi/M} psi(g / sin(theta)**2) dtheta,

with ``g = sin(pi/M)**2``. For Max-Min antenna selection only the MGF
conditioned on the weaker-state event is available in closed form, which
gives a lower bound (prefactor ``1/(2 pi)``) and an upper bound twice as
large.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .downlink import SchemeId
from .exceptions import NumericalError

__all__ = [
    "MgfSpec",
    "SepCurvePoint",
    "mgf",
    "mgf_maxmin_sum",
    "sep_downlink",
    "sep_downlink_bounds",
    "total_sep",
    "total_sep_simplified",
    "asymptotic_ratio",
    "diversity_order_analytic",
    "diversity_slope_empirical",
]

MAX_EXACT_N = 20
QUAD_EPSABS = 1e-12


@dataclass(frozen=True)
class MgfSpec:
    scheme: SchemeId
    N: int
    zeta_s: float
    sigma0_sq: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        if int(self.N) != self.N or not 1 <= self.N <= MAX_EXACT_N:
            raise ValueError(f"N must be an integer in [1, {MAX_EXACT_N}], got {self.N}")
        if not self.sigma0_sq > 0:
            raise ValueError(f"sigma0_sq must be positive, got {self.sigma0_sq}")
        if not self.zeta_s > 0:
            raise ValueError(f"zeta_s must be positive, got {self.zeta_s}")

    def with_snr(self, zeta_s):
        return MgfSpec(self.scheme, self.N, zeta_s, self.sigma0_sq)


@dataclass(frozen=True)
class SepCurvePoint:
    """One row of a SEP curve: simulated estimate next to the analytic value."""

    snr_db: float
    scheme: SchemeId
    sep_analytic: float
    sep_simulated: float
    ci_low: float
    ci_high: float
    trials: int
    errors: int

    def __post_init__(self):
        if not 0.0 <= self.sep_analytic <= 1.0:
            raise ValueError(f"sep_analytic out of [0, 1]: {self.sep_analytic}")
        if not 0.0 <= self.ci_low <= self.sep_simulated <= self.ci_high <= 1.0:
            raise ValueError("confidence interval must bracket the estimate inside [0, 1]")


def mgf(spec, t):
    """MGF ``E[exp(-t*gamma)]`` of the instantaneous SNR at node A.

    For ``MAXMIN_AS_BNC`` this is the MGF conditioned on the state where
    node A has the weaker link of the selected antenna.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("MGF argument must be non-negative")
    N = spec.N
    if spec.scheme is SchemeId.TB:
        out = (1.0 + t * spec.sigma0_sq * spec.zeta_s / 2.0) ** (-N)
    elif spec.scheme is SchemeId.STBC_BNC:
        out = (1.0 + t * spec.sigma0_sq * spec.zeta_s / N) ** (-N)
    else:
        x = t * spec.sigma0_sq * spec.zeta_s / 2.0
        out = np.ones_like(x)
        for k in range(N):
            out = out * ((k + 1) / (k + 1 + x))
    return float(out) if out.ndim == 0 else out


def mgf_maxmin_sum(spec, t):
    """Max-Min MGF in its binomial-sum form, evaluated in exact rationals.

    The alternating sum cancels catastrophically in floating point for
    large ``t``; converting ``t`` exactly to a fraction sidesteps that and
    keeps this an independent check on the product form used by :func:`mgf`.
    """
    if t < 0:
        raise ValueError("MGF argument must be non-negative")
    N = spec.N
    x = Fraction(t) * Fraction(spec.sigma0_sq) * Fraction(spec.zeta_s) / 2
    total = sum(Fraction(math.comb(N - 1, k) * N * (-1) ** k) / (1 + k + x) for k in range(N))
    return float(total)


def _sep_integral(spec, M):
    g = math.sin(math.pi / M) ** 2

    def integrand(theta):
        s2 = math.sin(theta) ** 2
        if s2 == 0.0:
            return 0.0
        return mgf(spec, g / s2)

    upper = math.pi - math.pi / M
    # relative 1e-12 also meets the absolute target whenever the integral <= 1
    val, err, info, *rest = integrate.quad(
        integrand, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=500, full_output=1
    )
    if rest or err > max(QUAD_EPSABS, 1e-10 * abs(val)):
        raise NumericalError(
            "SEP quadrature did not converge",
            scheme=spec.scheme.value,
            N=spec.N,
            zeta_s=spec.zeta_s,
            M=M,
            value=val,
            abserr=err,
            neval=info["neval"],
            quad_message=rest[0] if rest else None,
        )
    return val


def sep_downlink_bounds(spec, M):
    """``(lower, upper)`` downlink SEP.

    Identical for TB and STBC, where the analysis is exact. For Max-Min the
    lower bound halves the weaker-state SEP and the upper bound is the
    weaker-state SEP itself.
    """
    _check_order(M)
    val = _sep_integral(spec, M) / math.pi
    if spec.scheme is SchemeId.MAXMIN_AS_BNC:
        return val / 2.0, val
    return val, val


def sep_downlink(spec, M, bound="lower"):
    """Analytic downlink SEP; for Max-Min, the requested bound."""
    if bound not in ("lower", "upper"):
        raise ValueError(f"bound must be 'lower' or 'upper', got {bound!r}")
    lo, hi = sep_downlink_bounds(spec, M)
    return lo if bound == "lower" else hi


def _check_order(M):
    if int(M) != M or M < 2 or int(M) & (int(M) - 1):
        raise ValueError(f"M must be a power of two >= 2, got {M}")


def _check_prob(p, name):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def total_sep(p_u, p_d):
    """End-to-end SEP when an error on either hop is fatal: ``p_u + p_d(1-p_u)``."""
    _check_prob(p_u, "p_u")
    _check_prob(p_d, "p_d")
    return p_u + p_d * (1.0 - p_u)


def total_sep_simplified(p_u, p_d):
    """``p_u + p_d`` clamped to 1, valid when ``p_u * p_d`` is negligible."""
    _check_prob(p_u, "p_u")
    _check_prob(p_d, "p_d")
    return min(1.0, p_u + p_d)


def _ratio_to_maxmin(scheme, N):
    if scheme is SchemeId.MAXMIN_AS_BNC:
        return Fraction(1)
    if scheme is SchemeId.TB:
        return Fraction(2, math.factorial(N))
    return Fraction(N**N, 2 ** (N - 1) * math.factorial(N))


def asymptotic_ratio(a, b, N):
    """High-SNR limit of ``SEP_a / SEP_b`` as an exact fraction.

    Max-Min enters through its lower bound. Pairs not involving Max-Min are
    formed as quotients of the two Max-Min ratios.
    """
    if not isinstance(a, SchemeId) or not isinstance(b, SchemeId):
        raise ValueError(f"unsupported scheme pair ({a!r}, {b!r})")
    if int(N) != N or not 1 <= N <= MAX_EXACT_N:
        raise ValueError(f"N must be an integer in [1, {MAX_EXACT_N}], got {N}")
    return _ratio_to_maxmin(a, N) / _ratio_to_maxmin(b, N)


def diversity_order_analytic(spec, M, snrs=(1e6, 1e8)):
    """High-SNR slope of ``-log psi(g)`` against ``log zeta_s``.

    ``-log psi / log zeta`` approaches N like ``N - c/log zeta``; taking the
    slope between two large SNRs cancels the ``c/log zeta`` term.
    """
    _check_order(M)
    g = math.sin(math.pi / M) ** 2
    lo, hi = snrs
    f_lo = -math.log(mgf(spec.with_snr(lo), g))
    f_hi = -math.log(mgf(spec.with_snr(hi), g))
    return (f_hi - f_lo) / (math.log(hi) - math.log(lo))


def diversity_slope_empirical(points):
    """Least-squares slope of ``log10(sep)`` against ``snr_db / 10``.

    `points` is an iterable of ``(snr_db, sep)``. Zero-SEP points are
    dropped with a warning. The diversity order estimate is ``-slope``.
    """
    pts = [(float(s), float(p)) for s, p in points]
    usable = [(s, p) for s, p in pts if p > 0]
    if len(usable) < len(pts):
        warnings.warn(f"dropped {len(pts) - len(usable)} zero-SEP point(s) from slope fit")
    if len(usable) < 2:
        raise ValueError("need at least two points with positive SEP")
    x = np.array([s for s, _ in usable]) / 10.0
    y = np.log10([p for _, p in usable])
    if np.ptp(x) == 0:
        raise ValueError("SNR values must not all coincide")
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
