"""Asymptotic null distributions and hypothesis tests for cumulative calibration.

Under the null hypothesis the standardized cumulative-error path behaves like
standard Brownian motion on [0, 1], so the terminal location is asymptotically
standard normal, the maximum absolute deviation follows the law of sup|W(t)|,
and the maximum absolute deviation of the end-point-bridged path follows the
Kolmogorov distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import ProcessPath, TestReport

SERIES_TERM_TOL = 1e-14
SMALL_STAT = 0.05  # below this both sup-statistic SFs equal 1.0 at double precision
P_FLOOR = 1e-300  # clamp before log-combination so Fisher's statistic stays finite

NORMAL_TWO_SIDED = "normal-two-sided"
KOLMOGOROV = "kolmogorov"
SUP_ABS_BM = "sup-abs-bm"
FISHER_4DF = "fisher-4df"


@dataclass(frozen=True)
class PValue:
    """A p-value tagged with the null distribution that produced it."""

    value: float
    method: str

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"p-value {self.value} outside [0, 1]")

    def clamped(self) -> float:
        return max(self.value, P_FLOOR)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_two_sided_p(z: float) -> float:
    """Two-sided p-value of a standard normal z-score: 2*(1 - Phi(|z|))."""
    return min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def kolmogorov_sf(x: float) -> float:
    """Survival function of the Kolmogorov distribution.

    2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2), truncated once a term drops
    below 1e-14. This is the law of the maximum absolute deviation of the
    Brownian bridge.
    """
    if x < 0:
        raise ValueError("statistic must be non-negative")
    if x < SMALL_STAT:
        # missing mass is ~1e-214 here, far below double precision, and the
        # series needs ~4/x terms (unbounded as x*x underflows)
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        if term < SERIES_TERM_TOL:
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def sup_abs_bm_sf(x: float) -> float:
    """Survival function of sup |W(t)| over [0, 1] for standard Brownian motion.

    1 - (4/pi) * sum_{k>=0} [(-1)^k / (2k+1)] exp(-(2k+1)^2 pi^2 / (8 x^2)),
    truncated once a term drops below 1e-14.
    """
    if x < 0:
        raise ValueError("statistic must be non-negative")
    if x < SMALL_STAT:
        # missing mass is ~1e-214 here; also keeps 8*x*x away from underflow
        return 1.0
    total = 0.0
    k = 0
    while True:
        m = 2 * k + 1
        term = math.exp(-m * m * math.pi * math.pi / (8.0 * x * x)) / m
        if term < SERIES_TERM_TOL:
            break
        total += term if k % 2 == 0 else -term
        k += 1
    return min(1.0, max(0.0, 1.0 - 4.0 / math.pi * total))


def fisher_combine(p1: float, p2: float) -> float:
    """Fisher's combination of two independent p-values.

    X = -2 (ln p1 + ln p2) is chi-square with 4 df under the null; the
    combined p-value is its survival exp(-X/2) (1 + X/2). Inputs are clamped
    at 1e-300 before taking logs.
    """
    q1 = max(p1, P_FLOOR)
    q2 = max(p2, P_FLOOR)
    x = -2.0 * (math.log(q1) + math.log(q2))
    return min(1.0, math.exp(-x / 2.0) * (1.0 + x / 2.0))


def _invert_decreasing(fn, target: float, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Bisection for fn(x) = target where fn is non-increasing in x."""
    while fn(hi) > target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def std_normal_quantile(p: float) -> float:
    """Quantile of the standard normal, by bisection on the CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be inside (0, 1)")
    if p == 0.5:
        return 0.0
    z = _invert_decreasing(lambda x: 1.0 - std_normal_cdf(x), 1.0 - p, -40.0, 40.0)
    return z


def kolmogorov_quantile(alpha: float) -> float:
    """Statistic q with kolmogorov_sf(q) = alpha, by bisection."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be inside (0, 1)")
    return _invert_decreasing(kolmogorov_sf, alpha, 0.0, 4.0)


def sup_abs_bm_quantile(alpha: float) -> float:
    """Statistic q with sup_abs_bm_sf(q) = alpha, by bisection."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be inside (0, 1)")
    return _invert_decreasing(sup_abs_bm_sf, alpha, 0.0, 6.0)


def bm_test(path: ProcessPath) -> TestReport:
    """One-part test on the maximum absolute location of the path.

    The statistic max_k |S_k| is referred to the distribution of the maximum
    absolute deviation of Brownian motion on [0, 1].
    """
    stat = float(np.max(np.abs(path.locations)))
    return TestReport(
        s_n=path.terminal_location,
        bm_stat=stat,
        p_bm=sup_abs_bm_sf(stat),
        c_n=path.terminal_raw_error,
        warnings=_path_warnings(path),
    )


def bridge_test(path: ProcessPath, bridge_only: bool = False) -> TestReport:
    """Two-part test: terminal z-score plus bridged maximum deviation.

    Part one tests mean calibration through the terminal location S_n against
    a standard normal. Part two removes the straight line joining the path's
    endpoints and tests max_k |S_k - t_k S_n| against the Kolmogorov
    distribution; the two p-values are combined with Fisher's method. With
    bridge_only=True only part two is reported, for models recalibrated so
    that the terminal location is zero by construction.
    """
    s_n = path.terminal_location
    bridged = path.locations - path.times * s_n
    bridge_stat = float(np.max(np.abs(bridged)))
    p_bridge = kolmogorov_sf(bridge_stat)
    bm_stat = float(np.max(np.abs(path.locations)))
    if bridge_only:
        return TestReport(
            s_n=s_n,
            bridge_stat=bridge_stat,
            p_bridge=p_bridge,
            bm_stat=bm_stat,
            p_bm=sup_abs_bm_sf(bm_stat),
            c_n=path.terminal_raw_error,
            warnings=_path_warnings(path),
        )
    p_mean = normal_two_sided_p(s_n)
    return TestReport(
        s_n=s_n,
        p_mean=p_mean,
        bridge_stat=bridge_stat,
        p_bridge=p_bridge,
        p_unified=fisher_combine(p_mean, p_bridge),
        bm_stat=bm_stat,
        p_bm=sup_abs_bm_sf(bm_stat),
        c_n=path.terminal_raw_error,
        warnings=_path_warnings(path),
    )


def _path_warnings(path: ProcessPath) -> tuple[str, ...]:
    from .domain import ITE_MARGINAL

    if path.kind == ITE_MARGINAL:
        return (
            "marginal approach: asymptotic null distribution is heuristic, "
            "not backed by a convergence theorem",
        )
    return ()
