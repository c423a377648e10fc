"""Cumulative treatment-benefit processes for predicted absolute risk reductions.

Individual treatment benefits are never observed, so the cumulative benefit
over the first k subjects (ordered by predicted benefit) is estimated as k
times the difference in arm-wise event rates among those subjects:

    B_k = k * (sum_{i<=k}(1-a_i)Y_i / sum_{i<=k}(1-a_i)
               - sum_{i<=k} a_i Y_i / sum_{i<=k} a_i),

with the convention 0/0 = 0 while an arm is still empty. Two standardized
cumulative-error paths are built from this estimator:

* conditional: centers each increment by its conditional expectation given
  the history, substituting the model's predicted baseline risks, and scales
  time by the cumulative conditional variances. Under the null this path
  converges to standard Brownian motion.
* marginal: centers B_k by the predicted cumulative benefit sum(delta_i) and
  scales time by the marginal variance of B_k computed from running arm event
  rates. No predicted risks are needed, but the construction is heuristic and
  its time axis may occasionally step backwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    ITE_CONDITIONAL,
    ITE_MARGINAL,
    DegenerateVariance,
    OrderedSample,
    ProcessPath,
)

MOMENT_ROUTE_TOL = 1e-10


@dataclass(frozen=True)
class BenefitSeries:
    """Cumulative benefit estimates with their running arm tallies.

    All arrays have length n+1 and start at zero: b[k] is the cumulative
    benefit after k subjects, n0/n1 the running control/treated counts and
    y0/y1 the running event counts per arm.
    """

    b: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray

    @property
    def increments(self) -> np.ndarray:
        """Step-wise differences b[k] - b[k-1], length n."""
        return np.diff(self.b)


@dataclass(frozen=True)
class ConditionalMoments:
    """Conditional increment moments of the benefit series under the null.

    mu[k-1] is the expected k-th increment given the history, sigma2[k-1] its
    conditional variance, and s2[k-1] the running variance total. Both are
    evaluated with predicted benefits and predicted baseline risks standing
    in for their calibrated values.
    """

    mu: np.ndarray
    sigma2: np.ndarray
    s2: np.ndarray


def cumulative_benefit(sample: OrderedSample) -> BenefitSeries:
    """Running benefit estimate B_k over the ordered sample."""
    a = sample.arm.astype(np.float64)
    y = sample.outcome.astype(np.float64)
    n = sample.n
    n0 = np.zeros(n + 1)
    n1 = np.zeros(n + 1)
    y0 = np.zeros(n + 1)
    y1 = np.zeros(n + 1)
    n0[1:] = np.cumsum(1.0 - a)
    n1[1:] = np.cumsum(a)
    y0[1:] = np.cumsum((1.0 - a) * y)
    y1[1:] = np.cumsum(a * y)
    r0 = _safe_ratio(y0, n0)
    r1 = _safe_ratio(y1, n1)
    k = np.arange(n + 1, dtype=np.float64)
    return BenefitSeries(b=k * (r0 - r1), n0=n0, n1=n1, y0=y0, y1=y1)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _check_conditional_inputs(sample: OrderedSample) -> tuple[np.ndarray, np.ndarray]:
    """Validate risks for the conditional moments; returns (pi, treated risk)."""
    pi = sample.require_pi()
    treated_risk = pi - sample.delta
    is_treated = sample.arm == 1
    bad_control = (~is_treated) & ((pi <= 0.0) | (pi >= 1.0))
    bad_treated = is_treated & ((treated_risk <= 0.0) | (treated_risk >= 1.0))
    if bad_control.any():
        k = int(np.flatnonzero(bad_control)[0])
        raise DegenerateVariance(
            f"control-arm predicted risk {pi[k]} at position {k} has zero variance"
        )
    if bad_treated.any():
        k = int(np.flatnonzero(bad_treated)[0])
        raise DegenerateVariance(
            f"treated-arm predicted risk {treated_risk[k]} at position {k} has zero variance"
        )
    return pi, treated_risk


def conditional_moments(
    series: BenefitSeries, sample: OrderedSample
) -> ConditionalMoments:
    """Conditional expectations and variances of the benefit increments.

    The expectation of the k-th increment given the first k-1 observations
    replaces the k-th subject's unknown outcome with its predicted risk in
    the subject's own arm:

        a_k = 0:  mu_k = k (y0_{k-1} + pi_k) / n0_k - (k-1) r0_{k-1} - r1_{k-1}
        a_k = 1:  mu_k = r0_{k-1} - [k (y1_{k-1} + pi_k - delta_k) / n1_k
                                      - (k-1) r1_{k-1}]

    with r0, r1 the running arm event rates (0/0 = 0). The conditional
    variance is the Bernoulli variance of that outcome scaled by the square
    of the increment's leverage:

        sigma2_k = k^2 [ (1-a_k) pi_k (1-pi_k) / n0_k^2
                         + a_k (pi_k - delta_k)(1 - pi_k + delta_k) / n1_k^2 ].
    """
    pi, treated_risk = _check_conditional_inputs(sample)
    a = sample.arm.astype(bool)
    n = sample.n
    k = np.arange(1, n + 1, dtype=np.float64)

    n0_now, n1_now = series.n0[1:], series.n1[1:]
    n0_prev, n1_prev = series.n0[:-1], series.n1[:-1]
    y0_prev, y1_prev = series.y0[:-1], series.y1[:-1]
    r0_prev = _safe_ratio(y0_prev, n0_prev)
    r1_prev = _safe_ratio(y1_prev, n1_prev)

    # the active arm's count includes subject k, so its denominator is >= 1
    d0 = np.maximum(n0_now, 1.0)
    d1 = np.maximum(n1_now, 1.0)
    mu_control = k * (y0_prev + pi) / d0 - (k - 1.0) * r0_prev - r1_prev
    mu_treated = r0_prev - (k * (y1_prev + treated_risk) / d1 - (k - 1.0) * r1_prev)
    mu = np.where(a, mu_treated, mu_control)

    var_control = pi * (1.0 - pi) / d0**2
    var_treated = treated_risk * (1.0 - treated_risk) / d1**2
    sigma2 = k**2 * np.where(a, var_treated, var_control)
    return ConditionalMoments(mu=mu, sigma2=sigma2, s2=np.cumsum(sigma2))


def centered_increments(sample: OrderedSample) -> np.ndarray:
    """Benefit increments minus their conditional expectations, directly.

    Algebraically the k-th centered increment collapses to the k-th subject's
    own prediction error, weighted by the increment's leverage:

        k [ (1-a_k)(Y_k - pi_k)/n0_k - a_k (Y_k - pi_k + delta_k)/n1_k ].
    """
    pi, treated_risk = _check_conditional_inputs(sample)
    a = sample.arm.astype(bool)
    y = sample.outcome.astype(np.float64)
    n = sample.n
    k = np.arange(1, n + 1, dtype=np.float64)
    n0 = np.maximum(np.cumsum(1 - sample.arm), 1.0)
    n1 = np.maximum(np.cumsum(sample.arm), 1.0)
    control_part = (y - pi) / n0
    treated_part = -(y - treated_risk) / n1
    return k * np.where(a, treated_part, control_part)


def conditional_s_process(sample: OrderedSample) -> ProcessPath:
    """Standardized cumulative-benefit-error path, conditional variant."""
    series = cumulative_benefit(sample)
    moments = conditional_moments(series, sample)
    n = sample.n
    errors = np.zeros(n + 1)
    errors[1:] = np.cumsum(centered_increments(sample)) / n
    s2 = np.zeros(n + 1)
    s2[1:] = moments.s2
    if s2[-1] <= 0.0:
        raise DegenerateVariance("total conditional variance is zero")
    s_n = float(np.sqrt(s2[-1]))
    times = s2 / s2[-1]
    times[-1] = 1.0
    return ProcessPath(
        times=times,
        locations=n * errors / s_n,
        raw_errors=errors,
        kind=ITE_CONDITIONAL,
        deltas=np.concatenate(([np.nan], sample.ordering_values)),
        sd_scale=s_n / n,
    )


def marginal_s_process(sample: OrderedSample) -> ProcessPath:
    """Standardized cumulative-benefit-error path, marginal variant.

    Centers B_k by the predicted cumulative benefit and scales time by the
    marginal variance of B_k from running arm event rates p0, p1:

        s2_k = k^2 ( p0(1-p0)/n0_k + p1(1-p1)/n1_k ),

    an empty arm contributing zero until populated. The terminal raw error is
    the familiar mean-calibration contrast: estimated average treatment
    effect minus mean predicted benefit. Time steps are not guaranteed to be
    monotone; paths are stored and tested exactly as realized.
    """
    series = cumulative_benefit(sample)
    n = sample.n
    k = np.arange(n + 1, dtype=np.float64)
    errors = (series.b - np.concatenate(([0.0], np.cumsum(sample.delta)))) / n
    p0 = _safe_ratio(series.y0, series.n0)
    p1 = _safe_ratio(series.y1, series.n1)
    s2 = k**2 * (
        _safe_ratio(p0 * (1.0 - p0), series.n0) + _safe_ratio(p1 * (1.0 - p1), series.n1)
    )
    if s2[-1] <= 0.0:
        raise DegenerateVariance(
            "marginal variance is zero: outcomes are constant within both arms"
        )
    s_n = float(np.sqrt(s2[-1]))
    times = s2 / s2[-1]
    times[-1] = 1.0
    return ProcessPath(
        times=times,
        locations=n * errors / s_n,
        raw_errors=errors,
        kind=ITE_MARGINAL,
        deltas=np.concatenate(([np.nan], sample.ordering_values)),
        sd_scale=s_n / n,
    )
