"""Cumulative calibration processes for predicted risks.

Given predictions pi_i for binary outcomes Y_i, the scaled cumulative error
after sorting by prediction is C_k = (1/n) sum_{i<=k} (Y_i - pi_i). With time
steps proportional to the cumulative Bernoulli variances, the standardized
path converges to Brownian motion when the predictions are calibrated. These
processes also carry the per-arm compound assessment of benefit models that
output risks: the control arm is checked against pi and the treated arm
against pi - delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    RISK,
    DegenerateVariance,
    EmptySample,
    OrderedSample,
    ProcessPath,
    SingleArmSample,
    TestReport,
)
from .inference import bm_test, bridge_test, fisher_combine

ARM_ALL = "all"
ARM_CONTROL = "control-only"
ARM_TREATED = "treated-only"


@dataclass(frozen=True)
class RiskSampleView:
    """(prediction, outcome) pairs sorted ascending by prediction."""

    predictions: np.ndarray
    outcomes: np.ndarray
    arm_label: str = ARM_ALL

    @property
    def n(self) -> int:
        return self.predictions.shape[0]


def risk_view(
    predictions: np.ndarray, outcomes: np.ndarray, arm_label: str = ARM_ALL
) -> RiskSampleView:
    """Sort (prediction, outcome) pairs by prediction, stably, and validate."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(outcomes)
    if p.shape[0] == 0:
        raise EmptySample("risk view needs at least one observation")
    if p.shape != y.shape:
        raise ValueError("predictions and outcomes must have equal length")
    if not (np.isfinite(p).all() and (p >= 0.0).all() and (p <= 1.0).all()):
        raise ValueError("predictions must lie in [0, 1]")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("outcomes must be 0 or 1")
    order = np.argsort(p, kind="stable")
    p = p[order].copy()
    y = y[order].astype(np.int8)
    p.flags.writeable = False
    y.flags.writeable = False
    return RiskSampleView(predictions=p, outcomes=y, arm_label=arm_label)


def risk_cumulative_errors(view: RiskSampleView) -> np.ndarray:
    """Scaled cumulative prediction errors C_0..C_n, C_k = (1/n) sum (Y_i - pi_i)."""
    n = view.n
    if n == 0:
        raise EmptySample("empty risk view")
    errors = np.zeros(n + 1)
    errors[1:] = np.cumsum(view.outcomes - view.predictions) / n
    return errors


def risk_s_process(view: RiskSampleView) -> ProcessPath:
    """Standardized cumulative-error path for predicted risks.

    Time runs on the cumulative Bernoulli variance scale
    t_k = sum_{i<=k} pi_i(1-pi_i) / sum_{i<=n} pi_i(1-pi_i) and locations are
    S_k = n C_k / s_n. Predictions of exactly 0 or 1 contribute no variance
    and are rejected so the time axis stays strictly increasing.
    """
    p = view.predictions
    if np.any((p == 0.0) | (p == 1.0)):
        raise DegenerateVariance(
            "predictions of exactly 0 or 1 carry zero outcome variance"
        )
    n = view.n
    var = p * (1.0 - p)
    s2 = np.zeros(n + 1)
    s2[1:] = np.cumsum(var)
    if s2[-1] <= 0.0:
        raise DegenerateVariance("total prediction variance is zero")
    s_n = float(np.sqrt(s2[-1]))
    errors = risk_cumulative_errors(view)
    times = s2 / s2[-1]
    times[-1] = 1.0
    deltas = np.concatenate(([np.nan], p))
    return ProcessPath(
        times=times,
        locations=n * errors / s_n,
        raw_errors=errors,
        kind=RISK,
        deltas=deltas,
        sd_scale=s_n / n,
    )


@dataclass(frozen=True)
class PerArmCompoundResult:
    """Per-arm risk-calibration reports and their Fisher-combined p-value."""

    control: TestReport
    treated: TestReport
    p_compound: float


def per_arm_compound_test(
    sample: OrderedSample, test: str = "bridge"
) -> PerArmCompoundResult:
    """Assess risk calibration separately in each arm and combine the p-values.

    The control arm is checked against the predicted baseline risk and the
    treated arm against the predicted treated risk pi - delta; each arm is
    re-sorted by its own prediction. test selects the per-arm procedure:
    "bridge" (default) combines the per-arm unified p-values, "bm" the
    per-arm maximum-deviation p-values.
    """
    if test not in ("bridge", "bm"):
        raise ValueError(f"unknown per-arm test {test!r}")
    pi = sample.require_pi()
    control = sample.arm == 0
    treated = sample.arm == 1
    if not control.any() or not treated.any():
        raise SingleArmSample("both arms are required for the compound test")

    view0 = risk_view(pi[control], sample.outcome[control], ARM_CONTROL)
    view1 = risk_view(
        pi[treated] - sample.delta[treated], sample.outcome[treated], ARM_TREATED
    )
    runner = bridge_test if test == "bridge" else bm_test
    rep0 = runner(risk_s_process(view0))
    rep1 = runner(risk_s_process(view1))
    if test == "bridge":
        p0, p1 = rep0.p_unified, rep1.p_unified
    else:
        p0, p1 = rep0.p_bm, rep1.p_bm
    return PerArmCompoundResult(
        control=rep0, treated=rep1, p_compound=fisher_combine(p0, p1)
    )
