"""Risk-calibration processes and the per-arm compound assessment."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from itecalib.domain import (
    DegenerateVariance,
    EmptySample,
    MissingBaselineRisk,
    SingleArmSample,
    sample_from_arrays,
)
from itecalib.inference import fisher_combine
from itecalib.risk import (
    ARM_ALL,
    ARM_CONTROL,
    ARM_TREATED,
    per_arm_compound_test,
    risk_cumulative_errors,
    risk_s_process,
    risk_view,
)

EXACT_TOL = 1e-12
NULL_RATE_BAND = (0.035, 0.065)
KS_BOUND = 0.05


def uniform_ks(pvalues):
    p = np.sort(np.asarray(pvalues))
    m = p.size
    grid = np.arange(1, m + 1) / m
    return float(np.max(np.maximum(np.abs(grid - p), np.abs(p - (grid - 1.0 / m)))))


class TestRiskView:
    def test_sorts_by_prediction(self):
        view = risk_view([0.8, 0.2, 0.5], [1, 0, 1])
        assert view.predictions.tolist() == [0.2, 0.5, 0.8]
        assert view.outcomes.tolist() == [0, 1, 1]
        assert view.arm_label == ARM_ALL

    def test_stable_on_ties(self):
        view = risk_view([0.5, 0.5], [1, 0])
        assert view.outcomes.tolist() == [1, 0]

    def test_empty_rejected(self):
        with pytest.raises(EmptySample):
            risk_view([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            risk_view([0.5, 0.6], [1])

    def test_prediction_range_enforced(self):
        with pytest.raises(ValueError):
            risk_view([1.2], [1])
        with pytest.raises(ValueError):
            risk_view([float("nan")], [1])

    def test_outcome_range_enforced(self):
        with pytest.raises(ValueError):
            risk_view([0.5], [2])

    def test_arrays_read_only(self):
        view = risk_view([0.5, 0.6], [1, 0])
        with pytest.raises(ValueError):
            view.predictions[0] = 0.9


class TestCumulativeErrors:
    def test_single_observation(self):
        view = risk_view([0.5], [1])
        assert risk_cumulative_errors(view).tolist() == [0.0, 0.5]

    def test_two_observations_exact(self):
        view = risk_view([0.2, 0.8], [0, 1])
        errors = risk_cumulative_errors(view)
        assert abs(errors[1] - (-0.1)) < EXACT_TOL
        assert abs(errors[2] - 0.0) < EXACT_TOL

    def test_terminal_error_is_mean_residual(self):
        rng = np.random.default_rng(5)
        p = rng.uniform(0.1, 0.9, 50)
        y = (rng.random(50) < p).astype(int)
        view = risk_view(p, y)
        errors = risk_cumulative_errors(view)
        assert abs(errors[-1] - np.mean(y - p)) < EXACT_TOL


class TestRiskProcess:
    def test_two_point_frozen_path(self):
        view = risk_view([0.5, 0.5], [1, 0])
        path = risk_s_process(view)
        assert np.allclose(path.times, [0.0, 0.5, 1.0], atol=EXACT_TOL)
        assert abs(path.locations[1] - 0.7071067811865476) < EXACT_TOL
        assert abs(path.locations[2] - 0.0) < EXACT_TOL
        assert abs(path.sd_scale - np.sqrt(0.5) / 2.0) < EXACT_TOL

    def test_boundary_predictions_rejected(self):
        with pytest.raises(DegenerateVariance):
            risk_s_process(risk_view([0.0, 0.5], [0, 1]))
        with pytest.raises(DegenerateVariance):
            risk_s_process(risk_view([1.0, 0.5], [1, 0]))

    def test_delta_axis_carries_sorted_predictions(self):
        view = risk_view([0.7, 0.3], [1, 0])
        path = risk_s_process(view)
        assert np.isnan(path.deltas[0])
        assert path.deltas[1:].tolist() == [0.3, 0.7]

    @given(
        st.lists(
            st.tuples(st.floats(0.05, 0.95), st.integers(0, 1)),
            min_size=1,
            max_size=40,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_path_identities(self, pairs):
        p = [a for a, _ in pairs]
        y = [b for _, b in pairs]
        path = risk_s_process(risk_view(p, y))
        assert path.times[-1] == 1.0
        assert np.all(np.diff(path.times) > 0)
        # the raw and standardized scales are the same path
        assert np.max(np.abs(path.locations * path.sd_scale - path.raw_errors)) < EXACT_TOL
        assert abs(path.terminal_raw_error - np.mean(np.array(y) - np.array(p))) < EXACT_TOL


def _two_arm_sample(seed=0, n=200, shift0=0.0, shift1=0.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    arm = (rng.random(n) < 0.5).astype(np.int8)
    pi = expit(-0.5 + 0.4 * x)
    treated_risk = expit(-1.0 + 0.3 * x)
    true0 = expit(-0.5 + shift0 + 0.4 * x)
    true1 = expit(-1.0 + shift1 + 0.3 * x)
    truth = np.where(arm == 1, true1, true0)
    y = (rng.random(n) < truth).astype(np.int8)
    return sample_from_arrays(arm=arm, outcome=y, delta=pi - treated_risk, pi=pi)


class TestPerArmCompound:
    def test_result_structure_and_manual_combination(self):
        sample = _two_arm_sample(seed=1)
        result = per_arm_compound_test(sample)
        assert result.control.p_unified is not None
        assert result.treated.p_unified is not None
        assert abs(
            result.p_compound
            - fisher_combine(result.control.p_unified, result.treated.p_unified)
        ) < EXACT_TOL

    def test_arms_checked_against_their_own_predictions(self):
        sample = _two_arm_sample(seed=2)
        result = per_arm_compound_test(sample)
        control = sample.arm == 0
        treated = sample.arm == 1
        view0 = risk_view(sample.pi[control], sample.outcome[control], ARM_CONTROL)
        view1 = risk_view(
            sample.pi[treated] - sample.delta[treated],
            sample.outcome[treated],
            ARM_TREATED,
        )
        from itecalib.inference import bridge_test

        assert result.control.bridge_stat == bridge_test(risk_s_process(view0)).bridge_stat
        assert result.treated.bridge_stat == bridge_test(risk_s_process(view1)).bridge_stat

    def test_bm_variant(self):
        sample = _two_arm_sample(seed=3)
        result = per_arm_compound_test(sample, test="bm")
        assert result.control.p_unified is None
        assert abs(
            result.p_compound
            - fisher_combine(result.control.p_bm, result.treated.p_bm)
        ) < EXACT_TOL

    def test_unknown_test_rejected(self):
        sample = _two_arm_sample(seed=4)
        with pytest.raises(ValueError):
            per_arm_compound_test(sample, test="ks")

    def test_requires_baseline_risks(self):
        sample = _two_arm_sample(seed=5)
        bare = sample_from_arrays(
            arm=sample.arm, outcome=sample.outcome, delta=sample.delta
        )
        with pytest.raises(MissingBaselineRisk):
            per_arm_compound_test(bare)

    def test_requires_both_arms(self):
        with pytest.raises(SingleArmSample):
            sample_from_arrays(
                arm=np.zeros(10, dtype=int),
                outcome=np.zeros(10, dtype=int),
                delta=np.full(10, 0.1),
                pi=np.full(10, 0.5),
            )


class TestRiskNullBehavior:
    def test_calibrated_predictions_give_uniform_pvalues(self):
        # 2000 calibrated replicates: terminal errors centered, p-values uniform
        rng = np.random.default_rng(1010)
        reps, n = 2000, 1000
        terminal = np.empty(reps)
        pvals = np.empty(reps)
        from itecalib.inference import bridge_test

        for r in range(reps):
            x = rng.standard_normal(n)
            p = expit(-1.0 + 0.8 * x)
            y = (rng.random(n) < p).astype(np.int8)
            path = risk_s_process(risk_view(p, y))
            terminal[r] = path.terminal_raw_error
            pvals[r] = bridge_test(path).p_unified
        assert abs(terminal.mean()) < 3.0 * terminal.std() / np.sqrt(reps)
        assert uniform_ks(pvals) < KS_BOUND

    def test_per_arm_null_rejection_rate(self):
        rng = np.random.default_rng(909)
        reps, n = 2000, 4000
        reject = 0
        for r in range(reps):
            sample = _two_arm_sample(seed=rng.integers(2**63), n=n)
            if per_arm_compound_test(sample).p_compound < 0.05:
                reject += 1
        rate = reject / reps
        assert NULL_RATE_BAND[0] <= rate <= NULL_RATE_BAND[1]

    def test_per_arm_detects_treated_miscalibration(self):
        rng = np.random.default_rng(1212)
        reps, n = 200, 2000
        reject = 0
        for r in range(reps):
            sample = _two_arm_sample(seed=rng.integers(2**63), n=n, shift1=-0.5)
            if per_arm_compound_test(sample).p_compound < 0.05:
                reject += 1
        assert reject / reps > 0.5
