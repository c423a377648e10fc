"""Scenario definitions, replicate generation, and Monte Carlo aggregation."""

import json

import numpy as np
import pytest

from itecalib.io import dump_json
from itecalib.simulation import (
    ECDF_GRID,
    REFERENCE_BETA,
    TEST_NAMES,
    ScenarioSpec,
    generate_replicate,
    load_scenario_catalog,
    predicted_risks,
    run_monte_carlo,
    scenario_from_catalog,
    true_calibration_metrics,
    true_risks,
)

QUAD_TOL = 1e-6
NULL_TOL = 1e-9
KS_BOUND = 0.05
PROXIMITY_BOUND = 0.05

SET2_PARAMS = {
    "s1": (-0.25, 0.75),
    "s2": (0.0, 0.75),
    "s3": (0.25, 0.75),
    "s4": (-0.25, 1.0),
    "s5": (0.0, 1.0),
    "s6": (0.25, 1.0),
    "s7": (-0.25, 1.5),
    "s8": (0.0, 1.5),
    "s9": (0.25, 1.5),
}
SET3_PARAMS = {
    "s1": (0.0, 1.0, -0.25, 1.0),
    "s2": (-0.25, 1.0, 0.0, 1.0),
    "s3": (0.25, 1.0, 0.0, 1.0),
    "s4": (0.0, 1.0, 0.25, 1.0),
    "s5": (0.0, 0.5, 0.25, 1.0),
    "s6": (0.0, 0.5, 0.0, 1.0),
    "s7": (0.0, 1.0, 0.0, 0.5),
    "s8": (0.0, 1.5, 0.0, 1.0),
    "s9": (0.0, 1.0, 0.0, 1.5),
    "s10": (0.0, 0.5, 0.0, 0.5),
    "s11": (0.0, 1.5, 0.0, 1.5),
    "s12": (0.0, 0.0, -0.5, 0.0),
}


def spec1(**kw):
    base = dict(set_id=1, n=200, replicates=40, seed=7)
    base.update(kw)
    return ScenarioSpec(**base)


class TestScenarioSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            spec1(set_id=4)
        with pytest.raises(ValueError):
            spec1(n=1)
        with pytest.raises(ValueError):
            spec1(replicates=0)
        with pytest.raises(ValueError):
            spec1(arm_probability=0.0)
        with pytest.raises(ValueError):
            spec1(arm_probability=1.0)

    def test_defaults(self):
        s = spec1()
        assert s.beta == REFERENCE_BETA
        assert s.arm_probability == 0.5
        assert (s.alpha, s.gamma) == (0.0, 1.0)
        assert (s.alpha0, s.gamma0, s.alpha1, s.gamma1) == (0.0, 1.0, 0.0, 1.0)


class TestRiskModels:
    def test_predicted_risks_at_origin(self):
        p0, p1 = predicted_risks(REFERENCE_BETA, np.array([0.0]))
        assert abs(p0[0] - 0.5) < NULL_TOL
        assert abs(p1[0] - 0.3775406687981454) < NULL_TOL
        assert abs((p0[0] - p1[0]) - 0.1224593312018546) < NULL_TOL

    def test_family_one_truth_equals_prediction(self):
        x = np.linspace(-3, 3, 31)
        p0, p1 = predicted_risks(REFERENCE_BETA, x)
        q0, q1 = true_risks(spec1(), x)
        assert np.allclose(q0, p0, atol=0)
        assert np.allclose(q1, p1, atol=0)

    def test_family_two_identity_parameters(self):
        x = np.linspace(-3, 3, 31)
        p0, p1 = predicted_risks(REFERENCE_BETA, x)
        q0, q1 = true_risks(spec1(set_id=2, alpha=0.0, gamma=1.0), x)
        assert np.allclose(q0, p0, atol=NULL_TOL)
        assert np.allclose(q1, p1, atol=NULL_TOL)

    def test_family_three_identity_parameters(self):
        x = np.linspace(-3, 3, 31)
        p0, p1 = predicted_risks(REFERENCE_BETA, x)
        q0, q1 = true_risks(spec1(set_id=3), x)
        assert np.allclose(q0, p0, atol=NULL_TOL)
        assert np.allclose(q1, p1, atol=NULL_TOL)

    def test_family_two_distorts_treated_arm_only(self):
        x = np.linspace(-3, 3, 31)
        p0, _ = predicted_risks(REFERENCE_BETA, x)
        q0, q1 = true_risks(spec1(set_id=2, alpha=0.3, gamma=1.4), x)
        assert np.allclose(q0, p0, atol=0)
        _, p1 = predicted_risks(REFERENCE_BETA, x)
        assert not np.allclose(q1, p1, atol=1e-3)


class TestTrueMetrics:
    def test_family_one_is_exactly_calibrated(self):
        mce, mace = true_calibration_metrics(spec1())
        assert abs(mce) < NULL_TOL
        assert abs(mace) < NULL_TOL

    def test_family_two_frozen_values(self):
        mce, mace = true_calibration_metrics(spec1(set_id=2, alpha=0.25, gamma=1.0))
        assert abs(mce - (-0.0572245023576422)) < QUAD_TOL
        assert abs(mace - 0.0572245023576422) < QUAD_TOL

    def test_family_three_frozen_values(self):
        mce, mace = true_calibration_metrics(
            spec1(set_id=3, alpha0=0.0, gamma0=0.0, alpha1=-0.5, gamma1=0.0)
        )
        assert abs(mce - 0.0064832801365100) < QUAD_TOL
        assert abs(mace - 0.0413972598724711) < QUAD_TOL


class TestReplicateGeneration:
    def test_deterministic_per_replicate(self):
        s = spec1(n=300)
        a = generate_replicate(s, 5)
        b = generate_replicate(s, 5)
        assert np.array_equal(a.outcome, b.outcome)
        assert np.array_equal(a.arm, b.arm)
        assert np.array_equal(a.delta, b.delta)

    def test_replicates_use_distinct_streams(self):
        s = spec1(n=300)
        a = generate_replicate(s, 5)
        b = generate_replicate(s, 6)
        assert not np.array_equal(a.outcome, b.outcome)

    def test_seed_changes_stream(self):
        a = generate_replicate(spec1(n=300), 0)
        b = generate_replicate(spec1(n=300, seed=8), 0)
        assert not np.array_equal(a.delta, b.delta)

    def test_predictions_come_from_reference_model(self):
        s = spec1(set_id=2, n=300, alpha=0.3, gamma=1.5)
        sample = generate_replicate(s, 0)
        # delta and pi must be reference-model quantities regardless of truth
        assert np.all(sample.pi > 0) and np.all(sample.pi < 1)
        p1 = sample.pi - sample.delta
        lp0 = np.log(sample.pi / (1 - sample.pi))
        lp1 = np.log(p1 / (1 - p1))
        x = (lp0 - REFERENCE_BETA[0]) / REFERENCE_BETA[1]
        expected_lp1 = lp0 + REFERENCE_BETA[2] + REFERENCE_BETA[3] * x
        assert np.allclose(lp1, expected_lp1, atol=1e-8)


class TestCatalog:
    def test_family_two_catalog_complete(self):
        catalog = load_scenario_catalog(2)
        assert set(catalog) == set(SET2_PARAMS)
        for name, (alpha, gamma) in SET2_PARAMS.items():
            assert catalog[name] == {"alpha": alpha, "gamma": gamma}

    def test_family_three_catalog_complete(self):
        catalog = load_scenario_catalog(3)
        assert set(catalog) == set(SET3_PARAMS)
        for name, (a0, g0, a1, g1) in SET3_PARAMS.items():
            assert catalog[name] == {
                "alpha0": a0,
                "gamma0": g0,
                "alpha1": a1,
                "gamma1": g1,
            }

    def test_family_one_has_no_catalog(self):
        with pytest.raises(ValueError):
            load_scenario_catalog(1)

    def test_scenario_from_catalog(self):
        s = scenario_from_catalog(2, "s3", n=500, replicates=10, seed=42)
        assert (s.alpha, s.gamma) == (0.25, 0.75)
        assert s.label == "s3"
        assert (s.n, s.replicates, s.seed) == (500, 10, 42)

    def test_unknown_scenario_lists_available(self):
        with pytest.raises(KeyError, match="available"):
            scenario_from_catalog(3, "s99", n=500, replicates=10, seed=42)


class TestRunMonteCarlo:
    def test_small_run_aggregates(self):
        summary = run_monte_carlo(spec1())
        for name in TEST_NAMES:
            rate = summary.rejection_rate[name]
            m = summary.n_effective[name]
            assert 0.0 <= rate <= 1.0
            assert m == 40
            assert abs(summary.mc_se[name] - np.sqrt(rate * (1 - rate) / m)) < 1e-15
            ecdf = summary.ecdf[name]
            assert np.all(np.diff(ecdf) >= 0)
            assert ecdf[-1] == 1.0
        assert summary.degenerate == ()
        assert np.array_equal(summary.ecdf_grid, ECDF_GRID)

    def test_test_selection_subset(self):
        summary = run_monte_carlo(spec1(), tests=("conditional-bridge",))
        assert list(summary.rejection_rate) == ["conditional-bridge"]
        payload = summary.to_json_dict()
        assert list(payload["tests"]) == ["conditional-bridge"]

    def test_unknown_test_rejected(self):
        with pytest.raises(ValueError, match="unknown tests"):
            run_monte_carlo(spec1(), tests=("conditional-bridge", "wilcoxon"))

    def test_degenerate_replicates_accounted(self):
        # n = 2: single-subject arms make the marginal variance vanish and
        # half the replicates collapse to a single arm outright
        summary = run_monte_carlo(spec1(n=2, replicates=30, seed=3))
        notes = dict(summary.degenerate)
        single = sum(1 for kind in notes.values() if kind == "single-arm")
        marginal = sum(1 for kind in notes.values() if kind == "marginal-degenerate")
        assert single + marginal == len(notes) == 30
        assert summary.n_effective["conditional-bridge"] == 30 - single
        assert summary.n_effective["marginal-bridge"] == 0
        assert np.isnan(summary.rejection_rate["marginal-bm"])
        payload = summary.to_json_dict()
        assert len(payload["degenerate_replicates"]) == 30
        assert {"replicate", "kind"} == set(payload["degenerate_replicates"][0])

    def test_worker_count_does_not_change_results(self):
        s = spec1(n=100, replicates=24, seed=11)
        serial = run_monte_carlo(s, workers=1)
        pooled = run_monte_carlo(s, workers=2)
        assert dump_json(serial.to_json_dict()) == dump_json(pooled.to_json_dict())

    def test_json_schema_fields(self):
        summary = run_monte_carlo(
            ScenarioSpec(set_id=2, n=50, replicates=8, seed=1, alpha=0.25, gamma=1.5)
        )
        payload = summary.to_json_dict()
        assert payload["schema"] == "itecalib-mc-summary"
        assert payload["schema_version"] == 1
        assert payload["significance_level"] == 0.05
        assert payload["scenario"]["set"] == 2
        assert payload["scenario"]["alpha"] == 0.25
        assert payload["scenario"]["gamma"] == 1.5
        assert "alpha0" not in payload["scenario"]
        assert set(payload["tests"]) == set(TEST_NAMES)
        block = payload["tests"]["conditional-bridge"]
        assert set(block) == {"rejection_rate", "mc_se", "n_effective", "p_ecdf"}
        assert len(block["p_ecdf"]["grid"]) == 100
        text = dump_json(payload)
        assert json.loads(text)["schema"] == "itecalib-mc-summary"

    def test_family_three_scenario_fields(self):
        summary = run_monte_carlo(
            ScenarioSpec(
                set_id=3, n=50, replicates=4, seed=1, alpha0=0.1, gamma0=0.5
            )
        )
        scenario = summary.to_json_dict()["scenario"]
        assert scenario["alpha0"] == 0.1
        assert scenario["gamma0"] == 0.5
        assert "alpha" not in scenario


class TestStatisticalBehavior:
    def test_null_pvalues_uniform(self):
        # calibrated family: the unified p-value ECDF stays near the diagonal
        summary = run_monte_carlo(
            spec1(n=500, replicates=1000, seed=1313), tests=("conditional-bridge",)
        )
        gap = np.max(np.abs(summary.ecdf["conditional-bridge"] - ECDF_GRID))
        assert gap < KS_BOUND

    def test_conditional_and_marginal_power_agree(self):
        # the two standardizations target the same departure at large n
        for name in ("s3", "s9"):
            s = scenario_from_catalog(2, name, n=10000, replicates=600, seed=606)
            summary = run_monte_carlo(s, tests=("conditional-bridge", "marginal-bridge"))
            diff = abs(
                summary.rejection_rate["conditional-bridge"]
                - summary.rejection_rate["marginal-bridge"]
            )
            assert diff <= PROXIMITY_BOUND

    def test_bridge_not_weaker_than_bm_on_scale_distortions(self):
        # shape departures are where the bridged statistic adds power
        for name in ("s7", "s9", "s10", "s11", "s12"):
            s = scenario_from_catalog(3, name, n=4000, replicates=400, seed=707)
            summary = run_monte_carlo(s, tests=("conditional-bm", "conditional-bridge"))
            bm_rate = summary.rejection_rate["conditional-bm"]
            bridge_rate = summary.rejection_rate["conditional-bridge"]
            slack = 2.0 * np.sqrt(
                summary.mc_se["conditional-bm"] ** 2
                + summary.mc_se["conditional-bridge"] ** 2
            )
            assert bridge_rate >= bm_rate - slack
