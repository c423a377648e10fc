"""Monte Carlo study engine for the calibration tests.

Three scenario families are covered. In family 1 outcomes are drawn from the
same logistic model that produced the predictions, so every test should hold
its nominal size. Families 2 and 3 distort the true risks away from the
predictions, on the logit scale (location shift alpha and scale gamma in the
treated arm) or through a per-arm signed power transform of the predicted
logit, and measure power.

Replicate streams come from a counter-based generator (Philox) keyed by
(seed, replicate index), so results are reproducible and independent of how
replicates are partitioned across worker processes.
"""

from __future__ import annotations

import configparser
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from .benefit import conditional_s_process, marginal_s_process
from .domain import (
    DegenerateVariance,
    OrderedSample,
    SingleArmSample,
    sample_from_arrays,
)
from .inference import bm_test, bridge_test

REFERENCE_BETA = (0.0, 0.25, -0.5, 0.25)
SIGNIFICANCE_LEVEL = 0.05
TEST_NAMES = (
    "conditional-bm",
    "conditional-bridge",
    "marginal-bm",
    "marginal-bridge",
)
ECDF_GRID = np.round(np.linspace(0.01, 1.0, 100), 10)
WORKERS_ENV_VAR = "ITECALIB_WORKERS"

_NORMAL_PDF_NORM = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class ScenarioSpec:
    """One Monte Carlo scenario: reference model, truth distortion, and sizes."""

    set_id: int
    n: int
    replicates: int
    seed: int
    beta: tuple[float, float, float, float] = REFERENCE_BETA
    # family 2: treated-arm logit location shift and scale
    alpha: float = 0.0
    gamma: float = 1.0
    # family 3: per-arm signed power transform parameters
    alpha0: float = 0.0
    gamma0: float = 1.0
    alpha1: float = 0.0
    gamma1: float = 1.0
    arm_probability: float = 0.5
    label: str = ""

    def __post_init__(self):
        if self.set_id not in (1, 2, 3):
            raise ValueError(f"unknown simulation set {self.set_id}")
        if self.n < 2:
            raise ValueError("scenario requires n >= 2")
        if self.replicates < 1:
            raise ValueError("scenario requires at least one replicate")
        if not 0.0 < self.arm_probability < 1.0:
            raise ValueError("arm allocation probability must be inside (0, 1)")


def predicted_risks(
    beta: Sequence[float], x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Predicted outcome risks (control, treated) of the reference logistic model."""
    b0, bx, ba, bxa = beta
    lp = b0 + bx * x
    return expit(lp), expit(lp + ba + bxa * x)


def true_risks(spec: ScenarioSpec, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """True outcome risks (control, treated) under the scenario's data-generating model."""
    b0, bx, ba, bxa = spec.beta
    lp0 = b0 + bx * x
    lp1 = lp0 + ba + bxa * x
    if spec.set_id == 1:
        return expit(lp0), expit(lp1)
    if spec.set_id == 2:
        return expit(lp0), expit(lp0 + spec.alpha + spec.gamma * (ba + bxa * x))
    return (
        expit(_signed_power(lp0, spec.alpha0, spec.gamma0)),
        expit(_signed_power(lp1, spec.alpha1, spec.gamma1)),
    )


def _signed_power(lp: np.ndarray, alpha_a: float, gamma_a: float) -> np.ndarray:
    return alpha_a + gamma_a * np.sign(lp) * np.abs(lp) ** gamma_a


def _replicate_rng(seed: int, replicate_index: int) -> np.random.Generator:
    key = np.array([seed, replicate_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generate_replicate(spec: ScenarioSpec, replicate_index: int) -> OrderedSample:
    """Draw one validation sample: covariates, arms, predictions, and outcomes.

    Predictions always come from the reference model; outcomes are drawn from
    the scenario's true risks in the assigned arm. Deterministic given
    (seed, replicate_index).
    """
    rng = _replicate_rng(spec.seed, replicate_index)
    x = rng.standard_normal(spec.n)
    arm = (rng.random(spec.n) < spec.arm_probability).astype(np.int8)
    p0, p1 = predicted_risks(spec.beta, x)
    q0, q1 = true_risks(spec, x)
    risk = np.where(arm == 1, q1, q0)
    outcome = (rng.random(spec.n) < risk).astype(np.int8)
    return sample_from_arrays(
        arm=arm, outcome=outcome, delta=p0 - p1, pi=p0
    )


def true_calibration_metrics(spec: ScenarioSpec) -> tuple[float, float]:
    """Population mean and mean absolute error of the predicted benefit.

    Integrates (true benefit - predicted benefit) and its absolute value over
    the standard normal covariate by adaptive quadrature, to absolute
    accuracy well below 1e-4.
    """

    def gap(x: float) -> float:
        xa = np.asarray([x])
        p0, p1 = predicted_risks(spec.beta, xa)
        q0, q1 = true_risks(spec, xa)
        return float((q0[0] - q1[0]) - (p0[0] - p1[0]))

    def weighted(f: Callable[[float], float]) -> float:
        value, _ = quad(
            lambda x: f(x) * _NORMAL_PDF_NORM * np.exp(-0.5 * x * x),
            -np.inf,
            np.inf,
            epsabs=1e-7,
            limit=200,
        )
        return value

    return weighted(gap), weighted(lambda x: abs(gap(x)))


def _replicate_pvalues(spec: ScenarioSpec, replicate_index: int):
    """P-values of the four tests on one replicate; NaN rows for degenerate paths."""
    out = [np.nan] * 4
    note = None
    try:
        sample = generate_replicate(spec, replicate_index)
    except SingleArmSample:
        return out, "single-arm"
    try:
        cond = conditional_s_process(sample)
        out[0] = bm_test(cond).p_bm
        out[1] = bridge_test(cond).p_unified
    except DegenerateVariance:
        note = "conditional-degenerate"
    try:
        marg = marginal_s_process(sample)
        out[2] = bm_test(marg).p_bm
        out[3] = bridge_test(marg).p_unified
    except DegenerateVariance:
        note = "marginal-degenerate" if note is None else "both-degenerate"
    return out, note


def _replicate_worker(args):
    spec, r = args
    return _replicate_pvalues(spec, r)


@dataclass(frozen=True)
class McSummary:
    """Aggregate of one Monte Carlo run: rejection rates, ECDFs, and context."""

    spec: ScenarioSpec
    rejection_rate: dict[str, float]
    mc_se: dict[str, float]
    n_effective: dict[str, int]
    ecdf_grid: np.ndarray
    ecdf: dict[str, np.ndarray]
    mean_calibration_error: float
    mean_abs_calibration_error: float
    degenerate: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    def to_json_dict(self) -> dict:
        scenario = {
            "set": self.spec.set_id,
            "label": self.spec.label,
            "beta": list(self.spec.beta),
            "n": self.spec.n,
            "replicates": self.spec.replicates,
            "seed": self.spec.seed,
            "arm_probability": self.spec.arm_probability,
        }
        if self.spec.set_id == 2:
            scenario["alpha"] = self.spec.alpha
            scenario["gamma"] = self.spec.gamma
        if self.spec.set_id == 3:
            scenario["alpha0"] = self.spec.alpha0
            scenario["gamma0"] = self.spec.gamma0
            scenario["alpha1"] = self.spec.alpha1
            scenario["gamma1"] = self.spec.gamma1
        return {
            "schema": "itecalib-mc-summary",
            "schema_version": 1,
            "scenario": scenario,
            "significance_level": SIGNIFICANCE_LEVEL,
            "true_mean_calibration_error": self.mean_calibration_error,
            "true_mean_abs_calibration_error": self.mean_abs_calibration_error,
            "tests": {
                name: {
                    "rejection_rate": self.rejection_rate[name],
                    "mc_se": self.mc_se[name],
                    "n_effective": self.n_effective[name],
                    "p_ecdf": {
                        "grid": self.ecdf_grid.tolist(),
                        "value": self.ecdf[name].tolist(),
                    },
                }
                for name in TEST_NAMES
                if name in self.rejection_rate
            },
            "degenerate_replicates": [
                {"replicate": r, "kind": kind} for r, kind in self.degenerate
            ],
        }


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    return max(1, workers)


def run_monte_carlo(
    spec: ScenarioSpec,
    tests: Sequence[str] = TEST_NAMES,
    workers: Optional[int] = None,
) -> McSummary:
    """Run all replicates and aggregate rejection rates and p-value ECDFs.

    Aggregation is performed in replicate order over results keyed by
    replicate index, so the summary is bit-identical for a given spec and
    seed regardless of the worker count.
    """
    unknown = [t for t in tests if t not in TEST_NAMES]
    if unknown:
        raise ValueError(f"unknown tests: {', '.join(unknown)}")
    selected = [name for name in TEST_NAMES if name in tests]
    workers = resolve_workers(workers)
    reps = spec.replicates
    if workers <= 1 or reps < 4:
        results = [_replicate_pvalues(spec, r) for r in range(reps)]
    else:
        chunk = max(1, reps // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(
                ex.map(_replicate_worker, ((spec, r) for r in range(reps)), chunksize=chunk)
            )

    pvals = np.array([row for row, _ in results], dtype=np.float64)
    degenerate = tuple(
        (r, note) for r, (_, note) in enumerate(results) if note is not None
    )
    rates: dict[str, float] = {}
    ses: dict[str, float] = {}
    effective: dict[str, int] = {}
    ecdfs: dict[str, np.ndarray] = {}
    for name in selected:
        col = pvals[:, TEST_NAMES.index(name)]
        valid = col[~np.isnan(col)]
        m = valid.size
        effective[name] = int(m)
        if m == 0:
            rates[name] = float("nan")
            ses[name] = float("nan")
            ecdfs[name] = np.full(ECDF_GRID.shape, np.nan)
            continue
        r = float(np.mean(valid < SIGNIFICANCE_LEVEL))
        rates[name] = r
        ses[name] = float(np.sqrt(r * (1.0 - r) / m))
        ecdfs[name] = (valid[None, :] <= ECDF_GRID[:, None]).mean(axis=1)

    mce, mace = true_calibration_metrics(spec)
    return McSummary(
        spec=spec,
        rejection_rate=rates,
        mc_se=ses,
        n_effective=effective,
        ecdf_grid=ECDF_GRID.copy(),
        ecdf=ecdfs,
        mean_calibration_error=mce,
        mean_abs_calibration_error=mace,
        degenerate=degenerate,
    )


def load_scenario_catalog(set_id: int) -> dict[str, dict[str, float]]:
    """Scenario parameter catalog for families 2 and 3, from packaged data."""
    if set_id not in (2, 3):
        raise ValueError("catalogs exist for simulation sets 2 and 3 only")
    parser = configparser.ConfigParser()
    text = (
        resources.files("itecalib")
        .joinpath(f"scenarios/set{set_id}.cfg")
        .read_text(encoding="utf-8")
    )
    parser.read_string(text)
    return {
        name: {key: float(value) for key, value in parser[name].items()}
        for name in parser.sections()
    }


def scenario_from_catalog(
    set_id: int, name: str, n: int, replicates: int, seed: int
) -> ScenarioSpec:
    catalog = load_scenario_catalog(set_id)
    if name not in catalog:
        raise KeyError(
            f"unknown scenario {name!r} for set {set_id}; "
            f"available: {', '.join(catalog)}"
        )
    return ScenarioSpec(
        set_id=set_id,
        n=n,
        replicates=replicates,
        seed=seed,
        label=name,
        **catalog[name],
    )
