"""Core data types for cumulative calibration assessment of treatment-benefit models.

A validation sample is a sequence of trial subjects, each carrying a treatment
arm, a binary outcome, a predicted absolute risk reduction, and optionally a
predicted baseline risk and an alternate ordering covariate. Every cumulative
process in this package is built on a deterministically ordered sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

TIME_TOL = 1e-12

RISK = "risk"
ITE_CONDITIONAL = "ite-conditional"
ITE_MARGINAL = "ite-marginal"

ORDER_BY_DELTA = "delta"
ORDER_BY_KEY = "order_key"


class ValidationError(ValueError):
    """Input data violates a structural requirement (CLI exit code 2)."""


class EmptySample(ValidationError):
    pass


class SingleArmSample(ValidationError):
    """Every sample must contain at least one control and one treated subject."""


class MissingOrderKey(ValidationError):
    pass


class MissingBaselineRisk(ValidationError):
    """Operation requires predicted baseline risks, absent from the sample."""


class DegenerateVariance(ValueError):
    """Zero or invalid variance makes the standardized process undefined (CLI exit code 3)."""


class FieldOutOfRange(ValidationError):
    """A record field is outside its valid range; carries field name and record index."""

    def __init__(self, fieldname: str, index: int, value: object):
        self.fieldname = fieldname
        self.index = index
        self.value = value
        super().__init__(f"record {index}: {fieldname}={value!r} out of range")


@dataclass(frozen=True)
class SubjectRecord:
    """One trial participant.

    arm: treatment indicator, 0 = control, 1 = treated.
    outcome: observed binary response in {0, 1}.
    delta: predicted treatment benefit (absolute risk reduction) in [-1, 1].
    pi: predicted baseline (control-arm) risk in [0, 1], if the model outputs risks.
    order_key: optional covariate for assessing calibration across its strata
        instead of across predicted benefit.
    """

    arm: int
    outcome: int
    delta: float
    pi: Optional[float] = None
    order_key: Optional[float] = None


def _validate_record(rec: SubjectRecord, index: int) -> None:
    if rec.arm not in (0, 1):
        raise FieldOutOfRange("arm", index, rec.arm)
    if rec.outcome not in (0, 1):
        raise FieldOutOfRange("outcome", index, rec.outcome)
    if not np.isfinite(rec.delta) or not -1.0 <= rec.delta <= 1.0:
        raise FieldOutOfRange("delta", index, rec.delta)
    if rec.pi is not None:
        if not np.isfinite(rec.pi) or not 0.0 <= rec.pi <= 1.0:
            raise FieldOutOfRange("pi", index, rec.pi)
        # predicted risk under treatment must itself be a probability
        if not 0.0 <= rec.pi - rec.delta <= 1.0:
            raise FieldOutOfRange("pi - delta", index, rec.pi - rec.delta)
    if rec.order_key is not None and not np.isfinite(rec.order_key):
        raise FieldOutOfRange("order_key", index, rec.order_key)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class OrderedSample:
    """Validated sample sorted ascending by the active ordering key.

    Stores column arrays; ``records`` materializes SubjectRecord views on
    demand. Arrays are read-only, so instances are safe to share.
    """

    arm: np.ndarray
    outcome: np.ndarray
    delta: np.ndarray
    pi: Optional[np.ndarray]
    order_key: Optional[np.ndarray]
    ordering: str
    tie_flag: bool

    @property
    def n(self) -> int:
        return self.arm.shape[0]

    @property
    def ordering_values(self) -> np.ndarray:
        """Values of the active ordering key, ascending."""
        if self.ordering == ORDER_BY_KEY:
            assert self.order_key is not None
            return self.order_key
        return self.delta

    @property
    def records(self) -> tuple[SubjectRecord, ...]:
        pi = self.pi if self.pi is not None else [None] * self.n
        h = self.order_key if self.order_key is not None else [None] * self.n
        return tuple(
            SubjectRecord(
                arm=int(self.arm[i]),
                outcome=int(self.outcome[i]),
                delta=float(self.delta[i]),
                pi=None if pi[i] is None else float(pi[i]),
                order_key=None if h[i] is None else float(h[i]),
            )
            for i in range(self.n)
        )

    def require_pi(self) -> np.ndarray:
        if self.pi is None:
            raise MissingBaselineRisk(
                "sample has no predicted baseline risks (pi column)"
            )
        return self.pi


def build_sample(
    records: Iterable[SubjectRecord], ordering: str = ORDER_BY_DELTA
) -> OrderedSample:
    """Validate records and sort them ascending by the chosen ordering key.

    Sorting is stable with ties broken by input position, so identical input
    always yields an identical ordered sample. Raises EmptySample,
    FieldOutOfRange, MissingOrderKey, or SingleArmSample on invalid input.
    """
    recs = list(records)
    if not recs:
        raise EmptySample("no records supplied")
    if ordering not in (ORDER_BY_DELTA, ORDER_BY_KEY):
        raise ValueError(f"unknown ordering {ordering!r}")
    for i, rec in enumerate(recs):
        _validate_record(rec, i)
    if ordering == ORDER_BY_KEY:
        missing = [i for i, r in enumerate(recs) if r.order_key is None]
        if missing:
            raise MissingOrderKey(f"order_key absent on record(s) {missing[:5]}")

    arm = np.array([r.arm for r in recs], dtype=np.int8)
    outcome = np.array([r.outcome for r in recs], dtype=np.int8)
    delta = np.array([r.delta for r in recs], dtype=np.float64)
    has_pi = all(r.pi is not None for r in recs)
    pi = np.array([r.pi for r in recs], dtype=np.float64) if has_pi else None
    has_key = all(r.order_key is not None for r in recs)
    key_arr = (
        np.array([r.order_key for r in recs], dtype=np.float64) if has_key else None
    )

    keys = key_arr if ordering == ORDER_BY_KEY else delta
    assert keys is not None
    return _assemble(arm, outcome, delta, pi, key_arr, keys, ordering)


def sample_from_arrays(
    arm: np.ndarray,
    outcome: np.ndarray,
    delta: np.ndarray,
    pi: Optional[np.ndarray] = None,
    order_key: Optional[np.ndarray] = None,
    ordering: str = ORDER_BY_DELTA,
) -> OrderedSample:
    """Array-based fast path used by the simulation engine.

    Performs the same validation and ordering as build_sample without
    materializing per-subject records.
    """
    arm = np.asarray(arm)
    outcome = np.asarray(outcome)
    delta = np.asarray(delta, dtype=np.float64)
    n = arm.shape[0]
    if n == 0:
        raise EmptySample("no records supplied")
    if not np.isin(arm, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(arm, (0, 1)))[0])
        raise FieldOutOfRange("arm", bad, arm[bad])
    if not np.isin(outcome, (0, 1)).all():
        bad = int(np.flatnonzero(~np.isin(outcome, (0, 1)))[0])
        raise FieldOutOfRange("outcome", bad, outcome[bad])
    if not (np.isfinite(delta).all() and (np.abs(delta) <= 1.0).all()):
        bad = int(np.flatnonzero(~(np.isfinite(delta) & (np.abs(delta) <= 1.0)))[0])
        raise FieldOutOfRange("delta", bad, delta[bad])
    if pi is not None:
        pi = np.asarray(pi, dtype=np.float64)
        ok = np.isfinite(pi) & (pi >= 0.0) & (pi <= 1.0)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise FieldOutOfRange("pi", bad, pi[bad])
        treated_risk = pi - delta
        ok = (treated_risk >= 0.0) & (treated_risk <= 1.0)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise FieldOutOfRange("pi - delta", bad, treated_risk[bad])
    if ordering == ORDER_BY_KEY:
        if order_key is None:
            raise MissingOrderKey("order_key column absent")
        order_key = np.asarray(order_key, dtype=np.float64)
        keys = order_key
    else:
        if order_key is not None:
            order_key = np.asarray(order_key, dtype=np.float64)
        keys = delta
    return _assemble(
        arm.astype(np.int8), outcome.astype(np.int8), delta, pi, order_key, keys, ordering
    )


def _assemble(arm, outcome, delta, pi, order_key, keys, ordering) -> OrderedSample:
    if arm.sum() == 0 or arm.sum() == arm.shape[0]:
        raise SingleArmSample(
            "sample must contain at least one control and one treated subject"
        )
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    tie_flag = bool(np.any(sorted_keys[1:] == sorted_keys[:-1]))
    return OrderedSample(
        arm=_frozen(arm[order]),
        outcome=_frozen(outcome[order]),
        delta=_frozen(delta[order]),
        pi=None if pi is None else _frozen(pi[order]),
        order_key=None if order_key is None else _frozen(order_key[order]),
        ordering=ordering,
        tie_flag=tie_flag,
    )


@dataclass(frozen=True)
class ProcessPath:
    """A realized standardized cumulative-error process.

    times and locations are the (t_k, S_k) vertices of the path including the
    origin; raw_errors holds the unstandardized cumulative errors C_k in
    probability units. sd_scale is the probability-per-standard-deviation
    factor linking the two scales: C_k = S_k * sd_scale for every k.
    deltas aligns the active ordering-key value with each vertex (index 0,
    the origin, carries NaN); it drives the secondary plot axis.
    """

    times: np.ndarray
    locations: np.ndarray
    raw_errors: np.ndarray
    kind: str
    deltas: np.ndarray
    sd_scale: float

    def __post_init__(self):
        n1 = self.times.shape[0]
        if self.locations.shape[0] != n1 or self.raw_errors.shape[0] != n1:
            raise ValueError("times, locations, raw_errors must share one length")
        if n1 < 2:
            raise ValueError("path needs at least one observation beyond the origin")
        if self.times[0] != 0.0 or self.locations[0] != 0.0 or self.raw_errors[0] != 0.0:
            raise ValueError("path must start at the origin")
        if abs(self.times[-1] - 1.0) > TIME_TOL:
            raise ValueError(f"terminal time {self.times[-1]!r} != 1")
        if self.kind in (RISK, ITE_CONDITIONAL) and not np.all(
            np.diff(self.times) > 0
        ):
            raise ValueError(f"{self.kind} path requires strictly increasing times")
        for a in (self.times, self.locations, self.raw_errors, self.deltas):
            a.flags.writeable = False

    @property
    def n(self) -> int:
        return self.times.shape[0] - 1

    @property
    def terminal_location(self) -> float:
        return float(self.locations[-1])

    @property
    def terminal_raw_error(self) -> float:
        return float(self.raw_errors[-1])


@dataclass(frozen=True)
class TestReport:
    """Statistics and p-values from the calibration tests on one path.

    s_n is the terminal standardized location (a z-score for mean
    calibration) and c_n the terminal raw cumulative error. Fields not
    produced by the requested test are None.
    """

    s_n: Optional[float] = None
    p_mean: Optional[float] = None
    bridge_stat: Optional[float] = None
    p_bridge: Optional[float] = None
    p_unified: Optional[float] = None
    bm_stat: Optional[float] = None
    p_bm: Optional[float] = None
    c_n: Optional[float] = None
    warnings: tuple[str, ...] = field(default_factory=tuple)
