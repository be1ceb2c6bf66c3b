"""Iterative and bunch adjustment of the Viterbi alignment.

Both procedures start from the unrestricted Viterbi path and replace the
states at badly classified time points, either all at once (*bunch*) or
one per round with refreshed conditional probabilities (*iterative*).
Replacement states come from the posterior mode (``pmap`` mode) or from
the revealed true path (``peep`` mode).

The iterative procedure keeps the adjusted path admissible by
construction.  The bunch procedure may pin mutually incompatible states
in ``pmap`` mode; such runs are reported with ``log_posterior = -inf``
and a materialized overlay path (Viterbi outside the pinned set, pinned
states on it) so that an error count can still be quoted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .inference import (
    InadmissibleError,
    PinSet,
    PosteriorTables,
    _as_pinset,
    _joint_log_likelihood,
    _log_inputs,
    _tables,
    _viterbi,
)

__all__ = [
    "RefinementConfig",
    "Metrics",
    "IterationRecord",
    "RefinementTrace",
    "BunchResult",
    "iterative_refine",
    "bunch_refine",
    "compute_metrics",
    "TRACE_FIELDS",
    "trace_rows",
]

MODES = ("pmap", "peep")


@dataclass(frozen=True)
class RefinementConfig:
    """Parameters of the iterative adjustment loop.

    ``delta`` is the classification-probability threshold, required to
    satisfy ``0 < delta < 1/K`` unless ``allow_large_delta`` lifts the
    cap.  ``stop_at_threshold=False`` disables the early exit so that a
    run of exactly ``max_iterations`` rounds can be traced.
    """

    delta: float
    max_iterations: int
    mode: str = "pmap"
    true_path: Optional[np.ndarray] = None
    stop_at_threshold: bool = True
    allow_large_delta: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie strictly between 0 and 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.mode == "peep":
            if self.true_path is None:
                raise ValueError("peep mode requires true_path")
            object.__setattr__(
                self, "true_path", np.asarray(self.true_path, dtype=int)
            )


@dataclass(frozen=True)
class Metrics:
    """Summary of one adjusted path.

    ``errors`` is the Hamming distance to the true path (None when the
    truth is unknown).  ``expected_errors`` is ``n`` minus the summed
    classification probabilities; in peep mode these are conditional on
    the revealed states, otherwise unconditional.  The two ``rho_min``
    fields are the smallest unconditional/pin-conditional classification
    probability along the path.  Undefined fields (inadmissible bunch
    runs) are None.
    """

    errors: Optional[int]
    expected_errors: Optional[float]
    rho_min_uncond: Optional[float]
    rho_min_cond: Optional[float]
    log_posterior: float


@dataclass(frozen=True)
class IterationRecord:
    """State of the iterative loop after one round (round 0 = no pins)."""

    iteration: int
    time: Optional[int]
    state: Optional[int]
    rho: np.ndarray
    metrics: Metrics


@dataclass(frozen=True)
class RefinementTrace:
    records: tuple[IterationRecord, ...]
    pins: PinSet
    stopped_by_threshold: bool

    @property
    def iterations(self) -> int:
        return len(self.records) - 1


@dataclass(frozen=True)
class BunchResult:
    path: np.ndarray
    metrics: Metrics
    pins: PinSet
    admissible: bool


def _hamming(path, true_path) -> Optional[int]:
    if true_path is None:
        return None
    return int(np.sum(np.asarray(path) != np.asarray(true_path)))


def _snapshot(
    path: np.ndarray,
    rho_cond: np.ndarray,
    uncond: PosteriorTables,
    log_pi,
    log_P,
    log_b,
    mode: str,
    true_path,
) -> Metrics:
    """Metrics of the current path given the conditional probabilities.

    Expected errors use the conditional probabilities in peep mode (the
    revealed states are genuine information) and the unconditional ones
    in pmap mode (the pins are constraints we chose, not knowledge).
    """
    n = len(path)
    rho_uncond = uncond.smoothing[np.arange(n), path]
    expected_base = rho_cond if mode == "peep" else rho_uncond
    joint = _joint_log_likelihood(log_pi, log_P, log_b, path)
    lp = joint - uncond.log_likelihood if joint > -np.inf else -np.inf
    return Metrics(
        errors=_hamming(path, true_path),
        expected_errors=float(n - expected_base.sum()),
        rho_min_uncond=float(rho_uncond.min()),
        rho_min_cond=float(rho_cond.min()),
        log_posterior=lp,
    )


def iterative_refine(spec, obs, config: RefinementConfig):
    """Run the iterative adjustment loop; return ``(path, trace)``.

    Each round pins the time point with the lowest conditional
    classification probability to the conditional posterior mode (pmap
    mode) or to the true state (peep mode), then re-solves the restricted
    Viterbi problem and refreshes the conditional probabilities.  The
    loop ends once every probability reaches ``delta``, or after
    ``max_iterations`` rounds.  The output path always has positive
    posterior probability.
    """
    k = spec.num_states
    if not config.allow_large_delta and config.delta >= 1.0 / k:
        raise ValueError("delta must be < 1/K (set allow_large_delta to override)")
    log_pi, log_P, log_b = _log_inputs(spec, obs, None)
    n = log_b.shape[0]
    truth = config.true_path
    if truth is not None and len(truth) != n:
        raise ValueError("true_path length does not match observations")
    if truth is not None and config.mode == "peep":
        if _joint_log_likelihood(log_pi, log_P, log_b, truth) == -np.inf:
            raise ValueError("true_path has zero joint likelihood with observations")

    uncond = _tables(log_pi, log_P, log_b)
    tables = uncond
    masked = log_b
    path = _viterbi(log_pi, log_P, log_b)
    rho = tables.smoothing[np.arange(n), path]
    records = [
        IterationRecord(
            0, None, None, rho,
            _snapshot(path, rho, uncond, log_pi, log_P, log_b, config.mode, truth),
        )
    ]
    pins = PinSet()
    stopped = False
    pinned_times: set[int] = set()
    for _ in range(config.max_iterations):
        if config.stop_at_threshold and rho.min() >= config.delta:
            stopped = True
            break
        t_m = int(np.argmin(rho))
        if t_m in pinned_times:
            # only possible once every probability equals 1; nothing to do
            stopped = True
            break
        if config.mode == "peep":
            w_m = int(truth[t_m])
        else:
            w_m = int(np.argmax(tables.smoothing[t_m]))
        pins = pins.add(t_m, w_m)
        pinned_times.add(t_m)
        if masked is log_b:
            masked = log_b.copy()
        kept = masked[t_m, w_m]
        masked[t_m, :] = -np.inf
        masked[t_m, w_m] = kept
        path = _viterbi(log_pi, log_P, masked)
        tables = _tables(log_pi, log_P, masked)
        rho = tables.smoothing[np.arange(n), path]
        records.append(
            IterationRecord(
                len(records), t_m, w_m, rho,
                _snapshot(path, rho, uncond, log_pi, log_P, log_b, config.mode, truth),
            )
        )
    return path, RefinementTrace(tuple(records), pins, stopped)


def bunch_refine(
    spec,
    obs,
    *,
    delta: Optional[float] = None,
    count: Optional[int] = None,
    mode: str = "pmap",
    true_path=None,
) -> BunchResult:
    """Pin every badly classified time point at once, then re-decode.

    Exactly one of ``delta`` (pin all times with classification
    probability <= delta) and ``count`` (pin the ``count`` lowest, ties
    to the earlier time) must be given.  In pmap mode the pinned states
    are the unconditional posterior modes and the result can be
    inadmissible; in peep mode they are the true states and the result
    always has positive posterior probability.
    """
    if (delta is None) == (count is None):
        raise ValueError("give exactly one of delta and count")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "peep" and true_path is None:
        raise ValueError("peep mode requires true_path")
    log_pi, log_P, log_b = _log_inputs(spec, obs, None)
    n = log_b.shape[0]
    truth = None if true_path is None else np.asarray(true_path, dtype=int)

    uncond = _tables(log_pi, log_P, log_b)
    base_path = _viterbi(log_pi, log_P, log_b)
    rho = uncond.smoothing[np.arange(n), base_path]
    if delta is not None:
        chosen = np.nonzero(rho <= delta)[0]
    else:
        order = np.lexsort((np.arange(n), rho))
        chosen = np.sort(order[: int(count)])
    if mode == "peep":
        states = truth[chosen]
    else:
        states = np.argmax(uncond.smoothing[chosen], axis=1)
    pins = PinSet(tuple(zip(chosen.tolist(), states.tolist())))

    masked = log_b.copy()
    for t, w in pins:
        kept = masked[t, w]
        masked[t, :] = -np.inf
        masked[t, w] = kept
    try:
        path = _viterbi(log_pi, log_P, masked)
        tables = _tables(log_pi, log_P, masked)
    except InadmissibleError:
        overlay = base_path.copy()
        overlay[chosen] = states
        metrics = Metrics(
            errors=_hamming(overlay, truth),
            expected_errors=None,
            rho_min_uncond=float(
                uncond.smoothing[np.arange(n), overlay].min()
            ),
            rho_min_cond=None,
            log_posterior=-np.inf,
        )
        return BunchResult(overlay, metrics, pins, False)
    rho_cond = tables.smoothing[np.arange(n), path]
    metrics = _snapshot(path, rho_cond, uncond, log_pi, log_P, log_b, mode, truth)
    return BunchResult(path, metrics, pins, True)


def compute_metrics(spec, obs, path, pins=None, true_path=None) -> Metrics:
    """Metrics of an arbitrary path under an arbitrary pin set.

    ``expected_errors`` and ``rho_min_cond`` are computed under the
    smoothing probabilities conditional on ``pins`` (the unconditional
    ones when ``pins`` is empty); both are None when the pin set itself
    is inadmissible.  ``rho_min_uncond`` and ``log_posterior`` never
    depend on the pins.
    """
    path = np.asarray(path, dtype=int)
    log_pi, log_P, log_b = _log_inputs(spec, obs, None)
    n = log_b.shape[0]
    uncond = _tables(log_pi, log_P, log_b)
    pinset = _as_pinset(pins)
    try:
        cond = _tables(*_log_inputs(spec, obs, pinset)) if pinset.pairs else uncond
    except InadmissibleError:
        cond = None
    joint = _joint_log_likelihood(log_pi, log_P, log_b, path)
    rho_cond = None if cond is None else cond.smoothing[np.arange(n), path]
    truth = None if true_path is None else np.asarray(true_path, dtype=int)
    return Metrics(
        errors=_hamming(path, truth),
        expected_errors=None if rho_cond is None else float(n - rho_cond.sum()),
        rho_min_uncond=float(uncond.smoothing[np.arange(n), path].min()),
        rho_min_cond=None if rho_cond is None else float(rho_cond.min()),
        log_posterior=joint - uncond.log_likelihood if joint > -np.inf else -np.inf,
    )


TRACE_FIELDS = (
    "m",
    "t_m",
    "w_m",
    "errors",
    "expected_errors",
    "rho_min_cond",
    "rho_min_uncond",
    "log_posterior",
)


def trace_rows(trace: RefinementTrace) -> list[dict]:
    """Flatten a trace into rows matching :data:`TRACE_FIELDS`."""
    rows = []
    for rec in trace.records:
        m = rec.metrics
        rows.append(
            {
                "m": rec.iteration,
                "t_m": rec.time,
                "w_m": rec.state,
                "errors": m.errors,
                "expected_errors": m.expected_errors,
                "rho_min_cond": m.rho_min_cond,
                "rho_min_uncond": m.rho_min_uncond,
                "log_posterior": m.log_posterior,
            }
        )
    return rows
