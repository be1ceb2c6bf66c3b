"""Exact posterior inference in log space, with optional pin constraints.

All quantities are computed on the log scale; impossible events carry
``-inf`` and are propagated without ever producing NaN.  A *pin* fixes
the hidden state at one time point.  Pins are realized by masking the
log emission scores of all other states at the pinned time, so a single
recursion serves both the unconditional and the conditional case.

Tie-breaking convention, used everywhere in the package: argmax and
argmin take the smallest index among maximizers/minimizers.  For Viterbi
backtracking this applies at every choice, starting from the final time
point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

__all__ = [
    "InadmissibleError",
    "PinSet",
    "PosteriorTables",
    "logsumexp",
    "forward_backward",
    "log_likelihood",
    "viterbi",
    "pmap",
    "classification_probabilities",
    "accuracy",
    "path_log_posterior",
]

NEG_INF = -np.inf


class InadmissibleError(ValueError):
    """No state path is consistent with the observations and pins."""


def logsumexp(a: np.ndarray, axis: Optional[int] = None):
    """log(sum(exp(a))) computed stably; all-(-inf) inputs give -inf."""
    a = np.asarray(a, dtype=float)
    amax = np.max(a, axis=axis, keepdims=True)
    amax = np.where(np.isfinite(amax), amax, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - amax), axis=axis, keepdims=True)) + amax
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class PinSet:
    """Ordered (time, state) constraints with pairwise-distinct times."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple((int(t), int(w)) for t, w in self.pairs)
        times = [t for t, _ in pairs]
        if len(set(times)) != len(times):
            raise ValueError("pin times must be distinct")
        object.__setattr__(self, "pairs", pairs)

    def add(self, t: int, w: int) -> "PinSet":
        return PinSet(self.pairs + ((t, w),))

    @property
    def times(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.pairs)

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(w for _, w in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


Pins = Union[PinSet, Iterable[tuple[int, int]], None]


def _as_pinset(pins: Pins) -> PinSet:
    if pins is None:
        return PinSet()
    if isinstance(pins, PinSet):
        return pins
    return PinSet(tuple(pins))


@dataclass(frozen=True)
class PosteriorTables:
    """Forward/backward trellises and the smoothing matrix they induce.

    ``smoothing[t, s]`` is the posterior probability of state ``s`` at
    time ``t`` given all observations and the pins the tables were built
    with.  Rows sum to one; pinned rows are one-hot.
    """

    log_forward: np.ndarray
    log_backward: np.ndarray
    log_likelihood: float
    smoothing: np.ndarray

    @property
    def length(self) -> int:
        return self.log_forward.shape[0]

    @property
    def num_states(self) -> int:
        return self.log_forward.shape[1]


# --- core recursions on prepared log inputs --------------------------------


def _log_inputs(spec, obs, pins: Pins):
    """Log initial/transition/emission scores with pins masked in."""
    log_b = spec.emission.log_density_matrix(obs)
    n, k = log_b.shape
    pinset = _as_pinset(pins)
    if pinset.pairs:
        log_b = log_b.copy()
        for t, w in pinset:
            if not 0 <= t < n:
                raise ValueError(f"pin time {t} outside 0..{n - 1}")
            if not 0 <= w < k:
                raise ValueError(f"pin state {w} outside 0..{k - 1}")
            kept = log_b[t, w]
            log_b[t, :] = NEG_INF
            log_b[t, w] = kept
    with np.errstate(divide="ignore"):
        log_pi = np.log(spec.initial)
        log_P = np.log(spec.transition)
    return log_pi, log_P, log_b


def _forward(log_pi, log_P, log_b) -> np.ndarray:
    n, k = log_b.shape
    la = np.empty((n, k))
    la[0] = log_pi + log_b[0]
    for t in range(1, n):
        la[t] = logsumexp(la[t - 1][:, None] + log_P, axis=0) + log_b[t]
    return la


def _backward(log_P, log_b) -> np.ndarray:
    n, k = log_b.shape
    lb = np.zeros((n, k))
    for t in range(n - 2, -1, -1):
        lb[t] = logsumexp(log_P + (log_b[t + 1] + lb[t + 1])[None, :], axis=1)
    return lb


def _tables(log_pi, log_P, log_b) -> PosteriorTables:
    la = _forward(log_pi, log_P, log_b)
    ll = logsumexp(la[-1])
    if ll == NEG_INF:
        raise InadmissibleError("inadmissible pin set")
    lb = _backward(log_P, log_b)
    smoothing = np.exp(la + lb - ll)
    np.clip(smoothing, 0.0, 1.0, out=smoothing)
    return PosteriorTables(la, lb, ll, smoothing)


def _viterbi(log_pi, log_P, log_b) -> np.ndarray:
    n, k = log_b.shape
    psi = np.empty((n, k), dtype=np.int64)
    delta = log_pi + log_b[0]
    for t in range(1, n):
        cand = delta[:, None] + log_P
        psi[t] = np.argmax(cand, axis=0)
        delta = np.max(cand, axis=0) + log_b[t]
    if np.max(delta) == NEG_INF:
        raise InadmissibleError("no admissible path")
    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(n - 1, 0, -1):
        path[t - 1] = psi[t, path[t]]
    return path


# --- public operations ------------------------------------------------------


def forward_backward(spec, obs, pins: Pins = None) -> PosteriorTables:
    """Exact smoothing probabilities, conditional on any pins.

    Raises
    ------
    InadmissibleError
        If the pinned configuration has zero likelihood.
    """
    return _tables(*_log_inputs(spec, obs, pins))


def log_likelihood(spec, obs, pins: Pins = None) -> float:
    """log p(observations, pins); ``-inf`` is a valid return value."""
    log_pi, log_P, log_b = _log_inputs(spec, obs, pins)
    return logsumexp(_forward(log_pi, log_P, log_b)[-1])


def viterbi(spec, obs, pins: Pins = None) -> np.ndarray:
    """Maximum-posterior state path among those consistent with the pins."""
    return _viterbi(*_log_inputs(spec, obs, pins))


def pmap(spec, obs, pins: Pins = None) -> np.ndarray:
    """Pointwise maximum-a-posteriori path (may be inadmissible as a path)."""
    tables = forward_backward(spec, obs, pins)
    return np.argmax(tables.smoothing, axis=1)


def classification_probabilities(tables: PosteriorTables, path) -> np.ndarray:
    """Per-position posterior probability that the path state is correct."""
    path = np.asarray(path, dtype=int)
    if len(path) != tables.length:
        raise ValueError("path length does not match tables")
    return tables.smoothing[np.arange(len(path)), path]


def accuracy(tables: PosteriorTables, path) -> float:
    """Expected number of correctly classified states along the path."""
    return float(classification_probabilities(tables, path).sum())


def _joint_log_likelihood(log_pi, log_P, log_b, path) -> float:
    path = np.asarray(path, dtype=int)
    n = len(path)
    total = log_pi[path[0]] + log_b[0, path[0]]
    if n > 1:
        total = total + np.sum(log_P[path[:-1], path[1:]]) + np.sum(
            log_b[np.arange(1, n), path[1:]]
        )
    return float(total)


def path_log_posterior(spec, obs, path) -> float:
    """log P(hidden path | observations); ``-inf`` iff inadmissible."""
    log_pi, log_P, log_b = _log_inputs(spec, obs, None)
    joint = _joint_log_likelihood(log_pi, log_P, log_b, path)
    if joint == NEG_INF:
        return NEG_INF
    return joint - logsumexp(_forward(log_pi, log_P, log_b)[-1])
