"""Closed-form lower bounds for Viterbi classification probabilities.

For a transition matrix with all entries positive, the posterior
probability that the Viterbi path is correct at any time point admits a
data-independent lower bound built from two worst-case row/column ratios
of the matrix.  With zeros present no such constant bound exists, but a
*cluster* of states whose emission supports share a detectable core
still yields a data-dependent bound through the distance between two
observable stopping times.  This module computes the ratios, the bound
report, the cluster test with its primitivity exponent, the stopping
times, and a Monte-Carlo diagnostic for the waiting-time tail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    CategoricalEmission,
    GaussianEmission,
    ModelSpec,
    reverse_chain,
    stationary_distribution,
)
from .inference import classification_probabilities, forward_backward, viterbi

__all__ = [
    "SigmaPair",
    "BoundsReport",
    "BoundsCheck",
    "ClusterSpec",
    "TailReport",
    "sigma",
    "viterbi_bounds",
    "position_bounds",
    "verify_bounds",
    "check_cluster",
    "stopping_times",
    "empirical_tail",
]


@dataclass(frozen=True)
class SigmaPair:
    """Worst-case min/max ratios over rows (sigma1) and columns (sigma2)."""

    sigma1: float
    sigma2: float


def sigma(transition) -> SigmaPair:
    """Row and column ratio minima of a stochastic matrix.

    ``sigma1 = min_s min_s' p[s, s'] / max_s' p[s, s']`` and ``sigma2``
    is the same with the roles of the indices swapped.  Both are positive
    exactly when every transition probability is positive.
    """
    P = np.asarray(transition, dtype=float)
    s1 = float(np.min(P.min(axis=1) / P.max(axis=1)))
    s2 = float(np.min(P.min(axis=0) / P.max(axis=0)))
    return SigmaPair(s1, s2)


def _ratio(a: float, denom_count: int) -> float:
    if denom_count == 0:
        return 1.0
    return a / (a + denom_count)


@dataclass(frozen=True)
class BoundsReport:
    """Lower bounds for first/interior/last classification probabilities.

    ``stationary_bounds`` holds the sharper variant available when the
    initial distribution is stationary, which may also use the ratios of
    the time-reversed chain.
    """

    interior_bound: float
    first_bound: float
    last_bound: float
    k1: int
    stationary_bounds: Optional[tuple[float, float, float]] = None


def viterbi_bounds(spec: ModelSpec, stationary: bool = False) -> BoundsReport:
    """Data-independent classification-probability bounds for the model.

    The interior bound applies at times 1..n-2, the first/last bounds at
    the endpoints.  ``k1`` counts the exactly-nonzero initial
    probabilities.  With ``stationary=True`` the report also carries the
    variant that takes the better of the forward and reversed-chain
    ratios; this requires an irreducible chain.
    """
    k = spec.num_states
    sp = sigma(spec.transition)
    k1 = int(np.count_nonzero(spec.initial))
    report_plain = (
        _ratio(sp.sigma1**2 * sp.sigma2**2, k - 1),
        _ratio(sp.sigma1**2, k1 - 1),
        _ratio(sp.sigma2**2, k - 1),
    )
    stationary_bounds = None
    if stationary:
        sq = sigma(reverse_chain(spec))
        s12 = max(sp.sigma1 * sp.sigma2, sq.sigma1 * sq.sigma2)
        stationary_bounds = (
            _ratio(s12**2, k - 1),
            _ratio(max(sp.sigma1, sq.sigma2) ** 2, k - 1),
            _ratio(max(sp.sigma2, sq.sigma1) ** 2, k - 1),
        )
    return BoundsReport(
        interior_bound=report_plain[0],
        first_bound=report_plain[1],
        last_bound=report_plain[2],
        k1=k1,
        stationary_bounds=stationary_bounds,
    )


def position_bounds(report: BoundsReport, n: int) -> np.ndarray:
    """Per-time applicable bound, taking the stationary variant when present."""
    first, interior, last = report.first_bound, report.interior_bound, report.last_bound
    if report.stationary_bounds is not None:
        si, sf, sl = report.stationary_bounds
        interior, first, last = max(interior, si), max(first, sf), max(last, sl)
    out = np.full(n, interior)
    out[0] = first
    out[-1] = last
    return out


@dataclass(frozen=True)
class BoundsCheck:
    report: BoundsReport
    rho: np.ndarray
    bounds: np.ndarray
    margins: np.ndarray
    worst_margin: float
    violations: int


def verify_bounds(spec: ModelSpec, obs) -> BoundsCheck:
    """Decode, then check every classification probability against its bound.

    The stationary variant is included automatically when the initial
    distribution equals the stationary one.
    """
    use_stationary = False
    try:
        pi = stationary_distribution(spec)
        use_stationary = bool(np.max(np.abs(pi - spec.initial)) <= 1e-9)
    except ValueError:
        pass
    report = viterbi_bounds(spec, stationary=use_stationary)
    path = viterbi(spec, obs)
    rho = classification_probabilities(forward_backward(spec, obs), path)
    bound_vec = position_bounds(report, len(rho))
    margins = rho - bound_vec
    return BoundsCheck(
        report=report,
        rho=rho,
        bounds=bound_vec,
        margins=margins,
        worst_margin=float(margins.min()),
        violations=int(np.sum(margins < 0)),
    )


@dataclass(frozen=True)
class ClusterSpec:
    """A detectable state subset with primitive within-cluster transitions.

    ``core`` holds encoded symbol indices: every core symbol has positive
    density under every cluster state and zero density elsewhere.  ``r``
    is the smallest power making the within-cluster transition block
    entrywise positive.
    """

    states: tuple[int, ...]
    core: tuple[int, ...]
    r: int


def _primitivity_exponent(block: np.ndarray) -> int:
    """Smallest r with (support of block)^r > 0, or 0 if none exists.

    The search stops at the Wielandt bound (c-1)^2 + 1 for a c x c block,
    beyond which no primitive matrix needs to go.
    """
    c = block.shape[0]
    support = block > 0
    power = support.copy()
    limit = (c - 1) ** 2 + 1
    for r in range(1, limit + 1):
        if power.all():
            return r
        power = (power.astype(np.int64) @ support.astype(np.int64)) > 0
    return 0


def check_cluster(spec: ModelSpec, states: Sequence[int], core) -> tuple[bool, int]:
    """Test the cluster conditions and find the primitivity exponent.

    ``core`` may contain symbol names or indices.  Returns ``(True, r)``
    when every core symbol is emitted with positive density by every
    cluster state and with zero density by every other state, and the
    within-cluster transition block has a strictly positive power.
    Returns ``(False, 0)`` otherwise.
    """
    if isinstance(spec.emission, GaussianEmission):
        raise ValueError("cluster detection requires a table emission model")
    states = tuple(sorted(int(s) for s in states))
    core_idx = spec.emission.encode(list(core))
    table = (
        spec.emission.probs
        if isinstance(spec.emission, CategoricalEmission)
        else spec.emission.densities
    )
    inside = table[np.ix_(states, core_idx)]
    if inside.size == 0 or np.any(inside <= 0):
        return False, 0
    others = [s for s in range(spec.num_states) if s not in states]
    if others and np.any(table[np.ix_(others, core_idx)] > 0):
        return False, 0
    r = _primitivity_exponent(spec.transition[np.ix_(states, states)])
    if r == 0:
        return False, 0
    return True, r


def stopping_times(obs, cluster: ClusterSpec) -> tuple[np.ndarray, np.ndarray]:
    """Nearest fully observed core words after and before each time point.

    For each t, ``w[t]`` is the first time w > t + r at which the window
    obs[w-r..w] lies entirely in the core (capped at n-1 when there is
    none), and ``u[t]`` is the last time u < t - r at which the window
    obs[u..u+r] does (floored at 0).  Observations must be encoded symbol
    indices.
    """
    x = np.asarray(obs)
    n = len(x)
    r = cluster.r
    in_core = np.isin(x, np.asarray(cluster.core))
    # run[j] = length of the core run ending at j
    run = np.zeros(n, dtype=np.int64)
    acc = 0
    for j in range(n):
        acc = acc + 1 if in_core[j] else 0
        run[j] = acc
    ends = np.nonzero(run >= r + 1)[0]          # word occupies [e-r, e]
    starts = ends - r
    t = np.arange(n)
    if len(ends) == 0:
        return np.full(n, n - 1, dtype=np.int64), np.zeros(n, dtype=np.int64)
    iw = np.searchsorted(ends, t + r, side="right")
    w = np.where(iw < len(ends), ends[np.minimum(iw, len(ends) - 1)], n - 1)
    iu = np.searchsorted(starts, t - r, side="left") - 1
    u = np.where(iu >= 0, starts[np.maximum(iu, 0)], 0)
    return w.astype(np.int64), u.astype(np.int64)


@dataclass(frozen=True)
class TailReport:
    """Monte-Carlo survival estimates of the first-core-word waiting time."""

    survival: np.ndarray
    horizon: int
    samples: int
    censored_fraction: float
    decay_slope: Optional[float]
    low_observation_warning: bool


def empirical_tail(
    spec: ModelSpec, cluster: ClusterSpec, samples: int, horizon: int, seed
) -> TailReport:
    """Estimate P(W* - t > k) for k = 0..horizon by simulation.

    W* is the completion time of the first core word observed strictly
    after t.  Sampling starts the chain from the model's initial law at
    t.  The fitted log-linear slope of the survival curve is a
    qualitative decay diagnostic only.
    """
    if not spec.emission.generative:
        raise ValueError("non-generative emission model")
    if not isinstance(spec.emission, CategoricalEmission):
        raise ValueError("empirical tail requires a categorical emission model")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r = cluster.r
    p_core = spec.emission.probs[:, np.asarray(cluster.core)].sum(axis=1)
    cum_init = np.cumsum(spec.initial)
    cum_trans = np.cumsum(spec.transition, axis=1)
    k_states = spec.num_states

    state = np.minimum(
        np.searchsorted(cum_init, rng.random(samples), side="right"), k_states - 1
    )
    progress = np.zeros(samples, dtype=np.int64)
    completion = np.full(samples, horizon + 1, dtype=np.int64)
    for step in range(1, horizon + 1):
        state = np.minimum(
            (cum_trans[state] < rng.random(samples)[:, None]).sum(axis=1),
            k_states - 1,
        )
        hit = rng.random(samples) < p_core[state]
        progress = np.where(hit, progress + 1, 0)
        done = (progress >= r + 1) & (completion > horizon)
        completion[done] = step
    survival = np.array(
        [np.mean(completion > k) for k in range(horizon + 1)]
    )
    censored = float(np.mean(completion > horizon))
    pos = np.nonzero((survival > 0) & (np.arange(horizon + 1) > r))[0]
    slope = None
    if len(pos) >= 2:
        slope = float(np.polyfit(pos, np.log(survival[pos]), 1)[0])
    return TailReport(
        survival=survival,
        horizon=horizon,
        samples=samples,
        censored_fraction=censored,
        decay_slope=slope,
        low_observation_warning=censored > 0.5,
    )
